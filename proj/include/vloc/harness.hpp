#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vloc/geo.hpp"
#include "vloc/locator.hpp"
#include "vloc/signal.hpp"
#include "vloc/synth.hpp"

namespace vloc::harness {

// ---------------------------------------------------------------------------
// Features

// Raw (unnormalized) 39x31 matrices of one event's observing three
// stations, in ascending station-id order.
struct FeatureRecord {
  std::string event_id;
  std::vector<signal::FeatureMatrix> mats;
  std::vector<std::string> station_ids;
};

// Regenerates waveforms in memory from the scenario seed.
std::vector<FeatureRecord> featurize_scenario(const synth::Scenario& sc);

// Reads ".wfm" files referenced by the catalog (paths resolved against
// wfm_root when relative).
std::vector<FeatureRecord> featurize_catalog(const synth::Scenario& cat,
                                             const std::string& wfm_root);

// Feature store: per event "FEA1", u32 id length, id bytes, u32 station
// count, then each 39x31 matrix as f64 LE row-major.
void save_feature_store(const std::string& path, const std::vector<FeatureRecord>& recs);
std::vector<FeatureRecord> load_feature_store(const std::string& path);

// ---------------------------------------------------------------------------
// Dataset

enum class NormalizationScope { PerSignal, Corpus };

struct DatasetEvent {
  std::string event_id;
  geo::GeoPoint truth;
  loc::EventFeatures feats;  // normalized
  std::vector<std::string> station_ids;
};

struct Dataset {
  std::vector<DatasetEvent> events;
};

// Joins catalog truth with stored features and normalizes. Corpus scope
// pools column statistics over stat_event_ids (the training split) only.
Dataset build_dataset(const synth::Scenario& cat, const std::vector<FeatureRecord>& store,
                      NormalizationScope scope = NormalizationScope::PerSignal,
                      const std::vector<std::string>& stat_event_ids = {});

Dataset subset(const Dataset& d, const std::vector<std::string>& event_ids);

std::vector<geo::GeoPoint> epicenters(const Dataset& d);

// ---------------------------------------------------------------------------
// Splits

struct SplitSpec {
  double train_frac = 0.8;
  double val_frac = 0.1;
  double test_frac = 0.1;
  uint64_t seed = 1;
};

struct Split {
  std::vector<std::string> train, val, test;
};

// Seeded shuffle then contiguous cut; disjoint and exhaustive by event.
Split split_dataset(const std::vector<std::string>& event_ids, const SplitSpec& spec);

void save_split(const std::string& path, const Split& s);
Split load_split(const std::string& path);

// Mean/population-std of the training epicenters; DegenerateTargets when a
// coordinate does not vary.
loc::TargetStandardizer fit_standardizer(const std::vector<geo::GeoPoint>& train_epicenters);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double learning_rate = 8e-4;
  double dropout = 0.10;
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 20;
  uint64_t seed = 1;
  enum class Loss { Mse, Mae } loss = Loss::Mse;
  enum class Optimizer { Adam, Sgd } optimizer = Optimizer::Adam;
  int threads = 0;  // 0 = hardware concurrency
};

struct EpochStats {
  double train_loss = 0.0;
  double val_mae_km = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // 0-based index into epochs
  double best_val_mae_km = 0.0;
  double wall_time_s = 0.0;
  bool diverged = false;
};

struct TrainResult {
  loc::LocatorModel model;
  TrainHistory history;
};

// Mini-batch training with per-epoch validation MAE (km), best-snapshot
// selection and early stopping. Fits the target standardizer from the
// training split. A non-finite loss aborts with the last finite snapshot
// and marks the history as diverged.
TrainResult train(loc::LocatorModel model, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& cfg);

std::string history_to_csv(const TrainHistory& h);
void write_history_csv(const std::string& path, const TrainHistory& h);

// ---------------------------------------------------------------------------
// Grid search

struct GridSpace {
  std::vector<int> lstm_layers{1, 2, 3, 4, 5, 6};
  std::vector<int> lstm_dim{32, 64, 128, 256, 512};
  std::vector<int> fc_layers{1, 2, 3};
  std::vector<double> learning_rate{8e-6, 8e-5, 8e-4, 8e-3, 8e-2, 8e-1};
  std::vector<double> dropout{0.0, 0.1, 0.3, 0.5};
};

struct TrialOutcome {
  int lstm_layers = 0;
  int lstm_dim = 0;
  int fc_layers = 0;
  double learning_rate = 0.0;
  double dropout = 0.0;
  double val_mae_km = 0.0;
  int best_epoch = -1;
  bool diverged = false;
};

struct GridResult {
  std::vector<TrialOutcome> ranked;  // best first
  loc::LocatorModel best_model;
  TrainHistory best_history;
};

// Trains every grid point when the budget allows, otherwise a seeded
// random subsample of `budget` points, and ranks by validation MAE.
GridResult grid_search(const GridSpace& space, const Dataset& train_set, const Dataset& val_set,
                       const loc::LocatorConfig& base_cfg, const TrainConfig& base_train,
                       int budget);

std::string ranking_to_csv(const std::vector<TrialOutcome>& ranked);
void write_ranking_csv(const std::string& path, const std::vector<TrialOutcome>& ranked);

// ---------------------------------------------------------------------------
// Evaluation

geo::EvalReport evaluate(const loc::LocatorModel& model, const Dataset& test_set,
                         const std::vector<geo::GeoPoint>& train_epicenters,
                         double ring_width_km = 0.5);

std::string report_to_json(const geo::EvalReport& rep);
void write_report_json(const std::string& path, const geo::EvalReport& rep);
void write_curve_csv(const std::string& path, const geo::EvalReport& rep);
void write_rings_csv(const std::string& path, const geo::EvalReport& rep);
void write_density_csv(const std::string& path, const geo::EvalReport& rep);

}  // namespace vloc::harness

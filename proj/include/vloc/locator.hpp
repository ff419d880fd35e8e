#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vloc/geo.hpp"
#include "vloc/nnet.hpp"
#include "vloc/signal.hpp"

namespace vloc::loc {

enum class ModelKind { Lstm, Cnn };
enum class InputMode { Concat3, PerStationEnsemble };

struct LocatorConfig {
  ModelKind model_kind = ModelKind::Lstm;
  int lstm_layers = 4;
  int lstm_dim = 256;
  int fc_layers = 2;
  double dropout_rate = 0.10;
  InputMode input_mode = InputMode::Concat3;
  bool bias_mode = false;
  int conv_filters = 256;  // cnn only
};

// Named presets: "paper" is the tuned configuration (4 x 256 LSTM, 2 fc
// layers, 256 conv filters), "desk" a laptop-scale variant (2 x 64 LSTM,
// 16 conv filters).
LocatorConfig preset_config(const std::string& name, ModelKind kind);

void validate(const LocatorConfig& cfg);

struct TargetStandardizer {
  double mean_lat = 0.0;
  double mean_lon = 0.0;
  double std_lat = 1.0;
  double std_lon = 1.0;

  std::array<double, 2> standardize(const geo::GeoPoint& p) const {
    return {(p.lat_deg - mean_lat) / std_lat, (p.lon_deg - mean_lon) / std_lon};
  }
  geo::GeoPoint destandardize(double y_lat, double y_lon) const {
    return {mean_lat + y_lat * std_lat, mean_lon + y_lon * std_lon};
  }
};

// The three normalized per-station matrices of one event, in ascending
// station-id order.
struct EventFeatures {
  std::array<signal::FeatureMatrix, 3> station_feats;
};

// One network input. The lstm path uses seq, the cnn path uses image.
struct NetInput {
  std::vector<nnet::Vec> seq;
  nnet::Tensor3 image;
};

// Concat3 folds the three stations into one input (93-dim frames or a
// 3-channel image); the per-station ensemble yields three single-station
// inputs whose predictions average later.
std::vector<NetInput> assemble_input(const EventFeatures& ev, const LocatorConfig& cfg);

struct LocatorModel {
  LocatorConfig cfg;
  TargetStandardizer standardizer;
  uint64_t seed = 0;
  std::vector<nnet::LstmLayerParams> lstm;
  std::vector<nnet::FcLayerParams> fc;
  std::vector<nnet::ConvLayerParams> conv;
};

LocatorModel build_locator(const LocatorConfig& cfg, uint64_t seed);

long parameter_count(const LocatorModel& m);

struct ModelCache {
  nnet::LstmStackCache lstm;
  std::vector<nnet::ConvCache> conv;
  std::vector<std::vector<uint8_t>> conv_keep;
  nnet::FcCache fc;
};

// Standardized 2-vector output. Training mode applies dropout from rng
// and fills the cache for the backward pass.
nnet::Vec model_forward(const LocatorModel& m, const NetInput& in, bool training, Rng* rng,
                        ModelCache* cache = nullptr);

struct GradientSet {
  std::vector<nnet::LstmLayerGrads> lstm;
  std::vector<nnet::FcLayerGrads> fc;
  std::vector<nnet::ConvLayerGrads> conv;
};

GradientSet zero_grads(const LocatorModel& m);

// Accumulates exact full-sequence gradients of the loss into grads given
// the loss gradient on the model output.
void model_backward(const LocatorModel& m, const NetInput& in, const ModelCache& cache,
                    const nnet::Vec& dy, GradientSet& grads);

// Every trainable array in checkpoint declaration order: per LSTM layer
// W_i, W_f, W_o, W_c, U_i, U_f, U_o, U_c, biases; then fc layers; then
// conv layers.
std::vector<nnet::Vec*> param_arrays(LocatorModel& m);
std::vector<const nnet::Vec*> param_arrays(const LocatorModel& m);
std::vector<nnet::Vec*> grad_arrays(GradientSet& g);
std::vector<const nnet::Vec*> grad_arrays(const GradientSet& g);

void accumulate_grads(GradientSet& dst, const GradientSet& src);
void scale_grads(GradientSet& g, double factor);

// Inference-mode prediction in degrees; ensembles average per-input
// predictions in degree space.
geo::GeoPoint predict_epicenter(const LocatorModel& m, const std::vector<NetInput>& inputs,
                                const TargetStandardizer& std);

// Peak doubles of rolling state the lstm inference path keeps besides the
// input sequence itself (states plus one frame's gate workspace plus the
// fc activations).
size_t inference_state_doubles(const LocatorModel& m);

// ".vloc" checkpoint: magic "VLOC", u32 version, u32 header length, JSON
// header (architecture, seed, standardizer), then parameter arrays as
// f64 LE in declaration order.
void save_checkpoint(const std::string& path, const LocatorModel& m);
LocatorModel load_checkpoint(const std::string& path);

}  // namespace vloc::loc

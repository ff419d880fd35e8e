#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vloc/geo.hpp"
#include "vloc/picker.hpp"
#include "vloc/signal.hpp"

namespace vloc::synth {

enum class DensityProfile { Uniform, CentrallyPeaked };

struct ScenarioConfig {
  int n_stations = 13;
  int n_events = 200;
  double region_radius_km = 6.0;
  DensityProfile density = DensityProfile::CentrallyPeaked;
  double noise_sigma = 1.0;
  double snr_lo = 5.0;
  double snr_hi = 20.0;
  picker::VelocityModel velocity;
  uint64_t seed = 1;
  geo::GeoPoint center{-36.9, -71.4};
  // Waveforms exist for this many nearest stations per event; the nearest
  // three are the model's observing set, the rest serve the picker baseline.
  int stations_per_event = 10;
  double record_len_s = 20.0;
  double origin_time_s = 5.0;  // event origin time within each record
};

struct Station {
  std::string id;
  geo::GeoPoint pos;
  double x_km = 0.0;
  double y_km = 0.0;
};

struct StationEntry {
  std::string station_id;
  double distance_km = 0.0;
  double true_t_p_s = 0.0;
  double true_t_s_s = 0.0;
  std::string wfm_path;  // empty until waveforms are written out
};

struct EventRecord {
  std::string event_id;
  geo::GeoPoint true_epicenter;
  double x_km = 0.0;
  double y_km = 0.0;
  // Nearest stations first; entries[0..2] are the observing three.
  std::vector<StationEntry> entries;
};

struct Scenario {
  ScenarioConfig cfg;
  std::vector<Station> stations;
  std::vector<EventRecord> events;
};

// Seeded station placement (min pairwise spacing 1 km) and epicenter
// sampling from the configured density profile.
Scenario gen_scenario(const ScenarioConfig& cfg);

// Deterministic per-(event, station) waveform: Gaussian background noise
// plus a P Ricker wavelet at t_p and a twice-as-large S Ricker at t_s.
signal::Waveform synth_waveform(const Scenario& sc, size_t event_idx, size_t entry_idx);

// Ricker wavelet value at t seconds from the wavelet center.
double ricker(double t_s, double center_freq_hz);

// 1/distance geometric decay with a 0.5 km floor.
double wavelet_amplitude(double distance_km, double a0);

// Catalog CSV: one row per (event, station entry).
void save_catalog(const std::string& path, const Scenario& sc);
Scenario load_catalog(const std::string& path);

}  // namespace vloc::synth

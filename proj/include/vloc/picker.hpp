#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "vloc/errors.hpp"
#include "vloc/signal.hpp"

namespace vloc::picker {

struct VelocityModel {
  double v_p_km_s = 5.5;
  double v_s_km_s = 5.5 / 1.7320508075688772;  // Poisson-solid v_p / sqrt(3)
};

void validate(const VelocityModel& vm);

struct PickerConfig {
  double bp_lo_hz = 0.8;
  double bp_hi_hz = 10.0;
  double sta_s = 0.1;
  double lta_s = 1.0;
  double threshold = 3.0;
  double s_min_gap_s = 0.3;   // S search starts this far after P
  double s_max_gap_s = 30.0;  // and ends this far after P
};

struct PickResult {
  std::optional<double> t_p_s;
  std::optional<double> t_s_s;
  double p_quality = 0.0;  // peak characteristic-function ratio
  double s_quality = 0.0;
};

// Ratio of the trailing short-window mean of x^2 to the mean of x^2 over
// the long window immediately preceding it. Zero until the long window is
// full, and zero whenever the long window holds no energy.
std::vector<double> sta_lta(const std::vector<double>& x, double short_s, double long_s,
                            double rate_hz);

// Band-pass then STA/LTA; P is the first threshold crossing, refined to the
// energy center of the triggering transient. Absent when nothing crosses.
PickResult pick_p(const signal::Waveform& w, const PickerConfig& cfg = {});

// Searches (t_p + s_min_gap, t_p + s_max_gap] for the strongest onset.
PickResult pick_s(const signal::Waveform& w, double t_p_s, const PickerConfig& cfg = {});

// Constant-velocity inversion of the S-P time: d = dt * vp*vs / (vp - vs).
double sp_distance_km(double dt_s, const VelocityModel& vm);

struct TriResult {
  double x_km = 0.0;
  double y_km = 0.0;
  double rms_residual_km = 0.0;
  bool degenerate_geometry = false;
  bool converged = true;
  // Objective value after each accepted step (damping never lets it rise).
  std::vector<double> objective_trace;
};

// Least-squares intersection of distance circles by damped Gauss-Newton
// from the station centroid; grid-search fallback on non-convergence.
TriResult triangulate(const std::vector<std::pair<double, double>>& stations_km,
                      const std::vector<double>& distances_km);

// Exhaustive minimizer over the stations' bounding box (+/- 20 km margin),
// exposed for cross-checks; step_km defaults to the 100 m fallback grid.
TriResult triangulate_grid(const std::vector<std::pair<double, double>>& stations_km,
                           const std::vector<double>& distances_km, double step_km = 0.1);

}  // namespace vloc::picker

#include "vloc/picker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vloc::picker {

void validate(const VelocityModel& vm) {
  if (!(vm.v_p_km_s > vm.v_s_km_s) || !(vm.v_s_km_s > 0.0))
    throw BadVelocities("need v_p > v_s > 0");
}

std::vector<double> sta_lta(const std::vector<double>& x, double short_s, double long_s,
                            double rate_hz) {
  if (!(short_s > 0.0) || !(short_s < long_s))
    throw BadWindows("need 0 < short < long");
  size_t n_short = static_cast<size_t>(std::llround(short_s * rate_hz));
  size_t n_long = static_cast<size_t>(std::llround(long_s * rate_hz));
  if (n_short == 0 || x.size() <= n_short + n_long)
    throw BadWindows("signal shorter than the combined windows");

  // Prefix sums of energy; cf[i] compares (i-n_short, i] against the
  // n_long samples immediately before the short window, so an onset fills
  // the numerator while the denominator still measures background.
  std::vector<double> csum(x.size() + 1, 0.0);
  for (size_t i = 0; i < x.size(); ++i) csum[i + 1] = csum[i] + x[i] * x[i];

  std::vector<double> cf(x.size(), 0.0);
  for (size_t i = n_short + n_long - 1; i < x.size(); ++i) {
    double sta = (csum[i + 1] - csum[i + 1 - n_short]) / n_short;
    double lta = (csum[i + 1 - n_short] - csum[i + 1 - n_short - n_long]) / n_long;
    cf[i] = lta > 0.0 ? sta / lta : 0.0;
  }
  return cf;
}

namespace {

// A trailing STA window peaks half a window after the transient's energy
// center; shift the peak time back by that much.
double refine_peak_time(const signal::Waveform& w, const std::vector<double>& cf,
                        size_t peak_idx, double short_s) {
  return w.t0_s + static_cast<double>(peak_idx) / w.sample_rate_hz - 0.5 * short_s;
}

}  // namespace

PickResult pick_p(const signal::Waveform& w, const PickerConfig& cfg) {
  PickResult res;
  if (w.duration_s() < 10.0) return res;  // too short to establish background
  signal::Waveform f = signal::bandpass(w, cfg.bp_lo_hz, cfg.bp_hi_hz);
  auto cf = sta_lta(f.samples, cfg.sta_s, cfg.lta_s, w.sample_rate_hz);

  size_t first = cf.size();
  for (size_t i = 0; i < cf.size(); ++i) {
    if (cf[i] >= cfg.threshold) {
      first = i;
      break;
    }
  }
  if (first == cf.size()) return res;

  // Local refinement: the crossing sits on the rising edge, the peak of the
  // same transient locates it.
  size_t span = static_cast<size_t>(std::llround(0.3 * w.sample_rate_hz));
  size_t last = std::min(first + span, cf.size() - 1);
  size_t peak = first;
  for (size_t i = first; i <= last; ++i)
    if (cf[i] > cf[peak]) peak = i;

  res.t_p_s = refine_peak_time(w, cf, peak, cfg.sta_s);
  res.p_quality = cf[peak];
  return res;
}

PickResult pick_s(const signal::Waveform& w, double t_p_s, const PickerConfig& cfg) {
  PickResult res;
  signal::Waveform f = signal::bandpass(w, cfg.bp_lo_hz, cfg.bp_hi_hz);
  auto cf = sta_lta(f.samples, cfg.sta_s, cfg.lta_s, w.sample_rate_hz);

  // Window offset by half a short window so the refined time always lands
  // after t_p + s_min_gap.
  double lo_s = t_p_s + cfg.s_min_gap_s + 0.5 * cfg.sta_s;
  double hi_s = t_p_s + cfg.s_max_gap_s + 0.5 * cfg.sta_s;
  long lo = std::lround((lo_s - w.t0_s) * w.sample_rate_hz);
  long hi = std::lround((hi_s - w.t0_s) * w.sample_rate_hz);
  lo = std::max<long>(lo, 0);
  hi = std::min<long>(hi, static_cast<long>(cf.size()) - 1);
  if (lo > hi) return res;

  long peak = lo;
  for (long i = lo; i <= hi; ++i)
    if (cf[i] > cf[peak]) peak = i;
  if (cf[peak] < cfg.threshold) return res;

  res.t_s_s = refine_peak_time(w, cf, static_cast<size_t>(peak), cfg.sta_s);
  res.s_quality = cf[peak];
  return res;
}

double sp_distance_km(double dt_s, const VelocityModel& vm) {
  validate(vm);
  if (dt_s < 0.0) throw BadInput("negative S-P time");
  return dt_s * vm.v_p_km_s * vm.v_s_km_s / (vm.v_p_km_s - vm.v_s_km_s);
}

namespace {

double objective(const std::vector<std::pair<double, double>>& st,
                 const std::vector<double>& d, double x, double y) {
  double s = 0.0;
  for (size_t i = 0; i < st.size(); ++i) {
    double r = std::hypot(x - st[i].first, y - st[i].second) - d[i];
    s += r * r;
  }
  return s;
}

bool collinear(const std::vector<std::pair<double, double>>& st) {
  double span = 0.0;
  for (size_t i = 0; i < st.size(); ++i)
    for (size_t j = i + 1; j < st.size(); ++j)
      span = std::max(span, std::hypot(st[i].first - st[j].first, st[i].second - st[j].second));
  if (span <= 0.0) return true;
  double best = 0.0;
  for (size_t i = 0; i < st.size(); ++i)
    for (size_t j = i + 1; j < st.size(); ++j)
      for (size_t k = j + 1; k < st.size(); ++k) {
        double area = 0.5 * std::abs((st[j].first - st[i].first) * (st[k].second - st[i].second) -
                                     (st[k].first - st[i].first) * (st[j].second - st[i].second));
        best = std::max(best, area);
      }
  return best / (span * span) < 1e-6;
}

// Damped Gauss-Newton on sum((|p - s_i| - d_i)^2) from a given start.
TriResult gauss_newton(const std::vector<std::pair<double, double>>& st,
                       const std::vector<double>& d, double x0, double y0) {
  TriResult res;
  double x = x0, y = y0;
  double obj = objective(st, d, x, y);
  res.objective_trace.push_back(obj);
  double lambda = 1e-3;
  res.converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
    for (size_t i = 0; i < st.size(); ++i) {
      double dx = x - st[i].first, dy = y - st[i].second;
      double dist = std::hypot(dx, dy);
      if (dist < 1e-12) continue;  // gradient undefined on top of a station
      double r = dist - d[i];
      double jx = dx / dist, jy = dy / dist;
      jtj00 += jx * jx;
      jtj01 += jx * jy;
      jtj11 += jy * jy;
      jtr0 += jx * r;
      jtr1 += jy * r;
    }
    double a00 = jtj00 + lambda, a11 = jtj11 + lambda, a01 = jtj01;
    double det = a00 * a11 - a01 * a01;
    if (det == 0.0) break;
    double step_x = (-jtr0 * a11 + jtr1 * a01) / det;
    double step_y = (jtr0 * a01 - jtr1 * a00) / det;
    if (std::hypot(step_x, step_y) < 1e-9) {
      res.converged = true;
      break;
    }
    double cand = objective(st, d, x + step_x, y + step_y);
    if (cand < obj) {
      x += step_x;
      y += step_y;
      obj = cand;
      res.objective_trace.push_back(obj);
      lambda = std::max(lambda * 0.1, 1e-12);
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  res.x_km = x;
  res.y_km = y;
  res.rms_residual_km = std::sqrt(obj / st.size());
  return res;
}

void check_inputs(const std::vector<std::pair<double, double>>& st,
                  const std::vector<double>& d) {
  if (st.size() < 3) throw TooFewStations("triangulation needs at least 3 stations");
  if (st.size() != d.size()) throw ShapeMismatch("station/distance count mismatch");
  for (double v : d)
    if (!std::isfinite(v) || v < 0.0) throw BadInput("distances must be finite and >= 0");
}

}  // namespace

TriResult triangulate_grid(const std::vector<std::pair<double, double>>& stations_km,
                           const std::vector<double>& distances_km, double step_km) {
  check_inputs(stations_km, distances_km);
  double min_x = stations_km[0].first, max_x = min_x;
  double min_y = stations_km[0].second, max_y = min_y;
  for (const auto& s : stations_km) {
    min_x = std::min(min_x, s.first);
    max_x = std::max(max_x, s.first);
    min_y = std::min(min_y, s.second);
    max_y = std::max(max_y, s.second);
  }
  min_x -= 20.0; max_x += 20.0;
  min_y -= 20.0; max_y += 20.0;

  TriResult res;
  res.converged = true;
  double best = std::numeric_limits<double>::infinity();
  for (double y = min_y; y <= max_y; y += step_km)
    for (double x = min_x; x <= max_x; x += step_km) {
      double obj = objective(stations_km, distances_km, x, y);
      if (obj < best) {
        best = obj;
        res.x_km = x;
        res.y_km = y;
      }
    }
  res.rms_residual_km = std::sqrt(best / stations_km.size());
  res.degenerate_geometry = collinear(stations_km);
  return res;
}

TriResult triangulate(const std::vector<std::pair<double, double>>& stations_km,
                      const std::vector<double>& distances_km) {
  check_inputs(stations_km, distances_km);

  double cx = 0.0, cy = 0.0;
  for (const auto& s : stations_km) {
    cx += s.first;
    cy += s.second;
  }
  cx /= stations_km.size();
  cy /= stations_km.size();

  TriResult res = gauss_newton(stations_km, distances_km, cx, cy);
  if (!res.converged) {
    TriResult coarse = triangulate_grid(stations_km, distances_km);
    TriResult refined = gauss_newton(stations_km, distances_km, coarse.x_km, coarse.y_km);
    res = refined.rms_residual_km <= coarse.rms_residual_km ? refined : coarse;
  }
  res.degenerate_geometry = collinear(stations_km);
  return res;
}

}  // namespace vloc::picker

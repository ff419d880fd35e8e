#include "vloc/geo.hpp"

#include <algorithm>
#include <cmath>

namespace vloc::geo {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
constexpr double kFrameLimitDeg = 1.0;
}  // namespace

void validate(const GeoPoint& p) {
  if (!std::isfinite(p.lat_deg) || !std::isfinite(p.lon_deg))
    throw BadInput("geo point has non-finite coordinates");
  if (p.lat_deg < -90.0 || p.lat_deg > 90.0)
    throw BadInput("latitude out of [-90, 90]");
  if (p.lon_deg < -180.0 || p.lon_deg > 180.0)
    throw BadInput("longitude out of [-180, 180]");
}

LocalKm LocalFrame::to_local_km(const GeoPoint& p) const {
  double dlat = p.lat_deg - origin_.lat_deg;
  double dlon = p.lon_deg - origin_.lon_deg;
  if (std::abs(dlat) >= kFrameLimitDeg || std::abs(dlon) >= kFrameLimitDeg)
    throw OutOfFrame("point more than one degree from frame origin");
  LocalKm q;
  q.x_km = kEarthRadiusKm * dlon * kDegToRad * std::cos(origin_.lat_deg * kDegToRad);
  q.y_km = kEarthRadiusKm * dlat * kDegToRad;
  return q;
}

GeoPoint LocalFrame::from_local_km(const LocalKm& q) const {
  GeoPoint p;
  p.lat_deg = origin_.lat_deg + q.y_km / (kEarthRadiusKm * kDegToRad);
  p.lon_deg = origin_.lon_deg +
              q.x_km / (kEarthRadiusKm * kDegToRad * std::cos(origin_.lat_deg * kDegToRad));
  return p;
}

double error_km(const GeoPoint& a, const GeoPoint& b) {
  LocalKm q = LocalFrame(a).to_local_km(b);
  return std::hypot(q.x_km, q.y_km);
}

double success_rate(const std::vector<double>& errors_km, double threshold_km) {
  if (errors_km.empty()) throw EmptyList("success_rate over empty error list");
  long hits = std::count_if(errors_km.begin(), errors_km.end(),
                            [&](double e) { return e < threshold_km; });
  return static_cast<double>(hits) / static_cast<double>(errors_km.size());
}

std::vector<CurvePoint> cumulative_curve(std::vector<double> errors_km) {
  if (errors_km.empty()) throw EmptyList("cumulative_curve over empty error list");
  std::sort(errors_km.begin(), errors_km.end());
  std::vector<CurvePoint> curve;
  size_t n = errors_km.size();
  for (size_t i = 0; i < n; ++i) {
    // Merge duplicates, keeping the highest fraction per value.
    if (i + 1 < n && errors_km[i + 1] == errors_km[i]) continue;
    curve.push_back({errors_km[i], static_cast<double>(i + 1) / static_cast<double>(n)});
  }
  return curve;
}

GeoPoint training_centroid(const std::vector<GeoPoint>& train_epicenters) {
  if (train_epicenters.empty()) throw EmptyList("centroid of empty epicenter list");
  GeoPoint c;
  for (const auto& p : train_epicenters) {
    c.lat_deg += p.lat_deg;
    c.lon_deg += p.lon_deg;
  }
  c.lat_deg /= static_cast<double>(train_epicenters.size());
  c.lon_deg /= static_cast<double>(train_epicenters.size());
  return c;
}

double ring_area_km2(double r_lo_km, double r_hi_km) {
  return M_PI * (r_hi_km * r_hi_km - r_lo_km * r_lo_km);
}

std::vector<RingStat> ring_analysis(const std::vector<GeoPoint>& train_epicenters,
                                    const std::vector<TestOutcome>& test,
                                    double ring_width_km,
                                    double success_threshold_km) {
  if (train_epicenters.empty()) throw EmptyList("ring_analysis needs training epicenters");
  if (ring_width_km <= 0.0) throw BadInput("ring width must be positive");

  GeoPoint centroid = training_centroid(train_epicenters);

  std::vector<double> train_r;
  train_r.reserve(train_epicenters.size());
  double r_max = 0.0;
  for (const auto& p : train_epicenters) {
    double r = error_km(centroid, p);
    train_r.push_back(r);
    r_max = std::max(r_max, r);
  }
  std::vector<double> test_r;
  test_r.reserve(test.size());
  for (const auto& t : test) {
    double r = error_km(centroid, t.truth);
    test_r.push_back(r);
    r_max = std::max(r_max, r);
  }

  size_t n_rings = static_cast<size_t>(std::floor(r_max / ring_width_km)) + 1;
  std::vector<RingStat> rings(n_rings);
  std::vector<long> test_hits(n_rings, 0);
  for (size_t k = 0; k < n_rings; ++k) {
    rings[k].r_lo_km = static_cast<double>(k) * ring_width_km;
    rings[k].r_hi_km = static_cast<double>(k + 1) * ring_width_km;
  }
  for (double r : train_r) {
    size_t k = std::min(static_cast<size_t>(r / ring_width_km), n_rings - 1);
    ++rings[k].n_train;
  }
  for (size_t i = 0; i < test.size(); ++i) {
    size_t k = std::min(static_cast<size_t>(test_r[i] / ring_width_km), n_rings - 1);
    ++rings[k].n_test;
    if (test[i].error_km < success_threshold_km) ++test_hits[k];
  }
  for (size_t k = 0; k < n_rings; ++k) {
    rings[k].train_fraction =
        static_cast<double>(rings[k].n_train) / static_cast<double>(train_epicenters.size());
    rings[k].train_density_per_km2 =
        static_cast<double>(rings[k].n_train) / ring_area_km2(rings[k].r_lo_km, rings[k].r_hi_km);
    if (rings[k].n_test > 0)
      rings[k].test_success_rate =
          static_cast<double>(test_hits[k]) / static_cast<double>(rings[k].n_test);
  }
  return rings;
}

EvalReport build_report(const std::vector<TestOutcome>& test,
                        const std::vector<GeoPoint>& train_epicenters,
                        double ring_width_km,
                        double success_threshold_km) {
  if (test.empty()) throw EmptyList("report over empty test outcomes");
  EvalReport rep;
  rep.n_events = static_cast<long>(test.size());
  std::vector<double> errors;
  errors.reserve(test.size());
  for (const auto& t : test) errors.push_back(t.error_km);
  double sum = 0.0;
  for (double e : errors) sum += e;
  rep.mae_km = sum / static_cast<double>(errors.size());
  rep.success_rate = success_rate(errors, success_threshold_km);
  rep.cumulative_curve = cumulative_curve(errors);
  rep.ring_stats = ring_analysis(train_epicenters, test, ring_width_km, success_threshold_km);
  return rep;
}

std::vector<std::pair<double, double>> density_success_pairs(const std::vector<RingStat>& rings) {
  std::vector<std::pair<double, double>> pairs;
  for (const auto& r : rings)
    if (r.n_test > 0) pairs.emplace_back(r.train_density_per_km2, r.test_success_rate);
  return pairs;
}

}  // namespace vloc::geo

#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "vloc/errors.hpp"

namespace vloc::geo {

inline constexpr double kEarthRadiusKm = 6371.0;

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

// Throws BadInput unless lat in [-90,90], lon in [-180,180], both finite.
void validate(const GeoPoint& p);

struct LocalKm {
  double x_km = 0.0;  // east
  double y_km = 0.0;  // north
};

// Equirectangular tangent frame about an origin. Valid while both deltas
// stay under one degree; beyond that OutOfFrame is thrown.
class LocalFrame {
 public:
  explicit LocalFrame(const GeoPoint& origin) : origin_(origin) {}

  LocalKm to_local_km(const GeoPoint& p) const;
  GeoPoint from_local_km(const LocalKm& q) const;
  const GeoPoint& origin() const { return origin_; }

 private:
  GeoPoint origin_;
};

// Planar distance in the local frame anchored at a.
double error_km(const GeoPoint& a, const GeoPoint& b);

// Fraction of errors strictly below the threshold.
double success_rate(const std::vector<double>& errors_km, double threshold_km = 1.0);

struct CurvePoint {
  double error_km = 0.0;
  double fraction = 0.0;  // fraction of events with error <= error_km
};

// Empirical CDF, one point per distinct error value.
std::vector<CurvePoint> cumulative_curve(std::vector<double> errors_km);

GeoPoint training_centroid(const std::vector<GeoPoint>& train_epicenters);

struct TestOutcome {
  GeoPoint truth;
  double error_km = 0.0;
};

struct RingStat {
  double r_lo_km = 0.0;
  double r_hi_km = 0.0;
  long n_train = 0;
  double train_fraction = 0.0;
  double train_density_per_km2 = 0.0;
  long n_test = 0;
  // NaN when the ring holds no test events.
  double test_success_rate = std::numeric_limits<double>::quiet_NaN();
};

double ring_area_km2(double r_lo_km, double r_hi_km);

// Buckets training epicenters and test outcomes by distance to the training
// centroid into [k*w, (k+1)*w) rings.
std::vector<RingStat> ring_analysis(const std::vector<GeoPoint>& train_epicenters,
                                    const std::vector<TestOutcome>& test,
                                    double ring_width_km = 0.5,
                                    double success_threshold_km = 1.0);

struct EvalReport {
  double mae_km = 0.0;
  double success_rate = 0.0;
  std::vector<CurvePoint> cumulative_curve;
  std::vector<RingStat> ring_stats;
  long n_events = 0;
};

EvalReport build_report(const std::vector<TestOutcome>& test,
                        const std::vector<GeoPoint>& train_epicenters,
                        double ring_width_km = 0.5,
                        double success_threshold_km = 1.0);

// (density, success) pairs for rings that hold test events.
std::vector<std::pair<double, double>> density_success_pairs(const std::vector<RingStat>& rings);

}  // namespace vloc::geo

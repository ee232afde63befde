#pragma once

#include <string>
#include <variant>

#include "byzfed/types.hpp"

namespace byzfed {

struct TrimmedMeanSpec {
  double beta = 0.1;
  bool operator==(const TrimmedMeanSpec&) const = default;
};
struct CoordMedianSpec {
  bool operator==(const CoordMedianSpec&) const = default;
};
struct GeoMedianSpec {
  double tol = 1e-7;
  int max_iter = 500;
  bool operator==(const GeoMedianSpec&) const = default;
};
/// variance_bound <= 0 selects the automatic bound 4 * sigma_hat^2, with
/// sigma_hat the MAD of the projections on the current top direction.
struct IterFilterSpec {
  double variance_bound = 0.0;
  int max_rounds = 50;
  bool operator==(const IterFilterSpec&) const = default;
};
struct SampleMeanSpec {
  bool operator==(const SampleMeanSpec&) const = default;
};

/// Robust location estimator selection.
using AggregatorSpec = std::variant<TrimmedMeanSpec, CoordMedianSpec, GeoMedianSpec, IterFilterSpec, SampleMeanSpec>;

std::string aggregator_name(const AggregatorSpec& spec);

/// Coordinate-wise trimmed mean: per coordinate, sort, drop the floor(beta t)
/// largest and smallest values, average the rest in ascending order.
/// beta outside [0, 0.5) is a ConfigError.
Vector trimmed_mean(PointView points, double beta);

/// Per-coordinate median; even counts average the two middle values.
Vector coord_median(PointView points);

/// Weiszfeld iteration with the Vardi-Zhang step at data points, started at
/// the coordinate median. Stops when a step is below tol times the median
/// distance of the points to that start, or after max_iter steps.
Vector geometric_median(PointView points, double tol = 1e-7, int max_iter = 500);

struct IterFilterResult {
  Vector mean;
  int rounds = 0;             ///< covariance checks performed
  std::size_t survivors = 0;  ///< points left at exit
};

/// Spectral filtering: while the top covariance eigenvalue of the surviving
/// points exceeds the bound, drop the ceil(0.05 t) survivors with the
/// largest squared projection on the top eigenvector, never going below
/// ceil(t / 2) survivors. Requires t >= 2.
IterFilterResult iter_filter(PointView points, double variance_bound, int max_rounds);

inline Vector iter_filter_mean(PointView points, double variance_bound, int max_rounds) {
  return iter_filter(points, variance_bound, max_rounds).mean;
}

/// Applies the estimator chosen by spec.
Vector aggregate(const AggregatorSpec& spec, PointView points);

}  // namespace byzfed

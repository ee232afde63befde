#include "byzfed/robust_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "byzfed/error.hpp"
#include "byzfed/numerics.hpp"

namespace byzfed {

namespace {

void require_points(PointView points, const char* who) {
  if (points.empty()) throw InputError(std::string(who) + ": no points");
  const auto d = points.front().size();
  for (const auto& p : points) {
    if (p.size() != d) throw InputError(std::string(who) + ": dimension mismatch");
  }
}

template <typename Reduce>
Vector per_coordinate(PointView points, Reduce reduce) {
  const Eigen::Index d = points.front().size();
  Vector out(d);
  std::vector<double> column(points.size());
  for (Eigen::Index j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < points.size(); ++i) column[i] = points[i][j];
    std::sort(column.begin(), column.end());
    out[j] = reduce(column);
  }
  return out;
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t t = values.size();
  return t % 2 == 1 ? values[t / 2] : 0.5 * (values[t / 2 - 1] + values[t / 2]);
}

}  // namespace

std::string aggregator_name(const AggregatorSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, TrimmedMeanSpec>) return "trimmed_mean";
        else if constexpr (std::is_same_v<T, CoordMedianSpec>) return "coord_median";
        else if constexpr (std::is_same_v<T, GeoMedianSpec>) return "geometric_median";
        else if constexpr (std::is_same_v<T, IterFilterSpec>) return "iter_filter";
        else return "sample_mean";
      },
      spec);
}

Vector trimmed_mean(PointView points, double beta) {
  if (!(beta >= 0.0 && beta < 0.5)) throw ConfigError("trimmed_mean: beta must lie in [0, 0.5)");
  require_points(points, "trimmed_mean");
  const std::size_t t = points.size();
  const auto b = static_cast<std::size_t>(floor_count(beta * static_cast<double>(t)));
  if (2 * b >= t) throw ConfigError("trimmed_mean: beta trims every point");
  return per_coordinate(points, [&](const std::vector<double>& sorted) {
    double sum = 0.0;
    for (std::size_t i = b; i < t - b; ++i) sum += sorted[i];
    return sum / static_cast<double>(t - 2 * b);
  });
}

Vector coord_median(PointView points) {
  require_points(points, "coord_median");
  const std::size_t t = points.size();
  return per_coordinate(points, [&](const std::vector<double>& sorted) {
    return t % 2 == 1 ? sorted[t / 2] : 0.5 * (sorted[t / 2 - 1] + sorted[t / 2]);
  });
}

namespace {

// Above this dimension the d x d Hessian costs more than it saves.
constexpr Eigen::Index kNewtonMaxDim = 256;

double distance_sum(PointView points, const Vector& x) {
  double s = 0.0;
  for (const auto& p : points) s += (p - x).norm();
  return s;
}

// The data point nearest to x, if it minimizes the sum of distances: the
// unit pull of the other points must not exceed the weight sitting on it.
const Vector* optimal_nearby_point(PointView points, const Vector& x, double coincide) {
  std::size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double dist = (points[i] - x).squaredNorm();
    if (dist < best) {
      best = dist;
      nearest = i;
    }
  }
  const Vector& p = points[nearest];
  Vector pull = Vector::Zero(p.size());
  double multiplicity = 0.0;
  for (const auto& q : points) {
    const double dist = (q - p).norm();
    if (dist <= coincide)
      multiplicity += 1.0;
    else
      pull += (q - p) / dist;
  }
  return pull.norm() <= multiplicity ? &p : nullptr;
}

}  // namespace

Vector geometric_median(PointView points, double tol, int max_iter) {
  require_points(points, "geometric_median");
  if (points.size() == 1) return points.front();
  // Robust start and scale: both are translation-equivariant and ignore a
  // minority of far-away points.
  Vector x = coord_median(points);
  std::vector<double> dist0(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) dist0[i] = (points[i] - x).norm();
  double spread = median_of(dist0);
  if (spread == 0.0) spread = std::accumulate(dist0.begin(), dist0.end(), 0.0) / static_cast<double>(points.size());
  if (spread == 0.0) return points.front();

  const double coincide = 1e-12 * spread;
  const Eigen::Index d = x.size();
  for (int it = 0; it < max_iter; ++it) {
    Vector weighted = Vector::Zero(d);
    Vector pull = Vector::Zero(d);
    double weight_sum = 0.0;
    double multiplicity = 0.0;
    for (const auto& p : points) {
      const double dist = (p - x).norm();
      if (dist <= coincide) {
        multiplicity += 1.0;
        continue;
      }
      weighted += p / dist;
      pull += (p - x) / dist;
      weight_sum += 1.0 / dist;
    }
    if (weight_sum == 0.0) return x;  // every point coincides with x
    const Vector target = weighted / weight_sum;
    Vector next;
    if (multiplicity == 0.0) {
      next = target;
      // Weiszfeld slows to a crawl when the minimizer sits close to a data
      // point; a Newton step fixes that whenever it lowers the objective.
      if (d <= kNewtonMaxDim) {
        Matrix H = Matrix::Identity(d, d) * weight_sum;
        for (const auto& p : points) {
          const Vector u = p - x;
          const double dist = u.norm();
          H.noalias() -= (u / (dist * dist * dist)) * u.transpose();
        }
        const Eigen::LDLT<Matrix> ldlt(H);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
          // Halve the step until it beats the Weiszfeld point; near a data
          // point the full step can jump across the kink there.
          const Vector dir = ldlt.solve(pull);
          const double target_sum = distance_sum(points, target);
          double scale = 1.0;
          for (int half = 0; half < 30 && all_finite(dir); ++half, scale *= 0.5) {
            Vector trial = x + scale * dir;
            if (distance_sum(points, trial) < target_sum) {
              next = std::move(trial);
              break;
            }
          }
        }
      }
    } else {
      // Vardi-Zhang: x is optimal when the pull of the other points does
      // not exceed the weight sitting on x.
      const double r = pull.norm();
      if (r <= multiplicity) return x;
      const double shrink = multiplicity / r;
      next = (1.0 - shrink) * target + shrink * x;
    }
    const double step = (next - x).norm();
    x = std::move(next);
    // Weiszfeld crawls toward a minimizer sitting on a data point, so test
    // the nearest one directly.
    if (const Vector* p = optimal_nearby_point(points, x, coincide)) return *p;
    if (step <= tol * spread) break;
  }
  return x;
}

IterFilterResult iter_filter(PointView points, double variance_bound, int max_rounds) {
  if (points.size() < 2) throw InputError("iter_filter_mean: needs at least 2 points");
  require_points(points, "iter_filter_mean");
  const std::size_t t = points.size();
  const std::size_t drop = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(t)));
  const std::size_t floor_size = (t + 1) / 2;

  PointSet current(points.begin(), points.end());
  IterFilterResult result;
  for (int round = 0; round < max_rounds; ++round) {
    const Vector mu = mean_of(current);
    const EigenPair top = top_eigenpair(covariance_of(current, mu));
    ++result.rounds;

    std::vector<double> proj(current.size());
    for (std::size_t i = 0; i < current.size(); ++i) proj[i] = (current[i] - mu).dot(top.vector);

    double bound = variance_bound;
    if (bound <= 0.0) {
      const double med = median_of(proj);
      std::vector<double> dev(proj.size());
      for (std::size_t i = 0; i < proj.size(); ++i) dev[i] = std::abs(proj[i] - med);
      const double sigma_hat = 1.4826 * median_of(dev);
      bound = 4.0 * sigma_hat * sigma_hat;
    }
    if (top.value <= bound || current.size() <= floor_size) {
      result.mean = mu;
      result.survivors = current.size();
      return result;
    }

    const std::size_t remove = std::min(drop, current.size() - floor_size);
    std::vector<std::size_t> order(current.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return proj[a] * proj[a] > proj[b] * proj[b]; });
    std::vector<char> removed(current.size(), 0);
    for (std::size_t k = 0; k < remove; ++k) removed[order[k]] = 1;
    PointSet next;
    next.reserve(current.size() - remove);
    for (std::size_t i = 0; i < current.size(); ++i)
      if (!removed[i]) next.push_back(std::move(current[i]));
    current = std::move(next);
  }
  result.mean = mean_of(current);
  result.survivors = current.size();
  return result;
}

Vector aggregate(const AggregatorSpec& spec, PointView points) {
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, TrimmedMeanSpec>) return trimmed_mean(points, s.beta);
        else if constexpr (std::is_same_v<T, CoordMedianSpec>) return coord_median(points);
        else if constexpr (std::is_same_v<T, GeoMedianSpec>) return geometric_median(points, s.tol, s.max_iter);
        else if constexpr (std::is_same_v<T, IterFilterSpec>) {
          require_points(points, "aggregate");
          if (points.size() < 2) return points.front();
          return iter_filter_mean(points, s.variance_bound, s.max_rounds);
        } else {
          require_points(points, "sample_mean");
          return mean_of(points);
        }
      },
      spec);
}

}  // namespace byzfed

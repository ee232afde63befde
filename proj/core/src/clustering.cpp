#include "byzfed/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "byzfed/error.hpp"
#include "byzfed/numerics.hpp"
#include "byzfed/rng.hpp"

namespace byzfed {
namespace {

constexpr std::uint64_t kWarmStream = 21;
constexpr std::uint64_t kRandomInitStream = 22;

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t t = v.size();
  return (t % 2 == 1) ? v[t / 2] : 0.5 * (v[t / 2 - 1] + v[t / 2]);
}

void check_points(PointView points) {
  if (points.empty()) throw InputError("clustering: no points");
  const auto d = points.front().size();
  for (const auto& p : points) {
    if (p.size() != d) throw InputError("clustering: points differ in dimension");
    if (!all_finite(p)) throw InputError("clustering: non-finite point");
  }
}

void check_state(PointView points, const ClusteringState& state) {
  if (state.centers.empty()) throw InputError("clustering: state has no centers");
  if (state.labels.size() != points.size()) throw InputError("clustering: label count differs from point count");
  for (int l : state.labels) {
    if (l < 0 || l >= state.K()) throw InputError("clustering: label out of range");
  }
}

std::vector<std::vector<std::size_t>> buckets_of(const std::vector<int>& labels, int K) {
  std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(K));
  for (std::size_t i = 0; i < labels.size(); ++i) buckets[static_cast<std::size_t>(labels[i])].push_back(i);
  return buckets;
}

PointSet gather(PointView points, const std::vector<std::size_t>& idx) {
  PointSet out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(points[i]);
  return out;
}

// Empty buckets take the point farthest from its own bucket's center. Each
// point is used at most once; with nothing left the old center stays.
void reseed_empty(PointView points, const std::vector<int>& labels, const std::vector<std::vector<std::size_t>>& buckets,
                  PointSet& centers) {
  std::vector<bool> used(points.size(), false);
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    if (!buckets[k].empty()) continue;
    double best = -1.0;
    std::size_t pick = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (used[i]) continue;
      const double dist = (points[i] - centers[static_cast<std::size_t>(labels[i])]).squaredNorm();
      if (dist > best) {
        best = dist;
        pick = i;
      }
    }
    if (pick == points.size()) continue;
    used[pick] = true;
    centers[k] = points[pick];
  }
}

template <typename CenterFn>
ClusteringState generic_step(PointView points, const ClusteringState& state, CenterFn&& center_of) {
  check_points(points);
  check_state(points, state);
  const auto buckets = buckets_of(state.labels, state.K());
  ClusteringState next;
  next.centers = state.centers;
  next.trimmed.assign(points.size(), false);
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    if (buckets[k].empty()) continue;
    center_of(k, buckets[k], next.centers[k], next.trimmed);
  }
  reseed_empty(points, state.labels, buckets, next.centers);
  next.labels = assign_labels(points, next.centers);
  next.iteration = state.iteration + 1;
  return next;
}

}  // namespace

std::vector<int> assign_labels(PointView points, PointView centers) {
  if (centers.empty()) throw InputError("assign_labels: no centers");
  std::vector<int> labels(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double dist = (points[i] - centers[k]).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = static_cast<int>(k);
      }
    }
    labels[i] = arg;
  }
  return labels;
}

double within_cluster_cost(PointView points, const ClusteringState& state) {
  check_state(points, state);
  double cost = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!state.trimmed.empty() && state.trimmed[i]) continue;
    cost += (points[i] - state.centers[static_cast<std::size_t>(state.labels[i])]).squaredNorm();
  }
  return cost;
}

PointSet bucket_means(PointView points, const std::vector<int>& labels, int K) {
  if (K < 1) throw ConfigError("bucket_means: K must be positive");
  if (labels.size() != points.size()) throw InputError("bucket_means: label count differs from point count");
  const auto buckets = buckets_of(labels, K);
  Vector global = mean_of(points);
  PointSet centers(static_cast<std::size_t>(K), global);
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    if (!buckets[k].empty()) centers[k] = mean_of(gather(points, buckets[k]));
  }
  reseed_empty(points, labels, buckets, centers);
  return centers;
}

ClusteringState edge_cut_cluster(PointView points, double gamma, int min_cluster) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("edge_cut_cluster: gamma must be positive and finite");
  if (min_cluster < 1) throw ConfigError("edge_cut_cluster: min_cluster must be at least 1");
  check_points(points);
  Matrix P(static_cast<Eigen::Index>(points.size()), points.front().size());
  for (std::size_t i = 0; i < points.size(); ++i) P.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  const auto comp = threshold_components(P, gamma);

  std::vector<std::vector<std::size_t>> members(points.size());
  for (std::size_t i = 0; i < comp.size(); ++i) members[static_cast<std::size_t>(comp[i])].push_back(i);

  ClusteringState state;
  std::vector<int> cluster_of(points.size(), -1);
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].empty() || members[c].size() < static_cast<std::size_t>(min_cluster)) continue;
    cluster_of[c] = state.K();
    state.centers.push_back(mean_of(gather(points, members[c])));
  }
  if (state.centers.empty()) throw ClusteringError("edge_cut_cluster: no component has min_cluster points");

  const auto nearest = assign_labels(points, state.centers);
  state.labels.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int c = cluster_of[static_cast<std::size_t>(comp[i])];
    state.labels[i] = c >= 0 ? c : nearest[i];
  }
  state.trimmed.assign(points.size(), false);
  return state;
}

ClusteringState lloyd_step(PointView points, const ClusteringState& state) {
  return generic_step(points, state, [&](std::size_t, const std::vector<std::size_t>& idx, Vector& center, std::vector<bool>&) {
    center = mean_of(gather(points, idx));
  });
}

ClusteringState kgeomedian_step(PointView points, const ClusteringState& state, const GeoMedianSpec& gm) {
  return generic_step(points, state, [&](std::size_t, const std::vector<std::size_t>& idx, Vector& center, std::vector<bool>&) {
    center = geometric_median(gather(points, idx), gm.tol, gm.max_iter);
  });
}

ClusteringState trimmed_kmeans_step(PointView points, const ClusteringState& state, double sigma_hat, double C,
                                    TrimScale scale, const GeoMedianSpec& gm) {
  if (std::isnan(C) || C < 0.0) throw ConfigError("trimmed_kmeans_step: C must be non-negative");
  if (std::isnan(sigma_hat)) throw ConfigError("trimmed_kmeans_step: sigma_hat is NaN");
  check_points(points);
  check_state(points, state);

  // Geometric medians and distances first: the pooled scale needs all buckets.
  const auto buckets = buckets_of(state.labels, state.K());
  std::vector<std::vector<double>> dist(buckets.size());
  std::vector<double> pooled;
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    if (buckets[k].empty()) continue;
    const Vector g = geometric_median(gather(points, buckets[k]), gm.tol, gm.max_iter);
    for (auto i : buckets[k]) dist[k].push_back((points[i] - g).norm());
    pooled.insert(pooled.end(), dist[k].begin(), dist[k].end());
  }
  const double sqrt_d = std::sqrt(static_cast<double>(points.front().size()));
  auto mad_sigma = [&](std::vector<double> v) { return 1.4826 * median_of(std::move(v)) / sqrt_d; };
  const double pooled_sigma = sigma_hat > 0.0 ? sigma_hat : mad_sigma(pooled);

  return generic_step(points, state, [&](std::size_t k, const std::vector<std::size_t>& idx, Vector& center,
                                         std::vector<bool>& trimmed) {
    double sigma = pooled_sigma;
    if (!(sigma_hat > 0.0) && scale == TrimScale::PerBucket) sigma = mad_sigma(dist[k]);
    const double radius = std::isinf(C) ? std::numeric_limits<double>::infinity() : C * sigma * sqrt_d;
    PointSet kept;
    kept.reserve(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      if (dist[k][j] <= radius) {
        kept.push_back(points[idx[j]]);
      } else {
        trimmed[idx[j]] = true;
      }
    }
    if (!kept.empty()) center = mean_of(kept);
  });
}

LloydRun run_lloyd_variant(PointView points, const ClusteringState& init, const LloydVariant& variant, int max_iter,
                           const GroundTruth* truth) {
  if (max_iter < 0) throw ConfigError("run_lloyd_variant: max_iter must be non-negative");
  check_points(points);
  check_state(points, init);
  LloydRun run;
  run.state = init;
  if (run.state.trimmed.size() != points.size()) run.state.trimmed.assign(points.size(), false);
  if (truth) run.history.push_back(mismetrics(run.state, *truth));
  for (int s = 0; s < max_iter; ++s) {
    ClusteringState next;
    switch (variant.kind) {
      case LloydKind::Lloyd:
        next = lloyd_step(points, run.state);
        break;
      case LloydKind::KGeoMedian:
        next = kgeomedian_step(points, run.state, variant.geomedian);
        break;
      case LloydKind::TrimmedKMeans:
        next = trimmed_kmeans_step(points, run.state, variant.sigma_hat, variant.C, variant.scale, variant.geomedian);
        break;
    }
    const bool same = next.labels == run.state.labels;
    run.state = std::move(next);
    run.iterations = s + 1;
    if (truth) run.history.push_back(mismetrics(run.state, *truth));
    if (same) {
      run.converged = true;
      break;
    }
  }
  return run;
}

TwoClusterResult iterfilter_2cluster(PointView points, const Vector& theta0, int T, const IterFilterSpec& filter) {
  if (T < 1) throw ConfigError("iterfilter_2cluster: T must be at least 1");
  if (points.size() < static_cast<std::size_t>(T)) throw ConfigError("iterfilter_2cluster: fewer points than batches");
  check_points(points);
  if (theta0.size() != points.front().size()) throw InputError("iterfilter_2cluster: theta0 dimension mismatch");

  auto sign_of = [](const Vector& y, const Vector& theta) { return y.dot(theta) >= 0.0 ? 1 : -1; };
  const std::size_t batch = points.size() / static_cast<std::size_t>(T);
  TwoClusterResult out;
  out.theta = theta0;
  out.remainder = points.size() - batch * static_cast<std::size_t>(T);
  for (int t = 0; t < T; ++t) {
    PointSet signed_batch;
    signed_batch.reserve(batch);
    for (std::size_t j = 0; j < batch; ++j) {
      const Vector& y = points[static_cast<std::size_t>(t) * batch + j];
      signed_batch.push_back(sign_of(y, out.theta) > 0 ? Vector(y) : Vector(-y));
    }
    out.theta = aggregate(filter, signed_batch);
  }
  out.labels.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out.labels[i] = sign_of(points[i], out.theta);
  return out;
}

ClusteringState warm_start_init(PointView points, const GroundTruth& truth, double correct_fraction, int K,
                                std::uint64_t seed) {
  if (!(correct_fraction >= 0.0 && correct_fraction <= 1.0))
    throw ConfigError("warm_start_init: correct_fraction must lie in [0, 1]");
  if (K < 1 || K != truth.K()) throw ConfigError("warm_start_init: K must equal the number of true clusters");
  if (truth.labels.size() != points.size()) throw InputError("warm_start_init: truth and points differ in size");
  check_points(points);

  RngStream rng(seed, kWarmStream);
  std::vector<std::size_t> honest;
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    if (truth.labels[i] != kByzantineLabel) honest.push_back(i);
  }
  const auto keep = static_cast<std::size_t>(ceil_count(correct_fraction * static_cast<double>(honest.size())));
  const auto order = rng.permutation(honest.size());
  std::vector<bool> correct(points.size(), false);
  for (std::size_t j = 0; j < keep && j < order.size(); ++j) correct[honest[order[j]]] = true;

  ClusteringState state;
  state.labels.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int truth_label = truth.labels[i];
    if (truth_label == kByzantineLabel) {
      state.labels[i] = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(K)));
    } else if (correct[i] || K == 1) {
      state.labels[i] = truth_label;
    } else {
      const auto shift = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(K - 1)));
      state.labels[i] = (truth_label + shift) % K;
    }
  }
  state.centers = bucket_means(points, state.labels, K);
  state.trimmed.assign(points.size(), false);
  return state;
}

ClusteringState random_init(PointView points, int K, std::uint64_t seed) {
  if (K < 1) throw ConfigError("random_init: K must be positive");
  check_points(points);
  RngStream rng(seed, kRandomInitStream);
  ClusteringState state;
  state.labels.resize(points.size());
  for (auto& l : state.labels) l = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(K)));
  state.centers = bucket_means(points, state.labels, K);
  state.trimmed.assign(points.size(), false);
  return state;
}

}  // namespace byzfed

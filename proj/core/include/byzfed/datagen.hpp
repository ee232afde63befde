#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "byzfed/types.hpp"

namespace byzfed {

/// How Byzantine machines pick the coefficients they generate data from.
enum class AdversaryKind {
  ScaledBernoulli,        ///< independent scale * Bernoulli(1/2)^d per machine
  SharedScaledBernoulli,  ///< one scale * Bernoulli(1/2)^d vector for all of them
};

struct FleetConfig {
  int m = 100;             ///< machines
  int n = 100;             ///< samples per machine
  int d = 100;             ///< dimension
  int K = 5;               ///< clusters
  double alpha = 0.0;      ///< Byzantine fraction in [0, 0.5)
  double sigma = 1.0;      ///< response noise std dev
  AdversaryKind adversary = AdversaryKind::ScaledBernoulli;
  double adversary_scale = 3.0;
  std::uint64_t seed = 1;

  int byzantine_count() const;  ///< ceil(alpha m)
  int honest_count() const;     ///< floor((1 - alpha) m)

  /// Throws ConfigError when a field is out of range.
  void validate() const;

  bool operator==(const FleetConfig&) const = default;
};

inline constexpr int kByzantineLabel = -1;

/// One machine's local data. `true_cluster` is ground-truth metadata for
/// simulation and scoring only; clustering and optimization never read it.
struct WorkerShard {
  int machine_id = 0;
  bool byzantine = false;
  int true_cluster = kByzantineLabel;
  Matrix X;  ///< n x d covariates (or raw points for location data)
  Vector y;  ///< n responses; empty for location data

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
};

struct GroundTruth {
  PointSet centers;         ///< w*_k
  std::vector<int> labels;  ///< per machine; kByzantineLabel for adversaries

  int K() const { return static_cast<int>(centers.size()); }
  std::size_t honest_count() const;
};

struct Fleet {
  std::vector<WorkerShard> shards;
  GroundTruth truth;
  /// Generating coefficients of each machine (honest: its w*_k).
  PointSet coefficients;
};

/// Mixture-of-linear-regressions fleet. Cluster centers are Bernoulli(1/2)^d;
/// honest machines are dealt round-robin over a shuffled order; each sample
/// is y = x^T w + N(0, sigma^2) with x ~ N(0, I_d). Byzantine machines run
/// the same generator from their corrupt coefficients. Machine order is
/// shuffled so that ids carry no role information.
Fleet generate_fleet(const FleetConfig& cfg);

/// Perturbation added to every point of an adversarial ingest shard.
struct PerturbationSpec {
  double offset = -0.5;  ///< Bernoulli(1/2) * scale + offset, elementwise
  double scale = 1.0;
};

struct IngestSpec {
  double gamma = 0.0;  ///< edge threshold; must be positive
  int min_cluster = 2;
  int shard_size = 50;
  int n_adv = 0;
  PerturbationSpec adv_noise;
  std::uint64_t seed = 1;
};

struct IngestReport {
  std::size_t components = 0;          ///< all connected components
  std::size_t kept_components = 0;     ///< components with >= min_cluster points
  std::vector<std::size_t> kept_sizes;
  std::size_t dropped_points = 0;      ///< points in removed small components
  std::size_t remainder_points = 0;    ///< tails that did not fill a shard
  bool adversaries_from_all_points = false;  ///< unused pool was too small
};

struct IngestResult {
  std::vector<WorkerShard> shards;  ///< location data: X holds points, y empty
  GroundTruth truth;
  IngestReport report;
};

/// Connected components of the graph with an edge {i, j} iff
/// ||p_i - p_j|| < gamma. Component ids follow the smallest member index.
std::vector<int> threshold_components(const Matrix& points, double gamma);

/// Threshold-graph ingestion: components smaller than min_cluster are
/// dropped, each kept component's mean is its center, its points are split
/// into random shards of shard_size (the remainder is dropped and counted),
/// and n_adv adversarial shards are sampled from unused points with one
/// perturbation vector added per shard.
IngestResult ingest_threshold_graph(const Matrix& points, const IngestSpec& spec);

}  // namespace byzfed

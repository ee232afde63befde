#include "byzfed/datagen.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "byzfed/error.hpp"
#include "byzfed/numerics.hpp"
#include "byzfed/rng.hpp"

namespace byzfed {

namespace {

// Stream ids for generate_fleet; machine i draws from kMachineStreamBase + i.
constexpr std::uint64_t kCenterStream = 1;
constexpr std::uint64_t kAssignStream = 2;
constexpr std::uint64_t kAdversaryStream = 3;
constexpr std::uint64_t kOrderStream = 4;
constexpr std::uint64_t kMachineStreamBase = 1000;

constexpr std::uint64_t kIngestShuffleStream = 11;
constexpr std::uint64_t kIngestAdvStream = 12;

}  // namespace

int FleetConfig::byzantine_count() const { return static_cast<int>(ceil_count(alpha * m)); }
int FleetConfig::honest_count() const { return static_cast<int>(floor_count((1.0 - alpha) * m)); }

void FleetConfig::validate() const {
  if (m < 1) throw ConfigError("fleet: m must be >= 1");
  if (n < 1) throw ConfigError("fleet: n must be >= 1");
  if (d < 1) throw ConfigError("fleet: d must be >= 1");
  if (K < 1) throw ConfigError("fleet: K must be >= 1");
  if (!(alpha >= 0.0 && alpha < 0.5)) throw ConfigError("fleet: alpha must lie in [0, 0.5)");
  if (!(sigma >= 0.0)) throw ConfigError("fleet: sigma must be >= 0");
  if (K > honest_count()) {
    throw ConfigError("fleet: K = " + std::to_string(K) + " exceeds the " + std::to_string(honest_count()) +
                      " honest machines");
  }
  if (byzantine_count() + honest_count() != m) throw ConfigError("fleet: alpha m does not split m");
}

std::size_t GroundTruth::honest_count() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int l) { return l != kByzantineLabel; }));
}

Fleet generate_fleet(const FleetConfig& cfg) {
  cfg.validate();
  const int honest = cfg.honest_count();

  Fleet fleet;
  RngStream center_rng(cfg.seed, kCenterStream);
  for (int k = 0; k < cfg.K; ++k) fleet.truth.centers.push_back(center_rng.bernoulli_vector(cfg.d));

  // Round-robin dealing over a shuffled order gives near-equal cluster sizes.
  RngStream assign_rng(cfg.seed, kAssignStream);
  std::vector<int> honest_label(static_cast<std::size_t>(honest));
  const auto deal = assign_rng.permutation(static_cast<std::size_t>(honest));
  for (std::size_t r = 0; r < deal.size(); ++r) honest_label[deal[r]] = static_cast<int>(r % static_cast<std::size_t>(cfg.K));

  RngStream adv_rng(cfg.seed, kAdversaryStream);
  const Vector shared = adv_rng.bernoulli_vector(cfg.d, cfg.adversary_scale);

  // Slot s < honest is an honest machine; the shuffle decides machine ids.
  RngStream order_rng(cfg.seed, kOrderStream);
  const auto order = order_rng.permutation(static_cast<std::size_t>(cfg.m));

  fleet.shards.resize(static_cast<std::size_t>(cfg.m));
  fleet.coefficients.resize(static_cast<std::size_t>(cfg.m));
  fleet.truth.labels.assign(static_cast<std::size_t>(cfg.m), kByzantineLabel);
  for (int slot = 0; slot < cfg.m; ++slot) {
    const std::size_t id = order[static_cast<std::size_t>(slot)];
    WorkerShard& shard = fleet.shards[id];
    shard.machine_id = static_cast<int>(id);
    Vector coeff;
    if (slot < honest) {
      shard.byzantine = false;
      shard.true_cluster = honest_label[static_cast<std::size_t>(slot)];
      coeff = fleet.truth.centers[static_cast<std::size_t>(shard.true_cluster)];
    } else {
      shard.byzantine = true;
      shard.true_cluster = kByzantineLabel;
      coeff = cfg.adversary == AdversaryKind::SharedScaledBernoulli ? shared
                                                                     : adv_rng.bernoulli_vector(cfg.d, cfg.adversary_scale);
    }
    fleet.truth.labels[id] = shard.true_cluster;

    RngStream data_rng(cfg.seed, kMachineStreamBase + id);
    shard.X.resize(cfg.n, cfg.d);
    shard.y.resize(cfg.n);
    for (int l = 0; l < cfg.n; ++l) {
      for (int j = 0; j < cfg.d; ++j) shard.X(l, j) = data_rng.normal();
      shard.y[l] = shard.X.row(l).dot(coeff) + cfg.sigma * data_rng.normal();
    }
    fleet.coefficients[id] = std::move(coeff);
  }
  return fleet;
}

std::vector<int> threshold_components(const Matrix& points, double gamma) {
  const Eigen::Index N = points.rows();
  std::vector<int> component(static_cast<std::size_t>(N), -1);
  // Unvisited indices kept in a compact list so each DFS pop scans only
  // points that are not yet placed.
  std::vector<Eigen::Index> unvisited(static_cast<std::size_t>(N));
  std::iota(unvisited.begin(), unvisited.end(), Eigen::Index{0});
  const double gamma2 = gamma * gamma;
  int next_id = 0;
  std::vector<Eigen::Index> stack;
  while (!unvisited.empty()) {
    const Eigen::Index root = unvisited.front();
    unvisited.erase(unvisited.begin());
    component[static_cast<std::size_t>(root)] = next_id;
    stack.push_back(root);
    while (!stack.empty()) {
      const Eigen::Index i = stack.back();
      stack.pop_back();
      std::size_t keep = 0;
      for (std::size_t u = 0; u < unvisited.size(); ++u) {
        const Eigen::Index j = unvisited[u];
        if ((points.row(i) - points.row(j)).squaredNorm() < gamma2) {
          component[static_cast<std::size_t>(j)] = next_id;
          stack.push_back(j);
        } else {
          unvisited[keep++] = j;
        }
      }
      unvisited.resize(keep);
    }
    ++next_id;
  }
  return component;
}

IngestResult ingest_threshold_graph(const Matrix& points, const IngestSpec& spec) {
  if (!(spec.gamma > 0.0)) throw ConfigError("ingest: gamma must be positive");
  if (spec.shard_size < 1) throw ConfigError("ingest: shard_size must be >= 1");
  if (spec.n_adv < 0) throw ConfigError("ingest: n_adv must be >= 0");
  if (points.rows() == 0) throw DataError("ingest: no points");
  if (!points.allFinite()) throw DataError("ingest: non-finite feature value");

  const auto component = threshold_components(points, spec.gamma);
  const int n_comp = component.empty() ? 0 : *std::max_element(component.begin(), component.end()) + 1;
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(n_comp));
  for (Eigen::Index i = 0; i < points.rows(); ++i) members[static_cast<std::size_t>(component[static_cast<std::size_t>(i)])].push_back(i);

  IngestResult out;
  out.report.components = static_cast<std::size_t>(n_comp);
  std::vector<char> used(static_cast<std::size_t>(points.rows()), 0);
  RngStream shuffle_rng(spec.seed, kIngestShuffleStream);
  int machine = 0;
  for (auto& group : members) {
    if (static_cast<int>(group.size()) < spec.min_cluster) {
      out.report.dropped_points += group.size();
      continue;
    }
    const int k = out.truth.K();
    Vector center = Vector::Zero(points.cols());
    for (auto i : group) center += points.row(i).transpose();
    out.truth.centers.push_back(center / static_cast<double>(group.size()));
    out.report.kept_sizes.push_back(group.size());

    shuffle_rng.shuffle(group);
    const std::size_t full = group.size() / static_cast<std::size_t>(spec.shard_size);
    out.report.remainder_points += group.size() - full * static_cast<std::size_t>(spec.shard_size);
    for (std::size_t s = 0; s < full; ++s) {
      WorkerShard shard;
      shard.machine_id = machine++;
      shard.true_cluster = k;
      shard.X.resize(spec.shard_size, points.cols());
      for (int r = 0; r < spec.shard_size; ++r) {
        const Eigen::Index src = group[s * static_cast<std::size_t>(spec.shard_size) + static_cast<std::size_t>(r)];
        shard.X.row(r) = points.row(src);
        used[static_cast<std::size_t>(src)] = 1;
      }
      out.shards.push_back(std::move(shard));
      out.truth.labels.push_back(k);
    }
  }
  out.report.kept_components = out.truth.centers.size();
  if (out.truth.centers.empty()) {
    throw DataError("ingest: no connected component has at least " + std::to_string(spec.min_cluster) + " points");
  }

  std::vector<Eigen::Index> pool;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    if (!used[static_cast<std::size_t>(i)]) pool.push_back(i);
  if (spec.n_adv > 0 && static_cast<int>(pool.size()) < spec.shard_size) {
    pool.resize(static_cast<std::size_t>(points.rows()));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    out.report.adversaries_from_all_points = true;
  }
  if (spec.n_adv > 0 && static_cast<int>(pool.size()) < spec.shard_size) {
    throw DataError("ingest: fewer points than one adversarial shard needs");
  }
  RngStream adv_rng(spec.seed, kIngestAdvStream);
  for (int a = 0; a < spec.n_adv; ++a) {
    // Partial Fisher-Yates: a fresh sample without replacement per shard.
    for (int r = 0; r < spec.shard_size; ++r) {
      const std::size_t j = static_cast<std::size_t>(r) + adv_rng.uniform_index(pool.size() - static_cast<std::size_t>(r));
      std::swap(pool[static_cast<std::size_t>(r)], pool[j]);
    }
    const Vector shift = (adv_rng.bernoulli_vector(points.cols(), spec.adv_noise.scale).array() + spec.adv_noise.offset).matrix();
    WorkerShard shard;
    shard.machine_id = machine++;
    shard.byzantine = true;
    shard.true_cluster = kByzantineLabel;
    shard.X.resize(spec.shard_size, points.cols());
    for (int r = 0; r < spec.shard_size; ++r) shard.X.row(r) = points.row(pool[static_cast<std::size_t>(r)]) + shift.transpose();
    out.shards.push_back(std::move(shard));
    out.truth.labels.push_back(kByzantineLabel);
  }

  // Interleave adversarial shards with honest ones so ids carry no role.
  auto order = adv_rng.permutation(out.shards.size());
  std::vector<WorkerShard> shuffled(out.shards.size());
  std::vector<int> labels(out.shards.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    shuffled[i] = std::move(out.shards[order[i]]);
    shuffled[i].machine_id = static_cast<int>(i);
    labels[i] = out.truth.labels[order[i]];
  }
  out.shards = std::move(shuffled);
  out.truth.labels = std::move(labels);
  return out;
}

}  // namespace byzfed

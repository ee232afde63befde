#include "byzfed/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

#include "byzfed/assignment.hpp"
#include "byzfed/error.hpp"
#include "byzfed/numerics.hpp"
#include "byzfed/parallel.hpp"
#include "byzfed/rng.hpp"

namespace byzfed {
namespace {

constexpr std::uint64_t kGammaStream = 31;

template <typename E>
const std::map<E, std::string>& names();

template <>
const std::map<ClustererKind, std::string>& names() {
  static const std::map<ClustererKind, std::string> m{
      {ClustererKind::Lloyd, "km"},         {ClustererKind::KGeoMedian, "kgm"},
      {ClustererKind::TrimmedKMeans, "tkm"}, {ClustererKind::EdgeCut, "edgecut"},
      {ClustererKind::IterFilter2, "iterfilter2"}, {ClustererKind::Oracle, "oracle"}};
  return m;
}

template <>
const std::map<OptimizerKind, std::string>& names() {
  static const std::map<OptimizerKind, std::string> m{
      {OptimizerKind::SampleMean, "sm"},   {OptimizerKind::TrimmedMean, "tm"},
      {OptimizerKind::FedAvg, "fa"},       {OptimizerKind::CoordMedian, "median"},
      {OptimizerKind::GeoMedian, "geomedian"}, {OptimizerKind::IterFilter, "iterfilter"}};
  return m;
}

template <>
const std::map<SolverKind, std::string>& names() {
  static const std::map<SolverKind, std::string> m{
      {SolverKind::Erm, "erm"}, {SolverKind::Gd, "gd"}, {SolverKind::Ogd, "ogd"}};
  return m;
}

template <>
const std::map<InitKind, std::string>& names() {
  static const std::map<InitKind, std::string> m{{InitKind::Warm, "warm"}, {InitKind::Random, "random"}};
  return m;
}

template <typename E>
E parse_enum(const std::string& s, const char* what) {
  for (const auto& [k, v] : names<E>()) {
    if (v == s) return k;
  }
  std::string known;
  for (const auto& [k, v] : names<E>()) known += (known.empty() ? "" : ", ") + v;
  throw ConfigError(std::string("unknown ") + what + " '" + s + "' (expected one of: " + known + ")");
}

// Re-throws a stage failure with the stage name in front, keeping config
// errors distinguishable.
template <typename Fn>
auto tagged(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(stage) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(stage) + ": " + e.what());
  } catch (const ClusteringError& e) {
    throw ClusteringError(std::string(stage) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string(stage) + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(std::string(stage) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(std::string(stage) + ": " + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

AggregatorSpec aggregator_for(const StageThreeConfig& cfg, OptimizerKind kind, double beta) {
  switch (kind) {
    case OptimizerKind::SampleMean:
      return SampleMeanSpec{};
    case OptimizerKind::TrimmedMean:
    case OptimizerKind::FedAvg:
      return TrimmedMeanSpec{beta};
    case OptimizerKind::CoordMedian:
      return CoordMedianSpec{};
    case OptimizerKind::GeoMedian:
      return cfg.geomedian;
    case OptimizerKind::IterFilter:
      return cfg.filter;
  }
  throw ConfigError("unknown optimizer");
}

ClusterOutcome cluster_two_symmetric(PointView erms, const GroundTruth& truth, const ClusterConfig& cfg,
                                     std::uint64_t seed) {
  if (truth.K() != 2) throw ConfigError("iterfilter2 needs exactly 2 clusters");
  const Vector c = coord_median(erms);
  PointSet y;
  y.reserve(erms.size());
  for (const auto& e : erms) y.push_back(e - c);
  const ClusteringState init = cfg.init == InitKind::Warm ? warm_start_init(y, truth, cfg.warm_fraction, 2, seed)
                                                           : random_init(y, 2, seed);
  const Vector theta0 = 0.5 * (init.centers[0] - init.centers[1]);
  const auto res = iterfilter_2cluster(y, theta0, cfg.batches, cfg.filter);

  ClusterOutcome out;
  ClusteringState init_abs = init;
  for (auto& ctr : init_abs.centers) ctr += c;
  out.history.push_back(mismetrics(init_abs, truth));
  out.state.centers = {c + res.theta, c - res.theta};
  out.state.labels.resize(erms.size());
  for (std::size_t i = 0; i < erms.size(); ++i) out.state.labels[i] = res.labels[i] > 0 ? 0 : 1;
  out.state.trimmed.assign(erms.size(), false);
  out.state.iteration = cfg.batches;
  out.history.push_back(mismetrics(out.state, truth));
  out.converged = true;
  return out;
}

std::vector<std::vector<double>> distances_to_truth(const std::vector<OptResult>& opt, const ErrorMatch& match,
                                                    PointView centers_true) {
  std::vector<std::vector<double>> out(opt.size());
  for (std::size_t c = 0; c < opt.size(); ++c) {
    const auto t = match.est_to_true[c];
    if (t == kUnmatched) continue;
    const double sqrt_d = std::sqrt(static_cast<double>(centers_true[t].size()));
    for (const auto& w : opt[c].trajectory) out[c].push_back((w - centers_true[t]).norm() / sqrt_d);
  }
  return out;
}

RunResult stage3_and_score(const PipelineConfig& cfg, const TrialData& data, const ClusterOutcome& clustering,
                           OptimizerKind ok, std::uint64_t seed, unsigned threads) {
  RunResult r;
  r.clustering = clustering;
  r.ingest = data.ingest;
  AttackSpec attack = cfg.attack;
  attack.seed = mix_seed(seed, attack.seed);
  const auto t0 = std::chrono::steady_clock::now();
  r.opt = tagged("stage III (optimization)", [&] {
    return run_stage3(data.shards, clustering.state, cfg.opt, ok, data.loss, data.alpha, attack, threads);
  });
  r.times.optimization = seconds_since(t0);
  for (const auto& o : r.opt) r.w_hat.push_back(o.w);
  r.match = match_and_score(r.w_hat, data.truth.centers);
  r.round_distances = distances_to_truth(r.opt, r.match, data.truth.centers);
  return r;
}

double mean_of_values(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::string to_string(ClustererKind k) { return names<ClustererKind>().at(k); }
std::string to_string(OptimizerKind k) { return names<OptimizerKind>().at(k); }
std::string to_string(SolverKind k) { return names<SolverKind>().at(k); }
std::string to_string(InitKind k) { return names<InitKind>().at(k); }
ClustererKind parse_clusterer(const std::string& s) { return parse_enum<ClustererKind>(s, "clusterer"); }
OptimizerKind parse_optimizer(const std::string& s) { return parse_enum<OptimizerKind>(s, "optimizer"); }
SolverKind parse_solver(const std::string& s) { return parse_enum<SolverKind>(s, "solver"); }
InitKind parse_init(const std::string& s) { return parse_enum<InitKind>(s, "init"); }

std::string GridCell::name() const { return to_string(clusterer) + "+" + to_string(optimizer); }

void PipelineConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (source == DataSource::Synthetic) {
    fleet.validate();
  } else {
    if (ingest.path.empty()) throw ConfigError("ingest.path is required");
    if (ingest.spec.min_cluster < 1) throw ConfigError("ingest.min_cluster must be at least 1");
    if (ingest.spec.shard_size < 1) throw ConfigError("ingest.shard_size must be at least 1");
    if (ingest.spec.n_adv < 0) throw ConfigError("ingest.n_adv must be non-negative");
    if (!std::isfinite(ingest.spec.gamma)) throw ConfigError("ingest.gamma must be finite");
  }
  if (solver.kind == SolverKind::Gd && solver.gd_iters < 1) throw ConfigError("solver.gd_iters must be at least 1");
  if (!(solver.ogd.lambda > 0.0)) throw ConfigError("solver.ogd_lambda must be positive");
  if (!(cluster.warm_fraction >= 0.0 && cluster.warm_fraction <= 1.0))
    throw ConfigError("cluster.warm_fraction must lie in [0, 1]");
  if (cluster.max_iter < 0) throw ConfigError("cluster.max_iter must be non-negative");
  if (std::isnan(cluster.C) || cluster.C < 0.0) throw ConfigError("cluster.C must be non-negative");
  if (cluster.min_cluster < 1) throw ConfigError("cluster.min_cluster must be at least 1");
  if (cluster.batches < 1) throw ConfigError("cluster.batches must be at least 1");
  if (opt.max_rounds < 0) throw ConfigError("opt.max_rounds must be non-negative");
  if (opt.local_steps < 2) throw ConfigError("opt.local_steps must be at least 2");
  if (!(opt.beta < 0.5)) throw ConfigError("opt.beta must be below 0.5");
  if (!std::isfinite(opt.step)) throw ConfigError("opt.step must be finite");

  auto clusterers = grid_clusterers.empty() ? std::vector<ClustererKind>{cluster.kind} : grid_clusterers;
  for (auto k : clusterers) {
    if (k == ClustererKind::IterFilter2 && source == DataSource::Synthetic && fleet.K != 2)
      throw ConfigError("iterfilter2 needs fleet.K = 2");
  }
  if (source == DataSource::Synthetic && opt.beta < 0.0 && fleet.alpha >= 0.5)
    throw ConfigError("default beta equals alpha, which must be below 0.5");
}

std::uint64_t trial_seed(std::uint64_t master, int trial) {
  return mix_seed(master, static_cast<std::uint64_t>(trial));
}

double default_gamma(PointView points, std::uint64_t seed, std::size_t max_pairs) {
  const std::size_t n = points.size();
  if (n < 2) throw InputError("default_gamma: needs at least 2 points");
  if (max_pairs == 0) throw ConfigError("default_gamma: max_pairs must be positive");
  std::vector<double> dist;
  const double all_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  if (all_pairs <= static_cast<double>(max_pairs)) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) dist.push_back((points[i] - points[j]).norm());
  } else {
    RngStream rng(seed, kGammaStream);
    dist.reserve(max_pairs);
    while (dist.size() < max_pairs) {
      const auto i = rng.uniform_index(n);
      const auto j = rng.uniform_index(n);
      if (i != j) dist.push_back((points[i] - points[j]).norm());
    }
  }
  const std::size_t k = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(dist.size() - 1)));
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  return dist[k];
}

Matrix load_ingest_points(const IngestConfig& cfg) {
  return cfg.format == IngestFormat::Csv ? read_feature_csv(cfg.path, cfg.csv) : read_svmlight(cfg.path);
}

TrialData prepare_trial(const PipelineConfig& cfg, int trial, const Matrix* points) {
  const std::uint64_t seed = trial_seed(cfg.seed, trial);
  TrialData data;
  if (cfg.source == DataSource::Synthetic) {
    FleetConfig f = cfg.fleet;
    f.seed = seed;
    Fleet fleet = generate_fleet(f);
    data.shards = std::move(fleet.shards);
    data.truth = std::move(fleet.truth);
    data.loss = LossSpec{LossKind::SquaredError};
    data.alpha = f.alpha;
    return data;
  }
  if (!points) throw InputError("prepare_trial: ingest source needs the loaded points");
  IngestSpec spec = cfg.ingest.spec;
  spec.seed = seed;
  if (!(spec.gamma > 0.0)) {
    PointSet rows;
    rows.reserve(static_cast<std::size_t>(points->rows()));
    for (Eigen::Index i = 0; i < points->rows(); ++i) rows.push_back(points->row(i).transpose());
    spec.gamma = default_gamma(rows, cfg.seed);
  }
  IngestResult ing = ingest_threshold_graph(*points, spec);
  data.shards = std::move(ing.shards);
  data.truth = std::move(ing.truth);
  data.loss = LossSpec{LossKind::Location};
  data.alpha = data.shards.empty() ? 0.0 : static_cast<double>(spec.n_adv) / static_cast<double>(data.shards.size());
  data.ingest = ing.report;
  return data;
}

PointSet compute_erms(const std::vector<WorkerShard>& shards, const LossSpec& loss, const SolverConfig& solver,
                      unsigned threads) {
  PointSet erms(shards.size());
  parallel_for(shards.size(), threads, [&](std::size_t i) {
    const auto& s = shards[i];
    switch (solver.kind) {
      case SolverKind::Erm:
        erms[i] = local_erm(s, loss);
        break;
      case SolverKind::Gd:
        erms[i] = gd_erm(s, loss, solver.gd_step > 0.0 ? solver.gd_step : default_gd_step(s, loss), solver.gd_iters);
        break;
      case SolverKind::Ogd:
        erms[i] = online_to_batch(s, loss, solver.ogd);
        break;
    }
  });
  return erms;
}

ClusterOutcome run_clustering(PointView erms, const GroundTruth& truth, const ClusterConfig& cfg, ClustererKind kind,
                              std::uint64_t seed) {
  ClusterOutcome out;
  switch (kind) {
    case ClustererKind::Lloyd:
    case ClustererKind::KGeoMedian:
    case ClustererKind::TrimmedKMeans: {
      const int K = truth.K();
      const ClusteringState init = cfg.init == InitKind::Warm ? warm_start_init(erms, truth, cfg.warm_fraction, K, seed)
                                                               : random_init(erms, K, seed);
      LloydVariant v;
      v.kind = kind == ClustererKind::Lloyd        ? LloydKind::Lloyd
               : kind == ClustererKind::KGeoMedian ? LloydKind::KGeoMedian
                                                   : LloydKind::TrimmedKMeans;
      v.sigma_hat = cfg.sigma_hat;
      v.C = cfg.C;
      v.scale = cfg.trim_scale;
      v.geomedian = cfg.geomedian;
      auto run = run_lloyd_variant(erms, init, v, cfg.max_iter, &truth);
      out.state = std::move(run.state);
      out.history = std::move(run.history);
      out.converged = run.converged;
      return out;
    }
    case ClustererKind::EdgeCut: {
      out.gamma = cfg.gamma > 0.0 ? cfg.gamma : default_gamma(erms, seed);
      out.state = edge_cut_cluster(erms, out.gamma, cfg.min_cluster);
      if (out.state.K() == truth.K()) out.history.push_back(mismetrics(out.state, truth));
      out.converged = true;
      return out;
    }
    case ClustererKind::IterFilter2:
      return cluster_two_symmetric(erms, truth, cfg, seed);
    case ClustererKind::Oracle: {
      const auto nearest = assign_labels(erms, truth.centers);
      out.state.labels = truth.labels;
      for (std::size_t i = 0; i < erms.size(); ++i) {
        if (out.state.labels[i] == kByzantineLabel) out.state.labels[i] = nearest[i];
      }
      out.state.centers = bucket_means(erms, out.state.labels, truth.K());
      out.state.trimmed.assign(erms.size(), false);
      out.history.push_back(mismetrics(out.state, truth));
      out.converged = true;
      return out;
    }
  }
  throw ConfigError("unknown clusterer");
}

std::vector<OptResult> run_stage3(const std::vector<WorkerShard>& shards, const ClusteringState& state,
                                  const StageThreeConfig& cfg, OptimizerKind kind, const LossSpec& loss, double alpha,
                                  const AttackSpec& attack, unsigned threads) {
  if (state.labels.size() != shards.size()) throw InputError("run_stage3: labels and shards differ in size");
  const double beta = cfg.beta >= 0.0 ? cfg.beta : alpha;
  OptConfig oc;
  oc.step = cfg.step;
  oc.max_rounds = cfg.max_rounds;
  oc.aggregator = aggregator_for(cfg, kind, beta);
  oc.local_steps = kind == OptimizerKind::FedAvg ? cfg.local_steps : 1;
  oc.stop_tol = cfg.stop_tol;
  oc.threads = 1;

  const auto K = static_cast<std::size_t>(state.K());
  std::vector<OptResult> out(K);
  parallel_for(K, threads, [&](std::size_t k) {
    std::vector<WorkerShard> members;
    for (std::size_t i = 0; i < shards.size(); ++i) {
      if (state.labels[i] == static_cast<int>(k)) members.push_back(shards[i]);
    }
    if (members.empty()) {
      out[k].w = state.centers[k];
      out[k].trajectory.push_back(state.centers[k]);
      return;
    }
    OptConfig local = oc;
    local.init = state.centers[k];
    out[k] = kind == OptimizerKind::FedAvg ? fed_avg_robust(members, loss, local, attack)
                                           : robust_gd(members, loss, local, attack);
  });
  return out;
}

ErrorMatch match_and_score(PointView w_hat, PointView centers_true) {
  if (w_hat.empty() || centers_true.empty()) throw InputError("match_and_score: empty input");
  constexpr double kHuge = 1e250;
  Matrix D(static_cast<Eigen::Index>(w_hat.size()), static_cast<Eigen::Index>(centers_true.size()));
  for (std::size_t e = 0; e < w_hat.size(); ++e) {
    for (std::size_t t = 0; t < centers_true.size(); ++t) {
      const double dist = (w_hat[e] - centers_true[t]).norm();
      D(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(t)) = std::isfinite(dist) ? std::min(dist, kHuge) : kHuge;
    }
  }
  ErrorMatch m;
  m.est_to_true = w_hat.size() == centers_true.size() ? hungarian_min_cost(D) : greedy_min_cost(D);
  const double sqrt_d = std::sqrt(static_cast<double>(centers_true.front().size()));
  for (std::size_t e = 0; e < w_hat.size(); ++e) {
    const auto t = m.est_to_true[e];
    if (t == kUnmatched) continue;
    m.est_error = std::max(m.est_error, (w_hat[e] - centers_true[t]).norm() / sqrt_d);
  }
  return m;
}

RunResult finish_pipeline(const PipelineConfig& cfg, const TrialData& data, const PointSet& erms, ClustererKind ck,
                          OptimizerKind ok, std::uint64_t seed, unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  ClusterOutcome clustering =
      tagged("stage II (clustering)", [&] { return run_clustering(erms, data.truth, cfg.cluster, ck, seed); });
  const double t_cluster = seconds_since(t0);
  RunResult r = stage3_and_score(cfg, data, clustering, ok, seed, threads);
  r.times.clustering = t_cluster;
  return r;
}

RunResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  const unsigned threads = resolve_threads(cfg.threads);
  std::optional<Matrix> points;
  if (cfg.source == DataSource::Ingest) points = tagged("ingest", [&] { return load_ingest_points(cfg.ingest); });
  const TrialData data = tagged("data", [&] { return prepare_trial(cfg, 0, points ? &*points : nullptr); });
  const auto t0 = std::chrono::steady_clock::now();
  const PointSet erms = tagged("stage I (local solve)", [&] { return compute_erms(data.shards, data.loss, cfg.solver, threads); });
  const double t_local = seconds_since(t0);
  RunResult r = finish_pipeline(cfg, data, erms, cfg.cluster.kind, cfg.opt.kind, trial_seed(cfg.seed, 0), threads);
  r.times.local = t_local;
  return r;
}

GridResult run_grid(const PipelineConfig& cfg) {
  cfg.validate();
  const auto clusterers = cfg.grid_clusterers.empty() ? std::vector<ClustererKind>{cfg.cluster.kind} : cfg.grid_clusterers;
  const auto optimizers = cfg.grid_optimizers.empty() ? std::vector<OptimizerKind>{cfg.opt.kind} : cfg.grid_optimizers;
  const auto trials = static_cast<std::size_t>(cfg.trials);

  GridResult grid;
  for (auto ck : clusterers) {
    for (auto ok : optimizers) {
      GridCell cell{ck, ok, std::vector<CellTrial>(trials)};
      grid.cells.push_back(std::move(cell));
    }
  }

  PipelineConfig run_cfg = cfg;
  std::optional<Matrix> points;
  if (cfg.source == DataSource::Ingest) {
    points = tagged("ingest", [&] { return load_ingest_points(cfg.ingest); });
    if (!(run_cfg.ingest.spec.gamma > 0.0)) {
      PointSet rows;
      for (Eigen::Index i = 0; i < points->rows(); ++i) rows.push_back(points->row(i).transpose());
      run_cfg.ingest.spec.gamma = default_gamma(rows, cfg.seed);
    }
    grid.ingest_gamma = run_cfg.ingest.spec.gamma;
  }

  const unsigned threads = resolve_threads(cfg.threads);
  parallel_for(trials, threads, [&](std::size_t t) {
    const int trial = static_cast<int>(t);
    const std::uint64_t seed = trial_seed(cfg.seed, trial);
    auto fail_all = [&](std::size_t first, std::size_t count, const std::string& msg) {
      for (std::size_t c = first; c < first + count; ++c) {
        grid.cells[c].trials[t].ok = false;
        grid.cells[c].trials[t].error = msg;
      }
    };
    TrialData data;
    PointSet erms;
    double t_local = 0.0;
    try {
      data = tagged("data", [&] { return prepare_trial(run_cfg, trial, points ? &*points : nullptr); });
      const auto t0 = std::chrono::steady_clock::now();
      erms = tagged("stage I (local solve)", [&] { return compute_erms(data.shards, data.loss, run_cfg.solver, 1); });
      t_local = seconds_since(t0);
    } catch (const Error& e) {
      fail_all(0, grid.cells.size(), e.what());
      return;
    }
    for (std::size_t ci = 0; ci < clusterers.size(); ++ci) {
      const std::size_t first = ci * optimizers.size();
      ClusterOutcome clustering;
      double t_cluster = 0.0;
      try {
        const auto t0 = std::chrono::steady_clock::now();
        clustering = tagged("stage II (clustering)",
                            [&] { return run_clustering(erms, data.truth, run_cfg.cluster, clusterers[ci], seed); });
        t_cluster = seconds_since(t0);
      } catch (const Error& e) {
        fail_all(first, optimizers.size(), e.what());
        continue;
      }
      for (std::size_t oi = 0; oi < optimizers.size(); ++oi) {
        CellTrial& slot = grid.cells[first + oi].trials[t];
        try {
          slot.result = stage3_and_score(run_cfg, data, clustering, optimizers[oi], seed, 1);
          slot.result.times.local = t_local;
          slot.result.times.clustering = t_cluster;
          for (auto& o : slot.result.opt) o.trajectory.clear();
          slot.ok = true;
        } catch (const Error& e) {
          slot.ok = false;
          slot.error = e.what();
        }
      }
    }
  });

  for (auto& cell : grid.cells) {
    std::vector<double> errs;
    for (const auto& tr : cell.trials) {
      if (tr.ok) errs.push_back(tr.result.est_error());
    }
    cell.successes = errs.size();
    cell.mean = mean_of_values(errs);
    double ss = 0.0;
    for (double e : errs) ss += (e - cell.mean) * (e - cell.mean);
    cell.sd = errs.size() > 1 ? std::sqrt(ss / static_cast<double>(errs.size() - 1)) : 0.0;
  }
  return grid;
}

}  // namespace byzfed

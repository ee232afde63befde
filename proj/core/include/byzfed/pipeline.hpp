#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "byzfed/clustering.hpp"
#include "byzfed/datagen.hpp"
#include "byzfed/dataio.hpp"
#include "byzfed/distopt.hpp"
#include "byzfed/localsolve.hpp"
#include "byzfed/robust_stats.hpp"

namespace byzfed {

enum class DataSource { Synthetic, Ingest };

enum class IngestFormat { Csv, SvmLight };

struct IngestConfig {
  std::string path;
  IngestFormat format = IngestFormat::Csv;
  CsvOptions csv;
  IngestSpec spec;  ///< spec.gamma <= 0: resolved by default_gamma; spec.seed is set per trial
  bool operator==(const IngestConfig& o) const {
    return path == o.path && format == o.format && csv.delimiter == o.csv.delimiter && csv.header == o.csv.header &&
           csv.label_column == o.csv.label_column && spec.gamma == o.spec.gamma &&
           spec.min_cluster == o.spec.min_cluster && spec.shard_size == o.spec.shard_size &&
           spec.n_adv == o.spec.n_adv && spec.adv_noise.offset == o.spec.adv_noise.offset &&
           spec.adv_noise.scale == o.spec.adv_noise.scale && spec.seed == o.spec.seed;
  }
};

enum class SolverKind { Erm, Gd, Ogd };

struct SolverConfig {
  SolverKind kind = SolverKind::Erm;
  int gd_iters = 10;
  double gd_step = 0.0;  ///< <= 0: 1 / lambda_max of each local Hessian
  OgdSchedule ogd;
  bool operator==(const SolverConfig&) const = default;
};

enum class ClustererKind { Lloyd, KGeoMedian, TrimmedKMeans, EdgeCut, IterFilter2, Oracle };
enum class InitKind { Warm, Random };

struct ClusterConfig {
  ClustererKind kind = ClustererKind::TrimmedKMeans;
  InitKind init = InitKind::Warm;
  double warm_fraction = 0.6;
  int max_iter = 15;
  double C = kDefaultTrimC;
  double sigma_hat = 0.0;   ///< <= 0: MAD estimate
  TrimScale trim_scale = TrimScale::Pooled;
  GeoMedianSpec geomedian;
  double gamma = 0.0;       ///< EdgeCut; <= 0: default_gamma of the ERMs
  int min_cluster = 2;
  int batches = 5;          ///< IterFilter2 T
  IterFilterSpec filter;    ///< IterFilter2
  bool operator==(const ClusterConfig&) const = default;
};

enum class OptimizerKind { SampleMean, TrimmedMean, FedAvg, CoordMedian, GeoMedian, IterFilter };

struct StageThreeConfig {
  OptimizerKind kind = OptimizerKind::TrimmedMean;
  double beta = -1.0;       ///< < 0: the configured Byzantine fraction
  double step = 0.0;        ///< <= 0: 1 / lambda_max of the pooled Hessian
  int max_rounds = 300;
  int local_steps = 5;      ///< FedAvg only
  double stop_tol = 1e-8;
  GeoMedianSpec geomedian;
  IterFilterSpec filter;
  bool operator==(const StageThreeConfig&) const = default;
};

struct PipelineConfig {
  DataSource source = DataSource::Synthetic;
  FleetConfig fleet;      ///< fleet.seed is replaced by the trial seed
  IngestConfig ingest;
  SolverConfig solver;
  ClusterConfig cluster;
  StageThreeConfig opt;
  AttackSpec attack;
  std::uint64_t seed = 1;
  int trials = 1;
  unsigned threads = 0;   ///< 0 = hardware concurrency (capped by BYZFED_THREADS)
  std::vector<ClustererKind> grid_clusterers;  ///< empty = {cluster.kind}
  std::vector<OptimizerKind> grid_optimizers;  ///< empty = {opt.kind}
  std::string out_dir = "out";

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

std::string to_string(ClustererKind k);
std::string to_string(OptimizerKind k);
std::string to_string(SolverKind k);
std::string to_string(InitKind k);
ClustererKind parse_clusterer(const std::string& s);
OptimizerKind parse_optimizer(const std::string& s);
SolverKind parse_solver(const std::string& s);
InitKind parse_init(const std::string& s);

/// Seed of trial t: mix_seed(master, t).
std::uint64_t trial_seed(std::uint64_t master, int trial);

/// 10th percentile of up to max_pairs sampled pairwise distances.
double default_gamma(PointView points, std::uint64_t seed, std::size_t max_pairs = 2000);

/// Shards and truth for one trial.
struct TrialData {
  std::vector<WorkerShard> shards;
  GroundTruth truth;
  LossSpec loss;
  double alpha = 0.0;  ///< configured Byzantine fraction
  std::optional<IngestReport> ingest;
};

/// Reads the ingest file named in the config.
Matrix load_ingest_points(const IngestConfig& cfg);

/// Synthetic fleet or threshold-graph ingest for trial `trial`. For ingest,
/// `points` must hold the loaded feature matrix.
TrialData prepare_trial(const PipelineConfig& cfg, int trial, const Matrix* points = nullptr);

/// Stage I: one local estimate per machine, in machine order.
PointSet compute_erms(const std::vector<WorkerShard>& shards, const LossSpec& loss, const SolverConfig& solver,
                      unsigned threads = 1);

struct ClusterOutcome {
  ClusteringState state;
  std::vector<MisclusterReport> history;  ///< when the estimated K matches truth
  bool converged = false;
  double gamma = 0.0;  ///< EdgeCut threshold actually used
};

/// Stage II on the ERM vectors. `truth` feeds the warm start, the oracle
/// clusterer and the metrics; the clustering itself never reads it.
ClusterOutcome run_clustering(PointView erms, const GroundTruth& truth, const ClusterConfig& cfg, ClustererKind kind,
                              std::uint64_t seed);

/// Stage III: one optimization per estimated cluster, started at that
/// cluster's center. Empty clusters keep their center.
std::vector<OptResult> run_stage3(const std::vector<WorkerShard>& shards, const ClusteringState& state,
                                  const StageThreeConfig& cfg, OptimizerKind kind, const LossSpec& loss, double alpha,
                                  const AttackSpec& attack, unsigned threads = 1);

struct ErrorMatch {
  std::vector<std::size_t> est_to_true;  ///< kUnmatched when not matched
  double est_error = 0.0;                ///< max ||w_hat - w*|| / sqrt(d) over matched
};

/// Hungarian on center distances when counts agree, greedy otherwise.
ErrorMatch match_and_score(PointView w_hat, PointView centers_true);

struct StageTimes {
  double local = 0.0;
  double clustering = 0.0;
  double optimization = 0.0;
};

struct RunResult {
  PointSet w_hat;
  ErrorMatch match;
  ClusterOutcome clustering;
  std::vector<OptResult> opt;
  /// Per estimated cluster, ||w_t - w*|| / sqrt(d) along the trajectory
  /// (empty when the cluster is unmatched).
  std::vector<std::vector<double>> round_distances;
  StageTimes times;
  std::optional<IngestReport> ingest;

  double est_error() const { return match.est_error; }
};

/// Algorithm composition for trial 0 of cfg (one clusterer, one optimizer).
RunResult run_pipeline(const PipelineConfig& cfg);

/// Stages II and III on prepared data and ERMs; shared by run_pipeline and run_grid.
RunResult finish_pipeline(const PipelineConfig& cfg, const TrialData& data, const PointSet& erms, ClustererKind ck,
                          OptimizerKind ok, std::uint64_t seed, unsigned threads = 1);

struct CellTrial {
  bool ok = false;
  std::string error;
  RunResult result;  ///< trajectories dropped to save memory
};

struct GridCell {
  ClustererKind clusterer;
  OptimizerKind optimizer;
  std::vector<CellTrial> trials;
  std::size_t successes = 0;
  double mean = 0.0;  ///< over successful trials
  double sd = 0.0;    ///< sample standard deviation
  std::string name() const;
};

struct GridResult {
  std::vector<GridCell> cells;  ///< clusterer-major order
  std::optional<double> ingest_gamma;
};

/// Cartesian product of clusterers and optimizers over cfg.trials seeded
/// trials. Trials run in parallel; a failing cell is recorded and the grid
/// continues.
GridResult run_grid(const PipelineConfig& cfg);

}  // namespace byzfed

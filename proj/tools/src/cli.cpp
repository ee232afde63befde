#include "byzfed_cli/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "byzfed/config.hpp"
#include "byzfed/error.hpp"
#include "byzfed/pipeline.hpp"
#include "byzfed/report.hpp"

namespace byzfed::cli {
namespace {

namespace fs = std::filesystem;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> trials;
  std::optional<unsigned> threads;
  std::optional<double> alpha;
  std::optional<double> sigma;
  std::optional<std::string> clusterer;
  std::optional<std::string> aggregator;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::vector<std::string> clusterers;
  std::vector<std::string> optimizers;
  // ingest
  std::string input;
  std::optional<std::string> format;
  std::optional<int> shard_size;
  std::optional<int> n_adv;
  std::optional<int> min_cluster;
  // replay
  std::string manifest;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out-dir", o.out_dir, "output directory");
  cmd->add_option("--trials", o.trials, "independent seeded trials");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  cmd->add_option("--alpha", o.alpha, "Byzantine fraction");
  cmd->add_option("--sigma", o.sigma, "response noise std dev");
  cmd->add_option("--clusterer", o.clusterer, "km, kgm, tkm, edgecut, iterfilter2, oracle");
  cmd->add_option("--aggregator", o.aggregator, "sm, tm, fa, median, geomedian, iterfilter");
  cmd->add_option("--beta", o.beta, "trim fraction for tm/fa");
  cmd->add_option("--gamma", o.gamma, "edge threshold (edgecut, or ingest graph)");
  cmd->add_option("--clusterers", o.clusterers, "grid clusterers")->delimiter(',');
  cmd->add_option("--optimizers", o.optimizers, "grid optimizers")->delimiter(',');
}

PipelineConfig build_config(const Overrides& o, bool ingest) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.trials) cfg.trials = *o.trials;
  if (o.threads) cfg.threads = *o.threads;
  if (o.alpha) cfg.fleet.alpha = *o.alpha;
  if (o.sigma) cfg.fleet.sigma = *o.sigma;
  if (o.clusterer) cfg.cluster.kind = parse_clusterer(*o.clusterer);
  if (o.aggregator) cfg.opt.kind = parse_optimizer(*o.aggregator);
  if (o.beta) cfg.opt.beta = *o.beta;
  if (!o.clusterers.empty()) {
    cfg.grid_clusterers.clear();
    for (const auto& s : o.clusterers) cfg.grid_clusterers.push_back(parse_clusterer(s));
  }
  if (!o.optimizers.empty()) {
    cfg.grid_optimizers.clear();
    for (const auto& s : o.optimizers) cfg.grid_optimizers.push_back(parse_optimizer(s));
  }
  if (ingest) {
    cfg.source = DataSource::Ingest;
    if (!o.input.empty()) cfg.ingest.path = o.input;
    if (o.format) {
      if (*o.format == "csv") {
        cfg.ingest.format = IngestFormat::Csv;
      } else if (*o.format == "svmlight") {
        cfg.ingest.format = IngestFormat::SvmLight;
      } else {
        throw ConfigError("unknown --format '" + *o.format + "'");
      }
    }
    if (o.gamma) cfg.ingest.spec.gamma = *o.gamma;
    if (o.shard_size) cfg.ingest.spec.shard_size = *o.shard_size;
    if (o.n_adv) cfg.ingest.spec.n_adv = *o.n_adv;
    if (o.min_cluster) cfg.ingest.spec.min_cluster = *o.min_cluster;
  } else if (o.gamma) {
    cfg.cluster.gamma = *o.gamma;
  }
  return cfg;
}

std::string join(const std::vector<std::string>& args) {
  std::string s = "byzfed";
  for (const auto& a : args) s += " " + a;
  return s;
}

void print_summary(const GridResult& grid, std::ostream& out) {
  for (const auto& c : grid.cells) {
    out << "  " << c.name() << ": " << c.successes << "/" << c.trials.size() << " ok, est_error mean "
        << format_double(c.mean) << " sd " << format_double(c.sd) << "\n";
  }
}

int execute(PipelineConfig cfg, const std::string& command, std::ostream& out, std::ostream& err) {
  if (cfg.source == DataSource::Ingest && !(cfg.ingest.spec.gamma > 0.0)) {
    cfg.validate();
    const Matrix points = load_ingest_points(cfg.ingest);
    PointSet rows;
    rows.reserve(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) rows.push_back(points.row(i).transpose());
    cfg.ingest.spec.gamma = default_gamma(rows, cfg.seed);
    out << "gamma not given; using " << format_double(cfg.ingest.spec.gamma)
        << " (10th percentile of sampled pairwise distances)\n";
  }
  cfg.validate();
  const auto cells = std::max<std::size_t>(1, cfg.grid_clusterers.size()) * std::max<std::size_t>(1, cfg.grid_optimizers.size());
  out << "running " << cfg.trials << " trial(s) x " << cells << " cell(s), run_id " << run_id_for(cfg) << "\n"
      << std::flush;
  const GridResult grid = run_grid(cfg);
  if (grid.cells.front().trials.front().ok && grid.cells.front().trials.front().result.ingest) {
    const auto& rep = *grid.cells.front().trials.front().result.ingest;
    out << "ingest: " << rep.kept_components << " cluster(s) kept of " << rep.components << " component(s)\n";
  }
  const auto files = write_outputs(cfg.out_dir, cfg, grid, command);
  print_summary(grid, out);
  std::size_t failed = 0;
  for (const auto& c : grid.cells) failed += c.trials.size() - c.successes;
  if (failed > 0) err << "warning: " << failed << " cell trial(s) failed; see manifest.json\n";
  out << "wrote " << files.size() << " files to " << cfg.out_dir << "\n";
  return kExitOk;
}

std::optional<std::string> read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int replay(const Overrides& o, const std::string& command, std::ostream& out, std::ostream& err) {
  const fs::path manifest = o.manifest;
  PipelineConfig cfg = config_from_manifest(manifest);
  const fs::path original = manifest.parent_path();
  cfg.out_dir = o.out_dir ? *o.out_dir : (original / "replay").string();
  if (o.threads) cfg.threads = *o.threads;
  if (fs::weakly_canonical(cfg.out_dir) == fs::weakly_canonical(original.empty() ? fs::path(".") : original))
    throw ConfigError("replay output directory must differ from the original run");
  const int rc = execute(cfg, command, out, err);
  if (rc != kExitOk) return rc;
  bool same = true;
  for (const char* name : {"results.csv", "summary.csv", "misclustering.csv", "optimization.csv"}) {
    const auto a = read_all(original / name);
    const auto b = read_all(fs::path(cfg.out_dir) / name);
    const bool eq = a && b && *a == *b;
    out << "  " << name << ": " << (eq ? "identical" : "differs") << "\n";
    same = same && eq;
  }
  if (!same) {
    err << "replay differs from the original run\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Byzantine-robust clustered federated learning experiments", "byzfed"};
  app.require_subcommand(1);
  Overrides o;

  auto* synth = app.add_subcommand("synth", "run the pipeline on a synthetic fleet");
  add_common(synth, o);
  auto* grid = app.add_subcommand("grid", "run a clusterer x optimizer grid (default km,kgm,tkm x sm,tm,fa)");
  add_common(grid, o);
  auto* ingest = app.add_subcommand("ingest", "cluster a feature file into shards and run the pipeline");
  add_common(ingest, o);
  ingest->add_option("input", o.input, "feature file (CSV or SVMlight)");
  ingest->add_option("--format", o.format, "csv or svmlight");
  ingest->add_option("--shard-size", o.shard_size, "points per honest shard");
  ingest->add_option("--n-adv", o.n_adv, "adversarial shards");
  ingest->add_option("--min-cluster", o.min_cluster, "smallest kept component");
  auto* rep = app.add_subcommand("replay", "rerun a previous run from its manifest and compare outputs");
  rep->add_option("manifest", o.manifest, "manifest.json of the run")->required();
  rep->add_option("--out-dir", o.out_dir, "output directory (default <run>/replay)");
  rep->add_option("--threads", o.threads, "worker threads");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const std::string command = join(args);
  try {
    if (*rep) return replay(o, command, out, err);
    const bool is_ingest = static_cast<bool>(*ingest);
    PipelineConfig cfg = build_config(o, is_ingest);
    if (*grid) {
      if (cfg.grid_clusterers.empty())
        cfg.grid_clusterers = {ClustererKind::Lloyd, ClustererKind::KGeoMedian, ClustererKind::TrimmedKMeans};
      if (cfg.grid_optimizers.empty())
        cfg.grid_optimizers = {OptimizerKind::SampleMean, OptimizerKind::TrimmedMean, OptimizerKind::FedAvg};
    }
    return execute(cfg, command, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace byzfed::cli

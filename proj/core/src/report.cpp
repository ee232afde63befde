#include "byzfed/report.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "byzfed/config.hpp"
#include "byzfed/error.hpp"

#ifndef BYZFED_VERSION
#define BYZFED_VERSION "unknown"
#endif
#ifndef BYZFED_BUILD_ID
#define BYZFED_BUILD_ID "unknown"
#endif

namespace byzfed {
namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Clustering history is shared by all optimizers of a clusterer; the first
// cell of each clusterer carries it.
template <typename Fn>
void for_first_optimizer_cells(const GridResult& grid, Fn&& fn) {
  std::vector<ClustererKind> done;
  for (const auto& cell : grid.cells) {
    if (std::find(done.begin(), done.end(), cell.clusterer) != done.end()) continue;
    done.push_back(cell.clusterer);
    fn(cell);
  }
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string run_id_for(const PipelineConfig& cfg) {
  // Where results go and how many threads compute them do not change them.
  PipelineConfig key = cfg;
  key.out_dir.clear();
  key.threads = 0;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_to_json(key).dump())));
  return buf;
}

std::string results_csv(const PipelineConfig& cfg, const GridResult& grid) {
  const std::string id = run_id_for(cfg);
  std::ostringstream out;
  out << "run_id,cell,trial,metric,value\n";
  for (const auto& cell : grid.cells) {
    for (std::size_t t = 0; t < cell.trials.size(); ++t) {
      const auto& tr = cell.trials[t];
      auto row = [&](const char* metric, double v) {
        out << id << ',' << cell.name() << ',' << t << ',' << metric << ',' << format_double(v) << '\n';
      };
      row("ok", tr.ok ? 1.0 : 0.0);
      if (!tr.ok) continue;
      const auto& r = tr.result;
      row("est_error", r.est_error());
      row("k_est", static_cast<double>(r.w_hat.size()));
      row("cluster_iterations", static_cast<double>(r.clustering.state.iteration));
      if (!r.clustering.history.empty()) {
        const auto& last = r.clustering.history.back();
        row("A_s", last.A);
        row("G_s", last.G);
        row("G_s_U", last.G_untrimmed);
        row("Lambda_s", last.Lambda);
      }
      int rounds = 0;
      bool diverged = false;
      for (const auto& o : r.opt) {
        rounds = std::max(rounds, o.rounds);
        diverged = diverged || o.diverged;
      }
      row("opt_rounds_max", rounds);
      row("diverged", diverged ? 1.0 : 0.0);
    }
  }
  return out.str();
}

std::string summary_csv(const GridResult& grid) {
  std::ostringstream out;
  out << "cell,clusterer,optimizer,trials,successes,mean_est_error,sd_est_error\n";
  for (const auto& c : grid.cells) {
    out << c.name() << ',' << to_string(c.clusterer) << ',' << to_string(c.optimizer) << ',' << c.trials.size() << ','
        << c.successes << ',' << format_double(c.mean) << ',' << format_double(c.sd) << '\n';
  }
  return out.str();
}

std::string misclustering_csv(const GridResult& grid) {
  std::ostringstream out;
  out << "variant,trial,iter,A_s,G_s,G_s_U,Lambda_s\n";
  for_first_optimizer_cells(grid, [&](const GridCell& cell) {
    for (std::size_t t = 0; t < cell.trials.size(); ++t) {
      if (!cell.trials[t].ok) continue;
      for (const auto& h : cell.trials[t].result.clustering.history) {
        out << to_string(cell.clusterer) << ',' << t << ',' << h.iteration << ',' << format_double(h.A) << ','
            << format_double(h.G) << ',' << format_double(h.G_untrimmed) << ',' << format_double(h.Lambda) << '\n';
      }
    }
  });
  return out.str();
}

std::string optimization_csv(const GridResult& grid) {
  std::ostringstream out;
  out << "cell,trial,cluster_id,round,update_norm,distance_to_truth\n";
  for (const auto& cell : grid.cells) {
    for (std::size_t t = 0; t < cell.trials.size(); ++t) {
      const auto& tr = cell.trials[t];
      if (!tr.ok) continue;
      for (std::size_t c = 0; c < tr.result.opt.size(); ++c) {
        const auto& o = tr.result.opt[c];
        const auto& dist = tr.result.round_distances[c];
        for (std::size_t r = 0; r < o.update_norms.size(); ++r) {
          out << cell.name() << ',' << t << ',' << c << ',' << (r + 1) << ',' << format_double(o.update_norms[r]) << ',';
          if (r + 1 < dist.size()) out << format_double(dist[r + 1]);
          out << '\n';
        }
      }
    }
  }
  return out.str();
}

nlohmann::json make_manifest(const PipelineConfig& cfg, const GridResult& grid, const std::string& command,
                             const std::vector<std::string>& files) {
  nlohmann::json m;
  m["format_version"] = 1;
  m["results_schema"] = kResultsSchemaVersion;
  m["tool"] = "byzfed";
  m["version"] = BYZFED_VERSION;
  m["build_id"] = BYZFED_BUILD_ID;
  m["command"] = command;
  m["run_id"] = run_id_for(cfg);
  m["seed"] = cfg.seed;
  m["created_utc"] = utc_now();
  m["config"] = config_to_json(cfg);
  m["files"] = files;
  if (grid.ingest_gamma) m["ingest_gamma"] = *grid.ingest_gamma;
  nlohmann::json failures = nlohmann::json::array();
  nlohmann::json timings = nlohmann::json::array();
  for (const auto& cell : grid.cells) {
    for (std::size_t t = 0; t < cell.trials.size(); ++t) {
      const auto& tr = cell.trials[t];
      if (!tr.ok) {
        failures.push_back({{"cell", cell.name()}, {"trial", t}, {"error", tr.error}});
        continue;
      }
      const auto& tm = tr.result.times;
      timings.push_back({{"cell", cell.name()},
                         {"trial", t},
                         {"local_s", tm.local},
                         {"clustering_s", tm.clustering},
                         {"optimization_s", tm.optimization}});
      if (t == 0 && tr.result.ingest) {
        const auto& rep = *tr.result.ingest;
        m["ingest"] = {{"components", rep.components},
                       {"kept_components", rep.kept_components},
                       {"kept_sizes", rep.kept_sizes},
                       {"dropped_points", rep.dropped_points},
                       {"remainder_points", rep.remainder_points},
                       {"adversaries_from_all_points", rep.adversaries_from_all_points}};
      }
    }
  }
  m["failures"] = failures;
  m["timings"] = timings;
  return m;
}

std::vector<std::string> write_outputs(const std::filesystem::path& dir, const PipelineConfig& cfg,
                                       const GridResult& grid, const std::string& command) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  const std::vector<std::pair<std::string, std::string>> outputs{
      {"results.csv", results_csv(cfg, grid)},
      {"summary.csv", summary_csv(grid)},
      {"misclustering.csv", misclustering_csv(grid)},
      {"optimization.csv", optimization_csv(grid)},
  };
  std::vector<std::string> files{"manifest.json"};
  for (const auto& [name, _] : outputs) files.push_back(name);
  write_file_atomic(dir / "manifest.json", make_manifest(cfg, grid, command, files).dump(2) + "\n");
  for (const auto& [name, content] : outputs) write_file_atomic(dir / name, content);
  return files;
}

PipelineConfig config_from_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("cannot read manifest " + manifest_path.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!m.contains("config")) throw ConfigError("manifest has no config");
  return config_from_json(m.at("config"));
}

}  // namespace byzfed

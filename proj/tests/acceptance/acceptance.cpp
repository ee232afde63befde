// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "byzfed/clustering.hpp"
#include "byzfed/config.hpp"
#include "byzfed/numerics.hpp"
#include "byzfed/pipeline.hpp"
#include "byzfed/report.hpp"
#include "byzfed/rng.hpp"
#include "byzfed/robust_stats.hpp"

namespace fs = std::filesystem;
using namespace byzfed;

namespace {

constexpr unsigned kThreads = 8;

struct Verdict {
  std::string id;
  bool pass = false;
  std::string detail;
};

std::vector<Verdict> verdicts;

void report(const std::string& id, bool pass, const std::string& detail) {
  verdicts.push_back({id, pass, detail});
  std::cout << id << " " << (pass ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PipelineConfig config(const char* name) {
  return load_config(fs::path(BYZFED_SOURCE_DIR) / "configs" / name);
}

const GridCell& cell(const GridResult& g, const std::string& name) {
  for (const auto& c : g.cells)
    if (c.name() == name) return c;
  throw std::runtime_error("grid has no cell " + name);
}

double pooled_sd(const GridCell& a, const GridCell& b) { return std::sqrt(0.5 * (a.sd * a.sd + b.sd * b.sd)); }

std::string all_csv(const PipelineConfig& cfg, const GridResult& g) {
  return results_csv(cfg, g) + summary_csv(g) + misclustering_csv(g) + optimization_csv(g);
}

Vector random_direction(RngStream& rng, Eigen::Index d) {
  Vector u = rng.normal_vector(d);
  return u / u.norm();
}

// Misclustering decay on the synthetic fleet.
std::string ac1(PipelineConfig& cfg_out, GridResult& grid_out) {
  cfg_out = config("decay.json");
  cfg_out.threads = kThreads;
  const auto t0 = std::chrono::steady_clock::now();
  grid_out = run_grid(cfg_out);
  const double secs = seconds_since(t0);
  auto finals = [&](const std::string& name) {
    std::vector<double> a;
    for (const auto& t : cell(grid_out, name).trials)
      if (t.ok && !t.result.clustering.history.empty()) a.push_back(t.result.clustering.history.back().A);
    return a;
  };
  const auto tkm = finals("tkm+tm");
  const auto km = finals("km+tm");
  const auto kgm = finals("kgm+tm");
  const bool pass = tkm.size() == 20 && km.size() == 20 && median(tkm) <= 0.05 && median(km) >= 0.25;
  report("AC1", pass,
         "median final A_s: tkm " + fmt(median(tkm)) + " (need <= 0.05), km " + fmt(median(km)) +
             " (need >= 0.25), kgm " + fmt(median(kgm)) + "; " + std::to_string(tkm.size()) + "/20 tkm trials ok; " +
             fmt(secs, 3) + " s (target < 120 s)");
  return all_csv(cfg_out, grid_out);
}

// Estimation-error ordering and the trimmed / geomedian parity check.
void ac2_ac3() {
  auto cfg = config("grid.json");
  cfg.threads = kThreads;
  const auto g = run_grid(cfg);
  const double km_sm = cell(g, "km+sm").mean;
  const double tkm_tm = cell(g, "tkm+tm").mean;
  bool pass = km_sm >= 1.3 * tkm_tm;
  std::string detail = "km+sm " + fmt(km_sm) + " vs tkm+tm " + fmt(tkm_tm) + " (ratio " + fmt(km_sm / tkm_tm) + ", need >= 1.3)";
  for (const char* c : {"tkm", "kgm"}) {
    const double sm = cell(g, std::string(c) + "+sm").mean;
    const double tm = cell(g, std::string(c) + "+tm").mean;
    pass = pass && sm >= 1.15 * tm;
    detail += "; " + std::string(c) + " sm/tm " + fmt(sm / tm) + " (need >= 1.15)";
  }
  for (const char* c : {"km", "kgm", "tkm"}) {
    const double fa = cell(g, std::string(c) + "+fa").mean;
    const double tm = cell(g, std::string(c) + "+tm").mean;
    pass = pass && fa >= 5.0 * tm;
    detail += "; " + std::string(c) + " fa/tm " + fmt(fa / tm) + " (need >= 5)";
  }
  for (const auto& c : g.cells) pass = pass && (c.optimizer == OptimizerKind::FedAvg || c.successes == 20);
  report("AC2", pass, detail);

  const auto& t = cell(g, "tkm+tm");
  const auto& k = cell(g, "kgm+tm");
  const double diff = std::abs(t.mean - k.mean);
  const double tol = 0.5 * pooled_sd(t, k);
  report("AC3", diff <= tol,
         "|tkm+tm - kgm+tm| = |" + fmt(t.mean) + " - " + fmt(k.mean) + "| = " + fmt(diff) + " (need <= 0.5 pooled sd = " +
             fmt(tol) + ")");
}

// Decay of the trimmed Lloyd iteration on a symmetric two-cluster instance.
void ac4() {
  const int m = 400, d = 10, seeds = 20;
  const double alpha = 0.04;
  const int max_iter = static_cast<int>(std::ceil(3.0 * std::log(static_cast<double>(m))));
  const double norm = 4.0 * std::sqrt(std::log(static_cast<double>(m)));  // sigma = 1
  int hits = 0;
  std::vector<int> first_zero;
  for (int s = 0; s < seeds; ++s) {
    RngStream rng(mix_seed(4004, static_cast<std::uint64_t>(s)), 1);
    const Vector theta = norm * random_direction(rng, d);
    const Vector far = 10.0 * norm * random_direction(rng, d);
    const int byz = static_cast<int>(ceil_count(alpha * m));
    PointSet pts;
    GroundTruth truth;
    truth.centers = {theta, -theta};
    for (int i = 0; i < m; ++i) {
      if (i < byz) {
        pts.push_back(far + 0.1 * rng.normal_vector(d));
        truth.labels.push_back(kByzantineLabel);
      } else {
        const int k = rng.bernoulli() ? 0 : 1;
        pts.push_back(truth.centers[static_cast<std::size_t>(k)] + rng.normal_vector(d));
        truth.labels.push_back(k);
      }
    }
    const auto init = warm_start_init(pts, truth, 0.6, 2, static_cast<std::uint64_t>(s));
    LloydVariant v;
    v.kind = LloydKind::TrimmedKMeans;
    const auto run = run_lloyd_variant(pts, init, v, max_iter, &truth);
    int zero_at = -1;
    for (const auto& h : run.history)
      if (h.A == 0.0) {
        zero_at = h.iteration;
        break;
      }
    first_zero.push_back(zero_at);
    hits += zero_at >= 0;
  }
  std::string at;
  for (int z : first_zero) at += (at.empty() ? "" : ",") + std::to_string(z);
  report("AC4", hits >= 18,
         std::to_string(hits) + "/20 seeds reach A_s = 0 within " + std::to_string(max_iter) +
             " iterations (need >= 18); first zero iteration per seed: " + at);
}

// Dimension-free tolerance of the sample-split two-cluster filter.
void ac5() {
  const int m = 2000, T = 5, seeds = 5;
  const double alpha = 0.1, snr = 6.0;
  bool pass = true;
  std::string detail;
  for (int d : {10, 200}) {
    double worst = 0.0;
    for (int s = 0; s < seeds; ++s) {
      RngStream rng(mix_seed(5005 + static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(s)), 1);
      const Vector theta = snr * random_direction(rng, d);
      const Vector far = 20.0 * snr * random_direction(rng, d);
      const int outliers = static_cast<int>(ceil_count(alpha * m));
      PointSet pts;
      std::vector<int> truth;
      for (int i = 0; i < m; ++i) {
        if (i < outliers) {
          pts.push_back(far + 0.1 * rng.normal_vector(d));
          truth.push_back(0);
        } else {
          const int sign = rng.bernoulli() ? 1 : -1;
          pts.push_back(sign * theta + rng.normal_vector(d));
          truth.push_back(sign);
        }
      }
      auto order = rng.permutation(static_cast<std::size_t>(m));
      PointSet shuffled;
      std::vector<int> shuffled_truth;
      for (auto i : order) {
        shuffled.push_back(pts[i]);
        shuffled_truth.push_back(truth[i]);
      }
      const Vector theta0 = theta + 0.5 * snr * random_direction(rng, d);
      const auto r = iterfilter_2cluster(shuffled, theta0, T, IterFilterSpec{});
      int wrong = 0, inliers = 0;
      for (std::size_t i = 0; i < shuffled.size(); ++i) {
        if (shuffled_truth[i] == 0) continue;
        ++inliers;
        wrong += r.labels[i] != shuffled_truth[i];
      }
      worst = std::max(worst, static_cast<double>(wrong) / inliers);
    }
    pass = pass && worst <= 0.05;
    detail += (detail.empty() ? "" : "; ") + std::string("d=") + std::to_string(d) + " worst inlier label error " +
              fmt(worst) + " over " + std::to_string(seeds) + " seeds";
  }
  report("AC5", pass, detail + " (need <= 0.05)");
}

// Brute-force oracles for the location estimators.
double sum_dist(PointView pts, const Vector& x) {
  double s = 0.0;
  for (const auto& p : pts) s += (p - x).norm();
  return s;
}

Vector grid_fermat(PointView pts) {
  Vector lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const int n = 200;
  for (int level = 0; level < 6; ++level) {
    const Vector step = (hi - lo) / n;
    Vector best = lo;
    double best_val = sum_dist(pts, best);
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        Vector x(2);
        x << lo[0] + i * step[0], lo[1] + j * step[1];
        const double v = sum_dist(pts, x);
        if (v < best_val) {
          best_val = v;
          best = x;
        }
      }
    }
    lo = best - 2.0 * step;
    hi = best + 2.0 * step;
  }
  return 0.5 * (lo + hi);
}

void ac6() {
  RngStream rng(6006, 1);
  int sort_ok = 0;
  for (int inst = 0; inst < 500; ++inst) {
    const std::size_t t = 1 + rng.uniform_index(12);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.uniform_index(4));
    PointSet pts;
    for (std::size_t i = 0; i < t; ++i) pts.push_back(rng.normal_vector(d, 3.0));
    const double beta = 0.5 * rng.uniform();
    const auto b = static_cast<std::size_t>(std::floor(beta * static_cast<double>(t)));
    Vector tm_oracle(d), med_oracle(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      std::vector<double> col;
      for (const auto& p : pts) col.push_back(p[j]);
      std::sort(col.begin(), col.end());
      double s = 0.0;
      for (std::size_t i = b; i < t - b; ++i) s += col[i];
      tm_oracle[j] = s / static_cast<double>(t - 2 * b);
      med_oracle[j] = t % 2 ? col[t / 2] : 0.5 * (col[t / 2 - 1] + col[t / 2]);
    }
    const bool tm_valid = 2 * b < t;
    const bool tm_match = !tm_valid || trimmed_mean(pts, beta) == tm_oracle;
    sort_ok += tm_match && coord_median(pts) == med_oracle;
  }

  int gm_ok = 0;
  double gm_worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    PointSet pts;
    const std::size_t t = 3 + rng.uniform_index(10);
    for (std::size_t i = 0; i < t; ++i) pts.push_back(rng.normal_vector(2, 2.0));
    const double err = (geometric_median(pts) - grid_fermat(pts)).norm();
    gm_worst = std::max(gm_worst, err);
    gm_ok += err <= 1e-3;
  }

  int filter_wins = 0;
  const int filter_instances = 200;
  for (int inst = 0; inst < filter_instances; ++inst) {
    const Eigen::Index d = 5;
    const Vector mu = rng.normal_vector(d, 5.0);
    const Vector far = mu + 20.0 * random_direction(rng, d);
    PointSet pts;
    for (int i = 0; i < 90; ++i) pts.push_back(mu + rng.normal_vector(d));
    for (int i = 0; i < 10; ++i) pts.push_back(far + 0.1 * rng.normal_vector(d));
    const double filt = (iter_filter_mean(pts, 0.0, 50) - mu).norm();
    const double naive = (mean_of(pts) - mu).norm();
    filter_wins += filt < naive;
  }
  const bool pass = sort_ok == 500 && gm_ok == 100 && filter_wins >= 0.95 * filter_instances;
  report("AC6", pass,
         "sort oracles " + std::to_string(sort_ok) + "/500 bit-exact; geometric median " + std::to_string(gm_ok) +
             "/100 within 1e-3 (worst " + fmt(gm_worst, 3) + "); filter beats mean " + std::to_string(filter_wins) + "/" +
             std::to_string(filter_instances) + " (need >= 95%)");
}

// Two dense blobs plus scattered box noise: the ingest substitute for a
// real feature file.
fs::path write_two_blob_fixture() {
  const auto dir = fs::temp_directory_path() / "byzfed_acceptance";
  fs::create_directories(dir);
  const auto path = dir / "two_blobs.csv";
  RngStream rng(7007, 1);
  const Eigen::Index d = 10;
  PointSet rows;
  for (int i = 0; i < 1030; ++i) rows.push_back(rng.normal_vector(d));
  for (int i = 0; i < 1020; ++i) rows.push_back(Vector::Constant(d, 4.0) + rng.normal_vector(d));
  for (int i = 0; i < 850; ++i) {
    Vector p(d);
    for (Eigen::Index j = 0; j < d; ++j) p[j] = -15.0 + 40.0 * rng.uniform();
    rows.push_back(p);
  }
  rng.shuffle(rows);
  std::ofstream out(path);
  out.precision(17);
  for (const auto& r : rows) {
    for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << r[j];
    out << "\n";
  }
  return path;
}

PipelineConfig ingest_config(const fs::path& data) {
  PipelineConfig cfg;
  cfg.source = DataSource::Ingest;
  cfg.ingest.path = data.string();
  cfg.ingest.spec.gamma = 3.0;
  cfg.ingest.spec.shard_size = 50;
  cfg.ingest.spec.n_adv = 17;
  cfg.ingest.spec.min_cluster = 20;
  cfg.cluster.init = InitKind::Random;
  cfg.seed = 77;
  cfg.trials = 10;
  cfg.threads = kThreads;
  cfg.grid_clusterers = {ClustererKind::Lloyd, ClustererKind::TrimmedKMeans};
  cfg.grid_optimizers = {OptimizerKind::SampleMean, OptimizerKind::TrimmedMean};
  return cfg;
}

std::string ac7(PipelineConfig& cfg) {
  cfg = ingest_config(write_two_blob_fixture());
  const auto g = run_grid(cfg);
  std::size_t two = 0, trials = 0;
  for (const auto& c : g.cells)
    for (const auto& t : c.trials) {
      ++trials;
      two += t.ok && t.result.ingest && t.result.ingest->kept_components == 2;
    }
  const double km_sm = cell(g, "km+sm").mean;
  const double tkm_tm = cell(g, "tkm+tm").mean;
  const bool pass = two == trials && tkm_tm <= 0.6 * km_sm;
  report("AC7", pass,
         "two-blob fixture (real feature file not shipped): 2 clusters in " + std::to_string(two) + "/" +
             std::to_string(trials) + " cell trials; tkm+tm " + fmt(tkm_tm) + " vs km+sm " + fmt(km_sm) + " (ratio " +
             fmt(tkm_tm / km_sm) + ", need <= 0.6)");
  return all_csv(cfg, g);
}

void ac8(PipelineConfig decay, const std::string& decay_csv, PipelineConfig ingest, const std::string& ingest_csv) {
  decay.threads = 1;
  ingest.threads = 1;
  const bool same_decay = all_csv(decay, run_grid(decay)) == decay_csv;
  const bool same_ingest_1 = all_csv(ingest, run_grid(ingest)) == ingest_csv;
  ingest.threads = kThreads;
  const bool same_ingest_8 = all_csv(ingest, run_grid(ingest)) == ingest_csv;
  report("AC8", same_decay && same_ingest_1 && same_ingest_8,
         std::string("result CSVs byte-identical: decay run 8 vs 1 threads ") + (same_decay ? "yes" : "no") +
             "; ingest run 8 vs 1 threads " + (same_ingest_1 ? "yes" : "no") + "; ingest run repeated at 8 threads " +
             (same_ingest_8 ? "yes" : "no"));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    PipelineConfig decay_cfg;
    GridResult decay_grid;
    const std::string decay_csv = ac1(decay_cfg, decay_grid);
    ac2_ac3();
    ac4();
    ac5();
    ac6();
    PipelineConfig ingest_cfg;
    const std::string ingest_csv = ac7(ingest_cfg);
    ac8(decay_cfg, decay_csv, ingest_cfg, ingest_csv);
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << std::endl;
    return 2;
  }
  std::size_t failed = 0;
  for (const auto& v : verdicts) failed += !v.pass;
  std::cout << verdicts.size() - failed << "/" << verdicts.size() << " criteria passed in " << fmt(seconds_since(t0), 3)
            << " s" << std::endl;
  return failed == 0 ? 0 : 1;
}

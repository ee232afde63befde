#include <benchmark/benchmark.h>

#include "byzfed/clustering.hpp"
#include "byzfed/datagen.hpp"
#include "byzfed/distopt.hpp"
#include "byzfed/rng.hpp"
#include "byzfed/robust_stats.hpp"

using namespace byzfed;

namespace {

PointSet gaussian_points(std::size_t t, Eigen::Index d) {
  RngStream rng(42, 1);
  PointSet out;
  for (std::size_t i = 0; i < t; ++i) out.push_back(rng.normal_vector(d));
  return out;
}

void BM_TrimmedMean(benchmark::State& state) {
  const auto pts = gaussian_points(static_cast<std::size_t>(state.range(0)), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(trimmed_mean(pts, 0.1));
}
BENCHMARK(BM_TrimmedMean)->Args({100, 100})->Args({1000, 100});

void BM_GeometricMedian(benchmark::State& state) {
  const auto pts = gaussian_points(static_cast<std::size_t>(state.range(0)), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(geometric_median(pts));
}
BENCHMARK(BM_GeometricMedian)->Args({20, 100})->Args({100, 100})->Args({100, 512});

void BM_IterFilter(benchmark::State& state) {
  auto pts = gaussian_points(static_cast<std::size_t>(state.range(0)), state.range(1));
  for (std::size_t i = 0; i < pts.size() / 10; ++i) pts[i].array() += 20.0;
  for (auto _ : state) benchmark::DoNotOptimize(iter_filter_mean(pts, 0.0, 50));
}
BENCHMARK(BM_IterFilter)->Args({100, 10})->Args({400, 100});

void BM_TrimmedKMeansStep(benchmark::State& state) {
  FleetConfig fc;
  fc.m = 100;
  fc.d = static_cast<int>(state.range(0));
  fc.alpha = 0.3;
  const auto fleet = generate_fleet(fc);
  const PointSet pts = fleet.coefficients;
  const auto init = warm_start_init(pts, fleet.truth, 0.6, fc.K, 3);
  for (auto _ : state) benchmark::DoNotOptimize(trimmed_kmeans_step(pts, init));
}
BENCHMARK(BM_TrimmedKMeansStep)->Arg(10)->Arg(100);

void BM_RobustGdRound(benchmark::State& state) {
  FleetConfig fc;
  fc.m = 20;
  fc.n = static_cast<int>(state.range(0));
  fc.d = 100;
  fc.K = 1;
  const auto fleet = generate_fleet(fc);
  OptConfig cfg;
  cfg.max_rounds = 1;
  cfg.step = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(robust_gd(fleet.shards, LossSpec{}, cfg, AttackSpec{}));
}
BENCHMARK(BM_RobustGdRound)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();

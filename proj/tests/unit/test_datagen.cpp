#include <algorithm>
#include <map>
#include <numeric>

#include "byzfed/datagen.hpp"
#include "byzfed/error.hpp"
#include "byzfed/numerics.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace byzfed;

namespace {

// Union-find over all pairs: independent of the DFS in the library.
std::vector<int> components_oracle(const Matrix& P, double gamma) {
  const auto N = static_cast<std::size_t>(P.rows());
  std::vector<std::size_t> parent(N);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j)
      if ((P.row(static_cast<Eigen::Index>(i)) - P.row(static_cast<Eigen::Index>(j))).norm() < gamma)
        parent[find(i)] = find(j);
  std::map<std::size_t, int> ids;
  std::vector<int> out(N);
  for (std::size_t i = 0; i < N; ++i) {
    auto r = find(i);
    if (!ids.count(r)) ids[r] = static_cast<int>(ids.size());
    out[i] = ids[r];
  }
  return out;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

}  // namespace

TEST_SUITE("datagen") {
  TEST_CASE("fleet counts follow ceil and floor of alpha m") {
    FleetConfig c;
    c.m = 100;
    c.n = 5;
    c.d = 4;
    c.K = 5;
    c.alpha = 0.3;
    const Fleet f = generate_fleet(c);
    CHECK(f.shards.size() == 100);
    CHECK(f.truth.honest_count() == 70);
    std::vector<int> sizes(5, 0);
    for (int l : f.truth.labels)
      if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
    for (int s : sizes) CHECK(s == 14);
    for (std::size_t i = 0; i < f.shards.size(); ++i) {
      CHECK(f.shards[i].machine_id == static_cast<int>(i));
      CHECK(f.shards[i].byzantine == (f.truth.labels[i] == kByzantineLabel));
      CHECK(f.shards[i].X.rows() == 5);
      CHECK(f.shards[i].X.cols() == 4);
    }
  }

  TEST_CASE("centers and corrupt coefficients are scaled Bernoulli vectors") {
    FleetConfig c;
    c.m = 40;
    c.n = 3;
    c.d = 50;
    c.K = 2;
    c.alpha = 0.25;
    const Fleet f = generate_fleet(c);
    for (const auto& w : f.truth.centers)
      for (Eigen::Index j = 0; j < w.size(); ++j) CHECK((w[j] == 0.0 || w[j] == 1.0));
    for (std::size_t i = 0; i < f.shards.size(); ++i) {
      const auto& w = f.coefficients[i];
      if (f.shards[i].byzantine) {
        for (Eigen::Index j = 0; j < w.size(); ++j) CHECK((w[j] == 0.0 || w[j] == 3.0));
      } else {
        CHECK(w == f.truth.centers[static_cast<std::size_t>(f.truth.labels[i])]);
      }
    }
  }

  TEST_CASE("noiseless responses are exactly linear") {
    FleetConfig c;
    c.m = 10;
    c.n = 20;
    c.d = 3;
    c.K = 2;
    c.sigma = 0.0;
    const Fleet f = generate_fleet(c);
    for (std::size_t i = 0; i < f.shards.size(); ++i) CHECK((f.shards[i].X * f.coefficients[i] - f.shards[i].y).norm() == 0.0);
  }

  TEST_CASE("generation is deterministic in the seed") {
    FleetConfig c;
    c.m = 12;
    c.n = 4;
    c.d = 3;
    c.K = 3;
    c.alpha = 0.2;
    const Fleet a = generate_fleet(c), b = generate_fleet(c);
    for (std::size_t i = 0; i < a.shards.size(); ++i) {
      CHECK(a.shards[i].X == b.shards[i].X);
      CHECK(a.shards[i].y == b.shards[i].y);
    }
    c.seed = 2;
    const Fleet e = generate_fleet(c);
    CHECK(e.shards[0].X != a.shards[0].X);
  }

  TEST_CASE("shared adversary kind gives every corrupt machine one vector") {
    FleetConfig c;
    c.m = 20;
    c.n = 2;
    c.d = 30;
    c.K = 2;
    c.alpha = 0.3;
    c.adversary = AdversaryKind::SharedScaledBernoulli;
    const Fleet f = generate_fleet(c);
    std::vector<Vector> corrupt;
    for (std::size_t i = 0; i < f.shards.size(); ++i)
      if (f.shards[i].byzantine) corrupt.push_back(f.coefficients[i]);
    REQUIRE(corrupt.size() == 6);
    for (const auto& w : corrupt) CHECK(w == corrupt.front());
  }

  TEST_CASE("invalid fleet configs are rejected") {
    FleetConfig c;
    c.alpha = 0.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.alpha = 0.0;
    c.m = 3;
    c.K = 5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = FleetConfig{};
    c.sigma = -1;
    CHECK_THROWS_AS(generate_fleet(c), ConfigError);
  }

  TEST_CASE("threshold components match a union-find oracle") {
    for (std::uint64_t s = 1; s <= 15; ++s) {
      const auto pts = testing::random_points(40, 2, s, 3.0);
      Matrix P(40, 2);
      for (int i = 0; i < 40; ++i) P.row(i) = pts[static_cast<std::size_t>(i)].transpose();
      for (double gamma : {0.5, 1.0, 2.0, 4.0}) {
        CHECK(same_partition(threshold_components(P, gamma), components_oracle(P, gamma)));
      }
    }
  }

  TEST_CASE("the edge rule is strict") {
    Matrix P(2, 1);
    P << 0.0, 1.0;
    CHECK(threshold_components(P, 1.0) == std::vector<int>{0, 1});
    CHECK(threshold_components(P, 1.0000001) == std::vector<int>{0, 0});
  }

  TEST_CASE("ingest splits components into shards and accounts for every point") {
    // Blob A: 23 points near 0, blob B: 12 points near 100, 3 isolated points.
    Matrix P(38, 2);
    RngStream rng(3, 3);
    for (int i = 0; i < 23; ++i) P.row(i) << 0.01 * rng.normal(), 0.01 * rng.normal();
    for (int i = 23; i < 35; ++i) P.row(i) << 100 + 0.01 * rng.normal(), 0.01 * rng.normal();
    P.row(35) << 50, 50;
    P.row(36) << -50, 50;
    P.row(37) << 50, -50;
    IngestSpec spec;
    spec.gamma = 1.0;
    spec.min_cluster = 2;
    spec.shard_size = 5;
    spec.n_adv = 2;
    const auto res = ingest_threshold_graph(P, spec);
    CHECK(res.report.components == 5);
    CHECK(res.report.kept_components == 2);
    CHECK(res.report.dropped_points == 3);
    CHECK(res.report.remainder_points == 3 + 2);
    CHECK_FALSE(res.report.adversaries_from_all_points);
    CHECK(res.truth.K() == 2);
    CHECK(res.shards.size() == 4 + 2 + 2);
    int adv = 0;
    for (std::size_t i = 0; i < res.shards.size(); ++i) {
      CHECK(res.shards[i].X.rows() == 5);
      CHECK(res.shards[i].y.size() == 0);
      CHECK(res.shards[i].machine_id == static_cast<int>(i));
      CHECK(res.shards[i].true_cluster == res.truth.labels[i]);
      adv += res.shards[i].byzantine;
    }
    CHECK(adv == 2);
    CHECK(res.truth.centers[0].norm() < 0.1);
    CHECK(res.truth.centers[1][0] == doctest::Approx(100).epsilon(0.01));
  }

  TEST_CASE("adversarial shards fall back to all points when the unused pool is small") {
    Matrix P(10, 1);
    for (int i = 0; i < 10; ++i) P(i, 0) = 0.001 * i;
    IngestSpec spec;
    spec.gamma = 1.0;
    spec.shard_size = 5;
    spec.n_adv = 1;
    const auto res = ingest_threshold_graph(P, spec);
    CHECK(res.report.adversaries_from_all_points);
    CHECK(res.shards.size() == 3);
  }

  TEST_CASE("ingest errors") {
    Matrix P(3, 1);
    P << 0, 10, 20;
    IngestSpec spec;
    spec.gamma = 1.0;
    spec.min_cluster = 2;
    CHECK_THROWS_AS(ingest_threshold_graph(P, spec), DataError);
    spec.gamma = 0.0;
    CHECK_THROWS_AS(ingest_threshold_graph(P, spec), ConfigError);
  }
}

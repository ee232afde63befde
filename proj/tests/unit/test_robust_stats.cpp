#include <algorithm>
#include <cmath>
#include <utility>

#include "byzfed/error.hpp"
#include "byzfed/numerics.hpp"
#include "byzfed/robust_stats.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace byzfed;

namespace {

double sum_dist(PointView pts, const Vector& x) {
  double s = 0;
  for (const auto& p : pts) s += (p - x).norm();
  return s;
}

// Coarse-to-fine grid search for the 2-D Fermat-Weber point.
Vector fermat_grid(PointView pts) {
  Vector lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Vector best = 0.5 * (lo + hi);
  double half = 0.5 * (hi - lo).maxCoeff() + 1e-9;
  for (int level = 0; level < 12; ++level) {
    Vector center = best;
    double best_val = sum_dist(pts, best);
    for (int i = -20; i <= 20; ++i) {
      for (int j = -20; j <= 20; ++j) {
        Vector x(2);
        x << center[0] + half * i / 20.0, center[1] + half * j / 20.0;
        const double v = sum_dist(pts, x);
        if (v < best_val) {
          best_val = v;
          best = x;
        }
      }
    }
    half /= 5.0;
  }
  return best;
}

}  // namespace

TEST_SUITE("robust_stats") {
  TEST_CASE("trimmed mean and median equal brute-force sort oracles") {
    RngStream rng(10, 10);
    for (int inst = 0; inst < 200; ++inst) {
      const std::size_t t = 1 + rng.uniform_index(15);
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.uniform_index(4));
      const auto pts = testing::random_points(t, d, 500 + static_cast<std::uint64_t>(inst));
      const double beta = 0.45 * rng.uniform();
      const std::size_t b = static_cast<std::size_t>(std::floor(beta * static_cast<double>(t) + 1e-9));
      for (Eigen::Index j = 0; j < d; ++j) {
        std::vector<double> col;
        for (const auto& p : pts) col.push_back(p[j]);
        std::sort(col.begin(), col.end());
        if (2 * b < t) {
          double s = 0;
          for (std::size_t i = b; i < t - b; ++i) s += col[i];
          CHECK(trimmed_mean(pts, beta)[j] == s / static_cast<double>(t - 2 * b));
        }
        const double med = t % 2 ? col[t / 2] : 0.5 * (col[t / 2 - 1] + col[t / 2]);
        CHECK(coord_median(pts)[j] == med);
      }
    }
  }

  TEST_CASE("trimmed mean argument checks") {
    const auto pts = testing::random_points(4, 2, 1);
    CHECK_THROWS_AS(trimmed_mean(pts, 0.5), ConfigError);
    CHECK_THROWS_AS(trimmed_mean(pts, -0.1), ConfigError);
    CHECK_THROWS_AS(trimmed_mean(PointSet{}, 0.1), InputError);
    // Same value; the trimmed mean sums in sorted order.
    CHECK((trimmed_mean(pts, 0.0) - mean_of(pts)).norm() < 1e-15);
  }

  TEST_CASE("geometric median matches a grid-search Fermat point") {
    for (std::uint64_t s = 1; s <= 30; ++s) {
      const auto pts = testing::random_points(3 + s % 9, 2, s, 2.0);
      const Vector g = geometric_median(pts);
      const Vector oracle = fermat_grid(pts);
      CHECK((g - oracle).norm() < 1e-3);
    }
  }

  TEST_CASE("geometric median just beside a data point") {
    // Plain Weiszfeld stalls here about 0.05 away from the minimizer.
    PointSet pts;
    for (auto [a, b] : {std::pair{2.251812, 2.794368}, {-0.629866, -2.117293}, {1.028787, 2.638356}, {-0.369515, -1.369778}}) {
      Vector p(2);
      p << a, b;
      pts.push_back(p);
    }
    const Vector g = geometric_median(pts);
    const Vector ref = fermat_grid(pts);
    CHECK((g - ref).norm() < 1e-3);
    CHECK(sum_dist(pts, g) <= sum_dist(pts, ref) * (1.0 + 1e-7));
  }

  TEST_CASE("geometric median at a data point holding the majority") {
    PointSet pts(3, Vector::Zero(2));
    Vector a(2), b(2);
    a << 1, 0;
    b << 0, 1;
    pts.push_back(a);
    pts.push_back(b);
    CHECK(geometric_median(pts).norm() < 1e-12);
  }

  TEST_CASE("geometric median is translation and rotation equivariant") {
    const auto pts = testing::random_points(11, 3, 4);
    const Vector g = geometric_median(pts, 1e-12, 5000);
    Vector shift(3);
    shift << 5, -2, 1;
    PointSet moved;
    for (const auto& p : pts) moved.push_back(p + shift);
    CHECK((geometric_median(moved, 1e-12, 5000) - (g + shift)).norm() < 1e-6);
  }

  TEST_CASE("iterative filtering beats the sample mean on contaminated data") {
    int wins = 0;
    const int trials = 40;
    for (int s = 0; s < trials; ++s) {
      auto pts = testing::random_points(100, 10, 1000 + static_cast<std::uint64_t>(s));
      RngStream rng(static_cast<std::uint64_t>(s), 8);
      Vector dir = rng.normal_vector(10);
      dir.normalize();
      for (int i = 0; i < 10; ++i) pts[static_cast<std::size_t>(i)] = 20.0 * dir + 0.1 * rng.normal_vector(10);
      const auto r = iter_filter(pts, 0.0, 50);
      CHECK(r.survivors >= 50);
      if (r.mean.norm() < mean_of(pts).norm()) ++wins;
    }
    CHECK(wins >= 38);
  }

  TEST_CASE("iterative filtering keeps clean data and respects its floor") {
    const auto clean = testing::random_points(50, 4, 3);
    const auto r = iter_filter(clean, 100.0, 10);
    CHECK(r.survivors == 50);
    CHECK(r.mean == mean_of(clean));
    const auto tight = iter_filter(clean, 1e-9, 1000);
    CHECK(tight.survivors == 25);
    CHECK_THROWS_AS(iter_filter(PointSet{Vector::Zero(2)}, 0.0, 5), InputError);
  }

  TEST_CASE("aggregate dispatches on the spec") {
    const auto pts = testing::random_points(9, 3, 6);
    CHECK(aggregate(TrimmedMeanSpec{0.2}, pts) == trimmed_mean(pts, 0.2));
    CHECK(aggregate(CoordMedianSpec{}, pts) == coord_median(pts));
    CHECK(aggregate(SampleMeanSpec{}, pts) == mean_of(pts));
    CHECK(aggregate(GeoMedianSpec{}, pts) == geometric_median(pts));
    CHECK(aggregate(IterFilterSpec{}, PointSet{pts[0]}) == pts[0]);
    CHECK(aggregator_name(GeoMedianSpec{}) == "geometric_median");
  }
}

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "byzfed/error.hpp"
#include "byzfed/numerics.hpp"
#include "byzfed/rng.hpp"
#include "doctest.h"

using namespace byzfed;

namespace {

Matrix gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  RngStream rng(seed, 5);
  Matrix M(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = rng.normal();
  return M;
}

}  // namespace

TEST_SUITE("numerics") {
  TEST_CASE("least squares matches the normal equations on full-rank designs") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const Matrix X = gaussian(40, 6, s);
      const Vector y = gaussian(40, 1, s + 100).col(0);
      const Vector w = least_squares(X, y);
      const Vector oracle = (X.transpose() * X).ldlt().solve(X.transpose() * y);
      CHECK((w - oracle).norm() < 1e-9 * (1.0 + oracle.norm()));
    }
  }

  TEST_CASE("least squares gives the minimum-norm solution when n < d") {
    const Matrix X = gaussian(5, 12, 3);
    const Vector y = gaussian(5, 1, 4).col(0);
    const Vector w = least_squares(X, y);
    Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector oracle = svd.solve(y);
    CHECK((w - oracle).norm() < 1e-9);
    CHECK((X * w - y).norm() < 1e-9);
  }

  TEST_CASE("least squares rejects bad input") {
    CHECK_THROWS_AS(least_squares(Matrix(3, 2), Vector(4)), InputError);
    CHECK_THROWS_AS(least_squares(Matrix(0, 2), Vector(0)), InputError);
    Matrix X = Matrix::Ones(3, 2);
    X(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(least_squares(X, Vector::Ones(3)), InputError);
  }

  TEST_CASE("top eigenpair agrees with a dense eigensolver") {
    for (std::uint64_t s = 1; s <= 20; ++s) {
      const Matrix A = gaussian(30, 8, s);
      const Matrix M = A.transpose() * A / 30.0;
      const EigenPair top = top_eigenpair(M);
      Eigen::SelfAdjointEigenSolver<Matrix> es(M);
      const double oracle = es.eigenvalues().maxCoeff();
      CHECK(top.value == doctest::Approx(oracle).epsilon(1e-9));
      CHECK(top.vector.norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK((M * top.vector - top.value * top.vector).norm() <= 1e-8 * std::max(1.0, top.value));
    }
  }

  TEST_CASE("top eigenpair keeps the residual contract with a tiny eigengap") {
    Vector diag(5);
    diag << 1.0, 1.0 - 1e-9, 0.5, 0.2, 0.1;
    const Matrix Q = Eigen::HouseholderQR<Matrix>(gaussian(5, 5, 9)).householderQ();
    const Matrix M = Q * diag.asDiagonal() * Q.transpose();
    const EigenPair top = top_eigenpair(0.5 * (M + M.transpose()));
    CHECK(top.value == doctest::Approx(1.0).epsilon(1e-8));
    CHECK((M * top.vector - top.value * top.vector).norm() <= 1e-8);
  }

  TEST_CASE("top eigenpair edge cases") {
    const EigenPair z = top_eigenpair(Matrix::Zero(3, 3));
    CHECK(z.value == 0.0);
    CHECK(z.vector.norm() == doctest::Approx(1.0));
    Matrix asym = Matrix::Identity(3, 3);
    asym(0, 1) = 1.0;
    CHECK_THROWS(top_eigenpair(asym));
  }

  TEST_CASE("jacobi eigendecomposition reconstructs the matrix in descending order") {
    const Matrix A = gaussian(12, 7, 11);
    const Matrix M = A.transpose() * A;
    Vector values;
    Matrix vectors;
    jacobi_eigen(M, values, vectors);
    for (Eigen::Index i = 1; i < values.size(); ++i) CHECK(values[i - 1] >= values[i]);
    CHECK((vectors * values.asDiagonal() * vectors.transpose() - M).norm() < 1e-9 * M.norm());
    CHECK((vectors.transpose() * vectors - Matrix::Identity(7, 7)).norm() < 1e-10);
  }

  TEST_CASE("mean and covariance match direct formulas") {
    PointSet pts;
    for (int i = 0; i < 4; ++i) pts.push_back(Vector::Constant(2, static_cast<double>(i)));
    const Vector mu = mean_of(pts);
    CHECK(mu[0] == doctest::Approx(1.5));
    const Matrix C = covariance_of(pts, mu);
    CHECK(C(0, 0) == doctest::Approx(1.25));
    CHECK(C(0, 1) == doctest::Approx(1.25));
  }

  TEST_CASE("count rounding absorbs representation error") {
    CHECK(ceil_count(0.3 * 100) == 30);
    CHECK(floor_count(0.7 * 100) == 70);
    CHECK(ceil_count(0.6 * 70) == 42);
    CHECK(ceil_count(30.5) == 31);
    CHECK(floor_count(29.5) == 29);
  }
}

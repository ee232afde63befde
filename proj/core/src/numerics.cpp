#include "byzfed/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "byzfed/error.hpp"

namespace byzfed {

namespace {

constexpr int kPowerIterations = 200;
constexpr double kPowerTolerance = 1e-10;
constexpr double kCountSlack = 1e-9;

Vector power_start(Eigen::Index d) {
  // Deterministic, irregular start; avoids exact orthogonality to the
  // leading eigenvector for structured inputs like (1,-1) patterns.
  Vector v(d);
  std::uint64_t state = 0x2545f4914f6cdd1dULL;
  for (Eigen::Index i = 0; i < d; ++i) {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    v[i] = 0.5 + static_cast<double>(state >> 11) * 0x1.0p-53;
  }
  return v.normalized();
}

double residual(const Matrix& M, const Vector& v, double lambda) {
  return (M * v - lambda * v).norm();
}

}  // namespace

Vector least_squares(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size()) {
    throw InputError("least_squares: X has " + std::to_string(X.rows()) + " rows but y has " +
                     std::to_string(y.size()) + " entries");
  }
  if (X.rows() < 1 || X.cols() < 1) throw InputError("least_squares: empty design matrix");
  if (!all_finite(X) || !all_finite(y)) throw InputError("least_squares: non-finite input");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X);
  return cod.solve(y);
}

void jacobi_eigen(const Matrix& M, Vector& values, Matrix& vectors) {
  const Eigen::Index d = M.rows();
  Matrix A = M;
  Matrix V = Matrix::Identity(d, d);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < d; ++p)
      for (Eigen::Index q = p + 1; q < d; ++q) off += A(p, q) * A(p, q);
    if (off <= 1e-30 * std::max(1.0, A.squaredNorm())) break;
    for (Eigen::Index p = 0; p < d; ++p) {
      for (Eigen::Index q = p + 1; q < d; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < d; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < d; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < d; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return A(a, a) > A(b, b); });
  values.resize(d);
  vectors.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    values[i] = A(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    vectors.col(i) = V.col(order[static_cast<std::size_t>(i)]);
  }
}

EigenPair top_eigenpair(const Matrix& M) {
  if (M.rows() != M.cols() || M.rows() == 0) throw InputError("top_eigenpair: matrix must be square and nonempty");
  if (!all_finite(M)) throw InputError("top_eigenpair: non-finite matrix");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InputError("top_eigenpair: matrix is not symmetric");
  }
  const Eigen::Index d = M.rows();
  if (M.cwiseAbs().maxCoeff() == 0.0) {
    return {0.0, Vector::Unit(d, 0)};
  }

  Vector v = power_start(d);
  double lambda = v.dot(M * v);
  for (int it = 0; it < kPowerIterations; ++it) {
    Vector w = M * v;
    const double norm = w.norm();
    if (norm == 0.0) break;
    w /= norm;
    const double next = w.dot(M * w);
    const bool settled = std::abs(next - lambda) <= kPowerTolerance * std::max(1.0, std::abs(next));
    v = std::move(w);
    lambda = next;
    if (settled && residual(M, v, lambda) <= 1e-8 * std::max(1.0, lambda)) {
      return {std::max(0.0, lambda), v};
    }
  }
  if (residual(M, v, lambda) <= 1e-8 * std::max(1.0, lambda)) return {std::max(0.0, lambda), v};

  Vector values;
  Matrix vectors;
  jacobi_eigen(M, values, vectors);
  return {std::max(0.0, values[0]), vectors.col(0).normalized()};
}

Vector mean_of(PointView points) {
  if (points.empty()) throw InputError("mean_of: no points");
  Vector sum = Vector::Zero(points.front().size());
  for (const auto& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

Matrix covariance_of(PointView points, const Vector& mu) {
  const Eigen::Index d = mu.size();
  Matrix centered(static_cast<Eigen::Index>(points.size()), d);
  for (std::size_t i = 0; i < points.size(); ++i) centered.row(static_cast<Eigen::Index>(i)) = (points[i] - mu).transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(points.size());
  // Symmetrize away rounding so the eigen routine's symmetry check holds.
  return 0.5 * (cov + cov.transpose());
}

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

long long ceil_count(double x) { return static_cast<long long>(std::ceil(x - kCountSlack)); }
long long floor_count(double x) { return static_cast<long long>(std::floor(x + kCountSlack)); }

}  // namespace byzfed

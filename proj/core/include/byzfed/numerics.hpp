#pragma once

#include "byzfed/types.hpp"

namespace byzfed {

/// argmin_w ||y - X w||^2. Rank-deficient designs (including n < d) get the
/// minimum-norm solution.
Vector least_squares(const Matrix& X, const Vector& y);

struct EigenPair {
  double value = 0.0;
  Vector vector;  ///< unit norm
};

/// Largest eigenpair of a symmetric PSD matrix.
///
/// Power iteration (200 steps, 1e-10 relative tolerance) from a fixed
/// pseudo-random start. When the cap is hit before the residual
/// ||Mv - lambda v|| <= 1e-8 max(1, lambda) holds, falls back to a cyclic
/// Jacobi sweep so the residual contract holds for small eigengaps too.
EigenPair top_eigenpair(const Matrix& M);

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
/// Eigenvalues are returned in descending order, eigenvectors as columns.
void jacobi_eigen(const Matrix& M, Vector& values, Matrix& vectors);

/// Sum of points in index order divided by the count.
Vector mean_of(PointView points);

/// 1/t sum (p - mu)(p - mu)^T.
Matrix covariance_of(PointView points, const Vector& mu);

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

/// ceil(x) / floor(x) that absorb representation error in products such as
/// 0.3 * 100 = 30.000000000000004.
long long ceil_count(double x);
long long floor_count(double x);

}  // namespace byzfed

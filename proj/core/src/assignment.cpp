#include "byzfed/assignment.hpp"

#include <limits>

#include "byzfed/error.hpp"

namespace byzfed {

std::vector<std::size_t> hungarian_min_cost(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw InputError("hungarian_min_cost: cost matrix must be square");
  const std::size_t n = static_cast<std::size_t>(cost.rows());
  if (n == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials formulation with 1-based helper arrays.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, kUnmatched);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

std::vector<std::size_t> greedy_min_cost(const Matrix& cost) {
  const std::size_t rows = static_cast<std::size_t>(cost.rows());
  const std::size_t cols = static_cast<std::size_t>(cost.cols());
  std::vector<std::size_t> row_to_col(rows, kUnmatched);
  std::vector<char> row_used(rows, 0), col_used(cols, 0);
  for (std::size_t k = 0; k < std::min(rows, cols); ++k) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t br = kUnmatched, bc = kUnmatched;
    for (std::size_t r = 0; r < rows; ++r) {
      if (row_used[r]) continue;
      for (std::size_t c = 0; c < cols; ++c) {
        if (col_used[c]) continue;
        const double x = cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        if (x < best) {
          best = x;
          br = r;
          bc = c;
        }
      }
    }
    if (br == kUnmatched) break;
    row_used[br] = col_used[bc] = 1;
    row_to_col[br] = bc;
  }
  return row_to_col;
}

}  // namespace byzfed

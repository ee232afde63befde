#pragma once

#include <cstddef>
#include <vector>

#include "byzfed/types.hpp"

namespace byzfed {

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// method, O(n^3)). Returns col[r] for every row r.
std::vector<std::size_t> hungarian_min_cost(const Matrix& cost);

/// Greedy matching on a rectangular cost matrix: repeatedly takes the
/// cheapest remaining (row, col) pair. Unmatched rows map to npos.
std::vector<std::size_t> greedy_min_cost(const Matrix& cost);

inline constexpr std::size_t kUnmatched = static_cast<std::size_t>(-1);

}  // namespace byzfed

#pragma once

#include <cstddef>

namespace cov {

/// Default ceiling on the number of grid cells a single operation may address.
inline constexpr std::size_t kDefaultCellBudget = std::size_t{1} << 24;

/// kDefaultCellBudget unless COVTOOL_CELL_BUDGET holds a positive integer.
std::size_t cell_budget();

/// (2^depth)^dim, saturating at SIZE_MAX.
std::size_t grid_cell_count(std::size_t dim, int depth);

/// Throws ResourceError if (2^depth)^dim exceeds the budget.
void require_within_budget(const char* what, std::size_t dim, int depth, std::size_t budget);

}  // namespace cov

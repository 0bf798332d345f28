#include "cov/budget.hpp"

#include <cstdlib>
#include <limits>
#include <string>

#include "cov/errors.hpp"

namespace cov {

std::size_t cell_budget() {
    const char* env = std::getenv("COVTOOL_CELL_BUDGET");
    if (env == nullptr || *env == '\0') return kDefaultCellBudget;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) return kDefaultCellBudget;
    return static_cast<std::size_t>(v);
}

std::size_t grid_cell_count(std::size_t dim, int depth) {
    if (depth < 0) return 0;
    constexpr auto kMax = std::numeric_limits<std::size_t>::max();
    if (static_cast<std::size_t>(depth) * dim >= 64) return kMax;
    return std::size_t{1} << (static_cast<std::size_t>(depth) * dim);
}

void require_within_budget(const char* what, std::size_t dim, int depth, std::size_t budget) {
    if (depth < 0) throw InvalidInput(std::string(what) + ": depth must be non-negative");
    const std::size_t count = grid_cell_count(dim, depth);
    if (count > budget)
        throw ResourceError(std::string(what) + ": cell budget exceeded", count, budget);
}

}  // namespace cov

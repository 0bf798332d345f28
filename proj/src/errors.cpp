#include "cov/errors.hpp"

#include <sstream>

namespace cov {

std::string EvaluationError::format_point(const std::vector<double>& p) {
    std::ostringstream os;
    os.precision(12);
    os << '(';
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ')';
    return os.str();
}

}  // namespace cov

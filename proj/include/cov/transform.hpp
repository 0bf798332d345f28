#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "cov/grid.hpp"
#include "cov/linop.hpp"
#include "cov/vector.hpp"

namespace cov {

/// A selfmap F of n-space with an optional analytic Jacobian.
///
/// Evaluators must be safe to call concurrently. Every evaluation is checked:
/// a point outside the declared domain (its closure) or a non-finite result
/// raises EvaluationError carrying the offending point.
class Transform {
public:
    using Evaluator = std::function<Vector(std::span<const double>)>;
    using Jacobian = std::function<LinearMap(std::span<const double>)>;

    Transform(std::size_t dim, Evaluator evaluator, std::string label,
              Jacobian analytic_jacobian = {}, std::optional<SemiOpenBox> domain = std::nullopt);

    std::size_t dim() const noexcept { return dim_; }
    const std::string& label() const noexcept { return label_; }
    const std::optional<SemiOpenBox>& domain() const noexcept { return domain_; }

    Vector operator()(std::span<const double> x) const;

    bool has_analytic_jacobian() const noexcept { return static_cast<bool>(jacobian_); }
    LinearMap analytic_jacobian(std::span<const double> x) const;

    /// Builds the transform x -> L x.
    static Transform linear(const LinearMap& L, std::string label);

private:
    std::size_t dim_;
    Evaluator evaluator_;
    std::string label_;
    Jacobian jacobian_;
    std::optional<SemiOpenBox> domain_;
};

}  // namespace cov

#include "cov/transform.hpp"

#include "cov/errors.hpp"

namespace cov {

Transform::Transform(std::size_t dim, Evaluator evaluator, std::string label, Jacobian analytic_jacobian,
                     std::optional<SemiOpenBox> domain)
    : dim_(dim),
      evaluator_(std::move(evaluator)),
      label_(std::move(label)),
      jacobian_(std::move(analytic_jacobian)),
      domain_(std::move(domain)) {
    if (dim_ == 0) throw InvalidInput("Transform: dimension must be at least 1");
    if (!evaluator_) throw InvalidInput("Transform: missing evaluator");
    if (domain_ && domain_->dim() != dim_) throw InvalidInput("Transform: domain dimension mismatch");
}

Vector Transform::operator()(std::span<const double> x) const {
    if (x.size() != dim_) throw InvalidInput("Transform '" + label_ + "': argument has wrong dimension");
    if (domain_ && !domain_->contains_closed(x, 1e-12 * (1.0 + domain_->diameter())))
        throw EvaluationError("transform '" + label_ + "' evaluated outside its domain",
                              Vector(x.begin(), x.end()));
    Vector y = evaluator_(x);
    if (y.size() != dim_ || !all_finite(y))
        throw EvaluationError("transform '" + label_ + "' produced a non-finite value",
                              Vector(x.begin(), x.end()));
    return y;
}

LinearMap Transform::analytic_jacobian(std::span<const double> x) const {
    if (!jacobian_) throw PreconditionError("Transform '" + label_ + "' has no analytic Jacobian");
    try {
        return jacobian_(x);
    } catch (const InvalidInput&) {
        throw EvaluationError("transform '" + label_ + "' has a non-finite Jacobian",
                              Vector(x.begin(), x.end()));
    }
}

Transform Transform::linear(const LinearMap& L, std::string label) {
    return Transform(
        L.dim(), [L](std::span<const double> x) { return L.apply(x); }, std::move(label),
        [L](std::span<const double>) { return L; });
}

}  // namespace cov

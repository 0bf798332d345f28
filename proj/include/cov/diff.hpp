#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cov/grid.hpp"
#include "cov/linop.hpp"
#include "cov/transform.hpp"

namespace cov {

struct DirectionalDerivative {
    Vector value;
    bool converged = false;
};

/// One-sided quotients (F(z + h u) - F(z)) / h for h = h0, h0/2, ...,
/// h0/2^(levels-1). Returns the last quotient; converged when the last two
/// differ by less than 1e-6 * (1 + |value|). `u` must be a unit vector.
DirectionalDerivative directional_derivative(const Transform& F, std::span<const double> z,
                                             std::span<const double> u, double h0, int levels);

/// F'(z) estimated column by column, plus how far the difference quotients
/// along sampled unit directions stray from it.
struct DerivativeEstimate {
    Vector point;
    LinearMap op;
    double step = 0.0;
    /// max over sampled unit v of |F(z + h v) - F(z) - h J v| / h
    double uniform_residual = 0.0;
    int directions_sampled = 0;
};

DerivativeEstimate derivative_estimate(const Transform& F, std::span<const double> z, double h,
                                       int n_directions);

/// max over `directions` of |F(z + h v) - F(z) - h J v| / h.
double uniform_residual(const Transform& F, std::span<const double> z, const LinearMap& J, double h,
                        const std::vector<Vector>& directions);

/// Deterministic covering of the unit sphere: +-1 in 1-D, equispaced angles
/// in 2-D, a Fibonacci lattice in 3-D, axes plus normalized Halton points above.
std::vector<Vector> sphere_directions(std::size_t dim, int count);

/// 64 directions in 2-D, 256 in 3-D (and above), 2 in 1-D.
int default_direction_count(std::size_t dim);

/// 1e-5 times the diameter of the domain.
double default_step(const SemiOpenBox& domain);

/// Residual above which a point is reported as not uniformly differentiable.
double differentiability_tolerance(const LinearMap& J);

bool uniformly_differentiable(const DerivativeEstimate& e);

/// One-sided forward-difference Jacobian with step h.
LinearMap forward_difference_jacobian(const Transform& F, std::span<const double> z, double h);

/// Analytic Jacobian when the transform has one, forward differences otherwise.
LinearMap jacobian(const Transform& F, std::span<const double> z, double h);

/// z -> Delta F'(z) = |det F'(z)| on the cells of r. h must be below half
/// the smallest cell side.
ScalarField jacobian_scale_field(const Transform& F, const GridRegion& r, double h);

}  // namespace cov

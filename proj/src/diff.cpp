#include "cov/diff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cov/errors.hpp"

namespace cov {

DirectionalDerivative directional_derivative(const Transform& F, std::span<const double> z,
                                             std::span<const double> u, double h0, int levels) {
    if (z.size() != F.dim() || u.size() != F.dim())
        throw InvalidInput("directional_derivative: dimension mismatch");
    if (std::abs(norm(u) - 1.0) > 1e-12) throw InvalidInput("directional_derivative: u must be a unit vector");
    if (!(h0 > 0.0) || !std::isfinite(h0)) throw InvalidInput("directional_derivative: h0 must be positive");
    if (levels < 1) throw InvalidInput("directional_derivative: levels must be positive");

    const std::size_t n = F.dim();
    const Vector fz = F(z);
    DirectionalDerivative out;
    Vector prev;
    Vector x(n);
    double h = h0;
    for (int level = 0; level < levels; ++level, h *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) x[i] = z[i] + h * u[i];
        const Vector fx = F(x);
        Vector q(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = (fx[i] - fz[i]) / h;
        if (level > 0) out.converged = distance(q, prev) < 1e-6 * (1.0 + norm(q));
        prev = std::move(q);
    }
    out.value = std::move(prev);
    return out;
}

LinearMap forward_difference_jacobian(const Transform& F, std::span<const double> z, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidInput("forward_difference_jacobian: h must be positive");
    const std::size_t n = F.dim();
    const Vector fz = F(z);
    std::vector<double> a(n * n);
    Vector x(z.begin(), z.end());
    for (std::size_t j = 0; j < n; ++j) {
        x[j] = z[j] + h;
        const Vector fx = F(x);
        x[j] = z[j];
        for (std::size_t i = 0; i < n; ++i) a[i * n + j] = (fx[i] - fz[i]) / h;
    }
    return LinearMap(n, std::move(a));
}

LinearMap jacobian(const Transform& F, std::span<const double> z, double h) {
    return F.has_analytic_jacobian() ? F.analytic_jacobian(z) : forward_difference_jacobian(F, z, h);
}

namespace {

double radical_inverse(std::size_t index, std::size_t base) {
    double result = 0.0, f = 1.0 / static_cast<double>(base);
    for (std::size_t i = index; i > 0; i /= base, f /= static_cast<double>(base))
        result += f * static_cast<double>(i % base);
    return result;
}

constexpr std::size_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

std::vector<Vector> sphere_directions(std::size_t dim, int count) {
    if (dim == 0 || count < 1) throw InvalidInput("sphere_directions: need dim >= 1 and count >= 1");
    std::vector<Vector> dirs;
    dirs.reserve(static_cast<std::size_t>(count));
    const double two_pi = 2.0 * std::numbers::pi;
    if (dim == 1) {
        dirs.push_back({1.0});
        if (count > 1) dirs.push_back({-1.0});
    } else if (dim == 2) {
        for (int k = 0; k < count; ++k) {
            const double t = two_pi * k / count;
            dirs.push_back({std::cos(t), std::sin(t)});
        }
    } else if (dim == 3) {
        const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < count; ++k) {
            const double zc = 1.0 - (2.0 * k + 1.0) / count;
            const double rc = std::sqrt(std::max(0.0, 1.0 - zc * zc));
            dirs.push_back({rc * std::cos(golden_angle * k), rc * std::sin(golden_angle * k), zc});
        }
    } else {
        if (dim > std::size(kPrimes)) throw InvalidInput("sphere_directions: dimension too large");
        for (std::size_t a = 0; a < dim && dirs.size() < static_cast<std::size_t>(count); ++a)
            for (double s : {1.0, -1.0}) {
                if (dirs.size() >= static_cast<std::size_t>(count)) break;
                Vector e(dim, 0.0);
                e[a] = s;
                dirs.push_back(std::move(e));
            }
        for (std::size_t i = 1; dirs.size() < static_cast<std::size_t>(count); ++i) {
            Vector v(dim);
            for (std::size_t a = 0; a < dim; ++a) v[a] = 2.0 * radical_inverse(i, kPrimes[a]) - 1.0;
            const double len = norm(v);
            if (len < 1e-3) continue;
            for (double& x : v) x /= len;
            dirs.push_back(std::move(v));
        }
    }
    return dirs;
}

int default_direction_count(std::size_t dim) {
    if (dim <= 1) return 2;
    return dim == 2 ? 64 : 256;
}

double default_step(const SemiOpenBox& domain) { return 1e-5 * domain.diameter(); }

double differentiability_tolerance(const LinearMap& J) { return 1e-3 * (1.0 + operator_norm(J)); }

bool uniformly_differentiable(const DerivativeEstimate& e) {
    return e.uniform_residual <= differentiability_tolerance(e.op);
}

double uniform_residual(const Transform& F, std::span<const double> z, const LinearMap& J, double h,
                        const std::vector<Vector>& directions) {
    const std::size_t n = F.dim();
    const Vector fz = F(z);
    double residual = 0.0;
    Vector x(n);
    for (const Vector& v : directions) {
        for (std::size_t i = 0; i < n; ++i) x[i] = z[i] + h * v[i];
        const Vector fx = F(x);
        const Vector jv = J.apply(v);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = fx[i] - fz[i] - h * jv[i];
            s += d * d;
        }
        residual = std::max(residual, std::sqrt(s) / h);
    }
    return residual;
}

DerivativeEstimate derivative_estimate(const Transform& F, std::span<const double> z, double h,
                                       int n_directions) {
    if (z.size() != F.dim()) throw InvalidInput("derivative_estimate: dimension mismatch");
    if (n_directions < 1) throw InvalidInput("derivative_estimate: need at least one direction");
    LinearMap J = forward_difference_jacobian(F, z, h);
    const auto dirs = sphere_directions(F.dim(), n_directions);
    const double residual = uniform_residual(F, z, J, h, dirs);
    return DerivativeEstimate{Vector(z.begin(), z.end()), std::move(J), h, residual,
                              static_cast<int>(dirs.size())};
}

ScalarField jacobian_scale_field(const Transform& F, const GridRegion& r, double h) {
    if (r.dim() != F.dim()) throw InvalidInput("jacobian_scale_field: dimension mismatch");
    double min_side = r.cell_side(0);
    for (std::size_t a = 1; a < r.dim(); ++a) min_side = std::min(min_side, r.cell_side(a));
    if (!(h > 0.0) || !(h < 0.5 * min_side))
        throw InvalidInput("jacobian_scale_field: h must be positive and below half the cell side");
    const GridRegion grid(r.bounds(), r.depth());
    std::string label = "|det " + F.label() + "'|";
    return ScalarField{
        [F, grid, h](std::span<const double> z) {
            try {
                return scale_factor_det(jacobian(F, z, h));
            } catch (const EvaluationError& e) {
                std::string where = "outside the grid";
                if (auto key = grid.locate(z)) {
                    where = "in cell [";
                    const auto idx = grid.index(*key);
                    for (std::size_t a = 0; a < idx.size(); ++a)
                        where += (a ? " " : "") + std::to_string(idx[a]);
                    where += "]";
                }
                throw EvaluationError(std::string(e.what()) + " " + where, Vector(z.begin(), z.end()));
            }
        },
        std::move(label)};
}

}  // namespace cov

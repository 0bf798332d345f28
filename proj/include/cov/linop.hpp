#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cov/budget.hpp"
#include "cov/vector.hpp"

namespace cov {

/// A linear selfmap of n-space stored as a row-major n x n matrix.
///
/// Row i holds the dependence of output coordinate i on the input
/// coordinates, so apply(x)[i] = sum_j (*this)(i, j) * x[j]. Entries are
/// always finite; the constructors throw InvalidInput otherwise.
class LinearMap {
public:
    explicit LinearMap(std::size_t dim);
    LinearMap(std::size_t dim, std::vector<double> row_major);

    static LinearMap identity(std::size_t dim);
    static LinearMap diagonal(std::span<const double> diag);

    std::size_t dim() const noexcept { return dim_; }
    double operator()(std::size_t row, std::size_t col) const { return a_[row * dim_ + col]; }
    std::span<const double> entries() const noexcept { return a_; }

    Vector apply(std::span<const double> x) const;
    LinearMap transpose() const;
    LinearMap scaled(double s) const;

    /// Inverse by Gauss-Jordan elimination; nullopt when singular.
    std::optional<LinearMap> inverse() const;

    friend LinearMap operator*(const LinearMap& a, const LinearMap& b);
    friend LinearMap operator+(const LinearMap& a, const LinearMap& b);
    friend LinearMap operator-(const LinearMap& a, const LinearMap& b);
    friend bool operator==(const LinearMap&, const LinearMap&) = default;

private:
    std::size_t dim_;
    std::vector<double> a_;
};

/// Inner/outer volume bracket for the image of the unit semi-open box.
struct ScaleBracket {
    double inner = 0.0;
    double outer = 0.0;
    int subdivision_k = 1;
    int target_depth = 0;

    double gap() const { return outer - inner; }
    bool contains(double v, double rel_tol = 1e-12) const {
        const double slack = rel_tol * (1.0 + std::abs(v));
        return inner <= v + slack && v <= outer + slack;
    }
};

/// Largest singular value (Lipschitz constant) by power iteration on L^T L.
double operator_norm(const LinearMap& L);

/// Signed determinant by elimination with partial pivoting.
double determinant(const LinearMap& L);

/// |det L|: the volume scale factor of L.
double scale_factor_det(const LinearMap& L);

/// Box-count construction of the scale factor.
///
/// The unit semi-open box is cut into k^n equal sub-boxes, each sub-box is
/// mapped through L, and the union of the image parallelepipeds is
/// rasterized on a dyadic grid of 2^target_depth cells per axis spanning
/// the bounding box of L([0,1]^n). A target cell is outer when it meets some
/// image parallelepiped (separating-axis test against the parallelepiped's
/// face normals and the cell's own axes); it is inner when it lies inside a
/// single image, or inside the image of the block of sub-boxes whose images
/// it meets. For invertible L the returned bracket contains |det L|.
ScaleBracket scale_factor_boxcount(const LinearMap& L, int k, int target_depth,
                                   std::size_t budget = cell_budget());

/// Max |Delta(L + P) - Delta(L)| over `trials` seeded perturbations P whose
/// entries are uniform in [-eta/n, eta/n], so that ||P|| <= eta.
double delta_perturbation_gap(const LinearMap& L, double eta, int trials, std::uint64_t seed);

}  // namespace cov

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cov/budget.hpp"
#include "cov/vector.hpp"

namespace cov {

/// Product of half-open intervals [lower_i, upper_i).
class SemiOpenBox {
public:
    SemiOpenBox(Vector lower, Vector upper);
    static SemiOpenBox unit(std::size_t dim);

    std::size_t dim() const noexcept { return lower_.size(); }
    const Vector& lower() const noexcept { return lower_; }
    const Vector& upper() const noexcept { return upper_; }
    double side(std::size_t axis) const { return upper_[axis] - lower_[axis]; }
    double volume() const;
    double diameter() const;
    Vector center() const;
    bool contains(std::span<const double> p) const;
    bool contains_closed(std::span<const double> p, double tol = 0.0) const;

    friend bool operator==(const SemiOpenBox&, const SemiOpenBox&) = default;

private:
    Vector lower_;
    Vector upper_;
};

/// Row-major linearization of a dyadic cell multi-index (axis 0 fastest).
using CellKey = std::uint64_t;

/// How a cell relates to the set a region approximates.
enum class CellClass : std::uint8_t {
    inside,        // certified inside the set
    boundary_hit,  // may straddle the boundary; midpoint estimated inside
    boundary,      // may straddle the boundary; midpoint estimated outside
};

/// A set of dyadic cells inside a bounding box.
///
/// Cells have side bounds.side(i) / 2^depth on axis i. Each cell carries a
/// CellClass; plain regions (subdivisions, cell lists) are all `inside`, while
/// rasterized sets also carry boundary cells so that the inner measure counts
/// `inside` cells and the outer measure counts every cell.
class GridRegion {
public:
    GridRegion(SemiOpenBox bounds, int depth);
    GridRegion(SemiOpenBox bounds, int depth, std::vector<CellKey> keys,
               std::vector<CellClass> classes = {});

    const SemiOpenBox& bounds() const noexcept { return bounds_; }
    int depth() const noexcept { return depth_; }
    std::size_t dim() const noexcept { return bounds_.dim(); }
    long cells_per_axis() const noexcept { return 1L << depth_; }

    std::size_t size() const noexcept { return keys_.size(); }
    bool empty() const noexcept { return keys_.empty(); }
    const std::vector<CellKey>& keys() const noexcept { return keys_; }
    const std::vector<CellClass>& classes() const noexcept { return classes_; }
    bool is_plain() const;

    double cell_volume() const;
    double cell_side(std::size_t axis) const;
    double cell_diameter() const;

    CellKey key(std::span<const long> index) const;
    std::vector<long> index(CellKey key) const;
    SemiOpenBox cell_box(CellKey key) const;
    Vector cell_center(CellKey key) const;
    /// Key of the grid cell containing p (semi-open), if p lies in bounds.
    std::optional<CellKey> locate(std::span<const double> p) const;

    bool contains(CellKey key) const;
    std::optional<std::size_t> position(CellKey key) const;

    /// Same bounds, depth, and cell set (classes ignored).
    bool same_cells(const GridRegion& other) const;
    bool same_grid(const GridRegion& other) const;

private:
    SemiOpenBox bounds_;
    int depth_;
    std::vector<CellKey> keys_;
    std::vector<CellClass> classes_;
};

/// Inner and outer measure of a region.
struct MeasureBracket {
    double inner = 0.0;
    double outer = 0.0;
    bool contains(double v, double tol = 0.0) const { return inner - tol <= v && v <= outer + tol; }
};

/// A real-valued function on n-space with a label.
struct ScalarField {
    std::function<double(std::span<const double>)> evaluator;
    std::string description;

    double operator()(std::span<const double> z) const { return evaluator(z); }
};

struct IntegralEstimate {
    double value = 0.0;
    double est_error = 0.0;
};

/// Full region: every one of the (2^depth)^n cells of `box`.
GridRegion subdivide(const SemiOpenBox& box, int depth, std::size_t budget = cell_budget());

MeasureBracket region_measure(const GridRegion& r);

/// Volume of the cells whose midpoint is estimated inside (inside + boundary_hit).
double region_estimate(const GridRegion& r);

/// The cells counted by region_estimate, as a plain region.
GridRegion estimate_cells(const GridRegion& r);

/// Plain region holding only the certified-inside cells.
GridRegion inner_cells(const GridRegion& r);

/// Classification of a cell against a set; nullopt means outside.
using CellClassifier = std::function<std::optional<CellClass>(const SemiOpenBox& cell)>;

/// Rasterizes a set given by a cell classifier.
GridRegion rasterize(const SemiOpenBox& bounds, int depth, const CellClassifier& classify,
                     std::size_t budget = cell_budget());

/// Classifier for {x : sdf(x) < 0} where sdf is `lipschitz`-Lipschitz.
CellClassifier sdf_classifier(std::function<double(std::span<const double>)> sdf,
                              double lipschitz = 1.0);

/// Set algebra on regions sharing bounds and depth; results are plain.
GridRegion region_union(const GridRegion& a, const GridRegion& b);
GridRegion region_difference(const GridRegion& a, const GridRegion& b);
GridRegion region_intersection(const GridRegion& a, const GridRegion& b);

/// Midpoint rule over the region's estimate cells, each cell split into
/// 2^(n*l) sub-cells at level l = 0..refine_levels. Returns the finest sum and
/// the magnitude of the last refinement change. Summation order is fixed, so
/// the result does not depend on `threads`.
IntegralEstimate integrate(const ScalarField& f, const GridRegion& r, int refine_levels,
                           int threads = 1);

/// Text serialization: `bounds <lo...> <hi...> depth <d>` then `cell <i...>` lines.
void write_region(std::ostream& os, const GridRegion& r);
void write_region_cells(std::ostream& os, const GridRegion& r);
GridRegion read_region(std::istream& is);

}  // namespace cov

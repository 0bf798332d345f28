#pragma once

// Shared machinery for rasterizing F(E) on a target grid: corner images of
// the source cells, the piecewise-linear (Kuhn) interpolant through them,
// per-cell orientation, and enclosures of the boundary images.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "cov/detail/bitmap.hpp"
#include "cov/grid.hpp"
#include "cov/transform.hpp"

namespace cov::detail {

struct KuhnSimplex {
    std::vector<unsigned> masks;  // corner bitmasks, path from the base corner
    int parity = 1;
};

/// Kuhn triangulation of the unit cube spanned by `axes`, anchored at `base`.
std::vector<KuhnSimplex> kuhn_simplices(const std::vector<std::size_t>& axes, unsigned base);

struct TargetGrid {
    std::size_t n = 0;
    int depth = 0;
    long per_axis = 1;
    Vector lo;
    Vector width;
    std::size_t total = 0;

    SemiOpenBox bounds() const;
    double cell_volume() const;
    double center(std::size_t axis, long k) const { return lo[axis] + (static_cast<double>(k) + 0.5) * width[axis]; }
    std::size_t key(const std::vector<long>& idx) const;
    /// Cells whose closed box meets [a, b] on `axis`.
    bool overlap_range(std::size_t axis, double a, double b, long& first, long& last) const;
    /// Cells whose midpoint lies in [a, b] on `axis`.
    bool center_range(std::size_t axis, double a, double b, long& first, long& last) const;
};

/// Visits every cell of the index box [first, last] (inclusive).
template <typename Fn>
void for_each_cell(const TargetGrid& g, const std::vector<long>& first, const std::vector<long>& last, Fn&& fn) {
    for (std::size_t a = 0; a < g.n; ++a)
        if (first[a] > last[a]) return;
    std::vector<long> idx(first);
    while (true) {
        fn(idx);
        std::size_t a = 0;
        for (; a < g.n; ++a) {
            if (++idx[a] <= last[a]) break;
            idx[a] = first[a];
        }
        if (a == g.n) return;
    }
}

struct MeshOptions {
    double inflation = 1.5;
    double critical_threshold = 1e-6;
};

struct ImageMesh {
    std::size_t n = 0;
    const GridRegion* src = nullptr;
    std::vector<double> corner_images;              // n doubles per lattice corner
    std::vector<std::uint32_t> cell_corners;        // 2^n slots per source cell, mask order
    std::vector<double> center_images;              // n doubles per source cell
    std::vector<std::int8_t> orientation;           // +1 / -1, 0 for critical cells
    std::vector<double> enclosure_lo, enclosure_hi; // n doubles per source cell
    Vector image_lo, image_hi;                      // bounding box of all samples
    std::vector<KuhnSimplex> simplices;

    const double* corner(std::size_t cell, unsigned mask) const {
        return &corner_images[n * cell_corners[(cell << n) + mask]];
    }
    const double* center(std::size_t cell) const { return &center_images[n * cell]; }
};

ImageMesh build_image_mesh(const Transform& F, const GridRegion& src, const MeshOptions& opt);

/// Target grid over the sampled image bounding box, padded by `pad_fraction`
/// of the extent on each side.
TargetGrid make_target_grid(const ImageMesh& mesh, int depth, double pad_fraction, std::size_t budget);

/// For every source cell, calls fn(cell_position, target_keys) with the
/// distinct target cells whose midpoint lies in the cell's PL image.
template <typename Fn>
void for_each_cell_hits(const ImageMesh& mesh, const TargetGrid& grid, Fn&& fn);

void mark_midpoint_hits(const ImageMesh& mesh, const TargetGrid& grid, Bitmap& hits);

/// Target cells that may meet the boundary of F(E): images of source-region
/// boundary faces, of faces where the orientation flips, and of critical cells.
void mark_uncertain(const Transform& F, const ImageMesh& mesh, const TargetGrid& grid, double inflation,
                    Bitmap& uncertain);

/// Marks every target cell overlapping the enclosure of source cell `cell`.
template <typename Fn>
void for_each_enclosure_cell(const ImageMesh& mesh, const TargetGrid& grid, std::size_t cell, Fn&& fn) {
    std::vector<long> first(grid.n), last(grid.n);
    for (std::size_t a = 0; a < grid.n; ++a)
        if (!grid.overlap_range(a, mesh.enclosure_lo[grid.n * cell + a], mesh.enclosure_hi[grid.n * cell + a],
                                first[a], last[a]))
            return;
    for_each_cell(grid, first, last, [&](const std::vector<long>& idx) { fn(grid.key(idx)); });
}

// Barycentric point location inside one simplex image.
struct SimplexFrame {
    bool valid = false;
    std::vector<double> origin;
    std::vector<double> inverse;  // row-major n x n
    std::vector<double> lo, hi;   // bounding box of the vertices
};

SimplexFrame simplex_frame(const ImageMesh& mesh, std::size_t cell, const KuhnSimplex& s);

template <typename Fn>
void for_each_cell_hits(const ImageMesh& mesh, const TargetGrid& grid, Fn&& fn) {
    const std::size_t n = mesh.n;
    std::vector<std::size_t> keys;
    std::vector<long> first(n), last(n);
    std::vector<double> rel(n);
    for (std::size_t cell = 0; cell < mesh.src->size(); ++cell) {
        keys.clear();
        for (const KuhnSimplex& s : mesh.simplices) {
            const SimplexFrame f = simplex_frame(mesh, cell, s);
            if (!f.valid) continue;
            bool any = true;
            for (std::size_t a = 0; a < n && any; ++a) any = grid.center_range(a, f.lo[a], f.hi[a], first[a], last[a]);
            if (!any) continue;
            for_each_cell(grid, first, last, [&](const std::vector<long>& idx) {
                for (std::size_t a = 0; a < n; ++a) rel[a] = grid.center(a, idx[a]) - f.origin[a];
                double sum = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double l = 0.0;
                    for (std::size_t j = 0; j < n; ++j) l += f.inverse[i * n + j] * rel[j];
                    if (l < -1e-12) return;
                    sum += l;
                }
                if (sum > 1.0 + 1e-12) return;
                keys.push_back(grid.key(idx));
            });
        }
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        fn(cell, keys);
    }
}

}  // namespace cov::detail

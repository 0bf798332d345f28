#include "cov/indicatrix.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <utility>

#include "cov/diff.hpp"
#include "cov/errors.hpp"
#include "image_mesh.hpp"

namespace cov {

namespace {

using Hit = std::pair<std::size_t, std::uint32_t>;  // (target key, source cell)

// Face-connected components among the source cells of one group (sorted by cell).
std::size_t count_components(const GridRegion& src, std::span<const Hit> group) {
    const std::size_t m = group.size();
    if (m <= 1) return m;
    std::vector<std::size_t> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    auto position = [&](std::uint32_t cell) -> std::optional<std::size_t> {
        auto it = std::lower_bound(group.begin(), group.end(), cell,
                                   [](const Hit& h, std::uint32_t c) { return h.second < c; });
        if (it == group.end() || it->second != cell) return std::nullopt;
        return static_cast<std::size_t>(it - group.begin());
    };
    std::size_t components = m;
    for (std::size_t i = 0; i < m; ++i) {
        auto idx = src.index(src.keys()[group[i].second]);
        for (std::size_t a = 0; a < idx.size(); ++a) {
            // The +1 neighbor suffices: every adjacency is seen from its lower cell.
            if (idx[a] + 1 >= src.cells_per_axis()) continue;
            ++idx[a];
            const auto pos = src.position(src.key(idx));
            --idx[a];
            if (!pos) continue;
            const auto j = position(static_cast<std::uint32_t>(*pos));
            if (!j) continue;
            const std::size_t ri = find(i), rj = find(*j);
            if (ri != rj) parent[ri] = rj, --components;
        }
    }
    return components;
}

// Calls fn(target_key, components) for each target key among the sorted hits.
template <typename Fn>
void for_each_group(const GridRegion& src, std::vector<Hit>& hits, Fn&& fn) {
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    for (std::size_t i = 0; i < hits.size();) {
        std::size_t j = i;
        while (j < hits.size() && hits[j].first == hits[i].first) ++j;
        fn(hits[i].first, count_components(src, std::span<const Hit>(hits).subspan(i, j - i)));
        i = j;
    }
}

// Separating-axis test between the closed simplex `v` (n+1 points) and the
// closed box [lo, hi]. Dimensions above 3 fall back to the bounding boxes.
bool simplex_meets_box(const std::vector<const double*>& v, std::size_t n, const double* lo, const double* hi) {
    double scale = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        double smin = v[0][a], smax = v[0][a];
        for (const double* p : v) smin = std::min(smin, p[a]), smax = std::max(smax, p[a]);
        if (smax < lo[a] || smin > hi[a]) return false;
        scale = std::max(scale, hi[a] - lo[a]);
    }
    if (n < 2 || n > 3) return true;

    std::vector<std::array<double, 3>> normals;
    auto diff = [&](std::size_t i, std::size_t j) {
        std::array<double, 3> d{0.0, 0.0, 0.0};
        for (std::size_t a = 0; a < n; ++a) d[a] = v[j][a] - v[i][a];
        return d;
    };
    auto cross = [](const std::array<double, 3>& x, const std::array<double, 3>& y) {
        return std::array<double, 3>{x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]};
    };
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = i + 1; j <= n; ++j) {
            const auto e = diff(i, j);
            if (n == 2) {
                normals.push_back({-e[1], e[0], 0.0});
                continue;
            }
            for (std::size_t a = 0; a < 3; ++a) {
                std::array<double, 3> axis{0.0, 0.0, 0.0};
                axis[a] = 1.0;
                normals.push_back(cross(e, axis));
            }
            for (std::size_t k = j + 1; k <= n; ++k) normals.push_back(cross(e, diff(i, k)));
        }

    const double tol = 1e-12 * (1.0 + scale);
    for (const auto& w : normals) {
        double len = 0.0;
        for (std::size_t a = 0; a < n; ++a) len += w[a] * w[a];
        len = std::sqrt(len);
        if (!(len > 0.0)) continue;
        double smin = std::numeric_limits<double>::infinity(), smax = -smin;
        for (const double* p : v) {
            double s = 0.0;
            for (std::size_t a = 0; a < n; ++a) s += w[a] * p[a];
            smin = std::min(smin, s), smax = std::max(smax, s);
        }
        double c = 0.0, r = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            c += w[a] * 0.5 * (lo[a] + hi[a]);
            r += std::abs(w[a]) * 0.5 * (hi[a] - lo[a]);
        }
        if (smax < c - r - tol * len || smin > c + r + tol * len) return false;
    }
    return true;
}

// Target cells whose closed box meets the PL image of source cell `cell`.
// Closed cells meeting a connected set are face-connected, so components of
// these hits track the components of the preimage.
template <typename Fn>
void for_each_pl_cell(const detail::ImageMesh& mesh, const detail::TargetGrid& grid, std::size_t cell, Fn&& fn) {
    const std::size_t n = mesh.n;
    std::vector<long> first(n), last(n);
    std::vector<double> lo(n), hi(n);
    std::vector<const double*> verts(n + 1);
    std::vector<std::size_t> keys;
    for (const detail::KuhnSimplex& s : mesh.simplices) {
        for (std::size_t k = 0; k <= n; ++k) verts[k] = mesh.corner(cell, s.masks[k]);
        bool any = true;
        for (std::size_t a = 0; a < n && any; ++a) {
            double smin = verts[0][a], smax = verts[0][a];
            for (const double* p : verts) smin = std::min(smin, p[a]), smax = std::max(smax, p[a]);
            any = grid.overlap_range(a, smin, smax, first[a], last[a]);
        }
        if (!any) continue;
        detail::for_each_cell(grid, first, last, [&](const std::vector<long>& idx) {
            for (std::size_t a = 0; a < n; ++a) {
                lo[a] = grid.lo[a] + static_cast<double>(idx[a]) * grid.width[a];
                hi[a] = lo[a] + grid.width[a];
            }
            if (simplex_meets_box(verts, n, lo.data(), hi.data())) keys.push_back(grid.key(idx));
        });
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (std::size_t k : keys) fn(k);
}

// Source cells that are critical or face-adjacent to a cell of different orientation.
std::vector<std::size_t> seam_cells(const GridRegion& src, const detail::ImageMesh& mesh) {
    std::vector<char> seam(src.size(), 0);
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (mesh.orientation[i] == 0) {
            seam[i] = 1;
            continue;
        }
        auto idx = src.index(src.keys()[i]);
        for (std::size_t a = 0; a < idx.size(); ++a) {
            if (idx[a] + 1 >= src.cells_per_axis()) continue;
            ++idx[a];
            const auto j = src.position(src.key(idx));
            --idx[a];
            if (j && mesh.orientation[*j] != mesh.orientation[i]) seam[i] = seam[*j] = 1;
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < src.size(); ++i)
        if (seam[i]) out.push_back(i);
    return out;
}

struct IndicatrixParts {
    IndicatrixGrid grid;
    detail::ImageMesh mesh;
    detail::TargetGrid target;
};

IndicatrixParts build(const Transform& F, const GridRegion& src, int target_depth, const ImageOptions& options) {
    if (src.size() > std::numeric_limits<std::uint32_t>::max())
        throw InvalidInput("banach_indicatrix: source region too large");
    detail::ImageMesh mesh = detail::build_image_mesh(F, src, {options.inflation, options.critical_threshold});
    const detail::TargetGrid target = detail::make_target_grid(mesh, target_depth, options.pad_fraction, options.budget);

    std::vector<Hit> hits;
    for (std::size_t cell = 0; cell < src.size(); ++cell)
        for_each_pl_cell(mesh, target, cell, [&](std::size_t key) {
            hits.emplace_back(key, static_cast<std::uint32_t>(cell));
        });
    std::vector<CellKey> keys;
    std::vector<int> counts;
    for_each_group(src, hits, [&](std::size_t key, std::size_t n) {
        keys.push_back(key);
        counts.push_back(static_cast<int>(n));
    });

    detail::Bitmap uncertain(target.total);
    detail::mark_uncertain(F, mesh, target, options.inflation, uncertain);
    // Components merge across folds: flag everything the seam cells reach.
    for (std::size_t cell : seam_cells(src, mesh))
        detail::for_each_enclosure_cell(mesh, target, cell, [&](std::size_t key) { uncertain.set(key); });
    std::vector<CellKey> flagged;
    uncertain.for_each([&](std::size_t k) { flagged.push_back(k); });

    IndicatrixGrid grid{GridRegion(target.bounds(), target_depth, std::move(keys)), std::move(counts),
                        std::move(flagged)};
    return {std::move(grid), std::move(mesh), target};
}

}  // namespace

int IndicatrixGrid::count(CellKey key) const {
    const auto pos = target.position(key);
    return pos ? counts[*pos] : 0;
}

bool IndicatrixGrid::is_flagged(CellKey key) const {
    return std::binary_search(flagged.begin(), flagged.end(), key);
}

double IndicatrixGrid::integral() const {
    long total = 0;
    for (int c : counts) total += c;
    return static_cast<double>(total) * target.cell_volume();
}

IndicatrixGrid banach_indicatrix(const Transform& F, const GridRegion& src, int target_depth,
                                 const ImageOptions& options) {
    return build(F, src, target_depth, options).grid;
}

IndicatrixIntegral indicatrix_integral(const Transform& F, const GridRegion& src, int target_depth,
                                       const ScalarField& phi, const ImageOptions& options) {
    const IndicatrixParts parts = build(F, src, target_depth, options);
    const IndicatrixGrid& g = parts.grid;
    const double vol = g.target.cell_volume();

    IndicatrixIntegral out;
    double unflagged = 0.0;
    for (std::size_t i = 0; i < g.counts.size(); ++i) {
        const CellKey key = g.target.keys()[i];
        if (!g.is_flagged(key)) unflagged += g.counts[i] * phi(g.target.cell_center(key));
    }
    out.lhs_unflagged = unflagged * vol;
    out.flagged_cells = g.flagged.size();
    out.flagged_volume = static_cast<double>(g.flagged.size()) * vol;

    // Flagged cells: number of source cells whose PL image holds the midpoint.
    std::vector<std::size_t> flagged_hits;
    detail::for_each_cell_hits(parts.mesh, parts.target, [&](std::size_t, const std::vector<std::size_t>& keys) {
        for (std::size_t key : keys)
            if (g.is_flagged(key)) flagged_hits.push_back(key);
    });
    std::sort(flagged_hits.begin(), flagged_hits.end());
    double flagged = 0.0;
    for (std::size_t key : flagged_hits) flagged += phi(g.target.cell_center(key));
    out.lhs = out.lhs_unflagged + flagged * vol;
    return out;
}

IndicatrixIdentity indicatrix_identity(const Transform& F, const GridRegion& src, int target_depth, double h,
                                       const ImageOptions& options) {
    const ScalarField one{[](std::span<const double>) { return 1.0; }, "1"};
    const IndicatrixIntegral lhs = indicatrix_integral(F, src, target_depth, one, options);
    IndicatrixIdentity out;
    out.lhs = lhs.lhs;
    out.lhs_unflagged = lhs.lhs_unflagged;
    out.flagged_volume = lhs.flagged_volume;
    out.flagged_cells = lhs.flagged_cells;
    const auto rhs = integrate(jacobian_scale_field(F, src, h), src, 1);
    out.rhs = rhs.value;
    out.rhs_error = rhs.est_error;
    return out;
}

void write_indicatrix(std::ostream& os, const IndicatrixGrid& g) {
    const auto old = os.precision(17);
    os << "bounds";
    for (double x : g.target.bounds().lower()) os << ' ' << x;
    for (double x : g.target.bounds().upper()) os << ' ' << x;
    os << " depth " << g.target.depth() << '\n';
    os.precision(old);
    for (std::size_t i = 0; i < g.counts.size(); ++i) {
        os << "y_cell";
        for (long k : g.target.index(g.target.keys()[i])) os << ' ' << k;
        os << " N=" << g.counts[i] << '\n';
    }
}

}  // namespace cov

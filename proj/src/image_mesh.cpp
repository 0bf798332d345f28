#include "image_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cov/errors.hpp"
#include "cov/linop.hpp"

namespace cov::detail {

std::vector<KuhnSimplex> kuhn_simplices(const std::vector<std::size_t>& axes, unsigned base) {
    std::vector<std::size_t> perm(axes.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<KuhnSimplex> out;
    do {
        KuhnSimplex s;
        unsigned mask = base;
        s.masks.push_back(mask);
        for (std::size_t p : perm) {
            mask |= 1U << axes[p];
            s.masks.push_back(mask);
        }
        int inversions = 0;
        for (std::size_t i = 0; i < perm.size(); ++i)
            for (std::size_t j = i + 1; j < perm.size(); ++j)
                if (perm[i] > perm[j]) ++inversions;
        s.parity = inversions % 2 == 0 ? 1 : -1;
        out.push_back(std::move(s));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

SemiOpenBox TargetGrid::bounds() const {
    Vector hi(n);
    for (std::size_t a = 0; a < n; ++a) hi[a] = lo[a] + width[a] * static_cast<double>(per_axis);
    return SemiOpenBox(lo, hi);
}

double TargetGrid::cell_volume() const {
    double v = 1.0;
    for (double w : width) v *= w;
    return v;
}

std::size_t TargetGrid::key(const std::vector<long>& idx) const {
    std::size_t k = 0;
    for (std::size_t a = n; a-- > 0;) k = (k << depth) | static_cast<std::size_t>(idx[a]);
    return k;
}

namespace {

bool clamp_range(double first_real, double last_real, long per_axis, long& first, long& last) {
    if (!(first_real <= last_real)) return false;
    first_real = std::max(first_real, -1.0);
    last_real = std::min(last_real, static_cast<double>(per_axis));
    first = std::max(0L, static_cast<long>(std::ceil(first_real)));
    last = std::min(per_axis - 1, static_cast<long>(std::floor(last_real)));
    return first <= last;
}

}  // namespace

bool TargetGrid::overlap_range(std::size_t axis, double a, double b, long& first, long& last) const {
    return clamp_range((a - lo[axis]) / width[axis] - 1.0, (b - lo[axis]) / width[axis], per_axis, first, last);
}

bool TargetGrid::center_range(std::size_t axis, double a, double b, long& first, long& last) const {
    return clamp_range((a - lo[axis]) / width[axis] - 0.5, (b - lo[axis]) / width[axis] - 0.5, per_axis, first,
                       last);
}

ImageMesh build_image_mesh(const Transform& F, const GridRegion& src, const MeshOptions& opt) {
    if (F.dim() != src.dim()) throw InvalidInput("image of region: transform and region dimensions differ");
    if (src.empty()) throw InvalidInput("image of region: source region is empty");
    const std::size_t n = src.dim();
    const unsigned corners = 1U << n;
    const std::uint64_t lattice = static_cast<std::uint64_t>(src.cells_per_axis()) + 1;

    ImageMesh mesh;
    mesh.n = n;
    mesh.src = &src;
    std::vector<std::size_t> all_axes(n);
    std::iota(all_axes.begin(), all_axes.end(), std::size_t{0});
    mesh.simplices = kuhn_simplices(all_axes, 0);

    std::unordered_map<std::uint64_t, std::uint32_t> slot;
    slot.reserve(src.size() * 2);
    mesh.cell_corners.resize(src.size() * corners);
    mesh.center_images.resize(src.size() * n);
    mesh.orientation.assign(src.size(), 0);
    mesh.enclosure_lo.resize(src.size() * n);
    mesh.enclosure_hi.resize(src.size() * n);
    mesh.image_lo.assign(n, std::numeric_limits<double>::infinity());
    mesh.image_hi.assign(n, -std::numeric_limits<double>::infinity());

    auto grow = [&](const double* y) {
        for (std::size_t a = 0; a < n; ++a) {
            mesh.image_lo[a] = std::min(mesh.image_lo[a], y[a]);
            mesh.image_hi[a] = std::max(mesh.image_hi[a], y[a]);
        }
    };

    const auto& lo = src.bounds().lower();
    const auto& hi = src.bounds().upper();
    Vector point(n);
    for (std::size_t cell = 0; cell < src.size(); ++cell) {
        const auto idx = src.index(src.keys()[cell]);
        for (unsigned mask = 0; mask < corners; ++mask) {
            std::uint64_t lkey = 0, stride = 1;
            for (std::size_t a = 0; a < n; ++a) {
                const long c = idx[a] + ((mask >> a) & 1U);
                lkey += static_cast<std::uint64_t>(c) * stride;
                stride *= lattice;
                point[a] = c == src.cells_per_axis() ? hi[a] : lo[a] + static_cast<double>(c) * src.cell_side(a);
            }
            auto [it, inserted] = slot.try_emplace(lkey, static_cast<std::uint32_t>(mesh.corner_images.size() / n));
            if (inserted) {
                const Vector y = F(point);
                mesh.corner_images.insert(mesh.corner_images.end(), y.begin(), y.end());
                grow(y.data());
            }
            mesh.cell_corners[(cell << n) + mask] = it->second;
        }
        const Vector c = src.cell_center(src.keys()[cell]);
        const Vector yc = F(c);
        std::copy(yc.begin(), yc.end(), mesh.center_images.begin() + static_cast<long>(n * cell));
        grow(yc.data());

        // Enclosure: corner/center bounding box widened by the curvature
        // deviation of the center image from the mean corner image.
        double* elo = &mesh.enclosure_lo[n * cell];
        double* ehi = &mesh.enclosure_hi[n * cell];
        Vector mean(n, 0.0);
        for (std::size_t a = 0; a < n; ++a) elo[a] = ehi[a] = yc[a];
        for (unsigned mask = 0; mask < corners; ++mask) {
            const double* y = mesh.corner(cell, mask);
            for (std::size_t a = 0; a < n; ++a) {
                elo[a] = std::min(elo[a], y[a]);
                ehi[a] = std::max(ehi[a], y[a]);
                mean[a] += y[a] / corners;
            }
        }
        const double slack = opt.inflation * distance(yc, mean);
        for (std::size_t a = 0; a < n; ++a) {
            elo[a] -= slack;
            ehi[a] += slack;
        }

        // Orientation from the signed volumes of the Kuhn simplex images,
        // normalized to an estimate of det F' on the simplex.
        int sign = 0;
        bool critical = false;
        const double cell_volume = src.cell_volume();
        std::vector<double> edges(n * n);
        for (const KuhnSimplex& s : mesh.simplices) {
            const double* y0 = mesh.corner(cell, s.masks[0]);
            for (std::size_t k = 1; k <= n; ++k) {
                const double* yk = mesh.corner(cell, s.masks[k]);
                for (std::size_t a = 0; a < n; ++a) edges[a * n + (k - 1)] = yk[a] - y0[a];
            }
            const double jdet = determinant(LinearMap(n, edges)) * s.parity / cell_volume;
            if (std::abs(jdet) <= opt.critical_threshold) {
                critical = true;
                break;
            }
            const int sg = jdet > 0.0 ? 1 : -1;
            if (sign != 0 && sg != sign) {
                critical = true;
                break;
            }
            sign = sg;
        }
        mesh.orientation[cell] = critical ? 0 : static_cast<std::int8_t>(sign);
    }
    return mesh;
}

TargetGrid make_target_grid(const ImageMesh& mesh, int depth, double pad_fraction, std::size_t budget) {
    const std::size_t n = mesh.n;
    require_within_budget("image target grid", n, depth, budget);
    TargetGrid g;
    g.n = n;
    g.depth = depth;
    g.per_axis = 1L << depth;
    g.total = grid_cell_count(n, depth);
    g.lo.resize(n);
    g.width.resize(n);
    double max_extent = 0.0;
    for (std::size_t a = 0; a < n; ++a) max_extent = std::max(max_extent, mesh.image_hi[a] - mesh.image_lo[a]);
    if (max_extent <= 0.0) max_extent = 1.0;
    for (std::size_t a = 0; a < n; ++a) {
        double extent = mesh.image_hi[a] - mesh.image_lo[a];
        // Degenerate axes get a window comparable to the other axes.
        if (extent <= 1e-12 * max_extent) extent = max_extent;
        const double mid = 0.5 * (mesh.image_hi[a] + mesh.image_lo[a]);
        const double half = 0.5 * extent * (1.0 + 2.0 * pad_fraction);
        g.lo[a] = mid - half;
        g.width[a] = 2.0 * half / static_cast<double>(g.per_axis);
    }
    return g;
}

SimplexFrame simplex_frame(const ImageMesh& mesh, std::size_t cell, const KuhnSimplex& s) {
    const std::size_t n = mesh.n;
    SimplexFrame f;
    const double* y0 = mesh.corner(cell, s.masks[0]);
    f.origin.assign(y0, y0 + n);
    f.lo = f.origin;
    f.hi = f.origin;
    std::vector<double> edges(n * n);
    double scale = 1.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double* yk = mesh.corner(cell, s.masks[k]);
        double len = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            edges[a * n + (k - 1)] = yk[a] - y0[a];
            len += edges[a * n + (k - 1)] * edges[a * n + (k - 1)];
            f.lo[a] = std::min(f.lo[a], yk[a]);
            f.hi[a] = std::max(f.hi[a], yk[a]);
        }
        scale *= std::sqrt(len);
    }
    const LinearMap E(n, edges);
    if (!(std::abs(determinant(E)) > 1e-12 * scale)) return f;
    auto inv = E.inverse();
    if (!inv) return f;
    f.inverse.assign(inv->entries().begin(), inv->entries().end());
    f.valid = true;
    return f;
}

void mark_midpoint_hits(const ImageMesh& mesh, const TargetGrid& grid, Bitmap& hits) {
    for_each_cell_hits(mesh, grid, [&](std::size_t, const std::vector<std::size_t>& keys) {
        for (std::size_t k : keys) hits.set(k);
    });
}

namespace {

// Normal to the hyperplane through n points in n-space (generalized cross
// product of the n-1 edge vectors); zero when degenerate.
Vector facet_normal(const std::vector<const double*>& pts, std::size_t n) {
    Vector normal(n, 0.0);
    if (n == 1) {
        normal[0] = 1.0;
        return normal;
    }
    std::vector<double> edges((n - 1) * n);
    for (std::size_t k = 1; k < n; ++k)
        for (std::size_t a = 0; a < n; ++a) edges[(k - 1) * n + a] = pts[k][a] - pts[0][a];
    for (std::size_t col = 0; col < n; ++col) {
        std::vector<double> minor;
        minor.reserve((n - 1) * (n - 1));
        for (std::size_t r = 0; r + 1 < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                if (c != col) minor.push_back(edges[r * n + c]);
        const double d = n == 2 ? minor[0] : determinant(LinearMap(n - 1, minor));
        normal[col] = (col % 2 == 0 ? 1.0 : -1.0) * d;
    }
    const double len = norm(normal);
    if (!(len > 0.0)) return Vector(n, 0.0);
    for (double& x : normal) x /= len;
    return normal;
}

}  // namespace

void mark_uncertain(const Transform& F, const ImageMesh& mesh, const TargetGrid& grid, double inflation,
                    Bitmap& uncertain) {
    const std::size_t n = mesh.n;
    const GridRegion& src = *mesh.src;

    for (std::size_t cell = 0; cell < src.size(); ++cell)
        if (mesh.orientation[cell] == 0)
            for_each_enclosure_cell(mesh, grid, cell, [&](std::size_t k) { uncertain.set(k); });

    // Face triangulations per (axis, side).
    std::vector<std::vector<KuhnSimplex>> face_simplices(2 * n);
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<std::size_t> axes;
        for (std::size_t b = 0; b < n; ++b)
            if (b != a) axes.push_back(b);
        face_simplices[2 * a] = kuhn_simplices(axes, 0);
        face_simplices[2 * a + 1] = kuhn_simplices(axes, 1U << a);
    }

    std::vector<long> first(n), last(n);
    std::vector<const double*> pts(n);
    for (std::size_t cell = 0; cell < src.size(); ++cell) {
        const auto idx = src.index(src.keys()[cell]);
        for (std::size_t a = 0; a < n; ++a) {
            for (unsigned side = 0; side < 2; ++side) {
                std::vector<long> nb(idx);
                nb[a] += side ? 1 : -1;
                std::optional<std::size_t> nb_pos;
                if (nb[a] >= 0 && nb[a] < src.cells_per_axis()) nb_pos = src.position(src.key(nb));
                bool facet = false;
                if (!nb_pos) {
                    facet = true;
                } else if (side == 1) {
                    const int o1 = mesh.orientation[cell], o2 = mesh.orientation[*nb_pos];
                    facet = o1 != 0 && o2 != 0 && o1 != o2;
                }
                if (!facet) continue;

                const auto& simplices = face_simplices[2 * a + side];
                // Curvature of the face image: deviation of F(face center)
                // from the mean of the face's corner images.
                Vector fc = src.cell_center(src.keys()[cell]);
                fc[a] += (side ? 0.5 : -0.5) * src.cell_side(a);
                const Vector yfc = F(fc);
                Vector mean(n, 0.0);
                unsigned face_corners = 0;
                for (unsigned mask = 0; mask < (1U << n); ++mask) {
                    if (((mask >> a) & 1U) != side) continue;
                    const double* y = mesh.corner(cell, mask);
                    for (std::size_t b = 0; b < n; ++b) mean[b] += y[b];
                    ++face_corners;
                }
                for (double& m : mean) m /= face_corners;
                double deviation = distance(yfc, mean);
                if (n >= 2) {
                    // The Kuhn diagonal of the face passes through its center.
                    const double* d0 = mesh.corner(cell, simplices.front().masks.front());
                    const double* d1 = mesh.corner(cell, simplices.front().masks.back());
                    Vector mid(n);
                    for (std::size_t b = 0; b < n; ++b) mid[b] = 0.5 * (d0[b] + d1[b]);
                    deviation = std::max(deviation, distance(yfc, mid));
                }
                double scale = 0.0;
                for (std::size_t b = 0; b < n; ++b) scale = std::max(scale, std::abs(yfc[b]));
                const double slack = inflation * deviation + 1e-12 * (1.0 + scale);

                for (const KuhnSimplex& s : simplices) {
                    Vector lo_box(n, std::numeric_limits<double>::infinity());
                    Vector hi_box(n, -std::numeric_limits<double>::infinity());
                    for (std::size_t k = 0; k < n; ++k) {
                        pts[k] = mesh.corner(cell, s.masks[k]);
                        for (std::size_t b = 0; b < n; ++b) {
                            lo_box[b] = std::min(lo_box[b], pts[k][b]);
                            hi_box[b] = std::max(hi_box[b], pts[k][b]);
                        }
                    }
                    bool any = true;
                    for (std::size_t b = 0; b < n && any; ++b)
                        any = grid.overlap_range(b, lo_box[b] - slack, hi_box[b] + slack, first[b], last[b]);
                    if (!any) continue;
                    const Vector normal = facet_normal(pts, n);
                    const bool slab = norm(normal) > 0.0;
                    double reach = slack;
                    for (std::size_t b = 0; b < n; ++b) reach += 0.5 * std::abs(normal[b]) * grid.width[b];
                    for_each_cell(grid, first, last, [&](const std::vector<long>& cidx) {
                        if (slab) {
                            double d = 0.0;
                            for (std::size_t b = 0; b < n; ++b) d += normal[b] * (grid.center(b, cidx[b]) - pts[0][b]);
                            if (std::abs(d) > reach * (1.0 + 1e-12)) return;
                        }
                        uncertain.set(grid.key(cidx));
                    });
                }
            }
        }
    }
}

}  // namespace cov::detail

#include "cov/linop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cov/detail/bitmap.hpp"
#include "cov/errors.hpp"
#include "cov/random.hpp"

namespace cov {

LinearMap::LinearMap(std::size_t dim) : dim_(dim), a_(dim * dim, 0.0) {
    if (dim == 0) throw InvalidInput("LinearMap: dimension must be at least 1");
}

LinearMap::LinearMap(std::size_t dim, std::vector<double> row_major)
    : dim_(dim), a_(std::move(row_major)) {
    if (dim == 0) throw InvalidInput("LinearMap: dimension must be at least 1");
    if (a_.size() != dim * dim)
        throw InvalidInput("LinearMap: expected " + std::to_string(dim * dim) + " entries, got " +
                           std::to_string(a_.size()));
    if (!all_finite(a_)) throw InvalidInput("LinearMap: entries must be finite");
}

LinearMap LinearMap::identity(std::size_t dim) {
    LinearMap m(dim);
    for (std::size_t i = 0; i < dim; ++i) m.a_[i * dim + i] = 1.0;
    return m;
}

LinearMap LinearMap::diagonal(std::span<const double> diag) {
    std::vector<double> a(diag.size() * diag.size(), 0.0);
    for (std::size_t i = 0; i < diag.size(); ++i) a[i * diag.size() + i] = diag[i];
    return LinearMap(diag.size(), std::move(a));
}

Vector LinearMap::apply(std::span<const double> x) const {
    Vector y(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) s += a_[i * dim_ + j] * x[j];
        y[i] = s;
    }
    return y;
}

LinearMap LinearMap::transpose() const {
    std::vector<double> t(a_.size());
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) t[j * dim_ + i] = a_[i * dim_ + j];
    return LinearMap(dim_, std::move(t));
}

LinearMap LinearMap::scaled(double s) const {
    std::vector<double> t(a_);
    for (double& x : t) x *= s;
    return LinearMap(dim_, std::move(t));
}

std::optional<LinearMap> LinearMap::inverse() const {
    const std::size_t n = dim_;
    std::vector<double> m(a_);
    std::vector<double> inv(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r * n + col]) > std::abs(m[piv * n + col])) piv = r;
        const double p = m[piv * n + col];
        if (p == 0.0 || !std::isfinite(1.0 / p)) return std::nullopt;
        if (piv != col)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(m[piv * n + j], m[col * n + j]);
                std::swap(inv[piv * n + j], inv[col * n + j]);
            }
        for (std::size_t j = 0; j < n; ++j) {
            m[col * n + j] /= p;
            inv[col * n + j] /= p;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = m[r * n + col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                m[r * n + j] -= f * m[col * n + j];
                inv[r * n + j] -= f * inv[col * n + j];
            }
        }
    }
    if (!all_finite(inv)) return std::nullopt;
    return LinearMap(n, std::move(inv));
}

LinearMap operator*(const LinearMap& a, const LinearMap& b) {
    if (a.dim_ != b.dim_) throw InvalidInput("LinearMap product: dimension mismatch");
    const std::size_t n = a.dim_;
    std::vector<double> c(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) c[i * n + j] += a.a_[i * n + k] * b.a_[k * n + j];
    return LinearMap(n, std::move(c));
}

LinearMap operator+(const LinearMap& a, const LinearMap& b) {
    if (a.dim_ != b.dim_) throw InvalidInput("LinearMap sum: dimension mismatch");
    std::vector<double> c(a.a_);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += b.a_[i];
    return LinearMap(a.dim_, std::move(c));
}

LinearMap operator-(const LinearMap& a, const LinearMap& b) { return a + b.scaled(-1.0); }

namespace {

constexpr int kPowerIterationCap = 200;
constexpr double kPowerIterationTol = 1e-10;

double power_iteration(const LinearMap& gram, Vector v) {
    const double len = norm(v);
    for (double& x : v) x /= len;
    double lambda = 0.0;
    for (int it = 0; it < kPowerIterationCap; ++it) {
        Vector w = gram.apply(v);
        const double next = dot(v, w);
        const double wn = norm(w);
        if (wn == 0.0) return 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / wn;
        if (it > 0 && std::abs(next - lambda) <= kPowerIterationTol * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::max(lambda, 0.0);
}

}  // namespace

double operator_norm(const LinearMap& L) {
    const std::size_t n = L.dim();
    const LinearMap gram = L.transpose() * L;
    // All-ones start first; the coordinate starts only matter when the
    // all-ones vector is orthogonal to the top singular direction.
    double best = power_iteration(gram, Vector(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        Vector e(n, 0.0);
        e[i] = 1.0;
        best = std::max(best, power_iteration(gram, std::move(e)));
    }
    return std::sqrt(best);
}

double determinant(const LinearMap& L) {
    const std::size_t n = L.dim();
    std::vector<double> m(L.entries().begin(), L.entries().end());
    double det = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        // Largest pivot; strict comparison keeps the lowest row on ties.
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r * n + col]) > std::abs(m[piv * n + col])) piv = r;
        const double p = m[piv * n + col];
        if (p == 0.0) return 0.0;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m[piv * n + j], m[col * n + j]);
            det = -det;
        }
        det *= p;
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = m[r * n + col] / p;
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) m[r * n + j] -= f * m[col * n + j];
        }
    }
    return det;
}

double scale_factor_det(const LinearMap& L) { return std::abs(determinant(L)); }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Real solution set of a family of affine inequalities in one variable x.
struct Interval {
    double lo = -kInf;
    double hi = kInf;

    // a + s x <= c
    void at_most(double a, double s, double c) {
        if (s > 0.0)
            hi = std::min(hi, (c - a) / s);
        else if (s < 0.0)
            lo = std::max(lo, (c - a) / s);
        else if (a > c) {
            lo = kInf;
            hi = -kInf;
        }
    }
    // a + s x >= c
    void at_least(double a, double s, double c) { at_most(-a, -s, -c); }
};

// Integer indices in [first, last] satisfying the interval, clipped to the row.
bool index_range(const Interval& iv, long first, long last, long& out_first, long& out_last) {
    if (!(iv.lo <= iv.hi)) return false;
    const double lo = std::max(iv.lo, static_cast<double>(first) - 1.0);
    const double hi = std::min(iv.hi, static_cast<double>(last) + 1.0);
    out_first = std::max(first, static_cast<long>(std::ceil(lo)));
    out_last = std::min(last, static_cast<long>(std::floor(hi)));
    return out_first <= out_last;
}

struct TargetGrid {
    std::size_t n;
    long cells_per_axis;
    Vector lo;
    Vector width;

    std::size_t row_start(std::span<const long> idx) const {
        std::size_t key = 0, stride = 1;
        for (std::size_t a = 0; a < n; ++a) {
            key += static_cast<std::size_t>(idx[a]) * stride;
            stride *= static_cast<std::size_t>(cells_per_axis);
        }
        return key;
    }
};

// Visits every combination of indices on axes 1..n-1 within [first, last].
template <typename Fn>
void for_each_row(std::size_t n, std::span<const long> first, std::span<const long> last, Fn&& fn) {
    std::vector<long> idx(first.begin(), first.end());
    for (std::size_t a = 1; a < n; ++a)
        if (first[a] > last[a]) return;
    while (true) {
        fn(std::span<const long>(idx));
        std::size_t a = 1;
        for (; a < n; ++a) {
            if (++idx[a] <= last[a]) break;
            idx[a] = first[a];
        }
        if (a >= n) return;
    }
}

}  // namespace

ScaleBracket scale_factor_boxcount(const LinearMap& L, int k, int target_depth, std::size_t budget) {
    if (k < 1) throw InvalidInput("scale_factor_boxcount: k must be positive");
    if (target_depth < 0) throw InvalidInput("scale_factor_boxcount: depth must be non-negative");
    const std::size_t n = L.dim();
    require_within_budget("scale_factor_boxcount", n, target_depth, budget);
    std::size_t subboxes = 1;
    for (std::size_t a = 0; a < n; ++a) {
        subboxes *= static_cast<std::size_t>(k);
        if (subboxes > budget)
            throw ResourceError("scale_factor_boxcount: sub-box count exceeds budget", subboxes,
                                budget);
    }

    TargetGrid grid{n, 1L << target_depth, Vector(n), Vector(n)};
    for (std::size_t i = 0; i < n; ++i) {
        double lo = 0.0, hi = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            lo += std::min(0.0, L(i, j));
            hi += std::max(0.0, L(i, j));
        }
        if (hi - lo <= 0.0) {
            lo -= 0.5;
            hi += 0.5;
        }
        grid.lo[i] = lo;
        grid.width[i] = (hi - lo) / static_cast<double>(grid.cells_per_axis);
    }
    double cell_volume = 1.0;
    for (double w : grid.width) cell_volume *= w;

    const double det = scale_factor_det(L);
    const double lnorm = operator_norm(L);
    std::optional<LinearMap> inv;
    if (det > 1e-14 * std::pow(lnorm, static_cast<double>(n))) inv = L.inverse();

    const std::size_t total = grid_cell_count(n, target_depth);
    detail::Bitmap outer(total), inner(total);
    const long last_index = grid.cells_per_axis - 1;
    constexpr double kTol = 1e-12;

    // Preimage of a target cell, in source coordinates, is the parallelepiped
    // Minv * (corner + [0,w]^n). Its per-axis extent offsets are fixed.
    Vector off_min(n, 0.0), off_max(n, 0.0), step(n, 0.0);
    if (inv) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t a = 0; a < n; ++a) {
                const double v = grid.width[a] * (*inv)(j, a);
                off_min[j] += std::min(0.0, v);
                off_max[j] += std::max(0.0, v);
            }
            step[j] = grid.width[0] * (*inv)(j, 0);
        }
    }

    auto scan_rows = [&](std::span<const double> s_lo, std::span<const double> s_hi,
                         std::span<const long> first, std::span<const long> last, bool mark_outer) {
        for_each_row(n, first, last, [&](std::span<const long> row) {
            std::vector<long> idx(row.begin(), row.end());
            idx[0] = 0;
            Vector corner(n);
            for (std::size_t a = 0; a < n; ++a)
                corner[a] = grid.lo[a] + static_cast<double>(idx[a]) * grid.width[a];
            const std::size_t base = grid.row_start(idx);
            if (!inv) {
                if (mark_outer)
                    outer.set_range(base + static_cast<std::size_t>(first[0]),
                                    base + static_cast<std::size_t>(last[0]) + 1);
                return;
            }
            const Vector p = inv->apply(corner);
            Interval out_iv, in_iv;
            for (std::size_t j = 0; j < n; ++j) {
                out_iv.at_most(p[j] + off_min[j], step[j], s_hi[j] + kTol);
                out_iv.at_least(p[j] + off_max[j], step[j], s_lo[j] - kTol);
                in_iv.at_least(p[j] + off_min[j], step[j], s_lo[j] - kTol);
                in_iv.at_most(p[j] + off_max[j], step[j], s_hi[j] + kTol);
            }
            long f = 0, l = 0;
            if (mark_outer && index_range(out_iv, first[0], last[0], f, l))
                outer.set_range(base + static_cast<std::size_t>(f), base + static_cast<std::size_t>(l) + 1);
            if (index_range(in_iv, first[0], last[0], f, l))
                inner.set_range(base + static_cast<std::size_t>(f), base + static_cast<std::size_t>(l) + 1);
        });
    };

    // Pass 1: each sub-box image on its own.
    std::vector<long> m(n, 0);
    Vector s_lo(n), s_hi(n);
    std::vector<long> first(n), last(n);
    for (std::size_t b = 0; b < subboxes; ++b) {
        for (std::size_t j = 0; j < n; ++j) {
            s_lo[j] = static_cast<double>(m[j]) / k;
            s_hi[j] = static_cast<double>(m[j] + 1) / k;
        }
        bool empty = false;
        for (std::size_t i = 0; i < n; ++i) {
            double a = 0.0, c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                a += L(i, j) >= 0.0 ? L(i, j) * s_lo[j] : L(i, j) * s_hi[j];
                c += L(i, j) >= 0.0 ? L(i, j) * s_hi[j] : L(i, j) * s_lo[j];
            }
            const double u = (a - grid.lo[i]) / grid.width[i];
            const double v = (c - grid.lo[i]) / grid.width[i];
            first[i] = std::max(0L, static_cast<long>(std::ceil(u - 1.0 - 1e-9)));
            last[i] = std::min(last_index, static_cast<long>(std::floor(v + 1e-9)));
            if (first[i] > last[i]) empty = true;
        }
        if (!empty) scan_rows(s_lo, s_hi, first, last, true);
        for (std::size_t j = 0; j < n; ++j) {
            if (++m[j] < k) break;
            m[j] = 0;
        }
    }

    // Pass 2: cells covered by the union of sub-box images. The images of
    // all k^n sub-boxes tile L(unit box), so a cell inside that
    // parallelepiped is covered by the images of the sub-boxes it meets.
    if (inv) {
        const Vector unit_lo(n, 0.0), unit_hi(n, 1.0);
        std::fill(first.begin(), first.end(), 0L);
        std::fill(last.begin(), last.end(), last_index);
        scan_rows(unit_lo, unit_hi, first, last, false);
    }

    ScaleBracket out;
    out.subdivision_k = k;
    out.target_depth = target_depth;
    out.outer = static_cast<double>(outer.count()) * cell_volume;
    out.inner = static_cast<double>(inner.count_and(outer)) * cell_volume;
    return out;
}

double delta_perturbation_gap(const LinearMap& L, double eta, int trials, std::uint64_t seed) {
    if (!std::isfinite(eta) || eta < 0.0)
        throw InvalidInput("delta_perturbation_gap: eta must be finite and non-negative");
    if (trials < 1) throw InvalidInput("delta_perturbation_gap: trials must be positive");
    if (eta == 0.0) return 0.0;
    const std::size_t n = L.dim();
    const double base = scale_factor_det(L);
    const double bound = eta / static_cast<double>(n);
    SeededRng rng(seed);
    double gap = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> p(n * n);
        for (double& x : p) x = bound * rng.uniform(-1.0, 1.0);
        gap = std::max(gap, std::abs(scale_factor_det(L + LinearMap(n, std::move(p))) - base));
    }
    return gap;
}

}  // namespace cov

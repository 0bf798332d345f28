#include "cov/patches.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cov/diff.hpp"
#include "cov/errors.hpp"
#include "cov/image.hpp"
#include "cov/random.hpp"

namespace cov {

namespace {

Vector ball_point(SeededRng& rng, std::span<const double> z, double delta) {
    const std::size_t n = z.size();
    Vector v(n);
    for (;;) {
        double s = 0.0;
        for (double& x : v) {
            x = rng.uniform(-1.0, 1.0);
            s += x * x;
        }
        if (s <= 1.0) break;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = z[i] + delta * v[i];
    return v;
}

Vector reflect(std::span<const double> z, const Vector& x) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.0 * z[i] - x[i];
    return y;
}

void check_epsilon(double epsilon, const char* where) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput(std::string(where) + ": epsilon must lie in (0,1)");
}

}  // namespace

namespace {

// Lazily yields the pair sequence of sample_ball_pairs.
class BallPairSampler {
public:
    BallPairSampler(const Transform& F, std::span<const double> z, double delta, int samples,
                    std::uint64_t seed)
        : domain_(F.domain()), z_(z.begin(), z.end()), delta_(delta), samples_(samples), rng_(seed) {
        if (z.size() != F.dim()) throw InvalidInput("sample_ball_pairs: dimension mismatch");
        if (!(delta > 0.0) || !std::isfinite(delta))
            throw InvalidInput("sample_ball_pairs: delta must be positive");
        if (samples < 1) throw InvalidInput("sample_ball_pairs: samples must be positive");
    }

    bool next(PointPair& out) {
        // Bounded rejection so a ball almost entirely outside the domain cannot loop.
        while (produced_ < samples_ && attempts_ < 64L * samples_) {
            ++attempts_;
            const int kind = produced_ % 4;
            Vector x = ball_point(rng_, z_, delta_);
            Vector y = kind == 0 ? z_ : kind == 1 ? reflect(z_, x) : ball_point(rng_, z_, delta_);
            if (admissible(x) && admissible(y)) {
                ++produced_;
                out = PointPair{std::move(x), std::move(y)};
                return true;
            }
        }
        return false;
    }

private:
    bool admissible(const Vector& p) const { return !domain_ || domain_->contains_closed(p); }

    std::optional<SemiOpenBox> domain_;
    Vector z_;
    double delta_;
    int samples_;
    SeededRng rng_;
    int produced_ = 0;
    long attempts_ = 0;
};

}  // namespace

std::vector<PointPair> sample_ball_pairs(const Transform& F, std::span<const double> z, double delta,
                                         int samples, std::uint64_t seed) {
    BallPairSampler sampler(F, z, delta, samples, seed);
    std::vector<PointPair> pairs;
    PointPair pair;
    while (sampler.next(pair)) pairs.push_back(std::move(pair));
    return pairs;
}

namespace {

template <typename NextPair>
Certification certify_impl(const Transform& F, const LinearMap& J, NextPair&& next_pair, double epsilon,
                           bool stop_early) {
    const double lo = (1.0 - epsilon) * (1.0 - epsilon), hi = (1.0 + epsilon) * (1.0 + epsilon);
    Certification c;
    c.worst_ratio_low = std::numeric_limits<double>::infinity();
    c.worst_ratio_high = 0.0;
    const std::size_t n = F.dim();
    Vector d(n);
    PointPair pair;
    while (next_pair(pair)) {
        const auto& [x, y] = pair;
        for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - y[i];
        const double lin = norm(J.apply(d));
        if (!(lin > 1e-14 * (1.0 + norm(x)))) continue;
        const double ratio = distance(F(x), F(y)) / lin;
        c.worst_ratio_low = std::min(c.worst_ratio_low, ratio);
        c.worst_ratio_high = std::max(c.worst_ratio_high, ratio);
        if (stop_early && (ratio < lo || ratio > hi)) return c;
    }
    if (c.worst_ratio_high == 0.0) {
        c.worst_ratio_low = c.worst_ratio_high = 1.0;
        return c;
    }
    c.certified = c.worst_ratio_low >= lo && c.worst_ratio_high <= hi;
    return c;
}

}  // namespace

Certification certify_pairs(const Transform& F, const LinearMap& J, std::span<const PointPair> pairs,
                            double epsilon) {
    check_epsilon(epsilon, "certify_pairs");
    std::size_t i = 0;
    auto next = [&](PointPair& out) {
        if (i == pairs.size()) return false;
        out = pairs[i++];
        return true;
    };
    return certify_impl(F, J, next, epsilon, false);
}

Certification certify_patch(const Transform& F, std::span<const double> z, double delta, double epsilon,
                            int samples, std::uint64_t seed, double h) {
    check_epsilon(epsilon, "certify_patch");
    const LinearMap J = jacobian(F, z, h);
    if (scale_factor_det(J) <= kDegenerateScale)
        throw NotInvertible("certify_patch: derivative of " + F.label() + " is singular at the center");
    const auto pairs = sample_ball_pairs(F, z, delta, samples, seed);
    return certify_pairs(F, J, pairs, epsilon);
}

namespace {

// Cells of r whose closure lies within `radius` of z, in key order.
template <typename Fn>
void for_each_cell_near(const GridRegion& r, std::span<const double> z, double radius, Fn&& fn) {
    const std::size_t n = r.dim();
    std::vector<long> first(n), last(n), idx(n);
    for (std::size_t a = 0; a < n; ++a) {
        const double lo = r.bounds().lower()[a], s = r.cell_side(a);
        first[a] = std::max(0L, static_cast<long>(std::ceil((z[a] - radius - lo) / s - 1e-9)));
        last[a] = std::min(r.cells_per_axis() - 1,
                           static_cast<long>(std::floor((z[a] + radius - lo) / s + 1e-9)) - 1);
        if (first[a] > last[a]) return;
    }
    idx = first;
    for (;;) {
        const CellKey key = r.key(idx);
        if (auto pos = r.position(key)) {
            const SemiOpenBox box = r.cell_box(key);
            double far = 0.0;
            for (std::size_t a = 0; a < n; ++a) {
                const double d = std::max(std::abs(box.lower()[a] - z[a]), std::abs(box.upper()[a] - z[a]));
                far += d * d;
            }
            if (std::sqrt(far) <= radius * (1.0 + 1e-12) && !fn(*pos)) return;
        }
        std::size_t a = 0;
        while (a < n && ++idx[a] > last[a]) idx[a] = first[a], ++a;
        if (a == n) return;
    }
}

// ||A - I|| <= eps, settled by the Frobenius bound when it suffices.
bool near_identity(const LinearMap& A, double eps) {
    const LinearMap D = A - LinearMap::identity(A.dim());
    double frob = 0.0;
    for (double x : D.entries()) frob += x * x;
    if (std::sqrt(frob) <= eps) return true;
    return operator_norm(D) <= eps;
}

constexpr int kUnassigned = -1;
constexpr int kResidual = -2;

}  // namespace

PatchCover decompose_injective(const Transform& F, const GridRegion& r, double epsilon, int max_rounds,
                               const DecomposeOptions& options) {
    check_epsilon(epsilon, "decompose_injective");
    if (r.dim() != F.dim()) throw InvalidInput("decompose_injective: dimension mismatch");
    if (max_rounds < 0) throw InvalidInput("decompose_injective: max_rounds must be non-negative");
    const double h = options.h > 0.0 ? options.h : default_step(r.bounds());
    const double half_diag = 0.5 * r.cell_diameter();
    const int directions = default_direction_count(r.dim());

    std::vector<int> owner(r.size(), kUnassigned);
    std::vector<std::optional<LinearMap>> jac(r.size());
    auto cell_jacobian = [&](std::size_t i) -> const LinearMap& {
        if (!jac[i]) jac[i] = jacobian(F, r.cell_center(r.keys()[i]), h);
        return *jac[i];
    };

    PatchCover cover{{}, GridRegion(r.bounds(), r.depth())};
    std::vector<CellKey> residual;
    for (std::size_t seed_cell = 0; seed_cell < r.size(); ++seed_cell) {
        if (owner[seed_cell] != kUnassigned) continue;
        const Vector z = r.cell_center(r.keys()[seed_cell]);
        const LinearMap& Jz = cell_jacobian(seed_cell);
        const double det = scale_factor_det(Jz);
        std::optional<LinearMap> Jz_inv;
        if (det > options.tau0) {
            const auto est = derivative_estimate(F, z, h, directions);
            if (uniformly_differentiable(est)) Jz_inv = Jz.inverse();
        }

        const std::uint64_t patch_seed = options.seed + cover.patches.size();
        std::vector<std::size_t> members;
        double delta = 2.0 * r.bounds().diameter();
        for (int round = 0; Jz_inv && round <= max_rounds; ++round) {
            delta *= 0.5;
            if (0.5 * delta < half_diag) break;
            BallPairSampler sampler(F, z, delta, options.samples, patch_seed);
            auto next = [&](PointPair& out) { return sampler.next(out); };
            if (!certify_impl(F, Jz, next, epsilon, true).certified) continue;
            members.clear();
            bool uniform = true;
            for_each_cell_near(r, z, 0.5 * delta, [&](std::size_t i) {
                if (owner[i] != kUnassigned) return true;
                if (!near_identity(cell_jacobian(i) * *Jz_inv, epsilon)) {
                    uniform = false;
                    return false;
                }
                members.push_back(i);
                return true;
            });
            if (!uniform || members.empty()) continue;

            std::vector<CellKey> keys;
            keys.reserve(members.size());
            for (std::size_t i : members) keys.push_back(r.keys()[i]);
            Patch p{z, delta, epsilon, GridRegion(r.bounds(), r.depth(), std::move(keys)), Jz, true, false};
            if (!check_injective(F, p, options.samples, patch_seed).injective) continue;
            p.injective_checked = true;
            for (std::size_t i : members) owner[i] = static_cast<int>(cover.patches.size());
            cover.patches.push_back(std::move(p));
            break;
        }
        if (owner[seed_cell] == kUnassigned) {
            owner[seed_cell] = kResidual;
            residual.push_back(r.keys()[seed_cell]);
        }
    }
    cover.residual = GridRegion(r.bounds(), r.depth(), std::move(residual));
    return cover;
}

namespace {

Vector random_point_in(const GridRegion& cells, SeededRng& rng) {
    const SemiOpenBox box = cells.cell_box(cells.keys()[rng.below(cells.size())]);
    Vector p(box.dim());
    for (std::size_t a = 0; a < p.size(); ++a) p[a] = rng.uniform(box.lower()[a], box.upper()[a]);
    return p;
}

// A candidate passes the cheap absolute test and is then confirmed against the
// linear prediction F'(x)(y - x): near a degenerate derivative distinct
// images can be closer than any fixed threshold.
bool collides(const Transform& F, const Vector& fx, const Vector& fy, const Vector& x, const Vector& y, double h) {
    const double d = distance(fx, fy);
    if (!(d < 1e-9 * (1.0 + distance(x, y)))) return false;
    const Vector predicted = jacobian(F, x, h).apply(subtract(y, x));
    return d <= 1e-6 * norm(predicted) + 1e-14 * (1.0 + norm(fx));
}

bool in_closure(const GridRegion& cells, const Vector& p) {
    const double tol = 1e-12 * (1.0 + norm(p));
    Vector q(p);
    for (std::size_t a = 0; a < q.size(); ++a) {
        const double lo = cells.bounds().lower()[a], hi = cells.bounds().upper()[a];
        if (q[a] < lo - tol || q[a] > hi + tol) return false;
        q[a] = std::clamp(q[a], lo, std::nextafter(hi, lo));
    }
    const auto key = cells.locate(q);
    return key && cells.contains(*key);
}

}  // namespace

InjectivityResult check_injective(const Transform& F, const Patch& p, int samples, std::uint64_t seed) {
    if (samples < 1) throw InvalidInput("check_injective: samples must be positive");
    if (p.cells.dim() != F.dim()) throw InvalidInput("check_injective: dimension mismatch");
    InjectivityResult out;
    if (p.cells.empty()) return out;
    SeededRng rng(seed);
    // Pairs closer than this are the same point at grid resolution.
    const double separation = 1e-3 * p.cells.cell_diameter();
    const double h = 1e-6 * p.cells.cell_diameter();

    for (int s = 0; s < samples; ++s) {
        Vector x = random_point_in(p.cells, rng), y = random_point_in(p.cells, rng);
        if (distance(x, y) <= separation) continue;
        if (collides(F, F(x), F(y), x, y, h)) {
            out.injective = false;
            out.witness = PointPair{std::move(x), std::move(y)};
            return out;
        }
    }

    // Newton collision search: from the sample whose image is nearest F(x),
    // solve F(y) = F(x) and report a solution that stays apart from x.
    const std::size_t m = static_cast<std::size_t>(std::min(samples, 64));
    std::vector<Vector> pts, imgs;
    for (std::size_t i = 0; i < m; ++i) {
        pts.push_back(random_point_in(p.cells, rng));
        imgs.push_back(F(pts.back()));
    }
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t best = m;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) {
            if (distance(pts[i], pts[j]) <= separation) continue;
            const double d = distance(imgs[i], imgs[j]);
            if (d < best_d) best_d = d, best = j;
        }
        if (best == m) continue;
        Vector y = pts[best];
        for (int it = 0; it < 30; ++it) {
            const Vector fy = F(y);
            if (collides(F, imgs[i], fy, pts[i], y, h)) break;
            const auto inv = jacobian(F, y, h).inverse();
            if (!inv) break;
            const Vector step = inv->apply(subtract(fy, imgs[i]));
            for (std::size_t a = 0; a < y.size(); ++a) y[a] -= step[a];
            if (!all_finite(y) || !in_closure(p.cells, y)) break;
        }
        if (!all_finite(y) || !in_closure(p.cells, y) || distance(y, pts[i]) <= separation) continue;
        if (collides(F, imgs[i], F(y), pts[i], y, h)) {
            out.injective = false;
            out.witness = PointPair{pts[i], std::move(y)};
            return out;
        }
    }
    return out;
}

SandwichBounds sandwich_bounds(const Transform& F, const Patch& p, int target_depth, double h) {
    if (!p.certified || !p.injective_checked)
        throw PreconditionError("sandwich_bounds: patch must be certified and checked for injectivity");
    SandwichBounds out;
    const auto integral = integrate(jacobian_scale_field(F, p.cells, h), p.cells, 1);
    out.integral = integral.value;
    out.integral_error = integral.est_error;
    const double n2 = 2.0 * static_cast<double>(F.dim());
    out.lower = std::pow(1.0 - p.epsilon, n2) * integral.value;
    out.upper = std::pow(1.0 + p.epsilon, n2) * integral.value;
    const GridRegion img = image_region(F, p.cells, target_depth);
    out.image = region_measure(img);
    out.image_estimate = region_estimate(img);
    out.overlap = out.lower <= out.image.outer && out.image.inner <= out.upper;
    return out;
}

bool partitions(const PatchCover& cover, const GridRegion& r) {
    std::vector<CellKey> all(cover.residual.keys());
    for (const Patch& p : cover.patches) {
        if (!p.cells.same_grid(r)) return false;
        all.insert(all.end(), p.cells.keys().begin(), p.cells.keys().end());
    }
    if (!cover.residual.same_grid(r)) return false;
    std::sort(all.begin(), all.end());
    return all == r.keys();
}

void write_cover(std::ostream& os, const PatchCover& cover) {
    const GridRegion& grid = cover.residual;
    const auto old = os.precision(17);
    os << "bounds";
    for (double x : grid.bounds().lower()) os << ' ' << x;
    for (double x : grid.bounds().upper()) os << ' ' << x;
    os << " depth " << grid.depth() << '\n';
    for (const Patch& p : cover.patches) {
        os << "patch center=";
        for (std::size_t a = 0; a < p.center.size(); ++a) os << (a ? "," : "") << p.center[a];
        os << " delta=" << p.radius << " eps=" << p.epsilon << " certified=" << (p.certified ? 1 : 0) << '\n';
        write_region_cells(os, p.cells);
    }
    os << "residual\n";
    write_region_cells(os, cover.residual);
    os.precision(old);
}

}  // namespace cov

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cov/diff.hpp"
#include "cov/image.hpp"
#include "cov/linop.hpp"
#include "cov/patches.hpp"
#include "cov/random.hpp"
#include "cov/registry.hpp"
#include "cov/verify.hpp"
#include "cov/indicatrix.hpp"

using namespace cov;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Random orthogonal matrix by Gram-Schmidt on a uniform random matrix.
std::vector<double> random_orthogonal(SeededRng& rng, std::size_t n) {
    std::vector<double> q(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        while (true) {
            std::vector<double> v(n);
            for (double& x : v) x = rng.uniform(-1.0, 1.0);
            for (std::size_t j = 0; j < i; ++j) {
                double d = 0.0;
                for (std::size_t a = 0; a < n; ++a) d += v[a] * q[j * n + a];
                for (std::size_t a = 0; a < n; ++a) v[a] -= d * q[j * n + a];
            }
            double len = 0.0;
            for (double x : v) len += x * x;
            len = std::sqrt(len);
            if (len < 1e-3) continue;
            for (std::size_t a = 0; a < n; ++a) q[i * n + a] = v[a] / len;
            break;
        }
    }
    return q;
}

// U1 diag(s) U2 with s log-uniform in [0.5, 2].
LinearMap random_invertible(SeededRng& rng, std::size_t n) {
    const LinearMap u1(n, random_orthogonal(rng, n)), u2(n, random_orthogonal(rng, n));
    std::vector<double> s(n);
    for (double& x : s) x = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
    return u1 * LinearMap::diagonal(s) * u2;
}

std::vector<LinearMap> random_maps() {
    SeededRng rng(2024);
    std::vector<LinearMap> maps;
    for (int i = 0; i < 20; ++i) maps.push_back(random_invertible(rng, 2));
    for (int i = 0; i < 10; ++i) maps.push_back(random_invertible(rng, 3));
    return maps;
}

Outcome scale_factor_oracle() {
    const auto t0 = Clock::now();
    Outcome out;
    double worst2 = 0.0, worst3 = 0.0;
    for (const LinearMap& L : random_maps()) {
        const ScaleBracket b = scale_factor_boxcount(L, 16, 9, std::size_t{1} << 27);
        const double det = scale_factor_det(L);
        const double rel = b.gap() / det;
        (L.dim() == 2 ? worst2 : worst3) = std::max(L.dim() == 2 ? worst2 : worst3, rel);
        if (!b.contains(det) || rel >= (L.dim() == 2 ? 0.05 : 0.12)) out.pass = false;
    }
    const double t = seconds_since(t0);
    if (t >= 30.0) out.pass = false;
    out.detail = "worst relative gap 2-D " + fmt("%.4f", worst2) + " (< 0.05), 3-D " + fmt("%.4f", worst3) +
                 " (< 0.12), " + fmt("%.1f", t) + " s (< 30 s)";
    return out;
}

Outcome delta_continuity() {
    Outcome out;
    double worst_ratio = 0.0;
    int non_monotone = 0;
    std::uint64_t seed = 1;
    for (const LinearMap& L : random_maps()) {
        const double n = static_cast<double>(L.dim());
        const double bound_base = 10.0 * std::pow(1.0 + operator_norm(L), n - 1.0);
        double prev = std::numeric_limits<double>::infinity();
        for (double eta : {1e-2, 1e-3, 1e-4}) {
            const double gap = delta_perturbation_gap(L, eta, 64, seed++);
            const double bound = bound_base * eta;
            worst_ratio = std::max(worst_ratio, gap / bound);
            if (!(gap < bound)) out.pass = false;
            if (!(gap < prev)) ++non_monotone, out.pass = false;
            prev = gap;
        }
    }
    out.detail = "worst gap / (10 eta (1+|L|)^(n-1)) = " + fmt("%.4f", worst_ratio) +
                 ", non-monotone sequences " + std::to_string(non_monotone);
    return out;
}

double frobenius_diff(const LinearMap& a, const LinearMap& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.entries().size(); ++i) {
        const double d = a.entries()[i] - b.entries()[i];
        s += d * d;
    }
    return std::sqrt(s);
}

Outcome derivative_order() {
    Outcome out;
    double lo = 1.0, hi = 0.0, worst_residual = 0.0;
    for (const char* spec : {"polar", "sinewarp:0.3"}) {
        const Transform F = make_transform(spec);
        const SemiOpenBox dom = default_domain(spec);
        SeededRng rng(99);
        for (int i = 0; i < 25; ++i) {
            Vector z(2);
            for (std::size_t a = 0; a < 2; ++a)
                z[a] = rng.uniform(dom.lower()[a] + 0.1 * dom.side(a), dom.lower()[a] + 0.9 * dom.side(a));
            const LinearMap exact = F.analytic_jacobian(z);
            const double e1 = frobenius_diff(forward_difference_jacobian(F, z, 1e-3), exact);
            const double e2 = frobenius_diff(forward_difference_jacobian(F, z, 5e-4), exact);
            const double ratio = e2 / e1;
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            if (!(ratio >= 0.3 && ratio <= 0.7)) out.pass = false;
            const double res = derivative_estimate(F, z, 1e-5, default_direction_count(2)).uniform_residual;
            worst_residual = std::max(worst_residual, res);
            if (!(res < 1e-3)) out.pass = false;
        }
    }
    const Transform fold = make_transform("fold");
    const double fold_res = derivative_estimate(fold, Vector{0.0, 0.5}, 1e-5, default_direction_count(2)).uniform_residual;
    if (!(fold_res >= 0.5)) out.pass = false;
    out.detail = "halving ratio in [" + fmt("%.3f", lo) + ", " + fmt("%.3f", hi) + "] (want [0.3, 0.7]), max residual " +
                 fmt("%.2e", worst_residual) + " (< 1e-3), fold residual at 0 " + fmt("%.3f", fold_res) + " (>= 0.5)";
    return out;
}

Outcome injective_identity() {
    const auto t0 = Clock::now();
    Outcome out;
    const Transform F = make_transform("polar");
    const GridRegion src = subdivide(default_domain("polar"), 9);
    const VerificationReport rep = change_of_variable_check(F, src, unit_field(), 9, 1e-5);
    const double t = seconds_since(t0);
    const double eps = 0.05;
    const double lower = std::pow(1.0 - eps, 4) * rep.rhs, upper = std::pow(1.0 + eps, 4) * rep.rhs;
    const bool overlap = rep.lhs_bracket && rep.lhs_bracket->inner <= upper && lower <= rep.lhs_bracket->outer;
    out.pass = std::abs(rep.lhs - std::numbers::pi) < 0.02 && std::abs(rep.rhs - std::numbers::pi) < 0.02 &&
               overlap && t < 20.0;
    out.detail = "lhs " + fmt("%.5f", rep.lhs) + ", rhs " + fmt("%.5f", rep.rhs);
    if (rep.lhs_bracket)
        out.detail += ", bracket [" + fmt("%.4f", rep.lhs_bracket->inner) + ", " + fmt("%.4f", rep.lhs_bracket->outer) +
                      "] vs sandwich [" + fmt("%.4f", lower) + ", " + fmt("%.4f", upper) + "]";
    out.detail += ", " + fmt("%.1f", t) + " s (< 20 s)";
    return out;
}

Outcome indicatrix_identity_check() {
    Outcome out;
    std::ostringstream detail;
    for (const char* spec : {"fold", "squash"}) {
        const Transform F = make_transform(spec, 1);
        const GridRegion src = subdivide(SemiOpenBox({-1.0}, {1.0}), 8);
        const IndicatrixIdentity id = indicatrix_identity(F, src, 8, 1e-5);
        const bool ok = std::abs(id.lhs - 2.0) < 0.05 && std::abs(id.lhs - id.rhs) < 0.05 && id.flagged_volume < 0.05;
        if (!ok) out.pass = false;
        detail << (spec == std::string("fold") ? "fold" : "x^2") << ": lhs " << fmt("%.5f", id.lhs) << " rhs "
               << fmt("%.5f", id.rhs) << " flagged " << fmt("%.4f", id.flagged_volume) << "; ";
    }
    out.detail = detail.str() + "tolerance 0.05";
    return out;
}

Outcome zero_set_breakoff() {
    Outcome out;
    const Transform F = make_transform("squash");
    std::ostringstream detail;
    double prev = std::numeric_limits<double>::infinity(), last = 0.0;
    for (int d = 6; d <= 10; ++d) {
        const double v = zero_set_outer_measure(F, subdivide(default_domain("squash"), d), 1e-2, 1e-6);
        if (v > prev) out.pass = false;
        detail << (d > 6 ? ", " : "") << fmt("%.5f", v);
        prev = last = v;
    }
    if (!(last <= 0.02 && last >= 0.005)) out.pass = false;
    out.detail = "depths 6..10: " + detail.str() + " (target 0.01 within factor 2, non-increasing)";
    return out;
}

std::string dump_cover(const PatchCover& c) {
    std::ostringstream os;
    write_cover(os, c);
    return os.str();
}

Outcome decomposition_exactness() {
    const auto t0 = Clock::now();
    Outcome out;
    std::size_t patches = 0, failures = 0;
    std::vector<std::string> broken;
    for (const std::string& spec : zoo_specs()) {
        const Transform F = make_transform(spec);
        const GridRegion r = subdivide(default_domain(spec), 8);
        const PatchCover a = decompose_injective(F, r, 0.05, 12, {});
        const PatchCover b = decompose_injective(F, r, 0.05, 12, {});
        bool ok = partitions(a, r) && dump_cover(a) == dump_cover(b);
        for (const Patch& p : a.patches) {
            ++patches;
            if (p.certified && !check_injective(F, p, 512, 7).injective) ++failures, ok = false;
        }
        if (!ok) broken.push_back(spec);
    }
    out.pass = broken.empty();
    out.detail = std::to_string(zoo_specs().size()) + " transforms, " + std::to_string(patches) + " patches, " +
                 std::to_string(failures) + " injectivity failures";
    for (const auto& s : broken) out.detail += ", broken: " + s;
    out.detail += ", " + fmt("%.1f", seconds_since(t0)) + " s";
    return out;
}

Outcome sandwich_end_to_end() {
    Outcome out;
    const Transform F = make_transform("sinewarp:0.1");
    const GridRegion r = subdivide(default_domain("sinewarp:0.1"), 9);
    const PatchCover cover = decompose_injective(F, r, 0.05, 12, {});
    std::size_t checked = 0, failures = 0;
    for (const Patch& p : cover.patches) {
        if (!p.certified) continue;
        ++checked;
        if (!sandwich_bounds(F, p, 9, 1e-5).overlap) ++failures;
    }
    out.pass = checked > 0 && failures == 0;
    out.detail = std::to_string(checked) + " certified patches, " + std::to_string(failures) + " without overlap";
    return out;
}

Outcome linear_exactness() {
    Outcome out;
    struct Case {
        std::string spec;
        double perimeter;
    };
    const std::vector<Case> cases{{"identity", 4.0},
                                  {"rotation:0.7", 4.0},
                                  {"rotation:2.1", 4.0},
                                  {"shear:0.5", 2.0 + 2.0 * std::sqrt(1.25)}};
    double worst = 0.0;
    for (const Case& c : cases) {
        const Transform F = make_transform(c.spec);
        const double det = scale_factor_det(*linear_matrix(c.spec));
        for (int d = 6; d <= 9; ++d) {
            const GridRegion img = image_region(F, subdivide(SemiOpenBox::unit(2), d), d);
            const MeasureBracket m = region_measure(img);
            const double slack = std::ldexp(1.0, -d + 2) * c.perimeter;
            const double gap = std::abs(region_estimate(img) - det);
            worst = std::max(worst, gap / slack);
            if (!(gap < slack) || !(m.inner <= det && det <= m.outer)) out.pass = false;
        }
    }
    out.detail = "worst gap / (2^(2-d) perimeter) = " + fmt("%.4f", worst) + " over depths 6..9";
    return out;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"scale-factor oracle equivalence", scale_factor_oracle},
        {"delta-continuity", delta_continuity},
        {"derivative order", derivative_order},
        {"main identity, injective case", injective_identity},
        {"indicatrix identity", indicatrix_identity_check},
        {"zero-set break-off", zero_set_breakoff},
        {"decomposition exactness", decomposition_exactness},
        {"sandwich end-to-end", sandwich_end_to_end},
        {"linear exactness suite", linear_exactness},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}

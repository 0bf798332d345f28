#include "cov/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cov/diff.hpp"
#include "cov/errors.hpp"
#include "cov/indicatrix.hpp"

namespace cov {

namespace {

std::string describe(const GridRegion& r) {
    std::ostringstream os;
    os.precision(6);
    os << "[";
    for (std::size_t a = 0; a < r.dim(); ++a)
        os << (a ? " x " : "") << r.bounds().lower()[a] << ":" << r.bounds().upper()[a];
    os << "] depth " << r.depth() << ", " << r.size() << " cells";
    return os.str();
}

bool is_unit(const ScalarField& phi) { return phi.description == unit_field().description; }

double pullback_integral(const Transform& F, const GridRegion& src, const ScalarField& phi, double h,
                         int threads) {
    const ScalarField jac = jacobian_scale_field(F, src, h);
    const ScalarField pulled{[&](std::span<const double> z) { return phi(F(z)) * jac(z); },
                             phi.description + "(F) " + jac.description};
    return integrate(pulled, src, 1, threads).value;
}

void finish(VerificationReport& r) {
    r.abs_gap = std::abs(r.lhs - r.rhs);
    r.rel_gap = r.abs_gap / std::max(1.0, std::abs(r.rhs));
}

VerificationReport injective_check(const Transform& F, const GridRegion& src, const ScalarField& phi, int depth,
                                   double h, const VerifyOptions& options) {
    VerificationReport r;
    r.transform = F.label();
    r.region = describe(src);
    r.depth = depth;
    const GridRegion img = image_region(F, src, depth, options.image);
    r.lhs = integrate(phi, img, 1, options.threads).value;
    if (is_unit(phi)) r.lhs_bracket = region_measure(img);
    r.rhs = pullback_integral(F, src, phi, h, options.threads);
    finish(r);
    return r;
}

}  // namespace

ScalarField unit_field() {
    return ScalarField{[](std::span<const double>) { return 1.0; }, "1"};
}

VerificationReport change_of_variable_check(const Transform& F, const GridRegion& src, const ScalarField& phi,
                                            int depth, double h, const VerifyOptions& options) {
    if (src.dim() != F.dim()) throw InvalidInput("change_of_variable_check: dimension mismatch");
    if (src.empty()) throw InvalidInput("change_of_variable_check: empty region");

    const Vector c = src.bounds().center();
    const Patch whole{c, src.bounds().diameter(), 0.5, src, LinearMap(F.dim()), false, false};
    const auto injective = check_injective(F, whole, options.samples, options.seed);
    if (injective.injective) {
        VerificationReport r = injective_check(F, src, phi, depth, h, options);
        r.notes = "injective (no collision found)";
        return r;
    }
    if (!options.allow_indicatrix) {
        std::ostringstream what;
        what.precision(12);
        what << "change_of_variable_check: " << F.label() << " is not injective on the region (F(";
        for (std::size_t a = 0; a < injective.witness->first.size(); ++a)
            what << (a ? "," : "") << injective.witness->first[a];
        what << ") = F(";
        for (std::size_t a = 0; a < injective.witness->second.size(); ++a)
            what << (a ? "," : "") << injective.witness->second[a];
        what << ")); decompose it or enable the indicatrix path";
        throw PreconditionError(what.str());
    }

    VerificationReport r;
    r.transform = F.label();
    r.region = describe(src);
    r.depth = depth;
    const auto lhs = indicatrix_integral(F, src, depth, phi, options.image);
    r.lhs = lhs.lhs;
    r.rhs = pullback_integral(F, src, phi, h, options.threads);
    finish(r);
    std::ostringstream notes;
    notes.precision(6);
    notes << "indicatrix; flagged volume " << lhs.flagged_volume << " (" << lhs.flagged_cells << " cells)";
    r.notes = notes.str();
    return r;
}

VerificationReport change_of_variable_check(const Transform& F, const Patch& patch, const ScalarField& phi,
                                            int depth, double h, const VerifyOptions& options) {
    if (!patch.certified || !patch.injective_checked)
        throw PreconditionError("change_of_variable_check: patch must be certified and checked for injectivity");
    VerificationReport r = injective_check(F, patch.cells, phi, depth, h, options);
    r.notes = "certified patch";
    return r;
}

double zero_set_outer_measure(const Transform& F, const GridRegion& src, double tau, double h) {
    if (!(tau > kDegenerateScale) || !std::isfinite(tau))
        throw InvalidInput("zero_set_outer_measure: tau must exceed 1e-6");
    if (src.dim() != F.dim()) throw InvalidInput("zero_set_outer_measure: dimension mismatch");
    const ScalarField jac = jacobian_scale_field(F, src, h);
    const std::size_t n = src.dim();
    std::size_t below = 0;
    Vector p(n);
    for (CellKey key : src.keys()) {
        const SemiOpenBox box = src.cell_box(key);
        double lowest = jac(box.center());
        for (unsigned mask = 0; mask < (1u << n) && lowest >= tau; ++mask) {
            for (std::size_t a = 0; a < n; ++a) p[a] = (mask >> a) & 1u ? box.upper()[a] : box.lower()[a];
            lowest = std::min(lowest, jac(p));
        }
        if (lowest < tau) ++below;
    }
    return static_cast<double>(below) * src.cell_volume();
}

}  // namespace cov

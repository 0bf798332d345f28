#include "doctest.h"

#include <cmath>
#include <sstream>

#include "cov/indicatrix.hpp"
#include "cov/patches.hpp"
#include "cov/registry.hpp"

using namespace cov;

namespace {

Transform square_1d() {
    return Transform(
        1, [](std::span<const double> x) { return Vector{x[0] * x[0]}; }, "x^2",
        [](std::span<const double> x) { return LinearMap(1, {2 * x[0]}); });
}

const SemiOpenBox kSymmetric({-1.0}, {1.0});

}  // namespace

TEST_CASE("identity has a single preimage everywhere") {
    const auto r = subdivide(SemiOpenBox::unit(2), 6);
    const auto g = banach_indicatrix(make_transform("identity"), r, 6);
    for (std::size_t i = 0; i < g.counts.size(); ++i) CHECK(g.counts[i] == 1);

    const auto id = indicatrix_identity(make_transform("identity"), r, 8, 1e-5);
    CHECK(id.rhs == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(id.lhs - 1.0) < 0.01);
}

TEST_CASE("oblique injective maps count each target cell once") {
    // Thin preimages of target cells: unflagged counts must stay at 1.
    for (const char* spec : {"linear:2,1,0.5,1", "linear:1,3,0,1", "rotation:0.3"}) {
        CAPTURE(spec);
        const Transform F = make_transform(spec);
        const auto r = subdivide(SemiOpenBox::unit(2), 6);
        const auto g = banach_indicatrix(F, r, 6);
        for (std::size_t i = 0; i < g.counts.size(); ++i)
            if (!g.is_flagged(g.target.keys()[i])) CHECK(g.counts[i] == 1);
        const auto id = indicatrix_identity(F, r, 7, 1e-5);
        CHECK(std::abs(id.lhs - id.rhs) < 0.05);
    }
}

TEST_CASE("two-to-one maps on [-1, 1)") {
    for (const Transform& F : {make_transform("fold", 1), square_1d()}) {
        CAPTURE(F.label());
        const auto r = subdivide(kSymmetric, 8);
        const auto g = banach_indicatrix(F, r, 8);
        int interior = 0;
        for (std::size_t i = 0; i < g.counts.size(); ++i) {
            const double y = g.target.cell_center(g.target.keys()[i])[0];
            if (g.is_flagged(g.target.keys()[i]) || y < 0.05 || y > 0.95) continue;
            CHECK(g.counts[i] == 2);
            ++interior;
        }
        CHECK(interior > 180);

        const auto id = indicatrix_identity(F, r, 8, 1e-5);
        CHECK(std::abs(id.lhs - 2.0) < 0.05);
        CHECK(std::abs(id.rhs - 2.0) < 1e-9);
        CHECK(id.flagged_volume < 0.05);
        CHECK(id.lhs_unflagged <= id.lhs + 1e-12);
    }
}

TEST_CASE("doubling the target depth does not widen the identity gap") {
    for (std::string spec : {"fold", "polar", "sinewarp:0.3", "squash"}) {
        CAPTURE(spec);
        const std::size_t n = spec == "fold" ? 1 : 2;
        const auto F = make_transform(spec, n);
        for (int d : {3, 4}) {
            auto gap_at = [&](int depth) {
                const auto id = indicatrix_identity(F, subdivide(default_domain(spec, n), depth), depth, 1e-6);
                return std::abs(id.lhs - id.rhs);
            };
            CHECK(gap_at(2 * d) <= gap_at(d));
        }
    }
}

TEST_CASE("lhs is additive over a patch cover up to boundary layers") {
    const auto F = make_transform("fold", 1);
    const auto r = subdivide(kSymmetric, 7);
    const auto cover = decompose_injective(F, r, 0.1, 10);
    const auto whole = indicatrix_identity(F, r, 9, 1e-5);
    double sum = 0.0, slack = whole.flagged_volume;
    for (const auto& p : cover.patches) {
        const auto part = indicatrix_identity(F, p.cells, 9, 1e-5);
        sum += part.lhs;
        slack += part.flagged_volume;
        // A certified patch is one sheet: N = 1 off the boundary layer.
        const auto g = banach_indicatrix(F, p.cells, 9);
        for (std::size_t i = 0; i < g.counts.size(); ++i)
            if (!g.is_flagged(g.target.keys()[i])) CHECK(g.counts[i] == 1);
    }
    if (!cover.residual.empty()) sum += indicatrix_identity(F, cover.residual, 9, 1e-5).lhs;
    CHECK(std::abs(sum - whole.lhs) <= slack);
}

TEST_CASE("indicatrix dump format") {
    const auto g = banach_indicatrix(make_transform("fold", 1), subdivide(kSymmetric, 3), 3);
    std::ostringstream os;
    write_indicatrix(os, g);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line.rfind("bounds ", 0) == 0);
    CHECK(line.find(" depth 3") != std::string::npos);
    int rows = 0;
    while (std::getline(is, line)) {
        CHECK(line.rfind("y_cell ", 0) == 0);
        CHECK(line.find(" N=") != std::string::npos);
        ++rows;
    }
    CHECK(rows == static_cast<int>(g.counts.size()));
}

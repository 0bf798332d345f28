#include "doctest.h"

#include <cmath>
#include <numbers>

#include "cov/errors.hpp"
#include "cov/image.hpp"
#include "cov/linop.hpp"
#include "cov/random.hpp"
#include "cov/registry.hpp"

using namespace cov;

TEST_CASE("identity image of the unit square") {
    const auto F = make_transform("identity");
    for (int d = 5; d <= 9; ++d) {
        const auto m = region_measure(image_region(F, subdivide(SemiOpenBox::unit(2), d), d));
        CHECK(m.contains(1.0));
        const double slack = std::ldexp(1.0, -d + 2);
        CHECK(1.0 - m.inner < slack);
        CHECK(m.outer - 1.0 < 4.0 * slack);
        if (d >= 8) CHECK(m.outer - 1.0 < slack);
    }
}

TEST_CASE("diag(2,1) image has area 2") {
    const auto F = make_transform("linear:2,0,0,1");
    const auto m = region_measure(image_region(F, subdivide(SemiOpenBox::unit(2), 8), 8));
    CHECK(m.contains(2.0));
    CHECK(m.outer - m.inner < 0.1);
}

TEST_CASE("polar image of the rectangle is the disk") {
    const auto F = make_transform("polar");
    const auto img = image_region(F, subdivide(default_domain("polar"), 9), 9);
    const auto m = region_measure(img);
    CHECK(m.contains(std::numbers::pi));
    CHECK(m.outer - m.inner < 0.1);
    CHECK(region_estimate(img) == doctest::Approx(std::numbers::pi).epsilon(0.005));
}

TEST_CASE("linear images scale measure by the determinant") {
    SeededRng rng(11);
    for (int t = 0; t < 8; ++t) {
        std::vector<double> a(4);
        for (double& x : a) x = rng.uniform(-2.0, 2.0);
        const LinearMap L(2, a);
        if (scale_factor_det(L) < 0.2) continue;
        // An L-shaped source made of three quarter squares.
        const GridRegion src(SemiOpenBox::unit(2), 7);
        std::vector<CellKey> keys;
        for (long i = 0; i < 128; ++i)
            for (long j = 0; j < 128; ++j)
                if (i < 64 || j < 64) keys.push_back(src.key(std::vector{i, j}));
        const GridRegion shape(src.bounds(), 7, keys);
        const auto m = region_measure(image_region(Transform::linear(L, "L"), shape, 8));
        CHECK(m.contains(0.75 * scale_factor_det(L)));
    }
}

TEST_CASE("one-dimensional folds and squashes") {
    for (const char* spec : {"fold", "squash"}) {
        const auto F = make_transform(spec, 1);
        const auto img = image_region(F, subdivide(default_domain(spec, 1), 8), 8);
        CHECK(region_measure(img).contains(1.0));
    }
}

TEST_CASE("image_region errors") {
    const Transform blowup(1, [](std::span<const double> x) { return Vector{1.0 / x[0]}; }, "1/x");
    try {
        image_region(blowup, subdivide(SemiOpenBox::unit(1), 3), 4);
        FAIL("expected an evaluation error");
    } catch (const EvaluationError& e) {
        REQUIRE(e.point().size() == 1);
        CHECK(e.point()[0] == 0.0);
    }
    ImageOptions tight;
    tight.budget = 100;
    CHECK_THROWS_AS(image_region(make_transform("identity"), subdivide(SemiOpenBox::unit(2), 3), 6, tight),
                    ResourceError);
}

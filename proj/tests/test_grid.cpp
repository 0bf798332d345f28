#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cov/errors.hpp"
#include "cov/grid.hpp"

using namespace cov;

namespace {

// Exact classification of a box against the closed unit disk: the nearest and
// farthest box points from the origin decide containment and intersection.
std::optional<CellClass> disk_classifier(const SemiOpenBox& cell) {
    double near = 0.0, far = 0.0;
    for (std::size_t a = 0; a < cell.dim(); ++a) {
        const double lo = cell.lower()[a], hi = cell.upper()[a];
        const double n = (lo > 0.0) ? lo : (hi < 0.0 ? -hi : 0.0);
        const double f = std::max(std::abs(lo), std::abs(hi));
        near += n * n;
        far += f * f;
    }
    if (far <= 1.0) return CellClass::inside;
    if (near <= 1.0) return CellClass::boundary;
    return std::nullopt;
}

const SemiOpenBox kDiskBounds({-1.0, -1.0}, {1.0, 1.0});

}  // namespace

TEST_CASE("SemiOpenBox validation and semantics") {
    CHECK_THROWS_AS(SemiOpenBox({0.0}, {0.0}), InvalidInput);
    CHECK_THROWS_AS(SemiOpenBox({0.0, 1.0}, {1.0}), InvalidInput);
    CHECK_THROWS_AS(SemiOpenBox({0.0}, {std::nan("")}), InvalidInput);
    const SemiOpenBox b({0.0, 0.0}, {2.0, 1.0});
    CHECK(b.volume() == 2.0);
    CHECK(b.contains(std::vector{0.0, 0.0}));
    CHECK_FALSE(b.contains(std::vector{2.0, 0.5}));
    CHECK(b.contains_closed(std::vector{2.0, 0.5}));
}

TEST_CASE("subdivide") {
    const auto one = subdivide(SemiOpenBox::unit(2), 0);
    CHECK(one.size() == 1);
    CHECK(one.cell_volume() == 1.0);

    const auto r = subdivide(SemiOpenBox::unit(2), 3);
    CHECK(r.size() == 64);
    CHECK(r.cell_volume() == doctest::Approx(1.0 / 64.0).epsilon(1e-15));

    const auto wide = subdivide(SemiOpenBox({0.0, 0.0}, {2.0, 1.0}), 1);
    CHECK(wide.size() == 4);
    CHECK(wide.cell_volume() == 0.5);

    CHECK_THROWS_AS(subdivide(SemiOpenBox::unit(2), 10, 1000), ResourceError);
    try {
        subdivide(SemiOpenBox::unit(3), 6, 1000);
    } catch (const ResourceError& e) {
        CHECK(e.budget() == 1000);
        CHECK(std::string(e.what()).find("1000") != std::string::npos);
    }
}

TEST_CASE("GridRegion rejects out-of-range cells and deduplicates") {
    const auto b = SemiOpenBox::unit(2);
    CHECK_THROWS_AS(GridRegion(b, 2, {16}), InvalidInput);
    const GridRegion r(b, 2, {3, 1, 3});
    CHECK(r.size() == 2);
    const std::vector<long> idx{1, 2};
    CHECK(r.index(r.key(idx)) == idx);
    CHECK(r.cell_center(r.key(idx)) == std::vector{0.375, 0.625});
    CHECK(r.locate(std::vector{0.375, 0.625}) == r.key(idx));
    CHECK_FALSE(r.locate(std::vector{1.0, 0.5}).has_value());
}

TEST_CASE("region_measure") {
    const auto full = region_measure(subdivide(SemiOpenBox::unit(2), 5));
    CHECK(full.inner == 1.0);
    CHECK(full.outer == 1.0);

    const auto empty = region_measure(GridRegion(SemiOpenBox::unit(2), 5));
    CHECK(empty.inner == 0.0);
    CHECK(empty.outer == 0.0);

    const auto disk = region_measure(rasterize(kDiskBounds, 9, disk_classifier));
    CHECK(disk.contains(std::numbers::pi));
    CHECK(disk.outer - disk.inner < 0.05);
}

TEST_CASE("sdf rasterization brackets the disk and refines monotonically") {
    const auto sdf = [](std::span<const double> p) { return std::hypot(p[0], p[1]) - 1.0; };
    MeasureBracket prev{0.0, 1e9};
    for (int d = 3; d <= 9; ++d) {
        const auto m = region_measure(rasterize(kDiskBounds, d, sdf_classifier(sdf)));
        CHECK(m.contains(std::numbers::pi));
        CHECK(m.inner >= prev.inner);
        CHECK(m.outer <= prev.outer);
        prev = m;
    }
    CHECK(prev.outer - prev.inner < 0.05);
}

TEST_CASE("measures are additive over disjoint regions") {
    const auto b = SemiOpenBox::unit(2);
    const auto disk = rasterize(kDiskBounds, 7, disk_classifier);
    const auto left = rasterize(kDiskBounds, 7, [](const SemiOpenBox& c) -> std::optional<CellClass> {
        if (c.upper()[0] <= 0.0) return CellClass::inside;
        return std::nullopt;
    });
    const auto a = region_intersection(disk, left);
    const auto rest = region_difference(disk, left);
    const auto ma = region_measure(a), mr = region_measure(rest);
    const auto mu = region_measure(region_union(a, rest));
    CHECK(mu.inner == ma.inner + mr.inner);
    CHECK(mu.outer == ma.outer + mr.outer);
    CHECK(region_union(a, rest).same_cells(disk));

    const GridRegion other(b, 7);
    CHECK_THROWS_AS(region_union(disk, other), InvalidInput);
}

TEST_CASE("integrate") {
    const auto unit = subdivide(SemiOpenBox::unit(2), 4);
    const ScalarField one{[](std::span<const double>) { return 1.0; }, "1"};
    CHECK(integrate(one, unit, 1).value == 1.0);

    const ScalarField x{[](std::span<const double> p) { return p[0]; }, "x"};
    const auto ix = integrate(x, unit, 2);
    CHECK(std::abs(ix.value - 0.5) <= ix.est_error + 1e-14);

    const auto polar = subdivide(SemiOpenBox({0.0, 0.0}, {1.0, 2.0 * std::numbers::pi}), 9);
    const auto ir = integrate(x, polar, 1);
    CHECK(ir.value == doctest::Approx(std::numbers::pi).epsilon(0.01 / std::numbers::pi));

    CHECK_THROWS_AS(integrate(one, unit, 0), InvalidInput);
}

TEST_CASE("integrate is linear and independent of the thread count") {
    const auto r = rasterize(kDiskBounds, 7, disk_classifier);
    const ScalarField f{[](std::span<const double> p) { return std::sin(3 * p[0]) + p[1] * p[1]; }, "f"};
    const ScalarField g{[](std::span<const double> p) { return std::exp(p[0] * p[1]); }, "g"};
    const ScalarField sum{[&](std::span<const double> p) { return f(p) + g(p); }, "f+g"};
    const double lhs = integrate(sum, r, 2).value;
    const double rhs = integrate(f, r, 2).value + integrate(g, r, 2).value;
    CHECK(std::abs(lhs - rhs) < 1e-12);

    const auto big = subdivide(SemiOpenBox::unit(2), 8);
    const auto serial = integrate(g, big, 1, 1);
    for (int t : {2, 3, 8}) {
        const auto par = integrate(g, big, 1, t);
        CHECK(par.value == serial.value);
        CHECK(par.est_error == serial.est_error);
    }
}

TEST_CASE("integrate reports the offending cell for non-finite values") {
    const auto r = subdivide(SemiOpenBox::unit(1), 2);
    const ScalarField bad{[](std::span<const double> p) { return p[0] > 0.5 ? std::nan("") : 0.0; },
                          "bad"};
    try {
        integrate(bad, r, 1);
        FAIL("expected an evaluation error");
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find("cell [2]") != std::string::npos);
        CHECK(e.point().size() == 1);
    }
}

TEST_CASE("region serialization round-trips") {
    const auto r = rasterize(SemiOpenBox({-1.0, 0.25}, {1.0, 3.0}), 5, [](const SemiOpenBox& c) {
        return c.center()[0] + c.center()[1] < 1.0 ? std::optional(CellClass::inside) : std::nullopt;
    });
    std::stringstream ss;
    write_region(ss, r);
    CHECK(ss.str().rfind("bounds -1 0.25 1 3 depth 5\n", 0) == 0);
    const auto back = read_region(ss);
    CHECK(back.same_cells(r));
    CHECK(back.bounds() == r.bounds());

    std::stringstream bad("bounds 0 0 1 1 depth 2\ncell 0 7\n");
    CHECK_THROWS_AS(read_region(bad), InvalidInput);
}

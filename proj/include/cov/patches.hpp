#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cov/grid.hpp"
#include "cov/linop.hpp"
#include "cov/transform.hpp"

namespace cov {

/// Scale factors at or below this are treated as zero.
inline constexpr double kDegenerateScale = 1e-6;

/// A set of cells of diameter < radius around `center` on which F is close to
/// its linearization there.
struct Patch {
    Vector center;
    double radius = 0.0;
    double epsilon = 0.0;
    GridRegion cells;
    LinearMap center_operator;
    bool certified = false;
    bool injective_checked = false;
};

struct PatchCover {
    std::vector<Patch> patches;
    GridRegion residual;
};

struct Certification {
    bool certified = false;
    double worst_ratio_low = 1.0;
    double worst_ratio_high = 1.0;
};

using PointPair = std::pair<Vector, Vector>;

/// Seeded pairs in the closed ball of radius delta around z: a quarter pair a
/// point with z, a quarter are antipodal about z, the rest are independent.
/// Points outside F's declared domain are rejected.
std::vector<PointPair> sample_ball_pairs(const Transform& F, std::span<const double> z, double delta,
                                         int samples, std::uint64_t seed);

/// Ratios |Fx - Fy| / |J(x - y)| over the given pairs against [(1-eps)^2, (1+eps)^2].
Certification certify_pairs(const Transform& F, const LinearMap& J, std::span<const PointPair> pairs,
                            double epsilon);

/// Throws NotInvertible when the scale factor of F'(z) is at most kDegenerateScale.
Certification certify_patch(const Transform& F, std::span<const double> z, double delta, double epsilon,
                            int samples, std::uint64_t seed, double h = 1e-6);

struct DecomposeOptions {
    int samples = 512;
    std::uint64_t seed = 42;
    double h = 0.0;  // 0 selects default_step(region bounds)
    double tau0 = kDegenerateScale;
};

/// Greedy cover of r, lowest cell index first, with delta halved from the
/// region diameter at most max_rounds times.
PatchCover decompose_injective(const Transform& F, const GridRegion& r, double epsilon, int max_rounds,
                               const DecomposeOptions& options = {});

struct InjectivityResult {
    bool injective = true;
    std::optional<PointPair> witness;
};

InjectivityResult check_injective(const Transform& F, const Patch& p, int samples, std::uint64_t seed);

struct SandwichBounds {
    double lower = 0.0;
    double upper = 0.0;
    double integral = 0.0;
    double integral_error = 0.0;
    MeasureBracket image;
    double image_estimate = 0.0;
    bool overlap = false;
};

/// Throws PreconditionError unless p is certified and injective_checked.
SandwichBounds sandwich_bounds(const Transform& F, const Patch& p, int target_depth, double h);

/// Every cell of the input exactly once across patches and residual.
bool partitions(const PatchCover& cover, const GridRegion& r);

void write_cover(std::ostream& os, const PatchCover& cover);

}  // namespace cov

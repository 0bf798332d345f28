#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cov/grid.hpp"
#include "cov/image.hpp"
#include "cov/patches.hpp"
#include "cov/transform.hpp"

namespace cov {

struct VerificationReport {
    std::string transform;
    std::string region;
    double lhs = 0.0;
    double rhs = 0.0;
    std::optional<MeasureBracket> lhs_bracket;
    double abs_gap = 0.0;
    double rel_gap = 0.0;  // abs_gap / max(1, |rhs|)
    int depth = 0;
    std::string notes;
};

struct VerifyOptions {
    bool allow_indicatrix = false;  // route non-injective inputs through the indicatrix
    int samples = 512;              // collision search effort
    std::uint64_t seed = 42;
    int threads = 1;
    ImageOptions image;
};

ScalarField unit_field();

/// lhs = integral of phi over F(src) on a target grid at `depth`;
/// rhs = integral of phi(F) |det F'| over src. When phi is unit_field() the
/// report carries the measure bracket of F(src).
/// Throws PreconditionError when a collision shows F is not injective on src
/// and options.allow_indicatrix is false.
VerificationReport change_of_variable_check(const Transform& F, const GridRegion& src, const ScalarField& phi,
                                            int depth, double h, const VerifyOptions& options = {});

/// Same check on a certified, injectivity-checked patch (PreconditionError otherwise).
VerificationReport change_of_variable_check(const Transform& F, const Patch& patch, const ScalarField& phi,
                                            int depth, double h, const VerifyOptions& options = {});

/// Volume of the cells whose smallest sampled |det F'| (corners and midpoint) is below tau.
double zero_set_outer_measure(const Transform& F, const GridRegion& src, double tau, double h);

}  // namespace cov

#pragma once

#include <cstddef>

#include "cov/budget.hpp"
#include "cov/grid.hpp"
#include "cov/transform.hpp"

namespace cov {

struct ImageOptions {
    /// Safety factor on the measured curvature of boundary images.
    double inflation = 1.5;
    /// Target bounds exceed the sampled image box by this fraction per side.
    double pad_fraction = 0.05;
    /// Simplices with |det F'| estimate at or below this are critical.
    double critical_threshold = 1e-6;
    std::size_t budget = cell_budget();
};

/// Rasterizes F(src) on a 2^target_depth grid over the padded image box.
///
/// F is sampled at every corner and midpoint of the source cells. A target
/// cell is `inside` when its midpoint lies in the piecewise-linear image and
/// it stays clear of the images of the source boundary, of orientation-flip
/// faces and of critical cells; cells meeting those images are `boundary_hit`
/// or `boundary` depending on their midpoint. The inner/outer measure of the
/// result brackets |F(src)|, and region_estimate is a midpoint-rule estimate.
GridRegion image_region(const Transform& F, const GridRegion& src, int target_depth,
                        const ImageOptions& options = {});

}  // namespace cov

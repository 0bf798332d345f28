#include "cov/image.hpp"

#include "image_mesh.hpp"

namespace cov {

GridRegion image_region(const Transform& F, const GridRegion& src, int target_depth, const ImageOptions& options) {
    const detail::ImageMesh mesh =
        detail::build_image_mesh(F, src, {options.inflation, options.critical_threshold});
    const detail::TargetGrid grid = detail::make_target_grid(mesh, target_depth, options.pad_fraction, options.budget);

    detail::Bitmap hits(grid.total), uncertain(grid.total);
    detail::mark_midpoint_hits(mesh, grid, hits);
    detail::mark_uncertain(F, mesh, grid, options.inflation, uncertain);

    std::vector<CellKey> keys;
    std::vector<CellClass> classes;
    detail::Bitmap any(grid.total);
    hits.for_each([&](std::size_t k) { any.set(k); });
    uncertain.for_each([&](std::size_t k) { any.set(k); });
    any.for_each([&](std::size_t k) {
        keys.push_back(k);
        const bool hit = hits.test(k);
        classes.push_back(!uncertain.test(k) ? CellClass::inside
                          : hit              ? CellClass::boundary_hit
                                             : CellClass::boundary);
    });
    return GridRegion(grid.bounds(), target_depth, std::move(keys), std::move(classes));
}

}  // namespace cov

#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "cov/grid.hpp"
#include "cov/image.hpp"
#include "cov/transform.hpp"

namespace cov {

/// Preimage counts N(y) on a target grid. `target` holds the cells with
/// N > 0; counts[i] belongs to target.keys()[i]. Flagged cells lie near the
/// image of the source boundary, of orientation flips or of critical cells,
/// where the count depends on the grid.
struct IndicatrixGrid {
    GridRegion target;
    std::vector<int> counts;
    std::vector<CellKey> flagged;  // sorted; may include cells with N = 0

    int count(CellKey key) const;
    bool is_flagged(CellKey key) const;
    double integral() const;
};

/// N = number of face-connected components of the source cells whose image
/// enclosure meets the target cell.
IndicatrixGrid banach_indicatrix(const Transform& F, const GridRegion& src, int target_depth,
                                 const ImageOptions& options = {});

struct IndicatrixIdentity {
    double lhs = 0.0;            // unflagged counts plus PL midpoint multiplicity on flagged cells
    double rhs = 0.0;            // integral of |det F'| over src
    double rhs_error = 0.0;
    double lhs_unflagged = 0.0;  // unflagged cells only
    double flagged_volume = 0.0;
    std::size_t flagged_cells = 0;
};

IndicatrixIdentity indicatrix_identity(const Transform& F, const GridRegion& src, int target_depth, double h,
                                       const ImageOptions& options = {});

struct IndicatrixIntegral {
    double lhs = 0.0;
    double lhs_unflagged = 0.0;
    double flagged_volume = 0.0;
    std::size_t flagged_cells = 0;
};

/// Sum over target cells of N(y) phi(y) times the cell volume, with the
/// flagged cells counted as in indicatrix_identity.
IndicatrixIntegral indicatrix_integral(const Transform& F, const GridRegion& src, int target_depth,
                                       const ScalarField& phi, const ImageOptions& options = {});

/// Header `bounds <lo...> <hi...> depth <d>`, then `y_cell <indices> N=<count>`.
void write_indicatrix(std::ostream& os, const IndicatrixGrid& g);

}  // namespace cov

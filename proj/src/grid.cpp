#include "cov/grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "cov/errors.hpp"

namespace cov {

SemiOpenBox::SemiOpenBox(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.empty() || lower_.size() != upper_.size())
        throw InvalidInput("SemiOpenBox: bounds must be non-empty and of equal dimension");
    if (!all_finite(lower_) || !all_finite(upper_))
        throw InvalidInput("SemiOpenBox: bounds must be finite");
    for (std::size_t i = 0; i < lower_.size(); ++i)
        if (!(lower_[i] < upper_[i]))
            throw InvalidInput("SemiOpenBox: lower bound must be below upper bound on axis " +
                               std::to_string(i));
}

SemiOpenBox SemiOpenBox::unit(std::size_t dim) { return SemiOpenBox(Vector(dim, 0.0), Vector(dim, 1.0)); }

double SemiOpenBox::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < dim(); ++i) v *= side(i);
    return v;
}

double SemiOpenBox::diameter() const { return distance(lower_, upper_); }

Vector SemiOpenBox::center() const {
    Vector c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower_[i] + upper_[i]);
    return c;
}

bool SemiOpenBox::contains(std::span<const double> p) const {
    for (std::size_t i = 0; i < dim(); ++i)
        if (!(lower_[i] <= p[i] && p[i] < upper_[i])) return false;
    return true;
}

bool SemiOpenBox::contains_closed(std::span<const double> p, double tol) const {
    for (std::size_t i = 0; i < dim(); ++i)
        if (!(lower_[i] - tol <= p[i] && p[i] <= upper_[i] + tol)) return false;
    return true;
}

GridRegion::GridRegion(SemiOpenBox bounds, int depth) : bounds_(std::move(bounds)), depth_(depth) {
    if (depth < 0) throw InvalidInput("GridRegion: depth must be non-negative");
    if (static_cast<std::size_t>(depth) * dim() > 62)
        throw InvalidInput("GridRegion: depth too large for 64-bit cell keys");
}

GridRegion::GridRegion(SemiOpenBox bounds, int depth, std::vector<CellKey> keys,
                       std::vector<CellClass> classes)
    : GridRegion(std::move(bounds), depth) {
    if (classes.empty()) classes.assign(keys.size(), CellClass::inside);
    if (classes.size() != keys.size())
        throw InvalidInput("GridRegion: keys and classes differ in length");
    const CellKey limit = CellKey{1} << (static_cast<std::size_t>(depth) * dim());
    std::vector<std::size_t> order(keys.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return keys[a] != keys[b] ? keys[a] < keys[b] : classes[a] < classes[b];
    });
    keys_.reserve(keys.size());
    classes_.reserve(keys.size());
    for (std::size_t i : order) {
        if (keys[i] >= limit) throw InvalidInput("GridRegion: cell index outside the grid");
        // Duplicates keep the most certain class (lowest enum value sorts first).
        if (!keys_.empty() && keys_.back() == keys[i]) continue;
        keys_.push_back(keys[i]);
        classes_.push_back(classes[i]);
    }
}

bool GridRegion::is_plain() const {
    return std::all_of(classes_.begin(), classes_.end(), [](CellClass c) { return c == CellClass::inside; });
}

double GridRegion::cell_side(std::size_t axis) const {
    return bounds_.side(axis) / static_cast<double>(cells_per_axis());
}

double GridRegion::cell_volume() const {
    double v = 1.0;
    for (std::size_t a = 0; a < dim(); ++a) v *= cell_side(a);
    return v;
}

double GridRegion::cell_diameter() const {
    double s = 0.0;
    for (std::size_t a = 0; a < dim(); ++a) s += cell_side(a) * cell_side(a);
    return std::sqrt(s);
}

CellKey GridRegion::key(std::span<const long> index) const {
    CellKey k = 0;
    for (std::size_t a = dim(); a-- > 0;) {
        if (index[a] < 0 || index[a] >= cells_per_axis())
            throw InvalidInput("GridRegion: cell index outside [0, 2^depth)");
        k = (k << depth_) | static_cast<CellKey>(index[a]);
    }
    return k;
}

std::vector<long> GridRegion::index(CellKey key) const {
    std::vector<long> idx(dim());
    const CellKey mask = (CellKey{1} << depth_) - 1;
    for (std::size_t a = 0; a < dim(); ++a) {
        idx[a] = static_cast<long>(key & mask);
        key >>= depth_;
    }
    return idx;
}

SemiOpenBox GridRegion::cell_box(CellKey key) const {
    const auto idx = index(key);
    Vector lo(dim()), hi(dim());
    for (std::size_t a = 0; a < dim(); ++a) {
        lo[a] = bounds_.lower()[a] + static_cast<double>(idx[a]) * cell_side(a);
        hi[a] = idx[a] + 1 == cells_per_axis() ? bounds_.upper()[a]
                                                : bounds_.lower()[a] + static_cast<double>(idx[a] + 1) * cell_side(a);
    }
    return SemiOpenBox(std::move(lo), std::move(hi));
}

Vector GridRegion::cell_center(CellKey key) const {
    const auto idx = index(key);
    Vector c(dim());
    for (std::size_t a = 0; a < dim(); ++a)
        c[a] = bounds_.lower()[a] + (static_cast<double>(idx[a]) + 0.5) * cell_side(a);
    return c;
}

std::optional<CellKey> GridRegion::locate(std::span<const double> p) const {
    if (!bounds_.contains(p)) return std::nullopt;
    std::vector<long> idx(dim());
    for (std::size_t a = 0; a < dim(); ++a) {
        const double t = (p[a] - bounds_.lower()[a]) / cell_side(a);
        idx[a] = std::clamp(static_cast<long>(std::floor(t)), 0L, cells_per_axis() - 1);
    }
    return key(idx);
}

bool GridRegion::contains(CellKey key) const { return std::binary_search(keys_.begin(), keys_.end(), key); }

std::optional<std::size_t> GridRegion::position(CellKey key) const {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) return std::nullopt;
    return static_cast<std::size_t>(it - keys_.begin());
}

bool GridRegion::same_grid(const GridRegion& other) const {
    return bounds_ == other.bounds_ && depth_ == other.depth_;
}

bool GridRegion::same_cells(const GridRegion& other) const {
    return same_grid(other) && keys_ == other.keys_;
}

GridRegion subdivide(const SemiOpenBox& box, int depth, std::size_t budget) {
    require_within_budget("subdivide", box.dim(), depth, budget);
    const std::size_t count = grid_cell_count(box.dim(), depth);
    std::vector<CellKey> keys(count);
    for (std::size_t i = 0; i < count; ++i) keys[i] = i;
    return GridRegion(box, depth, std::move(keys));
}

MeasureBracket region_measure(const GridRegion& r) {
    std::size_t inside = 0;
    for (CellClass c : r.classes())
        if (c == CellClass::inside) ++inside;
    const double v = r.cell_volume();
    return {static_cast<double>(inside) * v, static_cast<double>(r.size()) * v};
}

double region_estimate(const GridRegion& r) {
    std::size_t count = 0;
    for (CellClass c : r.classes())
        if (c != CellClass::boundary) ++count;
    return static_cast<double>(count) * r.cell_volume();
}

namespace {

GridRegion filter_cells(const GridRegion& r, bool (*keep)(CellClass)) {
    std::vector<CellKey> keys;
    for (std::size_t i = 0; i < r.size(); ++i)
        if (keep(r.classes()[i])) keys.push_back(r.keys()[i]);
    return GridRegion(r.bounds(), r.depth(), std::move(keys));
}

void require_same_grid(const GridRegion& a, const GridRegion& b, const char* op) {
    if (!a.same_grid(b)) throw InvalidInput(std::string(op) + ": regions live on different grids");
}

}  // namespace

GridRegion estimate_cells(const GridRegion& r) {
    return filter_cells(r, [](CellClass c) { return c != CellClass::boundary; });
}

GridRegion inner_cells(const GridRegion& r) {
    return filter_cells(r, [](CellClass c) { return c == CellClass::inside; });
}

GridRegion rasterize(const SemiOpenBox& bounds, int depth, const CellClassifier& classify,
                     std::size_t budget) {
    require_within_budget("rasterize", bounds.dim(), depth, budget);
    const GridRegion grid(bounds, depth);
    const std::size_t count = grid_cell_count(bounds.dim(), depth);
    std::vector<CellKey> keys;
    std::vector<CellClass> classes;
    for (CellKey k = 0; k < count; ++k) {
        if (auto c = classify(grid.cell_box(k))) {
            keys.push_back(k);
            classes.push_back(*c);
        }
    }
    return GridRegion(bounds, depth, std::move(keys), std::move(classes));
}

CellClassifier sdf_classifier(std::function<double(std::span<const double>)> sdf, double lipschitz) {
    return [sdf = std::move(sdf), lipschitz](const SemiOpenBox& cell) -> std::optional<CellClass> {
        const Vector c = cell.center();
        const double d = sdf(c);
        const double reach = 0.5 * cell.diameter() * lipschitz;
        if (d <= -reach) return CellClass::inside;
        if (d >= reach) return std::nullopt;
        return d < 0.0 ? CellClass::boundary_hit : CellClass::boundary;
    };
}

// Classes survive set operations: a union keeps the more certain class of a
// shared cell, an intersection the less certain one, a difference keeps a's.
GridRegion region_union(const GridRegion& a, const GridRegion& b) {
    require_same_grid(a, b, "region_union");
    std::vector<CellKey> keys(a.keys());
    std::vector<CellClass> classes(a.classes());
    keys.insert(keys.end(), b.keys().begin(), b.keys().end());
    classes.insert(classes.end(), b.classes().begin(), b.classes().end());
    return GridRegion(a.bounds(), a.depth(), std::move(keys), std::move(classes));
}

GridRegion region_difference(const GridRegion& a, const GridRegion& b) {
    require_same_grid(a, b, "region_difference");
    std::vector<CellKey> keys;
    std::vector<CellClass> classes;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (b.contains(a.keys()[i])) continue;
        keys.push_back(a.keys()[i]);
        classes.push_back(a.classes()[i]);
    }
    return GridRegion(a.bounds(), a.depth(), std::move(keys), std::move(classes));
}

GridRegion region_intersection(const GridRegion& a, const GridRegion& b) {
    require_same_grid(a, b, "region_intersection");
    std::vector<CellKey> keys;
    std::vector<CellClass> classes;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto j = b.position(a.keys()[i]);
        if (!j) continue;
        keys.push_back(a.keys()[i]);
        classes.push_back(std::max(a.classes()[i], b.classes()[*j]));
    }
    return GridRegion(a.bounds(), a.depth(), std::move(keys), std::move(classes));
}

namespace {

constexpr std::size_t kChunkCells = 1024;

// Midpoint sums per refinement level for cells [first, last).
void integrate_chunk(const ScalarField& f, const GridRegion& r, std::span<const CellKey> cells,
                     int refine_levels, std::span<double> sums) {
    const std::size_t n = r.dim();
    Vector p(n);
    for (CellKey key : cells) {
        const auto idx = r.index(key);
        for (int level = 0; level <= refine_levels; ++level) {
            const long per_axis = 1L << level;
            std::size_t sub_count = 1;
            for (std::size_t a = 0; a < n; ++a) sub_count *= static_cast<std::size_t>(per_axis);
            double sub_volume = r.cell_volume();
            for (std::size_t a = 0; a < n; ++a) sub_volume /= static_cast<double>(per_axis);
            double cell_sum = 0.0;
            for (std::size_t s = 0; s < sub_count; ++s) {
                std::size_t rem = s;
                for (std::size_t a = 0; a < n; ++a) {
                    const long sub = static_cast<long>(rem % static_cast<std::size_t>(per_axis));
                    rem /= static_cast<std::size_t>(per_axis);
                    p[a] = r.bounds().lower()[a] +
                           (static_cast<double>(idx[a]) + (static_cast<double>(sub) + 0.5) / per_axis) *
                               r.cell_side(a);
                }
                const double v = f(p);
                if (!std::isfinite(v)) {
                    std::ostringstream what;
                    what << "integrate: field '" << f.description << "' not finite in cell [";
                    for (std::size_t a = 0; a < n; ++a) what << (a ? " " : "") << idx[a];
                    what << "]";
                    throw EvaluationError(what.str(), p);
                }
                cell_sum += v;
            }
            sums[static_cast<std::size_t>(level)] += cell_sum * sub_volume;
        }
    }
}

}  // namespace

IntegralEstimate integrate(const ScalarField& f, const GridRegion& r, int refine_levels, int threads) {
    if (refine_levels < 1) throw InvalidInput("integrate: refine_levels must be positive");
    if (threads < 1) throw InvalidInput("integrate: threads must be positive");
    std::vector<CellKey> cells;
    cells.reserve(r.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        if (r.classes()[i] != CellClass::boundary) cells.push_back(r.keys()[i]);

    const std::size_t levels = static_cast<std::size_t>(refine_levels) + 1;
    const std::size_t chunks = (cells.size() + kChunkCells - 1) / kChunkCells;
    std::vector<double> partial(chunks * levels, 0.0);
    std::vector<std::exception_ptr> errors(chunks);

    auto run_chunk = [&](std::size_t c) {
        const std::size_t first = c * kChunkCells;
        const std::size_t last = std::min(cells.size(), first + kChunkCells);
        try {
            integrate_chunk(f, r, std::span<const CellKey>(cells).subspan(first, last - first),
                            refine_levels, std::span<double>(partial).subspan(c * levels, levels));
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
            });
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<double> totals(levels, 0.0);
    for (std::size_t c = 0; c < chunks; ++c)
        for (std::size_t l = 0; l < levels; ++l) totals[l] += partial[c * levels + l];
    return {totals[levels - 1], std::abs(totals[levels - 1] - totals[levels - 2])};
}

void write_region_cells(std::ostream& os, const GridRegion& r) {
    for (CellKey k : r.keys()) {
        os << "cell";
        for (long i : r.index(k)) os << ' ' << i;
        os << '\n';
    }
}

void write_region(std::ostream& os, const GridRegion& r) {
    const auto old = os.precision(17);
    os << "bounds";
    for (double x : r.bounds().lower()) os << ' ' << x;
    for (double x : r.bounds().upper()) os << ' ' << x;
    os << " depth " << r.depth() << '\n';
    os.precision(old);
    write_region_cells(os, r);
}

GridRegion read_region(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw InvalidInput("read_region: line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty()) break;
    }
    std::istringstream head(line);
    std::string tag;
    head >> tag;
    if (tag != "bounds") fail("expected 'bounds' header");
    std::vector<std::string> tokens;
    for (std::string t; head >> t;) tokens.push_back(t);
    if (tokens.size() < 4 || tokens[tokens.size() - 2] != "depth") fail("malformed header");
    const std::size_t coords = tokens.size() - 2;
    if (coords % 2 != 0) fail("odd number of bound coordinates");
    const std::size_t n = coords / 2;
    Vector lo(n), hi(n);
    try {
        for (std::size_t i = 0; i < n; ++i) {
            lo[i] = std::stod(tokens[i]);
            hi[i] = std::stod(tokens[n + i]);
        }
    } catch (const std::exception&) {
        fail("bound is not a number");
    }
    int depth = 0;
    try {
        depth = std::stoi(tokens.back());
    } catch (const std::exception&) {
        fail("depth is not an integer");
    }
    GridRegion grid(SemiOpenBox(lo, hi), depth);
    std::vector<CellKey> keys;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream cl(line);
        cl >> tag;
        if (tag != "cell") break;
        std::vector<long> idx(n);
        for (std::size_t a = 0; a < n; ++a)
            if (!(cl >> idx[a])) fail("cell line has too few indices");
        keys.push_back(grid.key(idx));
    }
    return GridRegion(grid.bounds(), depth, std::move(keys));
}

}  // namespace cov

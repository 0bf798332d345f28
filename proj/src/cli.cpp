#include "cov/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "cov/budget.hpp"
#include "cov/diff.hpp"
#include "cov/errors.hpp"
#include "cov/indicatrix.hpp"
#include "cov/linop.hpp"
#include "cov/patches.hpp"
#include "cov/random.hpp"
#include "cov/registry.hpp"
#include "cov/verify.hpp"

namespace cov {

namespace {

// Tolerances behind exit code 2.
constexpr double kVerifyRelGap = 0.02;
constexpr double kIndicatrixGap = 0.05;
constexpr int kDiffPoints = 25;

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    return out;
}

struct Entry {
    std::string value;
    std::string where;  // "line 3" or "option --depth"
};

[[noreturn]] void fail(const Entry& e, const std::string& msg) { throw InvalidInput(e.where + ": " + msg); }

double to_double(const Entry& e, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(e.value, &used);
        if (used == e.value.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    fail(e, key + " must be a finite number, got '" + e.value + "'");
}

long to_long(const std::string& text, const Entry& e, const std::string& key) {
    try {
        std::size_t used = 0;
        const long v = std::stol(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    fail(e, key + " must be an integer, got '" + text + "'");
}

std::vector<int> parse_depths(const Entry& e) {
    std::vector<int> out;
    const auto dots = e.value.find("..");
    if (dots != std::string::npos) {
        const long a = to_long(trim(e.value.substr(0, dots)), e, "depths");
        const long b = to_long(trim(e.value.substr(dots + 2)), e, "depths");
        if (a > b) fail(e, "depth range is empty");
        for (long d = a; d <= b; ++d) out.push_back(static_cast<int>(d));
    } else {
        for (const auto& tok : split(e.value, ',')) out.push_back(static_cast<int>(to_long(tok, e, "depth")));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

SemiOpenBox parse_domain(const Entry& e) {
    Vector lo, hi;
    for (const auto& axis : split(e.value, ',')) {
        const auto colon = axis.find(':');
        if (colon == std::string::npos) fail(e, "domain axes are written lo:hi, got '" + axis + "'");
        lo.push_back(to_double(Entry{trim(axis.substr(0, colon)), e.where}, "domain bound"));
        hi.push_back(to_double(Entry{trim(axis.substr(colon + 1)), e.where}, "domain bound"));
    }
    try {
        return SemiOpenBox(lo, hi);
    } catch (const InvalidInput& err) {
        fail(e, err.what());
    }
}

Mode parse_mode(const Entry& e) {
    static const std::map<std::string, Mode> modes{
        {"scale", Mode::scale},           {"diff", Mode::diff},       {"decompose", Mode::decompose},
        {"sandwich", Mode::sandwich},     {"indicatrix", Mode::indicatrix}, {"verify", Mode::verify},
        {"zeroset", Mode::zeroset}};
    const auto it = modes.find(e.value);
    if (it == modes.end())
        fail(e, "unknown mode '" + e.value + "' (scale, diff, decompose, sandwich, indicatrix, verify, zeroset)");
    return it->second;
}

bool parse_bool(const Entry& e, const std::string& key) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    fail(e, key + " must be true or false");
}

const std::vector<std::string> kKeys{"transform", "dim",    "domain", "depth",      "depths",
                                     "epsilon",   "tau",    "h",      "seed",       "mode",
                                     "output",    "format", "threads", "k",         "phi",
                                     "dump",      "samples", "max_rounds", "indicatrix"};

}  // namespace

std::string to_string(Mode m) {
    switch (m) {
        case Mode::scale: return "scale";
        case Mode::diff: return "diff";
        case Mode::decompose: return "decompose";
        case Mode::sandwich: return "sandwich";
        case Mode::indicatrix: return "indicatrix";
        case Mode::verify: return "verify";
        case Mode::zeroset: return "zeroset";
    }
    return "?";
}

ExperimentConfig parse_config(std::string_view text, const ConfigOverrides& overrides) {
    std::map<std::string, Entry> raw;
    auto put = [&](std::string key, Entry e) {
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) fail(e, "unknown key '" + key + "'");
        if (key == "depth") key = "depths";
        raw[key] = std::move(e);
    };

    std::istringstream is{std::string(text)};
    std::string line;
    for (int line_no = 1; std::getline(is, line); ++line_no) {
        const Entry where{"", "line " + std::to_string(line_no)};
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) fail(where, "expected 'key = value', got '" + body + "'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) fail(where, "missing key before '='");
        if (value.empty()) fail(where, "missing value for '" + key + "'");
        put(key, Entry{value, where.where});
    }
    for (const auto& [key, value] : overrides) put(key, Entry{trim(value), "option --" + key});

    ExperimentConfig cfg;
    auto get = [&](const std::string& key) -> const Entry* {
        const auto it = raw.find(key);
        return it == raw.end() ? nullptr : &it->second;
    };

    const Entry* transform = get("transform");
    if (!transform) throw InvalidInput("config: missing required key 'transform'");
    cfg.transform = transform->value;

    std::optional<SemiOpenBox> domain;
    if (const Entry* e = get("domain")) domain = parse_domain(*e);
    try {
        if (const Entry* e = get("dim")) {
            const long d = to_long(e->value, *e, "dim");
            if (d < 1) fail(*e, "dim must be positive");
            cfg.dim = static_cast<std::size_t>(d);
        } else {
            cfg.dim = transform_dim(cfg.transform, domain ? domain->dim() : 2);
        }
        (void)make_transform(cfg.transform, cfg.dim);
        cfg.domain = domain ? *domain : default_domain(cfg.transform, cfg.dim);
    } catch (const InvalidInput& err) {
        if (std::string(err.what()).rfind("line ", 0) == 0 || std::string(err.what()).rfind("option ", 0) == 0)
            throw;
        fail(*transform, err.what());
    }
    if (cfg.domain.dim() != cfg.dim) fail(*get("domain"), "domain has " + std::to_string(cfg.domain.dim()) +
                                                              " axes but the transform acts in dimension " +
                                                              std::to_string(cfg.dim));

    if (const Entry* e = get("mode")) cfg.mode = parse_mode(*e);
    if (const Entry* e = get("depths")) {
        cfg.depths = parse_depths(*e);
        for (int d : cfg.depths) {
            if (d < 1) fail(*e, "depth must be positive");
            if (static_cast<std::size_t>(d) * cfg.dim > 62 || grid_cell_count(cfg.dim, d) > cell_budget())
                fail(*e, "depth " + std::to_string(d) + " exceeds the cell budget of " +
                             std::to_string(cell_budget()) + " cells");
        }
    }
    if (const Entry* e = get("epsilon")) {
        cfg.epsilon = to_double(*e, "epsilon");
        if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) fail(*e, "epsilon must lie in (0,1), got " + e->value);
    }
    if (const Entry* e = get("tau")) {
        cfg.tau = to_double(*e, "tau");
        if (!(cfg.tau > kDegenerateScale)) fail(*e, "tau must exceed 1e-6");
    }
    if (const Entry* e = get("h")) {
        cfg.h = to_double(*e, "h");
        if (!(cfg.h > 0.0)) fail(*e, "h must be positive");
    }
    if (const Entry* e = get("seed")) {
        const long s = to_long(e->value, *e, "seed");
        if (s < 0) fail(*e, "seed must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (const Entry* e = get("output")) cfg.output_path = e->value;
    if (const Entry* e = get("dump")) cfg.dump_path = e->value;
    if (const Entry* e = get("format")) {
        if (e->value == "csv") cfg.format = ReportFormat::csv;
        else if (e->value == "json") cfg.format = ReportFormat::json;
        else fail(*e, "format must be csv or json");
    }
    auto positive_int = [&](const char* key, int& field, int min) {
        if (const Entry* e = get(key)) {
            const long v = to_long(e->value, *e, key);
            if (v < min || v > 1'000'000) fail(*e, std::string(key) + " out of range");
            field = static_cast<int>(v);
        }
    };
    positive_int("threads", cfg.threads, 1);
    positive_int("k", cfg.k, 1);
    positive_int("samples", cfg.samples, 1);
    positive_int("max_rounds", cfg.max_rounds, 0);
    if (const Entry* e = get("phi")) {
        cfg.phi = split(e->value, ',');
        for (const auto& p : cfg.phi)
            if (p != "1" && p != "x" && p != "xy") fail(*e, "phi must be among 1, x, xy, got '" + p + "'");
    }
    if (const Entry* e = get("indicatrix")) cfg.indicatrix = parse_bool(*e, "indicatrix");
    return cfg;
}

namespace {

ScalarField make_phi(const std::string& name) {
    if (name == "x") return ScalarField{[](std::span<const double> p) { return p[0]; }, "x"};
    if (name == "xy")
        return ScalarField{[](std::span<const double> p) {
                               double v = 1.0;
                               for (double x : p) v *= x;
                               return v;
                           },
                           "xy"};
    return unit_field();
}

ReportRow base_row(const ExperimentConfig& cfg, std::optional<int> depth) {
    ReportRow r;
    r.mode = to_string(cfg.mode);
    r.transform = cfg.transform;
    r.depth = depth;
    return r;
}

void set_gap(ReportRow& r) {
    if (!r.lhs || !r.rhs) return;
    r.abs_gap = std::abs(*r.lhs - *r.rhs);
    r.rel_gap = *r.abs_gap / std::max(1.0, std::abs(*r.rhs));
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class Dump {
public:
    explicit Dump(const std::string& path) {
        if (path.empty()) return;
        file_.open(path);
        if (!file_) throw Error("cannot open dump file '" + path + "'");
    }
    std::ostream* stream() { return file_.is_open() ? &file_ : nullptr; }

private:
    std::ofstream file_;
};

void run_scale(const ExperimentConfig& cfg, ExperimentResult& out) {
    const auto L = linear_matrix(cfg.transform, cfg.dim);
    if (!L) throw InvalidInput("scale mode needs a linear transform (identity, linear, rotation, shear)");
    const double det = scale_factor_det(*L);
    for (int d : cfg.depths) {
        const ScaleBracket b = scale_factor_boxcount(*L, cfg.k, d);
        ReportRow r = base_row(cfg, d);
        r.lhs = 0.5 * (b.inner + b.outer);
        r.lhs_inner = b.inner;
        r.lhs_outer = b.outer;
        r.rhs = det;
        set_gap(r);
        r.notes = "k=" + std::to_string(cfg.k);
        if (!b.contains(det)) {
            out.within_tolerance = false;
            r.notes += "; bracket misses |det|";
        }
        out.rows.push_back(std::move(r));
    }
}

void run_diff(const ExperimentConfig& cfg, const Transform& F, ExperimentResult& out) {
    SeededRng rng(cfg.seed);
    const std::size_t n = cfg.dim;
    double worst_error = 0.0, worst_residual = 0.0;
    int flagged = 0, mismatches = 0;
    for (int i = 0; i < kDiffPoints; ++i) {
        Vector z(n);
        for (std::size_t a = 0; a < n; ++a) {
            const double lo = cfg.domain.lower()[a], w = cfg.domain.side(a);
            z[a] = rng.uniform(lo + 0.1 * w, lo + 0.9 * w);
        }
        const auto est = derivative_estimate(F, z, cfg.h, default_direction_count(n));
        worst_residual = std::max(worst_residual, est.uniform_residual);
        if (!uniformly_differentiable(est)) ++flagged;
        if (F.has_analytic_jacobian()) {
            const LinearMap J = F.analytic_jacobian(z);
            double err = 0.0;
            for (std::size_t e = 0; e < n * n; ++e) err = std::max(err, std::abs(est.op.entries()[e] - J.entries()[e]));
            worst_error = std::max(worst_error, err);
            if (err > differentiability_tolerance(J)) ++mismatches;
        }
    }
    ReportRow r = base_row(cfg, std::nullopt);
    r.lhs = worst_residual;
    if (F.has_analytic_jacobian()) r.abs_gap = worst_error;
    r.notes = "points=" + std::to_string(kDiffPoints) + "; h=" + fmt(cfg.h) +
              "; lhs=max uniform residual; abs_gap=max |J_fd - J_analytic|; non-differentiable=" +
              std::to_string(flagged);
    if (mismatches > 0) {
        out.within_tolerance = false;
        r.notes += "; analytic Jacobian disagrees at " + std::to_string(mismatches) + " points";
    }
    out.rows.push_back(std::move(r));
}

DecomposeOptions decompose_options(const ExperimentConfig& cfg) {
    DecomposeOptions o;
    o.samples = cfg.samples;
    o.seed = cfg.seed;
    o.h = cfg.h;
    return o;
}

void run_decompose(const ExperimentConfig& cfg, const Transform& F, ExperimentResult& out, std::ostream* dump) {
    for (int d : cfg.depths) {
        const GridRegion r = subdivide(cfg.domain, d);
        const PatchCover cover = decompose_injective(F, r, cfg.epsilon, cfg.max_rounds, decompose_options(cfg));
        const bool exact = partitions(cover, r);
        int failures = 0;
        double covered = 0.0;
        for (const Patch& p : cover.patches) {
            covered += region_measure(p.cells).outer;
            if (!check_injective(F, p, cfg.samples, cfg.seed + 1).injective) ++failures;
        }
        ReportRow row = base_row(cfg, d);
        row.epsilon = cfg.epsilon;
        row.lhs = covered;
        row.rhs = cfg.domain.volume();
        row.residual_volume = region_measure(cover.residual).outer;
        row.abs_gap = std::abs(covered + *row.residual_volume - *row.rhs);
        row.rel_gap = *row.abs_gap / std::max(1.0, *row.rhs);
        row.notes = "patches=" + std::to_string(cover.patches.size()) +
                    "; residual_cells=" + std::to_string(cover.residual.size()) +
                    "; partition=" + (exact ? "exact" : "BROKEN") +
                    "; injective_failures=" + std::to_string(failures);
        if (!exact || failures > 0) out.within_tolerance = false;
        if (dump) write_cover(*dump, cover);
        out.rows.push_back(std::move(row));
    }
}

void run_sandwich(const ExperimentConfig& cfg, const Transform& F, ExperimentResult& out) {
    for (int d : cfg.depths) {
        const GridRegion r = subdivide(cfg.domain, d);
        const PatchCover cover = decompose_injective(F, r, cfg.epsilon, cfg.max_rounds, decompose_options(cfg));
        double est = 0.0, inner = 0.0, outer = 0.0, integral = 0.0, lower = 0.0, upper = 0.0;
        int failures = 0;
        for (const Patch& p : cover.patches) {
            const SandwichBounds s = sandwich_bounds(F, p, d, cfg.h);
            est += s.image_estimate;
            inner += s.image.inner;
            outer += s.image.outer;
            integral += s.integral;
            lower += s.lower;
            upper += s.upper;
            if (!s.overlap) ++failures;
        }
        ReportRow row = base_row(cfg, d);
        row.epsilon = cfg.epsilon;
        row.lhs = est;
        row.lhs_inner = inner;
        row.lhs_outer = outer;
        row.rhs = integral;
        set_gap(row);
        row.residual_volume = region_measure(cover.residual).outer;
        row.notes = "patches=" + std::to_string(cover.patches.size()) + "; sandwich=[" + fmt(lower) + ", " +
                    fmt(upper) + "]; overlap_failures=" + std::to_string(failures);
        if (failures > 0) out.within_tolerance = false;
        out.rows.push_back(std::move(row));
    }
}

void run_indicatrix(const ExperimentConfig& cfg, const Transform& F, ExperimentResult& out, std::ostream* dump) {
    for (int d : cfg.depths) {
        const GridRegion r = subdivide(cfg.domain, d);
        const IndicatrixIdentity id = indicatrix_identity(F, r, d, cfg.h);
        ReportRow row = base_row(cfg, d);
        row.lhs = id.lhs;
        row.rhs = id.rhs;
        set_gap(row);
        row.notes = "lhs_unflagged=" + fmt(id.lhs_unflagged) + "; flagged_volume=" + fmt(id.flagged_volume) +
                    "; flagged_cells=" + std::to_string(id.flagged_cells);
        if (!(*row.abs_gap < kIndicatrixGap)) out.within_tolerance = false;
        if (dump) write_indicatrix(*dump, banach_indicatrix(F, r, d));
        out.rows.push_back(std::move(row));
    }
}

void run_verify(const ExperimentConfig& cfg, const Transform& F, ExperimentResult& out, std::ostream* dump) {
    VerifyOptions opt;
    opt.allow_indicatrix = cfg.indicatrix;
    opt.samples = cfg.samples;
    opt.seed = cfg.seed;
    opt.threads = cfg.threads;
    for (int d : cfg.depths) {
        const GridRegion r = subdivide(cfg.domain, d);
        for (const std::string& phi : cfg.phi) {
            const VerificationReport rep = change_of_variable_check(F, r, make_phi(phi), d, cfg.h, opt);
            ReportRow row = base_row(cfg, d);
            row.lhs = rep.lhs;
            if (rep.lhs_bracket) {
                row.lhs_inner = rep.lhs_bracket->inner;
                row.lhs_outer = rep.lhs_bracket->outer;
            }
            row.rhs = rep.rhs;
            row.abs_gap = rep.abs_gap;
            row.rel_gap = rep.rel_gap;
            row.notes = "phi=" + phi + "; " + rep.notes;
            if (!(rep.rel_gap < kVerifyRelGap)) out.within_tolerance = false;
            out.rows.push_back(std::move(row));
        }
        if (dump) write_region(*dump, image_region(F, r, d));
    }
}

void run_zeroset(const ExperimentConfig& cfg, const Transform& F, ExperimentResult& out) {
    std::optional<double> prev;
    for (int d : cfg.depths) {
        const double v = zero_set_outer_measure(F, subdivide(cfg.domain, d), cfg.tau, cfg.h);
        ReportRow row = base_row(cfg, d);
        row.lhs = v;
        row.notes = "tau=" + fmt(cfg.tau);
        if (prev && v > *prev) {
            out.within_tolerance = false;
            row.notes += "; increased with depth";
        }
        prev = v;
        out.rows.push_back(std::move(row));
    }
}

}  // namespace

ExperimentResult execute(const ExperimentConfig& cfg) {
    ExperimentResult out;
    const Transform F = make_transform(cfg.transform, cfg.dim);
    Dump dump(cfg.dump_path);
    switch (cfg.mode) {
        case Mode::scale: run_scale(cfg, out); break;
        case Mode::diff: run_diff(cfg, F, out); break;
        case Mode::decompose: run_decompose(cfg, F, out, dump.stream()); break;
        case Mode::sandwich: run_sandwich(cfg, F, out); break;
        case Mode::indicatrix: run_indicatrix(cfg, F, out, dump.stream()); break;
        case Mode::verify: run_verify(cfg, F, out, dump.stream()); break;
        case Mode::zeroset: run_zeroset(cfg, F, out); break;
    }
    return out;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& err) {
    try {
        const ExperimentResult result = execute(cfg);
        emit_report(result.rows, cfg.format, cfg.output_path);
        return result.within_tolerance ? 0 : 2;
    } catch (const std::exception& e) {
        err << "covtool: " << to_string(cfg.mode) << " " << cfg.transform << ": " << e.what() << '\n';
        return 1;
    }
}

namespace {

const char* const kHeader = "mode,transform,depth,epsilon,lhs,lhs_inner,lhs_outer,rhs,abs_gap,rel_gap,residual_volume,notes";

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::string opt_field(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

nlohmann::ordered_json json_number(const std::optional<double>& v) {
    if (!v) return nullptr;
    return std::stod(fmt(*v));
}

}  // namespace

void write_report(std::ostream& os, const std::vector<ReportRow>& rows, ReportFormat format) {
    if (format == ReportFormat::csv) {
        os << kHeader << '\n';
        for (const ReportRow& r : rows) {
            os << csv_field(r.mode) << ',' << csv_field(r.transform) << ','
               << (r.depth ? std::to_string(*r.depth) : "") << ',' << opt_field(r.epsilon) << ','
               << opt_field(r.lhs) << ',' << opt_field(r.lhs_inner) << ',' << opt_field(r.lhs_outer) << ','
               << opt_field(r.rhs) << ',' << opt_field(r.abs_gap) << ',' << opt_field(r.rel_gap) << ','
               << opt_field(r.residual_volume) << ',' << csv_field(r.notes) << '\n';
        }
        return;
    }
    nlohmann::ordered_json doc;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const ReportRow& r : rows) {
        nlohmann::ordered_json j;
        j["mode"] = r.mode;
        j["transform"] = r.transform;
        j["depth"] = r.depth ? nlohmann::ordered_json(*r.depth) : nlohmann::ordered_json(nullptr);
        j["epsilon"] = json_number(r.epsilon);
        j["lhs"] = json_number(r.lhs);
        j["lhs_inner"] = json_number(r.lhs_inner);
        j["lhs_outer"] = json_number(r.lhs_outer);
        j["rhs"] = json_number(r.rhs);
        j["abs_gap"] = json_number(r.abs_gap);
        j["rel_gap"] = json_number(r.rel_gap);
        j["residual_volume"] = json_number(r.residual_volume);
        j["notes"] = r.notes;
        doc["rows"].push_back(std::move(j));
    }
    os << doc.dump(2) << '\n';
}

void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, const std::string& path) {
    if (path.empty() || path == "-") {
        write_report(std::cout, rows, format);
        std::cout.flush();
        return;
    }
    std::ofstream file(path);
    if (!file) throw Error("cannot write report to '" + path + "'");
    write_report(file, rows, format);
    file.close();
    if (!file) throw Error("I/O failure while writing '" + path + "'");
}

}  // namespace cov

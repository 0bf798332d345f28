#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cov/grid.hpp"

namespace cov {

enum class Mode { scale, diff, decompose, sandwich, indicatrix, verify, zeroset };
enum class ReportFormat { csv, json };

std::string to_string(Mode m);

struct ExperimentConfig {
    std::string transform;
    std::size_t dim = 2;
    SemiOpenBox domain = SemiOpenBox::unit(2);
    std::vector<int> depths{8};
    double epsilon = 0.05;
    double tau = 1e-2;
    double h = 1e-5;
    std::uint64_t seed = 42;
    Mode mode = Mode::verify;
    std::string output_path;  // empty or "-" writes to stdout
    ReportFormat format = ReportFormat::csv;
    int threads = 1;
    int k = 16;                       // scale: sub-boxes per axis
    std::vector<std::string> phi{"1"};  // verify: integrands among 1, x, xy
    std::string dump_path;            // decompose / indicatrix / verify witness dumps
    int samples = 512;
    int max_rounds = 12;
    bool indicatrix = true;           // verify: route non-injective maps through N(y)
};

/// Key-value overrides applied after the document, e.g. from command-line flags.
using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines (`#` starts a comment). Later keys win.
/// Errors are InvalidInput carrying the line number (or the flag name).
ExperimentConfig parse_config(std::string_view text, const ConfigOverrides& overrides = {});

/// One report row; unset fields print empty.
struct ReportRow {
    std::string mode;
    std::string transform;
    std::optional<int> depth;
    std::optional<double> epsilon;
    std::optional<double> lhs, lhs_inner, lhs_outer, rhs, abs_gap, rel_gap, residual_volume;
    std::string notes;
};

struct ExperimentResult {
    std::vector<ReportRow> rows;
    bool within_tolerance = true;
};

/// Runs the experiment without catching errors.
ExperimentResult execute(const ExperimentConfig& cfg);

/// execute + emit_report; returns 0, 2 when a check exceeds its tolerance,
/// 1 on error (message written to `err`).
int run_experiment(const ExperimentConfig& cfg, std::ostream& err);

void write_report(std::ostream& os, const std::vector<ReportRow>& rows, ReportFormat format);

/// Writes to `path`, or stdout when path is empty or "-".
void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, const std::string& path);

}  // namespace cov

// covtool: runs one change-of-variable experiment described by a config file
// and/or flags, and writes a CSV or JSON report.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "cov/cli.hpp"

namespace {

struct FlagSpec {
    const char* key;
    const char* flag;
    const char* help;
};

const FlagSpec kFlags[] = {
    {"transform", "--transform", "registry name, e.g. polar or sinewarp:0.3"},
    {"mode", "--mode", "scale, diff, decompose, sandwich, indicatrix, verify or zeroset"},
    {"dim", "--dim", "ambient dimension"},
    {"domain", "--domain", "source box as lo:hi per axis, comma separated"},
    {"depth", "--depth", "grid depth, a list (6,8) or a range (6..10)"},
    {"epsilon", "--epsilon", "patch tolerance in (0,1)"},
    {"tau", "--tau", "zero-set threshold"},
    {"h", "--h", "finite-difference step"},
    {"seed", "--seed", "sampling seed"},
    {"output", "--output", "report path (stdout when omitted)"},
    {"format", "--format", "csv or json"},
    {"threads", "--threads", "worker threads for integration"},
    {"k", "--k", "box-count power for scale mode"},
    {"phi", "--phi", "integrands among 1, x, xy"},
    {"dump", "--dump", "write cover, indicatrix or image cells to this path"},
    {"samples", "--samples", "pair samples per patch"},
    {"max_rounds", "--max-rounds", "radius halvings per patch"},
    {"indicatrix", "--indicatrix", "route non-injective verify runs through the indicatrix (true/false)"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"covtool: numerical change-of-variable experiments"};
    app.set_help_flag("--help", "print this help and exit");
    std::string config_path;
    app.add_option("config", config_path, "key = value config file")->check(CLI::ExistingFile);
    std::vector<std::string> values(std::size(kFlags));
    for (std::size_t i = 0; i < std::size(kFlags); ++i)
        app.add_option(kFlags[i].flag, values[i], kFlags[i].help);
    CLI11_PARSE(app, argc, argv);

    std::string text;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "covtool: cannot read " << config_path << '\n';
            return 1;
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    cov::ConfigOverrides overrides;
    for (std::size_t i = 0; i < std::size(kFlags); ++i)
        if (app.count(kFlags[i].flag) > 0) overrides.emplace_back(kFlags[i].key, values[i]);

    cov::ExperimentConfig cfg;
    try {
        cfg = cov::parse_config(text, overrides);
    } catch (const std::exception& e) {
        std::cerr << "covtool: " << (config_path.empty() ? "config" : config_path) << ": " << e.what() << '\n';
        return 1;
    }
    return cov::run_experiment(cfg, std::cerr);
}

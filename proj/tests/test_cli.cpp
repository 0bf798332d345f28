#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "cov/cli.hpp"
#include "cov/errors.hpp"
#include "cov/registry.hpp"

using namespace cov;

namespace {

std::string error_of(std::string_view text, const ConfigOverrides& o = {}) {
    try {
        parse_config(text, o);
    } catch (const InvalidInput& e) {
        return e.what();
    }
    return {};
}

bool has(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

std::string report_of(const ExperimentResult& r, ReportFormat f = ReportFormat::csv) {
    std::ostringstream os;
    write_report(os, r.rows, f);
    return os.str();
}

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string line; std::getline(is, line);) out.push_back(line);
    return out;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("covtool_test_" + name);
}

}  // namespace

TEST_CASE("parse_config fills defaults") {
    const auto cfg = parse_config("transform = polar\nmode = verify\n");
    CHECK(cfg.transform == "polar");
    CHECK(cfg.mode == Mode::verify);
    CHECK(cfg.dim == 2);
    CHECK(cfg.domain == default_domain("polar"));
    CHECK(cfg.depths == std::vector<int>{8});
    CHECK(cfg.epsilon == 0.05);
    CHECK(cfg.h == 1e-5);
    CHECK(cfg.seed == 42);
    CHECK(cfg.format == ReportFormat::csv);
    CHECK(cfg.threads == 1);
    CHECK(cfg.output_path.empty());
}

TEST_CASE("parse_config syntax") {
    const auto cfg = parse_config(
        "# experiment\n"
        "transform = linear:2,1,0.5,1   # oblique\n"
        "\n"
        "mode = scale\n"
        "depths = 9..7\n"
        "depth = 7, 5, 6\n"
        "domain = 0:2, -1:1\n"
        "format = json\n"
        "phi = 1, x\n");
    CHECK(cfg.transform == "linear:2,1,0.5,1");
    CHECK(cfg.mode == Mode::scale);
    CHECK(cfg.depths == std::vector<int>{5, 6, 7});
    CHECK(cfg.domain == SemiOpenBox({0.0, -1.0}, {2.0, 1.0}));
    CHECK(cfg.format == ReportFormat::json);
    CHECK(cfg.phi == std::vector<std::string>{"1", "x"});

    const auto ranged = parse_config("transform = squash\ndepth = 6..10\n");
    CHECK(ranged.depths == std::vector<int>{6, 7, 8, 9, 10});
    CHECK(ranged.dim == 2);
    CHECK(ranged.domain == SemiOpenBox({-1.0, 0.0}, {1.0, 1.0}));
    CHECK(parse_config("transform = fold\ndim = 1\n").domain == SemiOpenBox({-1.0}, {1.0}));
}

TEST_CASE("parse_config errors") {
    const auto unknown = error_of("transform = nosuch\n");
    CHECK(has(unknown, "nosuch"));
    CHECK(has(unknown, "polar"));
    CHECK(has(unknown, "line 1"));

    const auto eps = error_of("transform = polar\nepsilon = 1.5\n");
    CHECK(has(eps, "epsilon"));
    CHECK(has(eps, "(0,1)"));
    CHECK(has(eps, "line 2"));

    CHECK(has(error_of("transform = polar\n\ntau = abc\n"), "line 3"));
    CHECK(has(error_of("transform = polar\ncolour = red\n"), "unknown key 'colour'"));
    CHECK(has(error_of("transform = polar\nmode = plot\n"), "unknown mode"));
    CHECK(has(error_of("transform = polar\njust words\n"), "line 2"));
    CHECK(has(error_of("mode = verify\n"), "transform"));
    CHECK(has(error_of("transform = polar\ndepth = 30\n"), "cell budget"));
    CHECK(has(error_of("transform = polar\ndepth = 0\n"), "positive"));
    CHECK(has(error_of("transform = polar\ndomain = 0:1\n"), "axes"));
    CHECK(has(error_of("transform = polar\ndomain = 1:0, 0:1\n"), "line 2"));
    CHECK(has(error_of("transform = polar\nphi = sin\n"), "phi"));
    CHECK(has(error_of("transform = polar\nformat = xml\n"), "format"));
    CHECK(has(error_of("transform = polar\nthreads = 0\n"), "threads"));
    CHECK(has(error_of("transform = polar\ntau = 1e-9\n"), "tau"));
}

TEST_CASE("overrides are applied after the file") {
    const auto cfg = parse_config("transform = polar\ndepth = 9\nepsilon = 0.1\n",
                                  {{"depth", "6"}, {"mode", "zeroset"}});
    CHECK(cfg.depths == std::vector<int>{6});
    CHECK(cfg.epsilon == 0.1);
    CHECK(cfg.mode == Mode::zeroset);

    const auto flag_error = error_of("transform = polar\n", {{"epsilon", "2"}});
    CHECK(has(flag_error, "--epsilon"));
    CHECK(has(error_of("", {{"transform", "nosuch"}}), "nosuch"));
}

TEST_CASE("polar verify at depth 9") {
    auto cfg = parse_config("transform = polar\nmode = verify\ndepth = 9\n");
    const auto r = execute(cfg);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.within_tolerance);
    CHECK(std::abs(*r.rows[0].lhs - std::numbers::pi) < 0.02);
    CHECK(std::abs(*r.rows[0].rhs - std::numbers::pi) < 0.02);
    REQUIRE(r.rows[0].lhs_inner);
    CHECK(*r.rows[0].lhs_inner <= *r.rows[0].lhs_outer);

    const auto path = temp_path("polar.csv");
    cfg.output_path = path.string();
    std::ostringstream err;
    CHECK(run_experiment(cfg, err) == 0);
    CHECK(err.str().empty());
    std::ifstream in(path);
    std::stringstream file;
    file << in.rdbuf();
    CHECK(file.str() == report_of(r));
    std::filesystem::remove(path);
}

TEST_CASE("fold indicatrix at depth 8") {
    const auto cfg = parse_config("transform = fold\nmode = indicatrix\ndepth = 8\n");
    const auto r = execute(cfg);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.within_tolerance);
    CHECK(std::abs(*r.rows[0].lhs - 2.0) < 0.05);
    CHECK(*r.rows[0].rhs == doctest::Approx(2.0));
}

TEST_CASE("identity verify has a small gap") {
    const auto r = execute(parse_config("transform = identity\n"));
    CHECK(r.within_tolerance);
    CHECK(*r.rows[0].abs_gap < 0.01);
}

TEST_CASE("exit codes") {
    std::ostringstream err;
    auto coarse = parse_config("transform = polar\ndepth = 3\noutput = " + temp_path("coarse.csv").string() + "\n");
    CHECK(run_experiment(coarse, err) == 2);
    CHECK(err.str().empty());

    auto bad_path = parse_config("transform = identity\ndepth = 4\noutput = /nonexistent/dir/report.csv\n");
    CHECK(run_experiment(bad_path, err) == 1);
    CHECK(has(err.str(), "/nonexistent/dir/report.csv"));

    std::ostringstream err2;
    auto nonlinear_scale = parse_config("transform = polar\nmode = scale\n");
    CHECK(run_experiment(nonlinear_scale, err2) == 1);
    CHECK(has(err2.str(), "linear"));
    std::filesystem::remove(temp_path("coarse.csv"));
}

TEST_CASE("report formats") {
    const auto one = execute(parse_config("transform = identity\ndepth = 6\n"));
    const auto csv = lines_of(report_of(one));
    REQUIRE(csv.size() == 2);
    CHECK(csv[0] == "mode,transform,depth,epsilon,lhs,lhs_inner,lhs_outer,rhs,abs_gap,rel_gap,residual_volume,notes");
    CHECK(csv[1].rfind("verify,identity,6,,", 0) == 0);
    CHECK(report_of(one).back() == '\n');

    const auto sweep = execute(parse_config("transform = squash\nmode = zeroset\ndepth = 6..10\n"));
    const auto rows = lines_of(report_of(sweep));
    REQUIRE(rows.size() == 6);
    for (int d = 6; d <= 10; ++d) CHECK(rows[d - 5].rfind("zeroset,squash," + std::to_string(d) + ",", 0) == 0);
    CHECK(sweep.within_tolerance);

    const auto doc = nlohmann::json::parse(report_of(sweep, ReportFormat::json));
    REQUIRE(doc.is_object());
    REQUIRE(doc["rows"].size() == 5);
    const auto& first = doc["rows"][0];
    CHECK(first.size() == 12);
    CHECK(first["mode"] == "zeroset");
    CHECK(first["depth"] == 6);
    CHECK(first["rhs"].is_null());
    CHECK(first["lhs"].get<double>() == doctest::Approx(*sweep.rows[0].lhs).epsilon(1e-11));
}

TEST_CASE("numbers use 12 significant digits and notes are quoted when needed") {
    ReportRow r;
    r.mode = "verify";
    r.transform = "linear:2,1,0.5,1";
    r.depth = 3;
    r.lhs = 1.0 / 3.0;
    r.notes = "say \"hi\"";
    std::ostringstream os;
    write_report(os, {r}, ReportFormat::csv);
    CHECK(lines_of(os.str())[1] == "verify,\"linear:2,1,0.5,1\",3,,0.333333333333,,,,,,,\"say \"\"hi\"\"\"");
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
    const std::string text = "transform = sinewarp:0.3\nmode = verify\ndepth = 7\nphi = 1, x, xy\n";
    const auto a = report_of(execute(parse_config(text)));
    const auto b = report_of(execute(parse_config(text)));
    const auto c = report_of(execute(parse_config(text, {{"threads", "4"}})));
    CHECK(a == b);
    CHECK(a == c);
    const std::string dec = "transform = squash\nmode = decompose\ndepth = 6\n";
    CHECK(report_of(execute(parse_config(dec))) == report_of(execute(parse_config(dec))));
}

TEST_CASE("decompose dump round trip") {
    const auto path = temp_path("cover.txt");
    auto cfg = parse_config("transform = sinewarp:0.3\nmode = decompose\ndepth = 5\n");
    cfg.dump_path = path.string();
    const auto r = execute(cfg);
    CHECK(r.within_tolerance);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("bounds ", 0) == 0);
    std::filesystem::remove(path);
}

TEST_CASE("smoke matrix at low depth") {
    const std::vector<std::string> modes{"scale", "diff", "decompose", "sandwich", "indicatrix", "verify", "zeroset"};
    for (const std::string& spec : zoo_specs()) {
        for (const std::string& mode : modes) {
            CAPTURE(spec);
            CAPTURE(mode);
            const bool applicable = mode != "scale" || linear_matrix(spec).has_value();
            auto cfg = parse_config("transform = " + spec + "\nmode = " + mode + "\ndepth = 5\n");
            cfg.output_path = temp_path("smoke.csv").string();
            std::ostringstream err;
            const int code = run_experiment(cfg, err);
            if (applicable) {
                CHECK(code != 1);
                CHECK(err.str().empty());
            } else {
                CHECK(code == 1);
            }
        }
    }
    std::filesystem::remove(temp_path("smoke.csv"));
}

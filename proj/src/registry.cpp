#include "cov/registry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cov/errors.hpp"

namespace cov {

namespace {

struct ParsedSpec {
    std::string name;
    std::string arg;
};

ParsedSpec split_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) return {spec, ""};
    return {spec.substr(0, colon), spec.substr(colon + 1)};
}

double parse_number(const std::string& text, const std::string& spec) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw InvalidInput("transform '" + spec + "': parameter '" + text + "' is not a finite number");
    }
}

std::vector<double> parse_list(const std::string& text, const std::string& spec) {
    std::string normalized = text;
    for (char& c : normalized)
        if (c == ',') c = ' ';
    std::istringstream is(normalized);
    std::vector<double> out;
    for (std::string tok; is >> tok;) out.push_back(parse_number(tok, spec));
    return out;
}

std::string registry_listing() {
    std::string s;
    for (const auto& name : registry_names()) s += (s.empty() ? "" : ", ") + name;
    return s;
}

void require_dim(const std::string& spec, std::size_t dim, std::size_t expected) {
    if (dim != expected)
        throw InvalidInput("transform '" + spec + "' is defined in dimension " + std::to_string(expected) +
                           ", requested " + std::to_string(dim));
}

void require_no_arg(const ParsedSpec& p, const std::string& spec) {
    if (!p.arg.empty()) throw InvalidInput("transform '" + spec + "' takes no parameter");
}

}  // namespace

std::vector<std::string> registry_names() {
    return {"identity", "linear:<n*n entries>", "rotation:<angle>", "shear:<s>",
            "polar",    "fold",                 "squash",           "sinewarp:<a>"};
}

std::vector<std::string> zoo_specs() {
    return {"identity", "linear:2,1,0.5,1.5", "rotation:0.7", "shear:0.5",
            "polar",    "fold",               "squash",       "sinewarp:0.3"};
}

std::size_t transform_dim(const std::string& spec, std::size_t fallback) {
    const ParsedSpec p = split_spec(spec);
    if (p.name == "linear") {
        const auto entries = parse_list(p.arg, spec);
        const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(entries.size()))));
        if (n == 0 || n * n != entries.size())
            throw InvalidInput("transform '" + spec + "': linear needs a square number of entries");
        return n;
    }
    if (p.name == "rotation" || p.name == "shear" || p.name == "polar" || p.name == "sinewarp") return 2;
    return fallback;
}

Transform make_transform(const std::string& spec, std::size_t dim) {
    const ParsedSpec p = split_spec(spec);
    if (dim == 0) throw InvalidInput("transform '" + spec + "': dimension must be at least 1");

    if (p.name == "identity") {
        require_no_arg(p, spec);
        return Transform::linear(LinearMap::identity(dim), spec);
    }
    if (p.name == "linear") {
        const auto entries = parse_list(p.arg, spec);
        const std::size_t n = transform_dim(spec, dim);
        require_dim(spec, dim, n);
        return Transform::linear(LinearMap(n, entries), spec);
    }
    if (p.name == "rotation") {
        require_dim(spec, dim, 2);
        const double t = parse_number(p.arg, spec);
        return Transform::linear(LinearMap(2, {std::cos(t), -std::sin(t), std::sin(t), std::cos(t)}), spec);
    }
    if (p.name == "shear") {
        require_dim(spec, dim, 2);
        const double s = parse_number(p.arg, spec);
        return Transform::linear(LinearMap(2, {1.0, s, 0.0, 1.0}), spec);
    }
    if (p.name == "polar") {
        require_no_arg(p, spec);
        require_dim(spec, dim, 2);
        return Transform(
            2,
            [](std::span<const double> x) {
                return Vector{x[0] * std::cos(x[1]), x[0] * std::sin(x[1])};
            },
            spec,
            [](std::span<const double> x) {
                const double c = std::cos(x[1]), s = std::sin(x[1]);
                return LinearMap(2, {c, -x[0] * s, s, x[0] * c});
            });
    }
    if (p.name == "fold") {
        require_no_arg(p, spec);
        return Transform(
            dim,
            [](std::span<const double> x) {
                Vector y(x.begin(), x.end());
                y[0] = std::abs(y[0]);
                return y;
            },
            spec,
            [dim](std::span<const double> x) {
                std::vector<double> d(dim, 1.0);
                d[0] = x[0] < 0.0 ? -1.0 : 1.0;
                return LinearMap::diagonal(d);
            });
    }
    if (p.name == "squash") {
        require_no_arg(p, spec);
        return Transform(
            dim,
            [](std::span<const double> x) {
                Vector y(x.begin(), x.end());
                y[0] = x[0] * x[0];
                return y;
            },
            spec,
            [dim](std::span<const double> x) {
                std::vector<double> d(dim, 1.0);
                d[0] = 2.0 * x[0];
                return LinearMap::diagonal(d);
            });
    }
    if (p.name == "sinewarp") {
        require_dim(spec, dim, 2);
        const double a = parse_number(p.arg, spec);
        return Transform(
            2, [a](std::span<const double> x) { return Vector{x[0] + a * std::sin(x[1]), x[1]}; }, spec,
            [a](std::span<const double> x) { return LinearMap(2, {1.0, a * std::cos(x[1]), 0.0, 1.0}); });
    }
    throw InvalidInput("unknown transform '" + p.name + "'; registry: " + registry_listing());
}

SemiOpenBox default_domain(const std::string& spec, std::size_t dim) {
    const std::string name = split_spec(spec).name;
    const std::size_t n = transform_dim(spec, dim);
    (void)make_transform(spec, n);
    if (name == "polar") return SemiOpenBox({0.0, 0.0}, {1.0, 2.0 * std::numbers::pi});
    if (name == "fold" || name == "squash") {
        Vector lo(n, 0.0), hi(n, 1.0);
        lo[0] = -1.0;
        return SemiOpenBox(lo, hi);
    }
    return SemiOpenBox::unit(n);
}

std::optional<LinearMap> linear_matrix(const std::string& spec, std::size_t dim) {
    const std::string name = split_spec(spec).name;
    const std::size_t n = transform_dim(spec, dim);
    const Transform F = make_transform(spec, n);
    if (name != "identity" && name != "linear" && name != "rotation" && name != "shear") return std::nullopt;
    return F.analytic_jacobian(Vector(n, 0.0));
}

}  // namespace cov

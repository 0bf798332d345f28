#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cov/grid.hpp"
#include "cov/transform.hpp"

namespace cov {

/// Names accepted by make_transform, with parameter placeholders.
std::vector<std::string> registry_names();

/// Builds a zoo transform from its registry spec:
///   identity | linear:<n*n entries> | rotation:<angle> | shear:<s> | polar |
///   fold | squash | sinewarp:<a>
/// `dim` is used by the dimension-generic maps (identity, fold, squash) and
/// must match the fixed dimension of the others (linear takes it from its
/// entry count). Unknown names raise InvalidInput listing the registry.
Transform make_transform(const std::string& spec, std::size_t dim = 2);

/// Dimension a spec implies, or `fallback` for dimension-generic maps.
std::size_t transform_dim(const std::string& spec, std::size_t fallback = 2);

/// Conventional domain for a zoo transform: [0,1)^n for the linear family and
/// sinewarp, [0,1) x [0,2pi) for polar, [-1,1) x [0,1)^(n-1) for fold and squash.
SemiOpenBox default_domain(const std::string& spec, std::size_t dim = 2);

/// One representative spec per registry entry (parameters filled in).
std::vector<std::string> zoo_specs();

/// The matrix of a linear registry transform (identity, linear, rotation,
/// shear); nullopt for the nonlinear ones.
std::optional<LinearMap> linear_matrix(const std::string& spec, std::size_t dim = 2);

}  // namespace cov

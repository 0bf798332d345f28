#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cov {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: non-finite entries, out-of-range parameters.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A computation would exceed the configured cell budget.
class ResourceError : public Error {
public:
    ResourceError(const std::string& what, std::size_t requested, std::size_t budget)
        : Error(what + " (requested " + std::to_string(requested) + " cells, budget " +
                std::to_string(budget) + ")"),
          requested_(requested), budget_(budget) {}

    std::size_t requested() const noexcept { return requested_; }
    std::size_t budget() const noexcept { return budget_; }

private:
    std::size_t requested_;
    std::size_t budget_;
};

/// A transform or field produced a non-finite value, or was evaluated off its domain.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, std::vector<double> point)
        : Error(what + " at " + format_point(point)), point_(std::move(point)) {}

    const std::vector<double>& point() const noexcept { return point_; }

    static std::string format_point(const std::vector<double>& p);

private:
    std::vector<double> point_;
};

/// The derivative at the requested center is singular.
class NotInvertible : public Error {
public:
    using Error::Error;
};

/// An operation was called on an input that does not meet its precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace cov

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gapfield {

// Point or parameter outside the region where an operation is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed or inconsistent user input (config, records, arguments).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Requested discretization exceeds the configured memory bound.
class ResourceError : public std::runtime_error {
public:
    ResourceError(const std::string& what, std::size_t required)
        : std::runtime_error(what), required_(required) {}

    std::size_t required() const noexcept { return required_; }

private:
    std::size_t required_;
};

// Linear solver failed to reach its tolerance.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}

    // Relative residual after each iteration.
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

// Input that is well formed but outside what the operation supports.
class UnsupportedInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace gapfield

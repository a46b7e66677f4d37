#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace proxyhedge {

/// Raised for invalid user input: malformed configs, broken model invariants.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical stage cannot produce a trustworthy result.
/// `stage()` names the pipeline step so reports can point at it.
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Correlation structure too close to singular for the eigen-based factorization.
class StiffnessError : public NumericalError {
public:
    StiffnessError(const std::string& what, double condition)
        : NumericalError("factorize", what), condition_(condition) {}

    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

} // namespace proxyhedge

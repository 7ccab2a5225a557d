#pragma once

#include <stdexcept>
#include <string>

namespace weakflow {

/// Non-finite field value, invalid model parameters, or an evaluation outside
/// the supported range.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The amplitude vanishes (to the node guard) where a weak value is requested.
/// Weak values are ratios and diverge at interference nulls.
class NodeError : public std::runtime_error {
public:
    NodeError(const std::string& what, double x, double z)
        : std::runtime_error(what), x_(x), z_(z) {}
    double x() const noexcept { return x_; }
    double z() const noexcept { return z_; }

private:
    double x_;
    double z_;
};

/// Adaptive step size fell below the floating-point resolution of the
/// independent variable.
class StepFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Measured asymmetry lies outside the principal branch of the inversion.
class BranchError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace weakflow

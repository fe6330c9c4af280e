#pragma once

#include <stdexcept>
#include <string>

namespace riskdp {

/// Bad inputs: malformed models, out-of-range parameters, broken invariants.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failures: non-convergence, divergence, non-finite values.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace riskdp

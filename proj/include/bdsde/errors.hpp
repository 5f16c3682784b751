#pragma once

#include <stdexcept>
#include <string>

namespace bdsde {

/// An integral or iteration failed to reach its tolerance. Usually signals a
/// divergent improper integral (an integrability assumption is violated) or a
/// pathological integrand.
struct NonConvergent : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Regression design matrix is rank-deficient beyond what ridge
/// regularization can rescue (non-finite coefficients).
struct SingularRegression : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonPositiveEpsilon : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Syntax error in a coefficient expression or a config document.
struct ParseError : std::runtime_error {
    int line;
    int column;
    ParseError(const std::string& what, int line_, int column_)
        : std::runtime_error(what + " (line " + std::to_string(line_) + ", column " +
                             std::to_string(column_) + ")"),
          line(line_),
          column(column_) {}
};

/// A variable that is not admissible in the slot it was used in, e.g. a z
/// variable inside a g coefficient.
struct IllegalVariable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A structurally valid config whose values violate a constraint.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bdsde

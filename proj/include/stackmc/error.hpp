#pragma once

#include <stdexcept>
#include <string>

namespace stackmc {

// Invalid construction/config arguments: bad distribution parameters,
// k out of range, infeasible sweep settings.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Vector/matrix dimension mismatch between caller and callee.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Fewer data points than the operation needs (N < 2, fewer points than
// model parameters, fold training set too small).
struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// (marginal, basis) pair with no closed-form expectation; callers may
// fall back to Monte Carlo integration of the surrogate.
struct UnsupportedIntegralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Importance weight whose sampling density vanishes at a sample point.
struct DegenerateWeightError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value produced by a numeric stage; message names the stage.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Text input (CSV, distribution/fitter grammar) that does not parse;
// message carries the offending line or token.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem failure, message carries the path.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No registered reference expectation for a (function, distribution) pair.
struct NotAvailableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace stackmc

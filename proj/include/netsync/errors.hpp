#pragma once

#include <stdexcept>
#include <string>

namespace netsync {

/// Inconsistent matrix/vector shapes.
struct dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure (solver non-convergence, residual too large, ...).
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// (I - lambda*D) singular: the output feedback loop is ill-posed.
struct algebraic_loop_error : numeric_error {
    using numeric_error::numeric_error;
};

/// Grid too coarse, delays not commensurate with the step, etc.
struct grid_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Coefficient function violates its admissibility bounds.
struct coefficient_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// No invertible shift found for the stationary boundary solve.
struct shift_error : numeric_error {
    using numeric_error::numeric_error;
};

/// A stated precondition failed (e.g. 1_n is not an eigenvector of L).
struct precondition_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// History buffer does not cover the required delay window.
struct coverage_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Malformed configuration input.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// File I/O failure.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace netsync

#pragma once

#include <stdexcept>
#include <string>

namespace fcpd {

// Numeric and degenerate-input failures. The CLI maps these to exit code 3,
// std::invalid_argument (precondition violations) to 2 and io_error to 4.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A factor column, component or input tensor collapsed to zero.
struct degenerate_component_error : numeric_error {
    using numeric_error::numeric_error;
};

// A CRIB formula was evaluated at a configuration where it is undefined.
struct singular_configuration_error : numeric_error {
    using numeric_error::numeric_error;
};

// An operation was called before the artifacts it consumes were produced.
struct invalid_state_error : numeric_error {
    using numeric_error::numeric_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fcpd

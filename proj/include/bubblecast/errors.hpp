#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bubblecast {

/// Invalid experiment/CLI configuration (exit code 2).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Missing, malformed, or inconsistent data files (exit code 3).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure: non-convergence, divergent training, broken density
/// contract (exit code 4).
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite log-density encountered in a loss evaluation; carries the
/// index of the offending batch element.
struct loss_diagnostic_error : numeric_error {
    loss_diagnostic_error(const std::string& what, std::size_t index)
        : numeric_error(what), batch_index(index) {}
    std::size_t batch_index;
};

}  // namespace bubblecast

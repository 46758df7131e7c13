#pragma once

#include <stdexcept>
#include <string>

namespace kpo {

// Each failure family maps onto one CLI exit code (2, 3, 4).
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResourceLimit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace kpo

#pragma once

#include <stdexcept>
#include <string>

namespace polyext {

// Bad input: rejected parameters, malformed configs, out-of-range arguments.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Request exceeds a memory/time/window budget. Messages say what would fit.
struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A sweep window cannot hold the diffusive range the truncation policy asks for.
struct WindowError : BudgetError {
    using BudgetError::BudgetError;
};

}  // namespace polyext

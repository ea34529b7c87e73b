#pragma once

#include <stdexcept>
#include <string>

namespace hardiag {

// Raised when caller-supplied data violates a documented precondition.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when an algorithm fails to reach its tolerance.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Quadratic form vanishes on the support of the Gaussian law.
class DegenerateForm : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hardiag

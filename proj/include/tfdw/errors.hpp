#pragma once

#include <stdexcept>
#include <string>

namespace tfdw {

// Base of every exception thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A state carries NaN/Inf samples or is otherwise unusable.
class invalid_state_error : public error {
public:
    using error::error;
};

// Inconsistent or malformed configuration (grid, potential/representation mismatch, ...).
class configuration_error : public error {
public:
    using error::error;
};

// An argument lies outside the mathematical domain of the operation.
class domain_error : public error {
public:
    using error::error;
};

// The descent diverged (energy fell below the a-priori floor).
class solver_failure : public error {
public:
    using error::error;
};

// A requested curve sample is not present.
class lookup_error : public error {
public:
    using error::error;
};

class io_error : public error {
public:
    using error::error;
};

class unsupported_error : public error {
public:
    using error::error;
};

class degenerate_input_error : public error {
public:
    using error::error;
};

} // namespace tfdw

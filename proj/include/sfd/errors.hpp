// errors.hpp: Exception types shared by every sfd module

#pragma once

#include <stdexcept>
#include <string>

namespace sfd {

// Base for all library errors. The CLI maps the concrete subclasses onto
// process exit codes (config = 2, numeric = 3, model = 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
public:
    using Error::Error;
};

// Bad user input: malformed config, out-of-range parameter, wrong kernel, ...
class ConfigError : public Error {
public:
    using Error::Error;
};

// Positivity loss, fit non-convergence, truncation overflow.
class NumericFailure : public Error {
public:
    using Error::Error;
};

// Input data incompatible with the decoherence model (e.g. 2/T2 < 1/T1).
class ModelInconsistency : public Error {
public:
    using Error::Error;
};

// Matrix element outside the closed-form table.
class UnsupportedElement : public Error {
public:
    using Error::Error;
};

} // namespace sfd

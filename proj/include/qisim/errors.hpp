#pragma once

#include <stdexcept>
#include <string>

namespace qisim {

// Root of every error the library throws. The CLI maps the two families
// below onto exit codes: ConfigError -> 2, everything else -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed argument (non-finite value, out-of-range parameter).
class InputError : public Error {
public:
    using Error::Error;
};

// Grid or sampling too coarse/narrow for the requested quantity.
class ResolutionError : public Error {
public:
    using Error::Error;
};

// Caller broke a documented precondition on an otherwise valid object.
class ContractError : public Error {
public:
    using Error::Error;
};

class UnsupportedKindError : public Error {
public:
    using Error::Error;
};

// Physics-level failures: nothing retrieved, quantity undefined, fit failed.
class ModelError : public Error {
public:
    using Error::Error;
};

class NoRetrievalError : public ModelError {
public:
    using ModelError::ModelError;
};

class UndefinedError : public ModelError {
public:
    using ModelError::ModelError;
};

class ClassicalRegimeError : public ModelError {
public:
    using ModelError::ModelError;
};

class FitError : public ModelError {
public:
    using ModelError::ModelError;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace qisim

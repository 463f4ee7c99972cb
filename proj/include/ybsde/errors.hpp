#pragma once

#include <stdexcept>
#include <string>

namespace ybsde {

/// Violated precondition of an operation (bad argument, bad grid, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A coefficient broke its declared bound at run time (e.g. |sigma| > L).
class ContractError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Floating-point breakdown: overflow guard, failed factorization, ...
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested problem exceeds a configured size limit.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration (unknown key, unparsable value).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw DomainError(msg);
}

} // namespace ybsde

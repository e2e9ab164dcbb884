#pragma once

#include <stdexcept>
#include <string>

namespace rstop {

// Caller broke a documented precondition (bad index, missing threshold, ...).
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// A computation was asked for but is outside what we agree to do exactly
// (enumeration cap exceeded, unsupported order model). Callers may fall back.
class Refusal : public std::runtime_error {
public:
    explicit Refusal(const std::string& what) : std::runtime_error(what) {}
};

// Malformed instance / experiment description coming from a file or the CLI.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline void expects(bool cond, const char* msg) {
    if (!cond) throw ContractViolation(msg);
}

}  // namespace rstop

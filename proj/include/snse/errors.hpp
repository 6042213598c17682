#pragma once

#include <stdexcept>
#include <string>

namespace snse {

/// Invalid user-supplied parameters or configuration files.  CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// API misuse: dimension mismatches, out-of-range indices, calls that violate
/// a documented precondition.  CLI exit code 1.
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

/// Numerical breakdown: eigensolver failure, overflow, non-finite data where
/// finite data is required.  CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

inline void require_contract(bool ok, const std::string& msg) {
    if (!ok) throw ContractError(msg);
}

inline void require_config(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

inline void require_numeric(bool ok, const std::string& msg) {
    if (!ok) throw NumericError(msg);
}

} // namespace snse

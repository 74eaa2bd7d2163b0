#ifndef HOLOFIN_ERRORS_HPP
#define HOLOFIN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace holofin {

// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid arguments, configuration values, or shape mismatches. CLI exit code 2.
class config_error : public error {
public:
    explicit config_error(const std::string& msg) : error(msg) {}
};

// Malformed or unreadable input files. CLI exit code 3.
class format_error : public error {
public:
    explicit format_error(const std::string& msg) : error(msg) {}
};

// Numerical failure (NaN/Inf encountered where finite values are required).
// CLI exit code 4.
class numeric_error : public error {
public:
    explicit numeric_error(const std::string& msg) : error(msg) {}
};

} // namespace holofin

#endif

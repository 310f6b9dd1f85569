#pragma once

#include <stdexcept>
#include <string>

namespace fedara {

// A violated precondition or broken internal invariant.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Malformed input file; message carries the offending line where known.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Wire bytes that cannot be decoded back into model parameters.
class PayloadError : public std::runtime_error {
public:
    explicit PayloadError(const std::string& msg) : std::runtime_error(msg) {}
};

// Metric mathematically undefined for the operands (e.g. zero-norm cosine).
class UndefinedMetric : public std::runtime_error {
public:
    explicit UndefinedMetric(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fedara

#define FED_CHECK(cond, msg)                                                 \
    do {                                                                     \
        if (!(cond)) {                                                       \
            throw ::fedara::ContractViolation(std::string(msg) +            \
                                              " [failed: " #cond "]");      \
        }                                                                    \
    } while (0)

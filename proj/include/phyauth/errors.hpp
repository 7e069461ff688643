#pragma once

#include <stdexcept>
#include <string>

namespace phyauth {

// Error taxonomy used across the library. All of these derive from
// std::runtime_error so callers that do not care about the distinction can
// catch one type.

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Two-phase protocol misuse (e.g. differencing two estimates from the same phase).
struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParameterError : std::runtime_error {
    explicit ParameterError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite or otherwise unusable input data.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Learning rate outside the stability bound while safety mode is on.
struct StepSizeError : std::runtime_error {
    explicit StepSizeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InsufficientDataError : std::runtime_error {
    explicit InsufficientDataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed configuration file; message carries the offending field path.
struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace phyauth

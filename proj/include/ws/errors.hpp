#pragma once

#include <stdexcept>
#include <string>

namespace ws {

// Configuration problems: bad JSON, unknown keys, invalid values, missing files.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Data problems: corrupt corpus lines, schema violations in input files.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Model compatibility problems: digest mismatches, shape mismatches between
// a model file and the data or model it is used with.
class CompatError : public std::runtime_error {
public:
    explicit CompatError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ws

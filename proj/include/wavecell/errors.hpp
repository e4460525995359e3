#pragma once

#include <stdexcept>
#include <string>

namespace wavecell {

// Error taxonomy mirrors the CLI exit-code contract:
//   IoError -> 1, ConfigError -> 2, NoCandidateError -> 3.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data (bad CSV row, schema violation). Reported with the
// offending line where available.
class ParseError : public IoError {
public:
    explicit ParseError(const std::string& msg) : IoError(msg) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested (road, lane) has no vehicle anywhere in the dataset.
class NoCandidateError : public std::runtime_error {
public:
    explicit NoCandidateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Two vehicle bodies overlap; signals a bug upstream of the car-following model.
class OverlapError : public std::runtime_error {
public:
    explicit OverlapError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace wavecell

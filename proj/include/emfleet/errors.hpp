#ifndef EMFLEET_ERRORS_HPP
#define EMFLEET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace emfleet {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (bad JSON/CSV syntax, bad config field types).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// An invariant violation in otherwise well-formed data
// (negative counts, empty sample_id, bad config values, ...).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Shape mismatch between datasets/models (step-vector length disagreement).
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// A referenced entity (sample_id, file section) does not exist.
class LookupError : public Error {
public:
    explicit LookupError(const std::string& msg) : Error(msg) {}
};

// A structural constraint was not met (group too small, k too large, ...).
class ConstraintError : public Error {
public:
    explicit ConstraintError(const std::string& msg) : Error(msg) {}
};

// Filesystem-level failure.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace emfleet

#endif  // EMFLEET_ERRORS_HPP

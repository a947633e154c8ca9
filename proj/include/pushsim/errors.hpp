#pragma once

#include <stdexcept>
#include <string>

namespace pushsim {

// Base class for everything this library throws on purpose.
// Catching pushsim::Error at the CLI boundary maps to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input bytes: bad JSON, bad HAR, bad CSV, bad digest blob.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Structurally well-formed input that breaks a model invariant
// (cycles, offsets past the parent, unknown ids in a manifest, ...).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Simulation preconditions violated (non-positive link rates and the like).
class SimError : public Error {
public:
    explicit SimError(const std::string& msg) : Error(msg) {}
};

// Statistical routines asked for something undefined (empty sample,
// degenerate regression, out-of-range probability).
class StatsError : public Error {
public:
    explicit StatsError(const std::string& msg) : Error(msg) {}
};

} // namespace pushsim

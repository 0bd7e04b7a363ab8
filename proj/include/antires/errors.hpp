#pragma once

#include <stdexcept>
#include <string>

namespace antires {

// Invalid physical or geometric input (bad geometry, unsupported mode order, ...).
class ConstructionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A solver, fit or root search failed to produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Problems with a run configuration (schema violations, missing fields).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace antires

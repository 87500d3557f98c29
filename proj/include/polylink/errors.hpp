#pragma once

#include <stdexcept>
#include <string>

namespace polylink {

// Error families surfaced to the CLI as machine-parseable codes. Argument and
// contract violations use std::invalid_argument directly.

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SplitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LookupError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UndefinedMetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace polylink

#pragma once

#include <stdexcept>
#include <string>

namespace ladder {

// Dimension disagreement between tensors, or a malformed shape request.
class shape_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Out-of-domain argument (negative sigma, bad epoch, label out of range, ...).
class value_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf surfaced by a validity check.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File parsing and I/O failures.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ladder

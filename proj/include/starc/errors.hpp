#pragma once

#include <stdexcept>
#include <string>

namespace starc {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Vector lengths or matrix shapes do not match.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A vector with zero norm was passed where a direction is required.
class DegenerateVectorError : public Error {
public:
    using Error::Error;
};

// A parameter is out of its valid range (infeasible k, bad budget, empty input, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// An operation was called in the wrong state (store not initialized / already initialized).
class StateError : public Error {
public:
    using Error::Error;
};

// A trace or config file is malformed; the message carries a byte offset where possible.
class FormatError : public Error {
public:
    using Error::Error;
};

// A selection mask refers to tokens absent from a layout.
class LayoutError : public Error {
public:
    using Error::Error;
};

} // namespace starc

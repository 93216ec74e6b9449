#pragma once

#include <stdexcept>
#include <string>

namespace entropystop {

// Base class for every failure raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

// Non-finite loss, gradient or entropy. Training aborts when this is thrown.
struct NumericalError : Error {
    using Error::Error;
};

// API misuse, e.g. backward() on activations from a stale forward pass.
struct ContractViolation : Error {
    using Error::Error;
};

struct DegenerateFit : Error {
    using Error::Error;
};

struct DegenerateInjection : Error {
    using Error::Error;
};

// CSV / JSON input problems. `line` is 1-based, 0 when unknown.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line_no)
        : Error(line_no ? what + " (line " + std::to_string(line_no) + ")" : what),
          line(line_no) {}
    std::size_t line;
};

}  // namespace entropystop

#pragma once

#include <stdexcept>
#include <string>

namespace duel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed construction arguments (empty layer lists, zero widths, bad action counts).
class InvalidSpec : public Error {
public:
    using Error::Error;
};

/// Vector or matrix dimensions that do not chain, or a trace that does not belong to the net.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Operation called outside its precondition (stepping from a terminal, index out of range).
class ContractError : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity reached the parameters or gradients.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Operation needs a dueling network but got a single-stream one (or vice versa).
class UnsupportedTopology : public Error {
public:
    using Error::Error;
};

/// Input outside the mathematical domain of the function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
public:
    using Error::Error;
};

[[noreturn]] void throw_shape(const std::string& where, std::size_t expected, std::size_t got);

}  // namespace duel

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ptree {

/// An expression refers to a variable the input does not provide.
class InputMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// A node has no admissible symbol, or a forced choice is not admissible.
class StructuralError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The tree has not evaluated any instance yet.
class NoSolution : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class LookupError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

}  // namespace ptree

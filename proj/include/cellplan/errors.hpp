#pragma once

#include <stdexcept>
#include <string>

namespace cellplan {

/// Malformed input file (scene or config): the input could not be parsed at all.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Structurally valid input that violates a documented invariant or precondition.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Two grid-indexed objects with different discretizations were combined.
class GridMismatchError : public std::runtime_error {
 public:
  explicit GridMismatchError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cellplan

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace opshape {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A node whose outgoing weights sum to zero, so no poll distribution exists.
class DanglingNode : public Error {
 public:
  DanglingNode(const std::string& what, std::size_t node)
      : Error(what), node_(node) {}
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

/// (Id - A) is singular: some agent never leaks to a stubborn or controlled agent.
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// A random walk or token relay exceeded its hop cap.
class NonAbsorbing : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace opshape

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctxguard {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed document. `position()` is the byte offset (or line, for
/// line-oriented formats) where parsing stopped.
class SyntaxError : public Error {
public:
  SyntaxError(const std::string &what, std::size_t position)
      : Error(what + " (at " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

/// A cross-reference names an id that is not declared.
class ReferenceError : public Error {
public:
  ReferenceError(const std::string &what, std::string id)
      : Error(what + ": '" + id + "'"), id_(std::move(id)) {}
  const std::string &id() const noexcept { return id_; }

private:
  std::string id_;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class AmbiguityError : public Error {
public:
  using Error::Error;
};

/// Operation on an object whose state no longer allows it (e.g. a prompt
/// that was already resolved).
class ConflictError : public Error {
public:
  using Error::Error;
};

/// Failure while replaying a trace; `index()` is the 0-based event index.
class TraceError : public Error {
public:
  TraceError(std::size_t index, const std::string &what)
      : Error("event " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

} // namespace ctxguard

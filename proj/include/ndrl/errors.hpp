#pragma once

#include <stdexcept>
#include <string>

namespace ndrl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (triple files, vector files, checkpoints).
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// A file could not be opened.
class IoError : public Error {
public:
  using Error::Error;
};

/// Invalid parameter or configuration value.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Vector or matrix dimensions do not compose.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Entity or relation handle out of range.
class LookupError : public Error {
public:
  using Error::Error;
};

/// Graph has no triples.
class EmptyGraphError : public Error {
public:
  using Error::Error;
};

/// Negative sampling impossible (fewer than two entities).
class SamplingError : public Error {
public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

private:
  int epoch_;
};

}  // namespace ndrl

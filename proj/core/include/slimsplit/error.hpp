// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slimsplit {

// Base for every error raised by the library. Subclasses carry the fields a
// caller needs to react without parsing the message.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A tensor dimension disagreed with what an operation requires.
class ShapeError : public Error {
 public:
  ShapeError(std::string where, std::string dimension, std::size_t expected,
             std::size_t actual)
      : Error(where + ": " + dimension + " mismatch (expected " +
              std::to_string(expected) + ", got " + std::to_string(actual) +
              ")"),
        where_(std::move(where)),
        dimension_(std::move(dimension)),
        expected_(expected),
        actual_(actual) {}

  const std::string& where() const { return where_; }
  const std::string& dimension() const { return dimension_; }
  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::string where_;
  std::string dimension_;
  std::size_t expected_;
  std::size_t actual_;
};

// NaN or Inf surfaced in a checked computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A precondition on arguments (ranges, counts, flags) was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// The autodiff tape was used out of order (e.g. backward twice).
class GraphStateError : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace slimsplit

#pragma once

#include <stdexcept>
#include <string>

namespace duquant {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An argument is outside its documented domain (non-finite data, bad bit
// width, unsorted profile, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

// A file exists but its contents are not what we accept. `field()` names the
// offending header entry when there is one.
class FormatError : public Error {
 public:
  FormatError(const std::string& field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Could not open, read, or write a path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace duquant

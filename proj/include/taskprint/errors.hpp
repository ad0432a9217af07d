#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace taskprint {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented invariant. `field()` is a dotted path to the
/// offending value (e.g. "binning.n_bins" or "values[12]").
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Two representations cannot be compared (different bins, range, extractor or width).
class IncompatibleError : public Error {
 public:
  IncompatibleError(std::string field, const std::string& message)
      : Error(message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Malformed file or payload (bad magic, truncated data, bad CSV row).
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// No candidates remain after exclusions and compatibility filtering.
class EmptyPoolError : public Error {
 public:
  using Error::Error;
};

}  // namespace taskprint

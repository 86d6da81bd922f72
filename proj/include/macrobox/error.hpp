#pragma once

#include <stdexcept>
#include <string>

namespace macrobox {

/// Base of every error raised by the library. `check()` names the
/// property that failed so front ends can report it without parsing text.
class Error : public std::runtime_error {
 public:
  Error(std::string check, const std::string& what)
      : std::runtime_error(what), check_(std::move(check)) {}

  const std::string& check() const noexcept { return check_; }

 private:
  std::string check_;
};

/// Precondition on sizes, settings or parameter ranges not met.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

/// An explicit joint table failed normalization or nonnegativity.
class ConstructionError : public Error {
 public:
  explicit ConstructionError(const std::string& what) : Error("normalization", what) {}
};

/// Two completions of the same marginal disagreed.
class SignallingError : public Error {
 public:
  SignallingError(const std::string& what, std::string first, std::string second)
      : Error("no-signalling", what), first_(std::move(first)), second_(std::move(second)) {}

  const std::string& first_value() const noexcept { return first_; }
  const std::string& second_value() const noexcept { return second_; }

 private:
  std::string first_;
  std::string second_;
};

/// Two independent computation paths produced different values. Always a bug.
class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what) : Error("path agreement", what) {}
};

/// The requested operation is not defined for this model.
class UnsupportedError : public Error {
 public:
  UnsupportedError(std::string check, const std::string& what) : Error(std::move(check), what) {}
};

/// An exhaustive enumeration was refused because N exceeds the desk bound.
class DeskBoundError : public Error {
 public:
  explicit DeskBoundError(const std::string& what) : Error("desk bound", what) {}
};

}  // namespace macrobox

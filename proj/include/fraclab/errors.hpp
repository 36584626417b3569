#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

/// Base of every error raised by the library. The CLI maps each subclass to
/// a distinct exit code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Arguments outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

/// Mismatched dimensions or lengths.
class ShapeError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
};

/// Factorization failures, singular systems and similar.
class NumericError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric"; }
};

/// Request exceeds a configured size cap.
class ResourceError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "resource"; }
};

namespace detail {
[[noreturn]] inline void domain_fail(const std::string& msg) { throw DomainError(msg); }
}  // namespace detail

#define FRACLAB_REQUIRE(cond, msg)                     \
  do {                                                 \
    if (!(cond)) ::fraclab::detail::domain_fail(msg);  \
  } while (0)

}  // namespace fraclab

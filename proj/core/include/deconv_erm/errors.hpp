#ifndef DECONV_ERM_ERRORS_HPP_
#define DECONV_ERM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace deconv_erm {

enum class ErrorKind {
  input,
  state,
  configuration,
  numeric,
  model,
  resolution,
  unsupported_regime,
};

const char* to_string(ErrorKind kind);

// Base of every exception thrown by the library. The kind drives the CLI
// exit code (configuration/input -> 2, everything numeric -> 3).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error(ErrorKind::state, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::configuration, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::numeric, what) {}
};

class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(ErrorKind::model, what) {}
};

class ResolutionError : public Error {
 public:
  explicit ResolutionError(const std::string& what)
      : Error(ErrorKind::resolution, what) {}
};

class UnsupportedRegimeError : public Error {
 public:
  explicit UnsupportedRegimeError(const std::string& what)
      : Error(ErrorKind::unsupported_regime, what) {}
};

}  // namespace deconv_erm

#endif  // DECONV_ERM_ERRORS_HPP_

#pragma once

#include <stdexcept>
#include <string>

namespace bandprufer {

// Numerical failure with a stable machine-readable code. Codes in use:
//   outside-band          requested E has |discriminant| >= 2
//   edge-degeneracy       E too close to a band edge (sin k or omega under guard)
//   not-an-edge           classify_edge called away from |D| = 2
//   degenerate-edge       band scan hit a tangency it could not resolve
//   empty-spectrum-window no band intersects the requested energy window
//   stiff-integration     integrator produced non-finite values
class NumericError : public std::runtime_error {
public:
  NumericError(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

// Config-file rejection. line == 0 when no specific line applies.
class ConfigError : public std::runtime_error {
public:
  ConfigError(int line, std::string key, const std::string& what)
      : std::runtime_error(what), line_(line), key_(std::move(key)) {}
  int line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

private:
  int line_;
  std::string key_;
};

}  // namespace bandprufer

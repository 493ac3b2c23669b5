#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trapnoise {

enum class ErrorKind {
  InvalidInput,
  Domain,
  InvalidGeometry,
  InsufficientData,
  UnknownElectrode,
  Infeasible,
  NonConvergence,
  Parse,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::InvalidGeometry: return "invalid_geometry";
    case ErrorKind::InsufficientData: return "insufficient_data";
    case ErrorKind::UnknownElectrode: return "unknown_electrode";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::NonConvergence: return "non_convergence";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

// Every module reports failures through this one exception type; the CLI maps
// `kind()` onto its machine-readable error document.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace trapnoise

#pragma once

#include <stdexcept>
#include <string>

namespace sdpsim {

enum class Errc {
  OutOfRange,
  NonDivisible,
  Infeasible,
  SizeMismatch,
  TypeMismatch,
  ShapeError,
  BoundaryViolation,
  EmptyProfile,
  ConfigError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
  throw Error(code, std::string(errc_name(code)) + ": " + what);
}

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NonDivisible: return "NonDivisible";
    case Errc::Infeasible: return "Infeasible";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::ShapeError: return "ShapeError";
    case Errc::BoundaryViolation: return "BoundaryViolation";
    case Errc::EmptyProfile: return "EmptyProfile";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace sdpsim

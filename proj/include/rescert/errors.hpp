#pragma once

#include <stdexcept>
#include <string>

namespace rescert {

enum class ErrorCode {
  InvalidInput,
  InvalidWeighting,
  DepthExceeded,
  Unsupported,
  UnboundedDomain,
  NotASolution,
  CertificateRequired,
  NoConvergence,
  StaleState,
  NotNilpotent,
  InvalidBasePoint,
  OutsideDomain,
  ParseError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidWeighting: return "InvalidWeighting";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::UnboundedDomain: return "UnboundedDomain";
    case ErrorCode::NotASolution: return "NotASolution";
    case ErrorCode::CertificateRequired: return "CertificateRequired";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::StaleState: return "StaleState";
    case ErrorCode::NotNilpotent: return "NotNilpotent";
    case ErrorCode::InvalidBasePoint: return "InvalidBasePoint";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Thrown by Picard evaluation; carries the last sweep difference.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double last_residual)
      : Error(ErrorCode::NoConvergence, what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace rescert

#pragma once

#include <stdexcept>
#include <string>

namespace qbertrand {

enum class ErrorKind {
  InvalidInput,
  DomainBoundary,
  NonFinite,
  IrregularCurve,
  NotUnitSpeed,
  ZeroCurvature,
  ZeroTorsion,
  Orientation,
  NotAssociatedPair,
  Degenerate,
  FitFailure,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::DomainBoundary: return "domain boundary";
    case ErrorKind::NonFinite: return "non-finite value";
    case ErrorKind::IrregularCurve: return "irregular curve";
    case ErrorKind::NotUnitSpeed: return "not unit speed";
    case ErrorKind::ZeroCurvature: return "zero curvature";
    case ErrorKind::ZeroTorsion: return "zero torsion";
    case ErrorKind::Orientation: return "orientation failure";
    case ErrorKind::NotAssociatedPair: return "not an associated pair";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::FitFailure: return "fit failure";
  }
  return "unknown";
}

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it to a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // True for failures caused by the geometry of the input rather than its
  // syntax or a failed fit.
  bool is_geometric() const noexcept {
    return kind_ != ErrorKind::InvalidInput && kind_ != ErrorKind::FitFailure;
  }

 private:
  ErrorKind kind_;
};

}  // namespace qbertrand

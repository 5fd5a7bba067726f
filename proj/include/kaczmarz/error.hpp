#pragma once

#include <stdexcept>
#include <string>

namespace kaczmarz {

enum class ErrorKind {
  ZeroRow,
  DimensionMismatch,
  TooFewRows,
  RankDeficient,
  IndexOutOfRange,
  DegeneratePair,
  InvalidArgument,
  InvalidR,
  InvalidCoherence,
  DegenerateMu,
  DegenerateDelta,
  InvalidEta,
  TooLarge,
  ParseError,
  IoError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroRow: return "ZeroRow";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::DegeneratePair: return "DegeneratePair";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidR: return "InvalidR";
    case ErrorKind::InvalidCoherence: return "InvalidCoherence";
    case ErrorKind::DegenerateMu: return "DegenerateMu";
    case ErrorKind::DegenerateDelta: return "DegenerateDelta";
    case ErrorKind::InvalidEta: return "InvalidEta";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace kaczmarz

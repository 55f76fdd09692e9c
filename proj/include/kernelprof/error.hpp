#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kprof {

enum class ErrorCode {
  InvalidArgument,
  SizeMismatch,
  VariantUnavailable,
  AlignmentMismatch,
  AllocationFailure,
  LibraryLoad,
  MissingSymbol,
  PathUnavailable,
  DoublePin,
  UnknownDescriptor,
  ScratchExhausted,
  TimerResolution,
  MeasurementBusy,
  InsufficientPoints,
  DegenerateFit,
  NoOverlap,
  UncoveredRange,
  Schema,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the native library loader; carries every unresolved symbol.
class MissingSymbolError : public Error {
 public:
  MissingSymbolError(const std::string& message, std::vector<std::string> missing)
      : Error(ErrorCode::MissingSymbol, message), missing_(std::move(missing)) {}

  const std::vector<std::string>& missing_symbols() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

}  // namespace kprof

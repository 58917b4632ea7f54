#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tesl {

enum class Errc {
  InvalidParams,
  NoEquilibriumInTransition,
  StepTooCoarse,
  NonFinite,
  DegenerateStack,
  IndexOutOfRange,
  DispersionOutOfRange,
  InvalidRate,
  UncalibratedSetpoint,
  WindowTooShort,
  IoError,
  BadMagic,
  UnsupportedVersion,
  SampleRateTooLow,
  NonMonotonePeaks,
  EmptyRange,
  FitDiverged,
  InsufficientCounts,
  OverlappingWindows,
  OutOfLinearRange,
  NonPositivePower,
  DegenerateAbscissa,
  ConfigError,
  HashMismatch,
};

std::string_view errc_name(Errc code) noexcept;

// All library failures are reported through this one type; `code()` is the
// machine-readable part, `what()` carries the human detail.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void raise(Errc code, const std::string& detail);

}  // namespace tesl

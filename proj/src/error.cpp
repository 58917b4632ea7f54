#include "tesl/error.hpp"

namespace tesl {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::NoEquilibriumInTransition: return "NoEquilibriumInTransition";
    case Errc::StepTooCoarse: return "StepTooCoarse";
    case Errc::NonFinite: return "NonFinite";
    case Errc::DegenerateStack: return "DegenerateStack";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::DispersionOutOfRange: return "DispersionOutOfRange";
    case Errc::InvalidRate: return "InvalidRate";
    case Errc::UncalibratedSetpoint: return "UncalibratedSetpoint";
    case Errc::WindowTooShort: return "WindowTooShort";
    case Errc::IoError: return "IoError";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::SampleRateTooLow: return "SampleRateTooLow";
    case Errc::NonMonotonePeaks: return "NonMonotonePeaks";
    case Errc::EmptyRange: return "EmptyRange";
    case Errc::FitDiverged: return "FitDiverged";
    case Errc::InsufficientCounts: return "InsufficientCounts";
    case Errc::OverlappingWindows: return "OverlappingWindows";
    case Errc::OutOfLinearRange: return "OutOfLinearRange";
    case Errc::NonPositivePower: return "NonPositivePower";
    case Errc::DegenerateAbscissa: return "DegenerateAbscissa";
    case Errc::ConfigError: return "ConfigError";
    case Errc::HashMismatch: return "HashMismatch";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

void raise(Errc code, const std::string& detail) { throw Error(code, detail); }

}  // namespace tesl

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tesl/event.hpp"
#include "tesl/tes.hpp"

namespace tesl::daq {

using ConfigHash = std::array<std::uint8_t, 32>;

// Baseline-subtracted, sign-flipped sensor current (photon pulses are
// positive), sampled uniformly. The SQUID chain is unit gain; its noise is
// folded into the additive white noise.
struct Trace {
  double sample_rate = 0.0;  // Hz
  double t0 = 0.0;           // s
  std::vector<float> samples;  // A
  std::uint64_t seed = 0;
  ConfigHash config_hash{};

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

  friend bool operator==(const Trace&, const Trace&) = default;
};

struct SynthesisOptions {
  double max_step = 20e-9;  // RK4 step upper bound; the sample period is an integer multiple
};

// Runs the TES integration, converts to current, subtracts the bias-point
// current, negates, and adds N(0, noise_sigma^2) per sample drawn from
// stream `seed`. Throws SampleRateTooLow when sample_rate < 10 / tau_eff.
Trace synthesize_trace(const tes::TesParams& params, std::span<const PhotonEvent> events,
                       double duration, double sample_rate, double noise_sigma, std::uint64_t seed,
                       const SynthesisOptions& options = {});

// A slice of a (usually shaped) sample buffer plus its timing reference.
struct Window {
  std::span<const double> samples;
  std::size_t first_index = 0;  // position of samples[0] in the parent buffer
  double sample_rate = 0.0;
  double start_time = 0.0;        // s, time of samples[0]
  double expected_arrival = 0.0;  // s; trigger time for CW windows

  double time_at(std::size_t i) const { return start_time + static_cast<double>(i) / sample_rate; }
};

// One window per laser period, window k starting at phase + k / rep_rate and
// ending where window k+1 starts; expected arrival is the window start.
// Throws WindowTooShort when a period is shorter than 5 peaking times.
std::vector<Window> segment_pulsed(std::span<const double> samples, double sample_rate,
                                   double rep_rate, double phase, double peaking_time);

struct TriggerConfig {
  double threshold = 0.0;  // same units as the samples
  double dead_time = 8e-6;
  double pre = 2e-6;   // window extent before the trigger
  double post = 8e-6;  // window extent after the trigger
};

// A window opens at each upward threshold crossing; crossings within
// dead_time of an accepted trigger are ignored. Windows not fully inside the
// buffer are dropped.
std::vector<Window> trigger_cw(std::span<const double> filtered, double sample_rate,
                               const TriggerConfig& config);

// Binary trace file, little-endian:
//   "TESL" | u16 version=1 | f64 sample_rate | f64 t0 | u64 n_samples |
//   u64 seed | 32-byte config hash | n_samples x f32
// Throws IoError, BadMagic, UnsupportedVersion.
void trace_write(const Trace& trace, const std::filesystem::path& path);
Trace trace_read(const std::filesystem::path& path);

inline constexpr std::size_t kTraceHeaderBytes = 4 + 2 + 8 + 8 + 8 + 8 + 32;

}  // namespace tesl::daq

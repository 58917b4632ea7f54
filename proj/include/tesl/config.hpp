#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tesl/daq.hpp"
#include "tesl/dsp.hpp"
#include "tesl/source.hpp"
#include "tesl/tes.hpp"

namespace tesl::config {

enum class Mode { Pulsed, CW, Dark };

struct OpticsConfig {
  std::filesystem::path stack;  // stack description file
  double wavelength_nm = 1550.0;
  std::size_t absorber_layer = 1;  // finite-layer index of the sensor film
};

struct DaqConfig {
  double sample_rate = 10e6;
  double noise_sigma = 6.0e-9;  // A per sample
  double chunk_duration = 1.0;  // s per trace file
  double max_step = 20e-9;      // integrator step bound
};

struct PulsedConfig {
  double rep_rate = 50e3;
  double pulse_width = 4e-9;
  double mean_photons = 1.5;  // per pulse at point A
  double duration = 1.0;
};

struct CwLevel {
  double power_at_a = 0.0;              // W
  std::vector<double> setpoints_db;     // one per attenuator
};

struct CwConfig {
  std::vector<CwLevel> levels;
  double live_time = 10.0;            // s per level
  double calibration_duration = 0.2;  // pulsed run for the linearization
};

struct DarkConfig {
  double duration = 10.0;            // source-off measurement
  double reference_duration = 10.0;  // separate background-rate measurement
};

struct BackgroundConfig {
  double rate_hz = 400.0;
  double energy_lo_ev = 0.59;
  double energy_hi_ev = 1.01;
};

struct ChainConfig {
  std::optional<std::filesystem::path> calibration_table;
  std::vector<source::FixedLoss> fixed_losses;
  double coupling = 0.99;
  bool bend_loss = false;
};

struct SpectroConfig {
  double bin_width = 0.01;  // eV
  double range_lo = -0.5;
  double range_hi = 4.5;
  int n_peaks = 5;
  double k_sigma = 3.0;
  std::optional<double> window_sigma_ev;  // replaces fitted sigmas for counting
  double trigger_threshold_ev = 0.4;
  double dead_time = 8e-6;
  double pre_trigger = 2e-6;
  double post_trigger = 12e-6;
};

struct ExperimentConfig {
  Mode mode = Mode::Pulsed;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  tes::TesParams tes;
  OpticsConfig optics;
  DaqConfig daq;
  PulsedConfig pulsed;
  CwConfig cw;
  DarkConfig dark;
  BackgroundConfig background;
  ChainConfig chain;
  dsp::ShaperConfig shaper;
  SpectroConfig spectro;

  // Throws ConfigError; checks referenced files exist.
  void validate() const;
};

std::string_view mode_name(Mode m);

// JSON with comments. Relative paths resolve against the config file's
// directory. Unknown keys are rejected. Throws ConfigError, IoError.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);

// Canonical JSON of the fully resolved config (sorted keys, defaults
// spelled out, referenced file contents folded in as SHA-256 digests).
std::string canonical_json(const ExperimentConfig& cfg);
daq::ConfigHash config_hash(const ExperimentConfig& cfg);

std::string to_hex(const daq::ConfigHash& h);
daq::ConfigHash sha256(const std::string& bytes);
std::string file_sha256_hex(const std::filesystem::path& path);

}  // namespace tesl::config

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tesl/config.hpp"
#include "tesl/daq.hpp"
#include "tesl/dsp.hpp"
#include "tesl/efficiency.hpp"
#include "tesl/event.hpp"
#include "tesl/source.hpp"
#include "tesl/spectro.hpp"

// End-to-end runs: simulate -> traces -> analysis -> efficiency report.
// Results depend only on the config and its seed; `threads` changes the
// schedule, never the output.
namespace tesl::pipeline {

// Quantities implied by the config.
struct Derived {
  double photon_energy_ev = 0.0;
  double stack_absorption = 0.0;
  double bend_factor = 1.0;
  double true_efficiency = 0.0;  // absorption x coupling x fixed losses x bend
  source::AttenuatorChain chain;
  daq::ConfigHash hash{};
};

Derived derive(const config::ExperimentConfig& cfg);

enum class GroupKind { Pulsed, Cw, Dark };

std::string_view kind_name(GroupKind k);

// A measurement made of consecutive trace chunks.
struct Group {
  std::string name;
  GroupKind kind = GroupKind::Pulsed;
  double duration = 0.0;
  int level = -1;  // cw level index

  std::size_t chunks(double chunk_duration) const;
  double chunk_length(std::size_t i, double chunk_duration) const;
};

// pulsed: {pulsed}; cw: {calibration, dark_reference, level_0..}; dark:
// {calibration, dark_reference, dark}.
std::vector<Group> plan_groups(const config::ExperimentConfig& cfg);

EventList chunk_events(const config::ExperimentConfig& cfg, const Derived& d, const Group& g,
                       std::size_t chunk);
daq::Trace synthesize_chunk(const config::ExperimentConfig& cfg, const Derived& d, const Group& g,
                            std::size_t chunk);

// Shaped maximum of a noiseless single-photon pulse.
double reference_height(const config::ExperimentConfig& cfg, const Derived& d);

// Raw height per laser period: the window maximum, or the amplitude one
// peaking time after the expected arrival when the maximum is below half
// the reference height.
std::vector<double> pulsed_heights(const daq::Trace& trace, const config::ExperimentConfig& cfg,
                                   double h_ref);

struct Calibration {
  double reference_height = 0.0;
  std::size_t windows = 0;
  std::vector<spectro::PeakFit> raw_peaks;
  dsp::LinearizationMap map;
  spectro::Histogram hist;  // linearized energies
  std::vector<spectro::PeakFit> peaks;
  std::vector<std::uint64_t> counts_by_n;
  std::uint64_t undetermined = 0;
  std::uint64_t overflow = 0;
};

// Sequential raw-peak fits (zero peak at 0, one-photon peak at h_ref, later
// peaks extrapolated from the previous spacing), linearization, then energy
// histogram and peak fits. Throws FitDiverged when peaks 0..2 cannot be fit.
Calibration calibrate(std::span<const double> heights, const config::ExperimentConfig& cfg,
                      const Derived& d, double h_ref);

struct CwChunk {
  std::vector<double> energies;
  double live_time = 0.0;
};

// Triggers on the shaped trace and linearizes each window maximum. Live time
// excludes the pre- and post-trigger margins at the trace ends.
CwChunk cw_energies(const daq::Trace& trace, const config::ExperimentConfig& cfg,
                    const Calibration& cal);

struct Counts {
  double live_time = 0.0;
  std::uint64_t triggers = 0;
  std::uint64_t n1 = 0;
  std::uint64_t high = 0;  // above the one-photon window
  std::uint64_t undetermined = 0;
  spectro::Histogram hist;
};

Counts count_events(std::span<const CwChunk> chunks, const config::ExperimentConfig& cfg,
                    const Calibration& cal);

struct ChunkError {
  std::string group;
  std::size_t chunk = 0;
  std::string message;
};

struct GroupResult {
  Group group;
  Counts counts;  // unused for the calibration group
};

struct Analysis {
  std::string config_hash;
  std::uint64_t seed = 0;
  config::Mode mode = config::Mode::Pulsed;
  double photon_energy_ev = 0.0;
  std::string calibration_group;
  Calibration calibration;
  std::vector<GroupResult> groups;
  std::vector<ChunkError> errors;
};

using TraceLoader = std::function<daq::Trace(const Group&, std::size_t chunk)>;

// Shared analysis core. Chunks whose loader throws a library error are
// recorded in `errors` and skipped; HashMismatch propagates.
Analysis analyze(const config::ExperimentConfig& cfg, const TraceLoader& loader, unsigned threads);

// Simulates and analyzes without touching the file system.
Analysis analyze_in_memory(const config::ExperimentConfig& cfg, unsigned threads);

std::string analysis_json(const Analysis& a);
std::string report_json(const std::string& analysis_json_text, const config::ExperimentConfig& cfg);

// File-based stages. run_simulate writes <out>/traces/*.tesl and
// <out>/manifest.json; run_analyze writes <out>/analysis.json and one
// histogram CSV per group; run_report writes <out>/report.json. Each returns
// the path it wrote last.
std::filesystem::path run_simulate(const config::ExperimentConfig& cfg, unsigned threads);
std::filesystem::path run_analyze(const std::filesystem::path& manifest,
                                  const config::ExperimentConfig& cfg, unsigned threads);
std::filesystem::path run_report(const std::filesystem::path& analysis,
                                 const config::ExperimentConfig& cfg);

unsigned default_threads();

}  // namespace tesl::pipeline

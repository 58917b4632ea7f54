#include "tesl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iterator>
#include <optional>
#include <thread>

#include <json.hpp>

#include "tesl/constants.hpp"
#include "tesl/error.hpp"
#include "tesl/optics.hpp"
#include "tesl/rng.hpp"

namespace tesl::pipeline {

using nlohmann::json;
using config::ExperimentConfig;

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results land in
// index order, so output never depends on the schedule.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, unsigned threads, Fn fn) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const unsigned k = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < k; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot read " + path.string());
  return {(std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::IoError, "cannot write " + path.string());
  out << text;
  if (!out) raise(Errc::IoError, "write failed for " + path.string());
}

std::string chunk_file_name(const Group& g, std::size_t chunk) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%04zu.tesl", chunk);
  return g.name + buf;
}

}  // namespace

std::string_view kind_name(GroupKind k) {
  switch (k) {
    case GroupKind::Pulsed: return "pulsed";
    case GroupKind::Cw: return "cw";
    case GroupKind::Dark: return "dark";
  }
  return "?";
}

Derived derive(const ExperimentConfig& cfg) {
  Derived d;
  d.photon_energy_ev = constants::photon_energy_ev(cfg.optics.wavelength_nm);
  const optics::Stack stack = optics::load_stack(cfg.optics.stack, cfg.optics.wavelength_nm);
  d.stack_absorption = optics::layer_absorption(stack, cfg.optics.absorber_layer, cfg.optics.wavelength_nm);
  if (cfg.chain.bend_loss) d.bend_factor = source::bend_loss_factor(derive_key(cfg.seed, "chain/bend"));
  if (cfg.chain.calibration_table)
    d.chain.table = source::load_calibration_table(*cfg.chain.calibration_table);
  d.chain.fixed_losses = cfg.chain.fixed_losses;
  d.chain.validate();
  d.true_efficiency = d.stack_absorption * cfg.chain.coupling * d.bend_factor;
  for (const auto& l : d.chain.fixed_losses) d.true_efficiency *= l.transmittance;
  d.hash = config::config_hash(cfg);
  return d;
}

std::size_t Group::chunks(double chunk_duration) const {
  return static_cast<std::size_t>(std::ceil(duration / chunk_duration - 1e-9));
}

double Group::chunk_length(std::size_t i, double chunk_duration) const {
  return std::min(chunk_duration, duration - static_cast<double>(i) * chunk_duration);
}

std::vector<Group> plan_groups(const ExperimentConfig& cfg) {
  std::vector<Group> groups;
  switch (cfg.mode) {
    case config::Mode::Pulsed:
      groups.push_back({"pulsed", GroupKind::Pulsed, cfg.pulsed.duration});
      break;
    case config::Mode::CW:
      groups.push_back({"calibration", GroupKind::Pulsed, cfg.cw.calibration_duration});
      groups.push_back({"dark_reference", GroupKind::Dark, cfg.dark.reference_duration});
      for (std::size_t k = 0; k < cfg.cw.levels.size(); ++k)
        groups.push_back({"level_" + std::to_string(k), GroupKind::Cw, cfg.cw.live_time, static_cast<int>(k)});
      break;
    case config::Mode::Dark:
      groups.push_back({"calibration", GroupKind::Pulsed, cfg.cw.calibration_duration});
      groups.push_back({"dark_reference", GroupKind::Dark, cfg.dark.reference_duration});
      groups.push_back({"dark", GroupKind::Dark, cfg.dark.duration});
      break;
  }
  return groups;
}

EventList chunk_events(const ExperimentConfig& cfg, const Derived& d, const Group& g, std::size_t chunk) {
  const double length = g.chunk_length(chunk, cfg.daq.chunk_duration);
  const std::string label = g.name + "/" + std::to_string(chunk);
  EventList signal;
  if (g.kind == GroupKind::Pulsed) {
    signal = source::pulsed_train(cfg.pulsed.rep_rate, cfg.pulsed.pulse_width, cfg.pulsed.mean_photons,
                                  length, d.photon_energy_ev, derive_key(cfg.seed, label + "/signal"));
  } else if (g.kind == GroupKind::Cw) {
    const auto& level = cfg.cw.levels.at(static_cast<std::size_t>(g.level));
    const double t_att = source::attenuator_transmittance(d.chain, level.setpoints_db);
    signal = source::cw_stream(level.power_at_a * t_att, cfg.optics.wavelength_nm, length,
                               derive_key(cfg.seed, label + "/signal"));
  }
  signal = source::thin(signal, d.true_efficiency, derive_key(cfg.seed, label + "/thin"));
  if (cfg.background.rate_hz > 0.0) {
    const EventList bkg = source::background_stream(
        cfg.background.rate_hz, length, {cfg.background.energy_lo_ev, cfg.background.energy_hi_ev},
        derive_key(cfg.seed, label + "/background"));
    signal = source::merge(signal, bkg);
  }
  return signal;
}

daq::Trace synthesize_chunk(const ExperimentConfig& cfg, const Derived& d, const Group& g, std::size_t chunk) {
  const EventList events = chunk_events(cfg, d, g, chunk);
  const std::string label = g.name + "/" + std::to_string(chunk) + "/noise";
  daq::Trace t = daq::synthesize_trace(cfg.tes, events, g.chunk_length(chunk, cfg.daq.chunk_duration),
                                       cfg.daq.sample_rate, cfg.daq.noise_sigma,
                                       derive_key(cfg.seed, label), {cfg.daq.max_step});
  t.t0 = static_cast<double>(chunk) * cfg.daq.chunk_duration;
  t.config_hash = d.hash;
  return t;
}

double reference_height(const ExperimentConfig& cfg, const Derived& d) {
  const double arrival = 5e-6;
  const PhotonEvent e{arrival, d.photon_energy_ev, Origin::Signal};
  const daq::Trace t = daq::synthesize_trace(cfg.tes, std::span(&e, 1), arrival + 20 * cfg.shaper.peaking_time + 50e-6,
                                             cfg.daq.sample_rate, 0.0, 0, {cfg.daq.max_step});
  const std::vector<double> shaped = dsp::shape(t.samples, t.sample_rate, cfg.shaper);
  return *std::max_element(shaped.begin(), shaped.end());
}

std::vector<double> pulsed_heights(const daq::Trace& trace, const ExperimentConfig& cfg, double h_ref) {
  const std::vector<double> shaped = dsp::shape(trace.samples, trace.sample_rate, cfg.shaper);
  const auto windows =
      daq::segment_pulsed(shaped, trace.sample_rate, cfg.pulsed.rep_rate, 0.0, cfg.shaper.peaking_time);
  std::vector<double> heights;
  heights.reserve(windows.size());
  for (const auto& w : windows) {
    const double max = dsp::pulse_height(w, cfg.shaper, dsp::HeightMode::MaxInWindow);
    heights.push_back(max >= 0.5 * h_ref ? max
                                         : dsp::pulse_height(w, cfg.shaper, dsp::HeightMode::AtExpectedArrival));
  }
  return heights;
}

Calibration calibrate(std::span<const double> heights, const ExperimentConfig& cfg, const Derived& d,
                      double h_ref) {
  const double e = d.photon_energy_ev;
  const int n_peaks = cfg.spectro.n_peaks;
  Calibration cal;
  cal.reference_height = h_ref;
  cal.windows = heights.size();

  const double raw_bin = h_ref * cfg.spectro.bin_width / e;
  spectro::Histogram raw =
      spectro::make_histogram(-0.6 * h_ref, (n_peaks + 0.5) * h_ref, raw_bin);
  for (double h : heights) raw.fill(h);

  std::vector<double> means;
  for (int n = 0; n < n_peaks; ++n) {
    double center = 0.0, half = 0.4 * h_ref;
    if (n == 1) center = h_ref;
    if (n >= 2) {
      const double spacing = means[n - 1] - means[n - 2];
      center = means[n - 1] + spacing;
      half = 0.4 * spacing;
    }
    spectro::PeakFit p = spectro::fit_peak(raw, center, half, n);
    cal.raw_peaks.push_back(p);
    if (!p.ok) {
      if (n <= 2) raise(Errc::FitDiverged, "raw pulse-height peak " + std::to_string(n) + ": " + p.error);
      break;
    }
    means.push_back(p.mean);
  }
  cal.map = dsp::build_linearization(means, e);

  cal.hist = spectro::make_histogram(cfg.spectro.range_lo, cfg.spectro.range_hi, cfg.spectro.bin_width);
  std::vector<double> energies(heights.size());
  for (std::size_t i = 0; i < heights.size(); ++i) {
    energies[i] = cal.map.apply(heights[i]);
    cal.hist.fill(energies[i]);
  }
  cal.peaks = spectro::fit_peaks(cal.hist, e, n_peaks);

  std::vector<spectro::PeakFit> good;
  for (const auto& p : cal.peaks) {
    if (!p.ok) break;
    good.push_back(p);
  }
  cal.counts_by_n.assign(static_cast<std::size_t>(n_peaks), 0);
  if (good.size() >= 2) {
    const spectro::PhotonClassifier cls(good, cfg.spectro.k_sigma, cfg.spectro.window_sigma_ev);
    for (double en : energies) {
      const auto a = cls.classify(en);
      if (a.kind == spectro::Assignment::Kind::Photons)
        ++cal.counts_by_n[static_cast<std::size_t>(a.n)];
      else if (a.kind == spectro::Assignment::Kind::Overflow)
        ++cal.overflow;
      else
        ++cal.undetermined;
    }
  }
  return cal;
}

CwChunk cw_energies(const daq::Trace& trace, const ExperimentConfig& cfg, const Calibration& cal) {
  const std::vector<double> shaped = dsp::shape(trace.samples, trace.sample_rate, cfg.shaper);
  daq::TriggerConfig tc;
  tc.threshold = cal.map.invert(cfg.spectro.trigger_threshold_ev);
  tc.dead_time = cfg.spectro.dead_time;
  tc.pre = cfg.spectro.pre_trigger;
  tc.post = cfg.spectro.post_trigger;
  CwChunk out;
  for (const auto& w : daq::trigger_cw(shaped, trace.sample_rate, tc))
    out.energies.push_back(cal.map.apply(dsp::pulse_height(w, cfg.shaper, dsp::HeightMode::MaxInWindow)));
  out.live_time = std::max(0.0, trace.duration() - tc.pre - tc.post);
  return out;
}

Counts count_events(std::span<const CwChunk> chunks, const ExperimentConfig& cfg, const Calibration& cal) {
  if (cal.peaks.size() < 2 || !cal.peaks[0].ok || !cal.peaks[1].ok)
    raise(Errc::FitDiverged, "counting needs fitted zero- and one-photon peaks");
  const spectro::PhotonClassifier cls(std::span(cal.peaks).first(2), cfg.spectro.k_sigma,
                                      cfg.spectro.window_sigma_ev);
  Counts c;
  c.hist = spectro::make_histogram(cfg.spectro.range_lo, cfg.spectro.range_hi, cfg.spectro.bin_width);
  for (const auto& chunk : chunks) {
    c.live_time += chunk.live_time;
    for (double e : chunk.energies) {
      ++c.triggers;
      c.hist.fill(e);
      const auto a = cls.classify(e);
      if (a.kind == spectro::Assignment::Kind::Overflow)
        ++c.high;
      else if (a.kind == spectro::Assignment::Kind::Photons && a.n == 1)
        ++c.n1;
      else
        ++c.undetermined;
    }
  }
  c.hist.live_time = c.live_time;
  return c;
}

Analysis analyze(const ExperimentConfig& cfg, const TraceLoader& loader, unsigned threads) {
  const Derived d = derive(cfg);
  const std::vector<Group> groups = plan_groups(cfg);
  Analysis a;
  a.config_hash = config::to_hex(d.hash);
  a.seed = cfg.seed;
  a.mode = cfg.mode;
  a.photon_energy_ev = d.photon_energy_ev;

  auto load = [&](const Group& g, std::size_t i) -> std::optional<daq::Trace> {
    try {
      daq::Trace t = loader(g, i);
      if (t.config_hash != d.hash)
        raise(Errc::HashMismatch, g.name + " chunk " + std::to_string(i) +
                                      " was produced by a different configuration");
      return t;
    } catch (const Error& e) {
      if (e.code() == Errc::HashMismatch) throw;
      return std::nullopt;
    }
  };
  auto record_errors = [&](const Group& g, std::size_t n) {
    // Re-run the loader only for the error text of failed chunks.
    for (std::size_t i = 0; i < n; ++i) {
      try {
        (void)loader(g, i);
      } catch (const Error& e) {
        a.errors.push_back({g.name, i, e.what()});
      }
    }
  };

  const Group& cal_group = groups.front();
  const double h_ref = reference_height(cfg, d);
  const std::size_t n_cal = cal_group.chunks(cfg.daq.chunk_duration);
  const auto cal_heights = parallel_map<std::optional<std::vector<double>>>(n_cal, threads, [&](std::size_t i) {
    auto t = load(cal_group, i);
    return t ? std::optional(pulsed_heights(*t, cfg, h_ref)) : std::nullopt;
  });
  std::vector<double> heights;
  bool cal_failed = false;
  for (const auto& h : cal_heights) {
    if (h)
      heights.insert(heights.end(), h->begin(), h->end());
    else
      cal_failed = true;
  }
  if (cal_failed) record_errors(cal_group, n_cal);
  a.calibration_group = cal_group.name;
  a.calibration = calibrate(heights, cfg, d, h_ref);

  for (std::size_t gi = 1; gi < groups.size(); ++gi) {
    const Group& g = groups[gi];
    const std::size_t n = g.chunks(cfg.daq.chunk_duration);
    const auto chunks = parallel_map<std::optional<CwChunk>>(n, threads, [&](std::size_t i) {
      auto t = load(g, i);
      return t ? std::optional(cw_energies(*t, cfg, a.calibration)) : std::nullopt;
    });
    std::vector<CwChunk> ok;
    bool failed = false;
    for (const auto& c : chunks) {
      if (c)
        ok.push_back(*c);
      else
        failed = true;
    }
    if (failed) record_errors(g, n);
    a.groups.push_back({g, count_events(ok, cfg, a.calibration)});
  }
  return a;
}

Analysis analyze_in_memory(const ExperimentConfig& cfg, unsigned threads) {
  const Derived d = derive(cfg);
  return analyze(cfg, [&](const Group& g, std::size_t i) { return synthesize_chunk(cfg, d, g, i); }, threads);
}

namespace {

json peak_json(const spectro::PeakFit& p) {
  json j = {{"n", p.n}, {"ok", p.ok}};
  if (p.ok) {
    j["mean"] = p.mean;
    j["sigma"] = p.sigma;
    j["fwhm"] = p.fwhm;
    j["area"] = p.area;
    j["amplitude"] = p.amplitude;
  } else {
    j["error"] = p.error;
  }
  return j;
}

const GroupResult* find_group(const Analysis& a, const std::string& name) {
  for (const auto& g : a.groups)
    if (g.group.name == name) return &g;
  return nullptr;
}

}  // namespace

std::string analysis_json(const Analysis& a) {
  json j;
  j["config_hash"] = a.config_hash;
  j["seed"] = a.seed;
  j["mode"] = config::mode_name(a.mode);
  j["photon_energy_ev"] = a.photon_energy_ev;

  const Calibration& c = a.calibration;
  json cal;
  cal["group"] = a.calibration_group;
  cal["windows"] = c.windows;
  cal["reference_height_a"] = c.reference_height;
  cal["raw_peaks"] = json::array();
  for (const auto& p : c.raw_peaks) cal["raw_peaks"].push_back(peak_json(p));
  cal["knots"] = json::array();
  for (const auto& [raw, e] : c.map.knots()) cal["knots"].push_back({raw, e});
  cal["peaks"] = json::array();
  for (const auto& p : c.peaks) cal["peaks"].push_back(peak_json(p));
  cal["counts_by_n"] = c.counts_by_n;
  cal["undetermined"] = c.undetermined;
  cal["overflow"] = c.overflow;
  cal["histogram"] = "histogram_" + a.calibration_group + ".csv";
  j["calibration"] = cal;

  j["groups"] = json::array();
  for (const auto& g : a.groups) {
    j["groups"].push_back({{"name", g.group.name},
                           {"kind", kind_name(g.group.kind)},
                           {"level", g.group.level},
                           {"live_time_s", g.counts.live_time},
                           {"triggers", g.counts.triggers},
                           {"one_photon", g.counts.n1},
                           {"high", g.counts.high},
                           {"undetermined", g.counts.undetermined},
                           {"histogram", "histogram_" + g.group.name + ".csv"}});
  }

  const GroupResult* ref = find_group(a, "dark_reference");
  const GroupResult* dark = find_group(a, "dark");
  if (ref && dark && ref->counts.live_time > 0.0) {
    const double rate = static_cast<double>(ref->counts.n1) / ref->counts.live_time;
    const auto net = spectro::subtract_background(static_cast<double>(dark->counts.n1), rate, dark->counts.live_time);
    j["dark_net_one_photon"] = {{"background_rate_hz", rate}, {"net", net.net}, {"sigma", net.sigma}};
  }

  j["errors"] = json::array();
  for (const auto& e : a.errors)
    j["errors"].push_back({{"group", e.group}, {"chunk", e.chunk}, {"error", e.message}});
  return j.dump(2) + "\n";
}

std::string report_json(const std::string& analysis_text, const ExperimentConfig& cfg) {
  json an;
  try {
    an = json::parse(analysis_text);
  } catch (const json::exception& e) {
    raise(Errc::IoError, std::string("malformed analysis file: ") + e.what());
  }
  const Derived d = derive(cfg);
  if (an.value("config_hash", std::string()) != config::to_hex(d.hash))
    raise(Errc::HashMismatch, "analysis was produced by a different configuration");

  double bkg_rate = 0.0, bkg_high_rate = 0.0, bkg_live = 0.0;
  std::uint64_t bkg_counts = 0, bkg_high = 0;
  std::vector<json> levels;
  for (const json& g : an.at("groups")) {
    if (g.at("name") == "dark_reference") {
      bkg_live = g.at("live_time_s").get<double>();
      bkg_counts = g.at("one_photon").get<std::uint64_t>();
      bkg_high = g.at("high").get<std::uint64_t>();
      if (bkg_live > 0.0) {
        bkg_rate = static_cast<double>(bkg_counts) / bkg_live;
        bkg_high_rate = static_cast<double>(bkg_high) / bkg_live;
      }
    }
    if (g.at("kind") == "cw") levels.push_back(g);
  }
  if (levels.empty()) raise(Errc::ConfigError, "report needs at least one analyzed power level (cw mode)");

  json pts = json::array();
  std::vector<efficiency::EfficiencyPoint> points;
  bool negative_net = false;
  for (const json& g : levels) {
    const auto& level = cfg.cw.levels.at(g.at("level").get<std::size_t>());
    const double live = g.at("live_time_s").get<double>();
    const double n1 = g.at("one_photon").get<double>();
    const double high = g.at("high").get<double>();
    // Background photons smeared past the one-photon window land in the
    // high class too, so both classes are background-subtracted before the
    // pile-up correction.
    const auto net = spectro::subtract_background(n1, bkg_rate, live);
    const auto net_high = spectro::subtract_background(high, bkg_high_rate, live);
    negative_net = negative_net || net.net < 0.0;
    const double corrected = spectro::correct_pileup(net.net, net_high.net);
    const double sigma = std::sqrt(net.sigma * net.sigma + 4.0 * net_high.sigma * net_high.sigma);
    const double t_att = source::attenuator_transmittance(d.chain, level.setpoints_db);
    const double expected = efficiency::expected_photons(level.power_at_a, t_att, cfg.optics.wavelength_nm, live);
    const auto p = efficiency::efficiency_point(corrected, expected, level.power_at_a, sigma);
    points.push_back(p);
    pts.push_back({{"level", g.at("level")},
                   {"power_at_a_w", p.power_at_a},
                   {"attenuator_transmittance", t_att},
                   {"live_time_s", live},
                   {"one_photon_raw", n1},
                   {"background_expected", bkg_rate * live},
                   {"one_photon_net", net.net},
                   {"high_raw", high},
                   {"high_net", net_high.net},
                   {"detected_corrected", p.detected_corrected},
                   {"expected_photons", p.expected_photons},
                   {"eta", p.eta},
                   {"sigma_eta", p.sigma_eta}});
  }
  const auto s = efficiency::weighted_fit_and_average(points);

  json r;
  r["config_hash"] = an.at("config_hash");
  r["seed"] = cfg.seed;
  r["background"] = {{"rate_hz", bkg_rate},
                     {"high_rate_hz", bkg_high_rate},
                     {"live_time_s", bkg_live},
                     {"one_photon_counts", bkg_counts},
                     {"high_counts", bkg_high}};
  r["points"] = pts;
  r["weighted_mean_eta"] = s.mean;
  r["weighted_mean_sigma"] = s.mean_sigma;
  if (s.fit_valid)
    r["fit"] = {{"slope_per_w", s.slope}, {"slope_sigma_per_w", s.slope_sigma}, {"intercept", s.intercept}};
  else
    r["fit"] = nullptr;
  r["bell_threshold"] = efficiency::kBellThreshold;
  r["bell_threshold_pass"] = efficiency::bell_check(s.mean);
  r["flags"] = {{"negative_net_counts", negative_net}, {"bend_loss_mode", cfg.chain.bend_loss}};
  r["warnings"] = s.warnings;
  r["simulation_truth"] = {{"stack_absorption", d.stack_absorption},
                           {"bend_factor", d.bend_factor},
                           {"end_to_end_efficiency", d.true_efficiency}};
  return r.dump(2) + "\n";
}

std::filesystem::path run_simulate(const ExperimentConfig& cfg, unsigned threads) {
  const Derived d = derive(cfg);
  const auto trace_dir = cfg.output_dir / "traces";
  std::error_code ec;
  std::filesystem::create_directories(trace_dir, ec);
  if (ec) raise(Errc::IoError, "cannot create " + trace_dir.string() + ": " + ec.message());

  json manifest;
  manifest["config_hash"] = config::to_hex(d.hash);
  manifest["seed"] = cfg.seed;
  manifest["mode"] = config::mode_name(cfg.mode);
  manifest["groups"] = json::array();
  struct Job {
    const Group* group;
    std::size_t chunk;
  };
  const std::vector<Group> groups = plan_groups(cfg);
  std::vector<Job> jobs;
  for (const auto& g : groups) {
    json files = json::array();
    for (std::size_t i = 0; i < g.chunks(cfg.daq.chunk_duration); ++i) {
      jobs.push_back({&g, i});
      files.push_back("traces/" + chunk_file_name(g, i));
    }
    manifest["groups"].push_back({{"name", g.name},
                                  {"kind", kind_name(g.kind)},
                                  {"level", g.level},
                                  {"duration_s", g.duration},
                                  {"files", files}});
  }
  parallel_map<int>(jobs.size(), threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    daq::trace_write(synthesize_chunk(cfg, d, *job.group, job.chunk),
                     trace_dir / chunk_file_name(*job.group, job.chunk));
    return 0;
  });
  const auto path = cfg.output_dir / "manifest.json";
  write_file(path, manifest.dump(2) + "\n");
  return path;
}

std::filesystem::path run_analyze(const std::filesystem::path& manifest_path, const ExperimentConfig& cfg,
                                  unsigned threads) {
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    raise(Errc::IoError, "malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("config_hash", std::string()) != config::to_hex(config::config_hash(cfg)))
    raise(Errc::HashMismatch, manifest_path.string() + " was produced by a different configuration");
  const auto base = manifest_path.parent_path();
  const Analysis a = analyze(
      cfg,
      [&](const Group& g, std::size_t i) { return daq::trace_read(base / "traces" / chunk_file_name(g, i)); },
      threads);

  const auto out = cfg.output_dir;
  std::filesystem::create_directories(out);
  spectro::write_histogram_csv(a.calibration.hist, out / ("histogram_" + a.calibration_group + ".csv"));
  for (const auto& g : a.groups)
    spectro::write_histogram_csv(g.counts.hist, out / ("histogram_" + g.group.name + ".csv"));
  const auto path = out / "analysis.json";
  write_file(path, analysis_json(a));
  return path;
}

std::filesystem::path run_report(const std::filesystem::path& analysis, const ExperimentConfig& cfg) {
  const std::string text = report_json(read_file(analysis), cfg);
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = cfg.output_dir / "report.json";
  write_file(path, text);
  return path;
}

}  // namespace tesl::pipeline

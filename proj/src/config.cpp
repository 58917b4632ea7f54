#include "tesl/config.hpp"

#include <openssl/sha.h>

#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tesl/error.hpp"

namespace tesl::config {

using nlohmann::json;

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::Pulsed: return "pulsed";
    case Mode::CW: return "cw";
    case Mode::Dark: return "dark";
  }
  return "?";
}

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) raise(Errc::ConfigError, where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) raise(Errc::ConfigError, "unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    raise(Errc::ConfigError, where + "." + key + ": " + e.what());
  }
}

void read_path(const json& obj, const char* key, std::filesystem::path& out,
               const std::filesystem::path& base, const std::string& where) {
  if (!obj.contains(key)) return;
  std::string s;
  read(obj, key, s, where);
  out = base / s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    raise(Errc::ConfigError, std::string("malformed config: ") + e.what());
  }
  check_keys(root, "config", {"mode", "seed", "output_dir", "tes", "optics", "daq", "pulsed", "cw",
                              "dark", "background", "chain", "shaper", "spectro"});
  ExperimentConfig c;
  if (!root.contains("seed")) raise(Errc::ConfigError, "config.seed is mandatory");
  read(root, "seed", c.seed, "config");
  std::string mode = "pulsed";
  read(root, "mode", mode, "config");
  if (mode == "pulsed")
    c.mode = Mode::Pulsed;
  else if (mode == "cw")
    c.mode = Mode::CW;
  else if (mode == "dark")
    c.mode = Mode::Dark;
  else
    raise(Errc::ConfigError, "config.mode must be pulsed, cw or dark, got '" + mode + "'");
  read_path(root, "output_dir", c.output_dir, base, "config");

  if (root.contains("tes")) {
    const json& t = root["tes"];
    check_keys(t, "tes", {"t_c", "transition_width", "r_normal", "v_bias", "c_e", "sigma_ep", "t_bath"});
    read(t, "t_c", c.tes.t_c, "tes");
    read(t, "transition_width", c.tes.transition_width, "tes");
    read(t, "r_normal", c.tes.r_normal, "tes");
    read(t, "v_bias", c.tes.v_bias, "tes");
    read(t, "c_e", c.tes.c_e, "tes");
    read(t, "sigma_ep", c.tes.sigma_ep, "tes");
    read(t, "t_bath", c.tes.t_bath, "tes");
  }
  if (root.contains("optics")) {
    const json& o = root["optics"];
    check_keys(o, "optics", {"stack", "wavelength_nm", "absorber_layer"});
    read_path(o, "stack", c.optics.stack, base, "optics");
    read(o, "wavelength_nm", c.optics.wavelength_nm, "optics");
    read(o, "absorber_layer", c.optics.absorber_layer, "optics");
  }
  if (root.contains("daq")) {
    const json& d = root["daq"];
    check_keys(d, "daq", {"sample_rate", "noise_sigma", "chunk_duration", "max_step"});
    read(d, "sample_rate", c.daq.sample_rate, "daq");
    read(d, "noise_sigma", c.daq.noise_sigma, "daq");
    read(d, "chunk_duration", c.daq.chunk_duration, "daq");
    read(d, "max_step", c.daq.max_step, "daq");
  }
  if (root.contains("pulsed")) {
    const json& p = root["pulsed"];
    check_keys(p, "pulsed", {"rep_rate", "pulse_width", "mean_photons", "duration"});
    read(p, "rep_rate", c.pulsed.rep_rate, "pulsed");
    read(p, "pulse_width", c.pulsed.pulse_width, "pulsed");
    read(p, "mean_photons", c.pulsed.mean_photons, "pulsed");
    read(p, "duration", c.pulsed.duration, "pulsed");
  }
  if (root.contains("cw")) {
    const json& w = root["cw"];
    check_keys(w, "cw", {"levels", "live_time", "calibration_duration"});
    read(w, "live_time", c.cw.live_time, "cw");
    read(w, "calibration_duration", c.cw.calibration_duration, "cw");
    if (w.contains("levels")) {
      if (!w["levels"].is_array()) raise(Errc::ConfigError, "cw.levels must be an array");
      for (const json& l : w["levels"]) {
        check_keys(l, "cw.levels[]", {"power_at_a", "setpoints_db"});
        CwLevel level;
        read(l, "power_at_a", level.power_at_a, "cw.levels[]");
        read(l, "setpoints_db", level.setpoints_db, "cw.levels[]");
        c.cw.levels.push_back(level);
      }
    }
  }
  if (root.contains("dark")) {
    const json& d = root["dark"];
    check_keys(d, "dark", {"duration", "reference_duration"});
    read(d, "duration", c.dark.duration, "dark");
    read(d, "reference_duration", c.dark.reference_duration, "dark");
  }
  if (root.contains("background")) {
    const json& b = root["background"];
    check_keys(b, "background", {"rate_hz", "energy_window_ev"});
    read(b, "rate_hz", c.background.rate_hz, "background");
    if (b.contains("energy_window_ev")) {
      std::vector<double> win;
      read(b, "energy_window_ev", win, "background");
      if (win.size() != 2) raise(Errc::ConfigError, "background.energy_window_ev needs [lo, hi]");
      c.background.energy_lo_ev = win[0];
      c.background.energy_hi_ev = win[1];
    }
  }
  if (root.contains("chain")) {
    const json& ch = root["chain"];
    check_keys(ch, "chain", {"calibration_table", "fixed_losses", "coupling", "bend_loss"});
    if (ch.contains("calibration_table")) {
      std::filesystem::path p;
      read_path(ch, "calibration_table", p, base, "chain");
      c.chain.calibration_table = p;
    }
    read(ch, "coupling", c.chain.coupling, "chain");
    read(ch, "bend_loss", c.chain.bend_loss, "chain");
    if (ch.contains("fixed_losses")) {
      for (const json& l : ch["fixed_losses"]) {
        check_keys(l, "chain.fixed_losses[]", {"label", "transmittance"});
        source::FixedLoss loss;
        read(l, "label", loss.label, "chain.fixed_losses[]");
        read(l, "transmittance", loss.transmittance, "chain.fixed_losses[]");
        c.chain.fixed_losses.push_back(loss);
      }
    }
  }
  if (root.contains("shaper")) {
    const json& s = root["shaper"];
    check_keys(s, "shaper", {"peaking_time", "stages"});
    read(s, "peaking_time", c.shaper.peaking_time, "shaper");
    read(s, "stages", c.shaper.stages, "shaper");
  }
  if (root.contains("spectro")) {
    const json& s = root["spectro"];
    check_keys(s, "spectro", {"bin_width", "range_ev", "n_peaks", "k_sigma", "window_sigma_ev",
                              "trigger_threshold_ev", "dead_time", "pre_trigger", "post_trigger"});
    read(s, "bin_width", c.spectro.bin_width, "spectro");
    if (s.contains("range_ev")) {
      std::vector<double> r;
      read(s, "range_ev", r, "spectro");
      if (r.size() != 2) raise(Errc::ConfigError, "spectro.range_ev needs [lo, hi]");
      c.spectro.range_lo = r[0];
      c.spectro.range_hi = r[1];
    }
    read(s, "n_peaks", c.spectro.n_peaks, "spectro");
    read(s, "k_sigma", c.spectro.k_sigma, "spectro");
    if (s.contains("window_sigma_ev") && !s["window_sigma_ev"].is_null()) {
      double v = 0.0;
      read(s, "window_sigma_ev", v, "spectro");
      c.spectro.window_sigma_ev = v;
    }
    read(s, "trigger_threshold_ev", c.spectro.trigger_threshold_ev, "spectro");
    read(s, "dead_time", c.spectro.dead_time, "spectro");
    read(s, "pre_trigger", c.spectro.pre_trigger, "spectro");
    read(s, "post_trigger", c.spectro.post_trigger, "spectro");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::ConfigError, "cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, path.parent_path());
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) raise(Errc::ConfigError, what);
  };
  try {
    tes.validate();
    shaper.validate();
  } catch (const Error& e) {
    raise(Errc::ConfigError, e.what());
  }
  if (optics.stack.empty()) raise(Errc::ConfigError, "optics.stack is required");
  if (!std::filesystem::exists(optics.stack))
    raise(Errc::ConfigError, "stack file not found: " + optics.stack.string());
  need(optics.wavelength_nm > 0.0, "optics.wavelength_nm must be positive");
  need(daq.sample_rate > 0.0 && daq.noise_sigma >= 0.0 && daq.chunk_duration > 0.0 && daq.max_step > 0.0,
       "daq values must be positive (noise_sigma >= 0)");
  need(chain.coupling > 0.0 && chain.coupling <= 1.0, "chain.coupling must lie in (0, 1]");
  need(background.rate_hz >= 0.0, "background.rate_hz must be >= 0");
  need(spectro.bin_width > 0.0 && spectro.range_hi > spectro.range_lo && spectro.n_peaks >= 3,
       "spectro needs bin_width > 0, a nonempty range and n_peaks >= 3");
  need(spectro.trigger_threshold_ev > 0.0 && spectro.dead_time > 0.0 && spectro.pre_trigger >= 0.0 &&
           spectro.post_trigger > spectro.dead_time,
       "spectro trigger settings need threshold > 0 and post_trigger > dead_time");

  need(pulsed.rep_rate > 0.0 && pulsed.duration > 0.0 && pulsed.mean_photons >= 0.0,
       "pulsed source values must be positive");
  const double per_chunk = daq.chunk_duration * pulsed.rep_rate;
  need(std::abs(per_chunk - std::round(per_chunk)) < 1e-6,
       "daq.chunk_duration must hold a whole number of laser periods");

  if (mode == Mode::CW) {
    need(!cw.levels.empty(), "cw mode needs at least one entry in cw.levels");
    need(cw.live_time > 0.0 && cw.calibration_duration > 0.0, "cw durations must be positive");
    need(chain.calibration_table.has_value(), "cw mode needs chain.calibration_table");
    for (const auto& l : cw.levels) need(l.power_at_a > 0.0, "cw level power must be positive");
  }
  if (mode != Mode::Pulsed)
    need(dark.duration > 0.0 && dark.reference_duration > 0.0, "dark durations must be positive");
  if (chain.calibration_table && !std::filesystem::exists(*chain.calibration_table))
    raise(Errc::ConfigError, "calibration table not found: " + chain.calibration_table->string());
}

daq::ConfigHash sha256(const std::string& bytes) {
  daq::ConfigHash h{};
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), h.data());
  return h;
}

std::string to_hex(const daq::ConfigHash& h) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (auto b : h) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

std::string file_sha256_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return to_hex(sha256(bytes));
}

std::string canonical_json(const ExperimentConfig& c) {
  json j;
  j["mode"] = mode_name(c.mode);
  j["seed"] = c.seed;
  j["tes"] = {{"t_c", c.tes.t_c},       {"transition_width", c.tes.transition_width},
              {"r_normal", c.tes.r_normal}, {"v_bias", c.tes.v_bias},
              {"c_e", c.tes.c_e},       {"sigma_ep", c.tes.sigma_ep},
              {"t_bath", c.tes.t_bath}};
  // Referenced files enter by content, including '@' dispersion tables.
  json stack_files = json::object();
  stack_files[c.optics.stack.filename().string()] = file_sha256_hex(c.optics.stack);
  {
    std::ifstream in(c.optics.stack);
    std::string line;
    while (std::getline(in, line)) {
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      std::istringstream f(line);
      std::string label, thick, index;
      if (f >> label >> thick >> index && index.front() == '@') {
        const auto p = c.optics.stack.parent_path() / index.substr(1);
        if (std::filesystem::exists(p)) stack_files[index.substr(1)] = file_sha256_hex(p);
      }
    }
  }
  j["optics"] = {{"stack", stack_files},
                 {"wavelength_nm", c.optics.wavelength_nm},
                 {"absorber_layer", c.optics.absorber_layer}};
  j["daq"] = {{"sample_rate", c.daq.sample_rate},
              {"noise_sigma", c.daq.noise_sigma},
              {"chunk_duration", c.daq.chunk_duration},
              {"max_step", c.daq.max_step}};
  j["pulsed"] = {{"rep_rate", c.pulsed.rep_rate},
                 {"pulse_width", c.pulsed.pulse_width},
                 {"mean_photons", c.pulsed.mean_photons},
                 {"duration", c.pulsed.duration}};
  json levels = json::array();
  for (const auto& l : c.cw.levels)
    levels.push_back({{"power_at_a", l.power_at_a}, {"setpoints_db", l.setpoints_db}});
  j["cw"] = {{"levels", levels},
             {"live_time", c.cw.live_time},
             {"calibration_duration", c.cw.calibration_duration}};
  j["dark"] = {{"duration", c.dark.duration}, {"reference_duration", c.dark.reference_duration}};
  j["background"] = {{"rate_hz", c.background.rate_hz},
                     {"energy_window_ev", {c.background.energy_lo_ev, c.background.energy_hi_ev}}};
  json losses = json::array();
  for (const auto& l : c.chain.fixed_losses)
    losses.push_back({{"label", l.label}, {"transmittance", l.transmittance}});
  j["chain"] = {{"calibration_table", c.chain.calibration_table
                                          ? json(file_sha256_hex(*c.chain.calibration_table))
                                          : json(nullptr)},
                {"fixed_losses", losses},
                {"coupling", c.chain.coupling},
                {"bend_loss", c.chain.bend_loss}};
  j["shaper"] = {{"peaking_time", c.shaper.peaking_time}, {"stages", c.shaper.stages}};
  j["spectro"] = {{"bin_width", c.spectro.bin_width},
                  {"range_ev", {c.spectro.range_lo, c.spectro.range_hi}},
                  {"n_peaks", c.spectro.n_peaks},
                  {"k_sigma", c.spectro.k_sigma},
                  {"window_sigma_ev", c.spectro.window_sigma_ev ? json(*c.spectro.window_sigma_ev)
                                                                : json(nullptr)},
                  {"trigger_threshold_ev", c.spectro.trigger_threshold_ev},
                  {"dead_time", c.spectro.dead_time},
                  {"pre_trigger", c.spectro.pre_trigger},
                  {"post_trigger", c.spectro.post_trigger}};
  return j.dump();
}

daq::ConfigHash config_hash(const ExperimentConfig& cfg) { return sha256(canonical_json(cfg)); }

}  // namespace tesl::config

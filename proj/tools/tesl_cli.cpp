// tesl: simulate, analyze and report TES photon-counting runs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tesl/config.hpp"
#include "tesl/efficiency.hpp"
#include "tesl/error.hpp"
#include "tesl/optics.hpp"
#include "tesl/pipeline.hpp"
#include "tesl/source.hpp"

using nlohmann::json;

namespace {

int fail(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
  return 2;
}

// "setpoint_dB, P_in_W, P_out_W" per line, '#' comments.
void read_meter_file(const std::string& path, std::vector<double>& setpoints,
                     std::vector<tesl::efficiency::MeterReading>& readings) {
  std::ifstream in(path);
  if (!in) tesl::raise(tesl::Errc::IoError, "cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream f(line);
    double sp = 0.0;
    tesl::efficiency::MeterReading r;
    if (!(f >> sp)) continue;
    if (!(f >> r.p_in >> r.p_out)) tesl::raise(tesl::Errc::ConfigError, "malformed meter record: " + line);
    setpoints.push_back(sp);
    readings.push_back(r);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TES photon-number-resolving detector simulator and analysis chain"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned threads = tesl::pipeline::default_threads();

  auto* sim = app.add_subcommand("simulate", "Synthesize trace files and a manifest");
  sim->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--out", out_dir, "Output directory (overrides config)");
  sim->add_option("-j,--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string manifest;
  auto* ana = app.add_subcommand("analyze", "Shape, histogram and count a simulated run");
  ana->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  ana->add_option("-m,--manifest", manifest, "Manifest (default <out>/manifest.json)");
  ana->add_option("-o,--out", out_dir, "Output directory (overrides config)");
  ana->add_option("-j,--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string analysis;
  auto* rep = app.add_subcommand("report", "Efficiency report from an analysis");
  rep->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  rep->add_option("-a,--analysis", analysis, "Analysis file (default <out>/analysis.json)");
  rep->add_option("-o,--out", out_dir, "Output directory (overrides config)");

  std::string readings_path, table_path;
  tesl::efficiency::MeterRange range;
  auto* cal = app.add_subcommand("calibrate", "Attenuator table from power-meter readings");
  cal->add_option("readings", readings_path, "CSV: setpoint_dB, P_in_W, P_out_W")->required()->check(CLI::ExistingFile);
  cal->add_option("-o,--out", table_path, "Calibration table to write")->required();
  cal->add_option("--min-power", range.min_w, "Meter linear range floor (W)");
  cal->add_option("--max-power", range.max_w, "Meter linear range ceiling (W)");

  std::string stack_path;
  double wavelength = 1550.0;
  std::vector<double> optimize;
  auto* stk = app.add_subcommand("stack", "Reflectance, transmittance and per-layer absorption");
  stk->add_option("stack", stack_path, "Stack description file")->required()->check(CLI::ExistingFile);
  stk->add_option("-w,--wavelength", wavelength, "Wavelength (nm)");
  stk->add_option("--optimize", optimize, "SPACER TARGET LO_NM HI_NM: best spacer thickness")->expected(4);

  CLI11_PARSE(app, argc, argv);

  try {
    auto load = [&] {
      auto cfg = tesl::config::load_config(config_path);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      return cfg;
    };
    if (*sim) {
      std::cout << tesl::pipeline::run_simulate(load(), threads).string() << '\n';
    } else if (*ana) {
      const auto cfg = load();
      const auto m = manifest.empty() ? cfg.output_dir / "manifest.json" : std::filesystem::path(manifest);
      std::cout << tesl::pipeline::run_analyze(m, cfg, threads).string() << '\n';
    } else if (*rep) {
      const auto cfg = load();
      const auto a = analysis.empty() ? cfg.output_dir / "analysis.json" : std::filesystem::path(analysis);
      const auto path = tesl::pipeline::run_report(a, cfg);
      const json r = json::parse(std::ifstream(path));
      for (const auto& w : r["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
      std::cout << path.string() << '\n';
    } else if (*cal) {
      std::vector<double> setpoints;
      std::vector<tesl::efficiency::MeterReading> readings;
      read_meter_file(readings_path, setpoints, readings);
      const auto table = tesl::efficiency::calibrate_attenuators(setpoints, readings, range);
      tesl::source::save_calibration_table(table_path, table);
      std::cout << table_path << '\n';
    } else if (*stk) {
      auto stack = tesl::optics::load_stack(stack_path, wavelength);
      json out;
      if (!optimize.empty()) {
        const auto spacer = static_cast<std::size_t>(optimize[0]);
        const auto target = static_cast<std::size_t>(optimize[1]);
        const auto best = tesl::optics::optimize_spacer(stack, spacer, target, wavelength, optimize[2], optimize[3]);
        stack[spacer + 1].thickness_nm = best.thickness_nm;
        out["optimized_spacer_nm"] = best.thickness_nm;
      }
      const auto r = tesl::optics::stack_rta(stack, wavelength);
      out["wavelength_nm"] = wavelength;
      out["reflectance"] = r.reflectance;
      out["transmittance"] = r.transmittance;
      out["layers"] = json::array();
      for (std::size_t i = 0; i < r.absorption.size(); ++i)
        out["layers"].push_back({{"index", i},
                                 {"label", stack[i + 1].label},
                                 {"thickness_nm", stack[i + 1].thickness_nm},
                                 {"absorption", r.absorption[i]}});
      std::cout << out.dump(2) << '\n';
    }
  } catch (const tesl::Error& e) {
    return fail(std::string(tesl::errc_name(e.code())), e.what());
  } catch (const std::exception& e) {
    return fail("Internal", e.what());
  }
  return 0;
}

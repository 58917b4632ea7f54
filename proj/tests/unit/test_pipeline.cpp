#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "support/scratch.hpp"
#include "tesl/config.hpp"
#include "tesl/error.hpp"
#include "tesl/pipeline.hpp"

using namespace tesl;
using namespace tesl::testing;
using nlohmann::json;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidParams;
}

// Short CW run: 0.2 s calibration, 0.2 s background reference, two 0.2 s levels.
json small_cw(const ScratchDir& dir, std::uint64_t seed) {
  json c = base_config("cw", seed);
  c["output_dir"] = (dir / "run").string();
  c["daq"]["chunk_duration"] = 0.1;
  c["cw"] = {{"live_time", 0.2},
             {"calibration_duration", 0.2},
             {"levels", json::array({{{"power_at_a", 0.36e-6}, {"setpoints_db", {50, 50}}},
                                     {{"power_at_a", 0.72e-6}, {"setpoints_db", {50, 50}}}})}};
  c["dark"] = {{"reference_duration", 0.2}};
  return c;
}

}  // namespace

TEST_CASE("config parsing") {
  ScratchDir dir("cfg");
  auto c = base_config("pulsed", 1);
  CHECK_NOTHROW(config::load_config(write_config(dir, c)));

  auto no_seed = c;
  no_seed.erase("seed");
  CHECK(code_of([&] { config::load_config(write_config(dir, no_seed)); }) == Errc::ConfigError);

  auto unknown = c;
  unknown["daq"]["sample_rat"] = 1e6;
  CHECK(code_of([&] { config::load_config(write_config(dir, unknown)); }) == Errc::ConfigError);

  auto missing = c;
  missing["optics"]["stack"] = "no_such.stack";
  try {
    config::load_config(write_config(dir, missing));
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConfigError);
    CHECK(std::string(e.what()).find("no_such.stack") != std::string::npos);
  }

  // Comments and relative paths (resolved against the config directory).
  std::filesystem::copy(data_dir() / "bare_w_film.stack", dir / "film.stack");
  std::filesystem::copy(data_dir() / "w_dispersion.csv", dir / "w_dispersion.csv");
  auto rel = c;
  rel["optics"]["stack"] = "film.stack";
  rel["optics"]["absorber_layer"] = 0;
  write_text(dir / "rel.json", "// leading comment\n" + rel.dump(2) + "\n/* trailing */\n");
  const auto cfg = config::load_config(dir / "rel.json");
  CHECK(std::filesystem::equivalent(cfg.optics.stack, dir / "film.stack"));
  CHECK(pipeline::derive(cfg).stack_absorption == doctest::Approx(0.1702).epsilon(1e-3));

  auto cw_no_levels = c;
  cw_no_levels["mode"] = "cw";
  CHECK(code_of([&] { config::load_config(write_config(dir, cw_no_levels)); }) == Errc::ConfigError);
}

TEST_CASE("config hash: canonical, seed-sensitive, follows referenced files") {
  ScratchDir dir("hash");
  std::filesystem::copy(data_dir() / "bare_w_film.stack", dir / "film.stack");
  std::filesystem::copy(data_dir() / "w_dispersion.csv", dir / "w_dispersion.csv");
  auto c = base_config("pulsed", 5);
  c["optics"]["stack"] = "film.stack";
  c["optics"]["absorber_layer"] = 0;

  write_text(dir / "a.json", c.dump());
  write_text(dir / "b.json", "/* spacing and comments do not matter */\n" + c.dump(8));
  const auto ha = config::config_hash(config::load_config(dir / "a.json"));
  CHECK(ha == config::config_hash(config::load_config(dir / "b.json")));

  // Spelling out a default does not change the hash.
  auto explicit_default = c;
  explicit_default["daq"]["max_step"] = 20e-9;
  write_text(dir / "c.json", explicit_default.dump());
  CHECK(ha == config::config_hash(config::load_config(dir / "c.json")));

  auto reseeded = c;
  reseeded["seed"] = 6;
  write_text(dir / "d.json", reseeded.dump());
  CHECK(ha != config::config_hash(config::load_config(dir / "d.json")));

  // Editing the dispersion file reached through the stack changes the hash.
  std::ofstream(dir / "w_dispersion.csv", std::ios::app) << "# edited\n";
  CHECK(ha != config::config_hash(config::load_config(dir / "a.json")));

  CHECK(config::to_hex(config::sha256("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("derived chain efficiency") {
  ScratchDir dir("derive");
  const auto cfg = config::load_config(write_config(dir, base_config("pulsed", 1)));
  const auto d = pipeline::derive(cfg);
  CHECK(d.photon_energy_ev == doctest::Approx(0.79990).epsilon(1e-5));
  CHECK(d.true_efficiency == doctest::Approx(d.stack_absorption * 0.99 * 0.995 * 0.977).epsilon(1e-14));
  CHECK(d.bend_factor == 1.0);
}

TEST_CASE("dark mode without background synthesizes noise only") {
  ScratchDir dir("dark");
  auto c = base_config("dark", 3);
  c["background"]["rate_hz"] = 0;
  c["dark"] = {{"duration", 0.1}, {"reference_duration", 0.1}};
  const auto cfg = config::load_config(write_config(dir, c));
  const auto d = pipeline::derive(cfg);
  for (const auto& g : pipeline::plan_groups(cfg)) {
    if (g.kind != pipeline::GroupKind::Dark) continue;
    CHECK(pipeline::chunk_events(cfg, d, g, 0).empty());
    const auto t = pipeline::synthesize_chunk(cfg, d, g, 0);
    double s2 = 0;
    float peak = 0;
    for (float v : t.samples) s2 += double(v) * v, peak = std::max(peak, std::abs(v));
    CHECK(std::sqrt(s2 / t.samples.size()) == doctest::Approx(6e-9).epsilon(0.02));
    CHECK(peak < 7 * 6e-9);
    CHECK(t.config_hash == d.hash);
  }
}

TEST_CASE("file pipeline: determinism, corrupted chunk, hash checks") {
  ScratchDir dir("files");
  const auto c = small_cw(dir, 11);
  const auto cfg_path = write_config(dir, c);
  auto cfg = config::load_config(cfg_path);

  cfg.output_dir = dir / "one";
  pipeline::run_simulate(cfg, 1);
  pipeline::run_analyze(cfg.output_dir / "manifest.json", cfg, 1);
  pipeline::run_report(cfg.output_dir / "analysis.json", cfg);

  cfg.output_dir = dir / "three";
  pipeline::run_simulate(cfg, 3);
  pipeline::run_analyze(cfg.output_dir / "manifest.json", cfg, 3);
  pipeline::run_report(cfg.output_dir / "analysis.json", cfg);

  std::size_t traces = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "one" / "traces")) {
    ++traces;
    CHECK(read_bytes(e.path()) == read_bytes(dir / "three" / "traces" / e.path().filename()));
  }
  CHECK(traces == 8);
  for (const char* f : {"manifest.json", "analysis.json", "report.json", "histogram_level_0.csv"})
    CHECK(read_bytes(dir / "one" / f) == read_bytes(dir / "three" / f));

  const json report = json::parse(read_bytes(dir / "one" / "report.json"));
  CHECK(report["points"].size() == 2);
  CHECK(report["fit"].is_object());
  CHECK(report.contains("weighted_mean_eta"));
  CHECK(report["bell_threshold_pass"].get<bool>() == (report["weighted_mean_eta"].get<double>() > 0.83));
  CHECK(report["config_hash"] == config::to_hex(config::config_hash(cfg)));

  // Regenerating the report from the same analysis is byte-identical.
  const auto before = read_bytes(dir / "one" / "report.json");
  cfg.output_dir = dir / "one";
  pipeline::run_report(cfg.output_dir / "analysis.json", cfg);
  CHECK(read_bytes(dir / "one" / "report.json") == before);

  // A damaged trace is recorded and the rest of the run continues.
  const auto victim = dir / "one" / "traces" / "level_1_0001.tesl";
  REQUIRE(std::filesystem::exists(victim));
  std::filesystem::resize_file(victim, 40);
  pipeline::run_analyze(cfg.output_dir / "manifest.json", cfg, 1);
  const json an = json::parse(read_bytes(dir / "one" / "analysis.json"));
  REQUIRE(an["errors"].size() == 1);
  CHECK(an["errors"][0]["group"] == "level_1");
  CHECK(an["errors"][0]["chunk"] == 1);
  CHECK(an["groups"].size() == 3);  // dark_reference, level_0, level_1

  // Stages refuse inputs made under another configuration.
  auto other = c;
  other["seed"] = 12;
  auto cfg2 = config::load_config(write_config(dir, other, "other.json"));
  CHECK(code_of([&] { pipeline::run_analyze(dir / "one" / "manifest.json", cfg2, 1); }) == Errc::HashMismatch);
  CHECK(code_of([&] { pipeline::report_json(read_bytes(dir / "one" / "analysis.json"), cfg2); }) ==
        Errc::HashMismatch);
}

TEST_CASE("report with a single power level skips the fit with a warning") {
  ScratchDir dir("single");
  auto c = small_cw(dir, 21);
  c["cw"]["levels"] = json::array({{{"power_at_a", 0.72e-6}, {"setpoints_db", {50, 50}}}});
  const auto cfg = config::load_config(write_config(dir, c));
  const auto an = pipeline::analysis_json(pipeline::analyze_in_memory(cfg, 1));
  const json r = json::parse(pipeline::report_json(an, cfg));
  CHECK(r["fit"].is_null());
  REQUIRE(r["warnings"].size() == 1);
  CHECK(r["warnings"][0].get<std::string>().rfind("DegenerateAbscissa", 0) == 0);
  CHECK(r["points"].size() == 1);
}

#include <doctest.h>

#include <cstdio>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "support/scratch.hpp"

using namespace tesl::testing;
using nlohmann::json;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

Run run(const ScratchDir& dir, const std::string& args) {
  const auto err_path = dir / "stderr.txt";
  const std::string cmd = std::string(TESL_CLI) + " " + args + " 2>" + err_path.string();
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  r.err = read_bytes(err_path);
  return r;
}

}  // namespace

TEST_CASE("cli: stack subcommand prints R, T and layer absorption") {
  ScratchDir dir("cli_stack");
  const auto r = run(dir, "stack " + (data_dir() / "cavity.stack").string());
  REQUIRE(r.status == 0);
  const json j = json::parse(r.out);
  double sum = j["reflectance"].get<double>() + j["transmittance"].get<double>();
  for (const auto& l : j["layers"]) sum += l["absorption"].get<double>();
  CHECK(std::abs(sum - 1.0) < 1e-10);
  CHECK(j["layers"][1]["label"] == "W");
  CHECK(j["layers"][1]["absorption"].get<double>() >= 0.90);

  const auto o = run(dir, "stack " + (data_dir() / "cavity.stack").string() + " --optimize 2 1 50 650");
  REQUIRE(o.status == 0);
  const json jo = json::parse(o.out);
  CHECK(jo["layers"][1]["absorption"].get<double>() >= j["layers"][1]["absorption"].get<double>() - 1e-12);
}

TEST_CASE("cli: errors are machine-readable with a nonzero exit") {
  ScratchDir dir("cli_err");
  auto c = base_config("pulsed", 1);
  c["optics"]["stack"] = (dir / "missing.stack").string();
  const auto cfg = write_config(dir, c);
  const auto r = run(dir, "simulate -c " + cfg.string());
  CHECK(r.status == 2);
  const json e = json::parse(r.err);
  CHECK(e["error"] == "ConfigError");
  CHECK(e["message"].get<std::string>().find("missing.stack") != std::string::npos);

  write_text(dir / "meter.csv", "0, 1e-4, 1e-4\n10, 1e-12, 1e-13\n");
  const auto cal = run(dir, "calibrate " + (dir / "meter.csv").string() + " -o " + (dir / "t.csv").string());
  CHECK(cal.status == 2);
  CHECK(json::parse(cal.err)["error"] == "OutOfLinearRange");

  const auto bad = run(dir, "analyze -c " + cfg.string());
  CHECK(bad.status != 0);
}

TEST_CASE("cli: calibrate writes a table") {
  ScratchDir dir("cli_cal");
  write_text(dir / "meter.csv", "# setpoint, P_in, P_out\n0, 1e-4, 1e-4\n10, 1e-4, 1e-5\n");
  const auto r = run(dir, "calibrate " + (dir / "meter.csv").string() + " -o " + (dir / "t.csv").string());
  REQUIRE(r.status == 0);
  const auto text = read_bytes(dir / "t.csv");
  CHECK(text.find("10") != std::string::npos);
  CHECK(text.find("0.1") != std::string::npos);
}

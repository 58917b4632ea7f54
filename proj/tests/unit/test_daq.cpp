#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "tesl/daq.hpp"
#include "tesl/dsp.hpp"
#include "tesl/error.hpp"
#include "tesl/tes.hpp"

using namespace tesl;
using namespace tesl::daq;

namespace {

std::filesystem::path tmp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Errc code_of(const std::filesystem::path& p) {
  try {
    trace_read(p);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidParams;
}

std::vector<double> to_double(const Trace& t) { return {t.samples.begin(), t.samples.end()}; }

}  // namespace

TEST_CASE("synthesize_trace: quiet baseline and positive pulses") {
  const tes::TesParams p;
  const double i_eq = tes::current(p, tes::equilibrium(p).t_e);
  const auto quiet = synthesize_trace(p, {}, 1e-3, 10e6, 0.0, 1);
  REQUIRE(quiet.samples.size() == 10000);
  for (float s : quiet.samples) CHECK(std::abs(s) <= 1e-9 * i_eq);

  const std::vector<PhotonEvent> ev{{20e-6, 0.8, Origin::Signal}};
  const auto a = synthesize_trace(p, ev, 100e-6, 10e6, 0.0, 1);
  const auto b = synthesize_trace(p, ev, 100e-6, 10e6, 0.0, 1);
  CHECK(a == b);
  float peak = 0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    if (a.samples[i] > peak) peak = a.samples[i], at = i;
  CHECK(peak > 0.0f);
  CHECK(at == 200);
  for (std::size_t i = 0; i < 200; ++i) CHECK(std::abs(a.samples[i]) <= 1e-9 * i_eq);
  for (std::size_t i = 200; i < a.samples.size(); ++i) CHECK(a.samples[i] >= 0.0f);
  // Smooth monotone recovery after the deposit.
  for (std::size_t i = 201; i < a.samples.size(); ++i) CHECK(a.samples[i] <= a.samples[i - 1]);
}

TEST_CASE("synthesize_trace: white noise level and seed independence") {
  const tes::TesParams p;
  const auto a = synthesize_trace(p, {}, 0.02, 10e6, 6e-9, 11);
  const auto b = synthesize_trace(p, {}, 0.02, 10e6, 6e-9, 12);
  double s2 = 0, sab = 0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    s2 += double(a.samples[i]) * a.samples[i];
    sab += double(a.samples[i]) * b.samples[i];
  }
  const double n = static_cast<double>(a.samples.size());
  CHECK(std::sqrt(s2 / n) == doctest::Approx(6e-9).epsilon(0.01));
  CHECK(std::abs(sab / s2) < 4.0 / std::sqrt(n));
  CHECK(a.seed == 11);
  CHECK(synthesize_trace(p, {}, 0.02, 10e6, 6e-9, 11) == a);
}

TEST_CASE("synthesize_trace: sample rate bound") {
  const tes::TesParams p;
  try {
    synthesize_trace(p, {}, 1e-3, 1e5, 0.0, 1);
    FAIL("expected SampleRateTooLow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SampleRateTooLow);
  }
}

TEST_CASE("segment_pulsed: count, tiling, phase") {
  std::vector<double> x(1'000'000, 0.0);  // 0.1 s at 10 MHz
  const auto w = segment_pulsed(x, 10e6, 50e3, 0.0, 2e-6);
  CHECK(w.size() == 5000);
  for (std::size_t k = 1; k < w.size(); ++k) {
    CHECK(w[k].first_index == w[k - 1].first_index + w[k - 1].samples.size());
    CHECK(w[k].expected_arrival == doctest::Approx(k * 20e-6).epsilon(1e-12));
  }
  CHECK(w.front().first_index == 0);
  CHECK(w.back().first_index + w.back().samples.size() == x.size());

  const auto shifted = segment_pulsed(x, 10e6, 50e3, 20e-6, 2e-6);
  REQUIRE(shifted.size() == w.size() - 1);
  for (std::size_t k = 0; k < shifted.size(); ++k) {
    CHECK(shifted[k].first_index == w[k + 1].first_index);
    CHECK(shifted[k].samples.size() == w[k + 1].samples.size());
  }

  try {
    segment_pulsed(x, 10e6, 200e3, 0.0, 2e-6);
    FAIL("expected WindowTooShort");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::WindowTooShort);
  }
}

TEST_CASE("segment_pulsed of a synthesized trace gives floor(duration * rate) windows") {
  const tes::TesParams p;
  for (double d : {0.01, 0.0123, 0.02}) {
    const auto t = synthesize_trace(p, {}, d, 10e6, 6e-9, 3);
    const auto x = to_double(t);
    CHECK(segment_pulsed(x, 10e6, 50e3, 0.0, 2e-6).size() ==
          static_cast<std::size_t>(std::floor(d * 50e3 + 1e-9)));
  }
}

TEST_CASE("trigger_cw: dead time") {
  const tes::TesParams p;
  const dsp::ShaperConfig sh;
  TriggerConfig cfg;
  cfg.threshold = 10e-9;

  std::vector<double> zero(5000, 0.0);
  CHECK(trigger_cw(zero, 10e6, cfg).empty());

  auto shaped = [&](std::vector<PhotonEvent> ev) {
    return dsp::shape(synthesize_trace(p, ev, 200e-6, 10e6, 0.0, 1).samples, 10e6, sh);
  };
  const auto far = shaped({{20e-6, 0.8, Origin::Signal}, {100e-6, 0.8, Origin::Signal}});
  const auto w2 = trigger_cw(far, 10e6, cfg);
  REQUIRE(w2.size() == 2);
  CHECK(w2[0].expected_arrival < w2[1].expected_arrival);

  const auto near = shaped({{20e-6, 0.8, Origin::Signal}, {24e-6, 0.8, Origin::Signal}});
  CHECK(trigger_cw(near, 10e6, cfg).size() == 1);
}

TEST_CASE("trace file round trip") {
  Trace t;
  t.sample_rate = 10e6;
  t.t0 = 3.0;
  t.seed = 0xdeadbeefcafef00dULL;
  for (int i = 0; i < 32; ++i) t.config_hash[i] = static_cast<std::uint8_t>(i * 7);
  t.samples = {0.0f, -1.5e-9f, 3.25e-8f, std::numeric_limits<float>::denorm_min(), -0.0f};
  const auto path = tmp("tesl_roundtrip.tesl");
  trace_write(t, path);
  const auto back = trace_read(path);
  CHECK(back == t);
  CHECK(std::signbit(back.samples[4]));
  CHECK(std::filesystem::file_size(path) == kTraceHeaderBytes + 4 * t.samples.size());

  const auto bytes = slurp(path);
  CHECK(std::memcmp(bytes.data(), "TESL", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);

  Trace empty;
  empty.sample_rate = 1e6;
  trace_write(empty, path);
  CHECK(trace_read(path) == empty);
  CHECK(std::filesystem::file_size(path) == kTraceHeaderBytes);
  std::filesystem::remove(path);
}

TEST_CASE("trace file corruption is always detected") {
  Trace t;
  t.sample_rate = 10e6;
  t.samples.assign(100, 1e-9f);
  const auto path = tmp("tesl_corrupt.tesl");
  trace_write(t, path);
  const auto good = slurp(path);

  for (std::size_t cut = 0; cut < good.size(); ++cut) {
    CAPTURE(cut);
    spit(path, std::vector<char>(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut)));
    const Errc c = code_of(path);
    CHECK((c == Errc::BadMagic || c == Errc::UnsupportedVersion || c == Errc::IoError));
  }

  auto bad = good;
  bad[0] = 'X';
  spit(path, bad);
  CHECK(code_of(path) == Errc::BadMagic);

  bad = good;
  bad[4] = 2;
  spit(path, bad);
  CHECK(code_of(path) == Errc::UnsupportedVersion);

  bad = good;
  bad.push_back(0);
  spit(path, bad);
  CHECK(code_of(path) == Errc::IoError);

  CHECK(code_of(tmp("tesl_does_not_exist.tesl")) == Errc::IoError);
  std::filesystem::remove(path);
}

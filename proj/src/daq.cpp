#include "tesl/daq.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tesl/error.hpp"
#include "tesl/rng.hpp"
#include "tesl/simd/kernels.hpp"

namespace tesl::daq {

Trace synthesize_trace(const tes::TesParams& params, std::span<const PhotonEvent> events,
                       double duration, double sample_rate, double noise_sigma, std::uint64_t seed,
                       const SynthesisOptions& options) {
  const double tau = tes::linearized_decay_time(params);
  if (!(sample_rate >= 10.0 / tau))
    raise(Errc::SampleRateTooLow, "sample rate below 10 / tau_eff");
  if (!(noise_sigma >= 0.0)) raise(Errc::InvalidParams, "noise sigma must be >= 0");

  const double period = 1.0 / sample_rate;
  const auto substeps = static_cast<std::size_t>(std::ceil(period / options.max_step - 1e-9));
  const double dt = period / static_cast<double>(substeps);
  tes::TemperatureSeries series = tes::simulate(params, events, duration, dt, substeps);

  // Convert temperatures to baseline-subtracted current in place.
  const double t_eq = tes::equilibrium(params).t_e;
  const double i_eq = tes::current(params, t_eq);
  std::vector<double>& signal = series.t_e;
  double last_t = t_eq;
  double last_value = 0.0;
  for (double& v : signal) {
    if (v != last_t) {
      last_t = v;
      last_value = i_eq - tes::current(params, v);
    }
    v = last_value;
  }

  Trace trace;
  trace.sample_rate = sample_rate;
  trace.seed = seed;
  trace.samples.resize(signal.size());

  const auto& k = simd::active();
  CounterRng rng(seed);
  constexpr std::size_t kBlock = 1 << 16;
  std::vector<double> noise(std::min(kBlock, signal.size()));
  for (std::size_t start = 0; start < signal.size(); start += kBlock) {
    const std::size_t len = std::min(kBlock, signal.size() - start);
    std::span<double> block(noise.data(), len);
    if (noise_sigma > 0.0)
      rng.fill_normal(block);
    else
      std::fill(block.begin(), block.end(), 0.0);
    k.add_noise_to_f32(std::span<const double>(signal).subspan(start, len), block, noise_sigma,
                       std::span<float>(trace.samples).subspan(start, len));
  }
  return trace;
}

std::vector<Window> segment_pulsed(std::span<const double> samples, double sample_rate,
                                   double rep_rate, double phase, double peaking_time) {
  if (!(rep_rate > 0.0) || !(sample_rate > 0.0))
    raise(Errc::InvalidRate, "segmenting needs positive sample and repetition rates");
  const double period = 1.0 / rep_rate;
  if (period < 5.0 * peaking_time)
    raise(Errc::WindowTooShort, "laser period shorter than 5 shaper peaking times");

  std::vector<Window> windows;
  auto index_of = [&](std::uint64_t k) {
    return std::llround((phase + static_cast<double>(k) * period) * sample_rate);
  };
  for (std::uint64_t k = 0;; ++k) {
    const long long begin = index_of(k);
    const long long end = index_of(k + 1);
    if (begin < 0) continue;
    if (end > static_cast<long long>(samples.size())) break;
    Window w;
    w.first_index = static_cast<std::size_t>(begin);
    w.samples = samples.subspan(w.first_index, static_cast<std::size_t>(end - begin));
    w.sample_rate = sample_rate;
    w.start_time = static_cast<double>(begin) / sample_rate;
    w.expected_arrival = phase + static_cast<double>(k) * period;
    windows.push_back(w);
  }
  return windows;
}

std::vector<Window> trigger_cw(std::span<const double> filtered, double sample_rate,
                               const TriggerConfig& config) {
  if (!(config.threshold > 0.0)) raise(Errc::InvalidParams, "trigger threshold must be positive");
  const auto pre = static_cast<std::size_t>(std::llround(config.pre * sample_rate));
  const auto post = static_cast<std::size_t>(std::llround(config.post * sample_rate));
  const auto dead = static_cast<std::size_t>(std::llround(config.dead_time * sample_rate));
  const auto& k = simd::active();

  std::vector<Window> windows;
  std::size_t from = 0;
  while (from + 1 < filtered.size()) {
    const std::size_t hit = from + k.first_crossing(filtered.subspan(from), config.threshold);
    if (hit >= filtered.size()) break;
    if (hit >= pre && hit + post <= filtered.size()) {
      Window w;
      w.first_index = hit - pre;
      w.samples = filtered.subspan(w.first_index, pre + post);
      w.sample_rate = sample_rate;
      w.start_time = static_cast<double>(w.first_index) / sample_rate;
      w.expected_arrival = static_cast<double>(hit) / sample_rate;
      windows.push_back(w);
    }
    // The crossing search compares against the previous sample, so resume
    // one sample before the end of the dead time.
    from = std::max(hit, hit + std::max<std::size_t>(dead, 1) - 1);
  }
  return windows;
}

namespace {

template <class T>
void put_le(std::vector<char>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void trace_write(const Trace& trace, const std::filesystem::path& path) {
  std::vector<char> bytes;
  bytes.reserve(kTraceHeaderBytes + 4 * trace.samples.size());
  bytes.insert(bytes.end(), {'T', 'E', 'S', 'L'});
  put_le<std::uint16_t>(bytes, 1);
  put_le<double>(bytes, trace.sample_rate);
  put_le<double>(bytes, trace.t0);
  put_le<std::uint64_t>(bytes, trace.samples.size());
  put_le<std::uint64_t>(bytes, trace.seed);
  bytes.insert(bytes.end(), trace.config_hash.begin(), trace.config_hash.end());
  for (float s : trace.samples) put_le<float>(bytes, s);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::IoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(Errc::IoError, "write failed for " + path.string());
}

Trace trace_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "TESL", 4) != 0)
    raise(Errc::BadMagic, path.string() + " is not a trace file");
  if (bytes.size() < 6) raise(Errc::IoError, path.string() + ": truncated header");
  const auto version = get_le<std::uint16_t>(bytes.data() + 4);
  if (version != 1)
    raise(Errc::UnsupportedVersion, path.string() + ": version " + std::to_string(version));
  if (bytes.size() < kTraceHeaderBytes) raise(Errc::IoError, path.string() + ": truncated header");

  Trace trace;
  const unsigned char* p = bytes.data() + 6;
  trace.sample_rate = get_le<double>(p);
  trace.t0 = get_le<double>(p + 8);
  const auto n = get_le<std::uint64_t>(p + 16);
  trace.seed = get_le<std::uint64_t>(p + 24);
  std::memcpy(trace.config_hash.data(), p + 32, 32);
  if (n > (bytes.size() - kTraceHeaderBytes) / 4 || bytes.size() != kTraceHeaderBytes + 4 * n)
    raise(Errc::IoError, path.string() + ": payload size does not match header");
  if (!(trace.sample_rate > 0.0)) raise(Errc::IoError, path.string() + ": bad sample rate");

  trace.samples.resize(n);
  const unsigned char* payload = bytes.data() + kTraceHeaderBytes;
  for (std::uint64_t i = 0; i < n; ++i) {
    const float v = get_le<float>(payload + 4 * i);
    if (!std::isfinite(v)) raise(Errc::IoError, path.string() + ": non-finite sample");
    trace.samples[i] = v;
  }
  return trace;
}

}  // namespace tesl::daq

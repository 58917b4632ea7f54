#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace tesl {

// SplitMix64 output function. Counter-based: the n-th draw of a stream is
// mix(key + (n + 1) * golden), so any draw is addressable without state.
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream key from a master seed and a label such as "trace/3" or
// "source/background". Independent of thread scheduling by construction.
std::uint64_t derive_key(std::uint64_t master_seed, std::string_view label) noexcept;

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * kGolden); }

  // Uniform on the open interval (0, 1), 52-bit resolution.
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1p-52;
  }

  double exponential(double rate) noexcept;
  std::uint64_t poisson(double mean) noexcept;
  double normal() noexcept;

  // Bulk standard normals through the SIMD kernel table; advances the
  // counter by out.size() rounded up to even.
  void fill_normal(std::span<double> out) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace tesl

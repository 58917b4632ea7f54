#include "simd/scalar_math.hpp"
#include "tesl/simd/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define TESL_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#endif

namespace tesl::simd::detail {

#if TESL_HAVE_AVX2_KERNELS

#define TESL_AVX2 __attribute__((target("avx2")))

namespace {

TESL_AVX2 inline __m256i mullo64(__m256i a, __m256i b) {
  const __m256i lo = _mm256_mul_epu32(a, b);
  const __m256i c1 = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), b);
  const __m256i c2 = _mm256_mul_epu32(a, _mm256_srli_epi64(b, 32));
  return _mm256_add_epi64(lo, _mm256_slli_epi64(_mm256_add_epi64(c1, c2), 32));
}

TESL_AVX2 inline __m256i mix64(__m256i z) {
  const __m256i m1 = _mm256_set1_epi64x(static_cast<long long>(0xbf58476d1ce4e5b9ULL));
  const __m256i m2 = _mm256_set1_epi64x(static_cast<long long>(0x94d049bb133111ebULL));
  z = mullo64(_mm256_xor_si256(z, _mm256_srli_epi64(z, 30)), m1);
  z = mullo64(_mm256_xor_si256(z, _mm256_srli_epi64(z, 27)), m2);
  return _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
}

// Exact conversion of integers below 2^52 held in 64-bit lanes.
TESL_AVX2 inline __m256d u52_to_double(__m256i v) {
  const __m256i magic_bits = _mm256_set1_epi64x(0x4330000000000000LL);
  const __m256d magic = _mm256_castsi256_pd(magic_bits);
  return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(v, magic_bits)), magic);
}

TESL_AVX2 inline __m256d uniform_from_state(__m256i state) {
  const __m256i bits = _mm256_srli_epi64(mix64(state), 12);
  return _mm256_mul_pd(_mm256_add_pd(u52_to_double(bits), _mm256_set1_pd(0.5)),
                       _mm256_set1_pd(0x1p-52));
}

TESL_AVX2 inline __m256d horner(__m256d x, const double* coef, int count) {
  __m256d p = _mm256_set1_pd(coef[0]);
  for (int i = 1; i < count; ++i) p = _mm256_add_pd(_mm256_mul_pd(p, x), _mm256_set1_pd(coef[i]));
  return p;
}

TESL_AVX2 inline __m256d log_avx2(__m256d u) {
  const __m256i bits = _mm256_castpd_si256(u);
  const __m256i biased = _mm256_and_si256(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(0x7ff));
  __m256d e = _mm256_sub_pd(u52_to_double(biased), _mm256_set1_pd(1023.0));
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000fffffffffffffLL)),
                      _mm256_set1_epi64x(0x3ff0000000000000LL)));
  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(poly::kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_blendv_pd(e, _mm256_add_pd(e, _mm256_set1_pd(1.0)), big);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d p = horner(_mm256_mul_pd(s, s), poly::kLogCoef, 9);
  return _mm256_add_pd(_mm256_mul_pd(e, _mm256_set1_pd(poly::kLn2)),
                       _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), s), p));
}

TESL_AVX2 inline void sincos_turns_avx2(__m256d v, __m256d& c, __m256d& s) {
  const __m256d q =
      _mm256_floor_pd(_mm256_add_pd(_mm256_mul_pd(v, _mm256_set1_pd(4.0)), _mm256_set1_pd(0.5)));
  const __m256d r = _mm256_sub_pd(v, _mm256_mul_pd(q, _mm256_set1_pd(0.25)));
  const __m256d x = _mm256_mul_pd(r, _mm256_set1_pd(poly::kTwoPi));
  const __m256d x2 = _mm256_mul_pd(x, x);
  const __m256d sp = _mm256_mul_pd(horner(x2, poly::kSinCoef, 8), x);
  const __m256d cp = horner(x2, poly::kCosCoef, 9);

  const __m256d q1 = _mm256_cmp_pd(q, _mm256_set1_pd(1.0), _CMP_EQ_OQ);
  const __m256d q2 = _mm256_cmp_pd(q, _mm256_set1_pd(2.0), _CMP_EQ_OQ);
  const __m256d q3 = _mm256_cmp_pd(q, _mm256_set1_pd(3.0), _CMP_EQ_OQ);
  const __m256d swap = _mm256_or_pd(q1, q3);
  const __m256d sign = _mm256_set1_pd(-0.0);
  c = _mm256_blendv_pd(cp, sp, swap);
  s = _mm256_blendv_pd(sp, cp, swap);
  c = _mm256_blendv_pd(c, _mm256_xor_pd(c, sign), _mm256_or_pd(q1, q2));
  s = _mm256_blendv_pd(s, _mm256_xor_pd(s, sign), _mm256_or_pd(q2, q3));
}

TESL_AVX2 inline __m256d exp_avx2(__m256d t) {
  t = _mm256_min_pd(_mm256_max_pd(t, _mm256_set1_pd(-poly::kExpClamp)),
                    _mm256_set1_pd(poly::kExpClamp));
  const __m256d k = _mm256_floor_pd(
      _mm256_add_pd(_mm256_mul_pd(t, _mm256_set1_pd(poly::kLog2e)), _mm256_set1_pd(0.5)));
  const __m256d r = _mm256_sub_pd(_mm256_sub_pd(t, _mm256_mul_pd(k, _mm256_set1_pd(poly::kLn2Hi))),
                                  _mm256_mul_pd(k, _mm256_set1_pd(poly::kLn2Lo)));
  const __m256d p = horner(r, poly::kExpCoef, 14);
  // k is integral with |k| < 2^51: adding 1.5 * 2^52 leaves it in the low mantissa bits.
  const __m256d shifter = _mm256_set1_pd(0x1.8p52);
  const __m256i ki = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(k, shifter)),
                                      _mm256_castpd_si256(shifter));
  const __m256i scale = _mm256_slli_epi64(_mm256_add_epi64(ki, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(scale));
}

TESL_AVX2 __m256i lane_states(std::uint64_t key, std::uint64_t first, std::uint64_t stride) {
  return _mm256_set_epi64x(static_cast<long long>(key + (first + 3 * stride) * kGolden),
                           static_cast<long long>(key + (first + 2 * stride) * kGolden),
                           static_cast<long long>(key + (first + stride) * kGolden),
                           static_cast<long long>(key + first * kGolden));
}

TESL_AVX2 void uniform_fill(std::uint64_t key, std::uint64_t counter0, std::span<double> out) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  if (n >= 4) {
    __m256i state = lane_states(key, counter0 + 1, 1);
    const __m256i step = _mm256_set1_epi64x(static_cast<long long>(4 * kGolden));
    for (; i + 4 <= n; i += 4) {
      _mm256_storeu_pd(out.data() + i, uniform_from_state(state));
      state = _mm256_add_epi64(state, step);
    }
  }
  for (; i < n; ++i) out[i] = scalar::uniform_at(key, counter0 + i + 1);
}

TESL_AVX2 void normal_fill(std::uint64_t key, std::uint64_t counter0, std::span<double> out) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  if (n >= 8) {
    __m256i state1 = lane_states(key, counter0 + 1, 2);
    __m256i state2 = lane_states(key, counter0 + 2, 2);
    const __m256i step = _mm256_set1_epi64x(static_cast<long long>(8 * kGolden));
    for (; i + 8 <= n; i += 8) {
      const __m256d u1 = uniform_from_state(state1);
      const __m256d u2 = uniform_from_state(state2);
      state1 = _mm256_add_epi64(state1, step);
      state2 = _mm256_add_epi64(state2, step);
      const __m256d radius =
          _mm256_sqrt_pd(_mm256_mul_pd(_mm256_set1_pd(-2.0), log_avx2(u1)));
      __m256d c, s;
      sincos_turns_avx2(u2, c, s);
      const __m256d z0 = _mm256_mul_pd(radius, c);
      const __m256d z1 = _mm256_mul_pd(radius, s);
      const __m256d lo = _mm256_unpacklo_pd(z0, z1);
      const __m256d hi = _mm256_unpackhi_pd(z0, z1);
      _mm256_storeu_pd(out.data() + i, _mm256_permute2f128_pd(lo, hi, 0x20));
      _mm256_storeu_pd(out.data() + i + 4, _mm256_permute2f128_pd(lo, hi, 0x31));
    }
  }
  if (i < n) scalar_kernels().normal_fill(key, counter0 + i, out.subspan(i));
}

TESL_AVX2 void add_noise_to_f32(std::span<const double> signal, std::span<const double> noise,
                                double sigma, std::span<float> out) {
  const std::size_t n = out.size();
  const __m256d sig = _mm256_set1_pd(sigma);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_add_pd(_mm256_loadu_pd(signal.data() + i),
                                    _mm256_mul_pd(sig, _mm256_loadu_pd(noise.data() + i)));
    _mm_storeu_ps(out.data() + i, _mm256_cvtpd_ps(v));
  }
  for (; i < n; ++i) out[i] = static_cast<float>(signal[i] + sigma * noise[i]);
}

TESL_AVX2 std::size_t argmax(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 8) return scalar_kernels().argmax(x);
  __m256d vmax = _mm256_loadu_pd(x.data());
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) vmax = _mm256_max_pd(vmax, _mm256_loadu_pd(x.data() + i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vmax);
  double best = lanes[0];
  for (int l = 1; l < 4; ++l)
    if (lanes[l] > best) best = lanes[l];
  for (; i < n; ++i)
    if (x[i] > best) best = x[i];
  const __m256d target = _mm256_set1_pd(best);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(x.data() + j), target, _CMP_EQ_OQ));
    if (mask) return j + static_cast<std::size_t>(__builtin_ctz(static_cast<unsigned>(mask)));
  }
  for (; j < n; ++j)
    if (x[j] == best) return j;
  return 0;
}

TESL_AVX2 std::size_t first_crossing(std::span<const double> x, double threshold) {
  const std::size_t n = x.size();
  const __m256d thr = _mm256_set1_pd(threshold);
  std::size_t i = 1;
  for (; i + 4 <= n; i += 4) {
    const __m256d prev = _mm256_loadu_pd(x.data() + i - 1);
    const __m256d cur = _mm256_loadu_pd(x.data() + i);
    const __m256d hit =
        _mm256_and_pd(_mm256_cmp_pd(prev, thr, _CMP_LE_OQ), _mm256_cmp_pd(cur, thr, _CMP_GT_OQ));
    const int mask = _mm256_movemask_pd(hit);
    if (mask) return i + static_cast<std::size_t>(__builtin_ctz(static_cast<unsigned>(mask)));
  }
  for (; i < n; ++i)
    if (x[i - 1] <= threshold && x[i] > threshold) return i;
  return n;
}

TESL_AVX2 GaussNormalEq gauss_normal_eq(std::span<const double> x, std::span<const double> y,
                                        double amp, double mean, double sigma) {
  const double inv_sigma_s = 1.0 / sigma;
  const __m256d inv_sigma = _mm256_set1_pd(inv_sigma_s);
  const __m256d vamp = _mm256_set1_pd(amp);
  const __m256d vmean = _mm256_set1_pd(mean);
  __m256d acc[10];
  for (auto& a : acc) a = _mm256_setzero_pd();
  const std::size_t n = x.size();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d z = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x.data() + i), vmean), inv_sigma);
    const __m256d z2 = _mm256_mul_pd(z, z);
    const __m256d g = exp_avx2(_mm256_mul_pd(_mm256_set1_pd(-0.5), z2));
    const __m256d f = _mm256_mul_pd(vamp, g);
    const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(y.data() + i), f);
    const __m256d dm = _mm256_mul_pd(_mm256_mul_pd(f, z), inv_sigma);
    const __m256d ds = _mm256_mul_pd(_mm256_mul_pd(f, z2), inv_sigma);
    const __m256d terms[10] = {_mm256_mul_pd(g, g),   _mm256_mul_pd(g, dm),  _mm256_mul_pd(g, ds),
                               _mm256_mul_pd(dm, dm), _mm256_mul_pd(dm, ds), _mm256_mul_pd(ds, ds),
                               _mm256_mul_pd(g, r),   _mm256_mul_pd(dm, r),  _mm256_mul_pd(ds, r),
                               _mm256_mul_pd(r, r)};
    for (int k = 0; k < 10; ++k) acc[k] = _mm256_add_pd(acc[k], terms[k]);
  }
  double tail[10] = {};
  for (std::size_t i = n4; i < n; ++i) {
    const scalar::Terms t = scalar::gauss_terms(x[i], y[i], amp, mean, inv_sigma_s);
    const double v[10] = {t.jaa, t.jam, t.jas, t.jmm, t.jms, t.jss, t.ra, t.rm, t.rs, t.rr};
    for (int k = 0; k < 10; ++k) tail[k] = tail[k] + v[k];
  }
  double sum[10];
  alignas(32) double lanes[4];
  for (int k = 0; k < 10; ++k) {
    _mm256_store_pd(lanes, acc[k]);
    sum[k] = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + tail[k];
  }
  GaussNormalEq eq;
  for (int k = 0; k < 6; ++k) eq.jtj[k] = sum[k];
  for (int k = 0; k < 3; ++k) eq.jtr[k] = sum[6 + k];
  eq.chi2 = sum[9];
  return eq;
}

}  // namespace

const Kernels* avx2_table() noexcept {
  static const Kernels table{Isa::Avx2, &uniform_fill,   &normal_fill,    &add_noise_to_f32,
                             &argmax,   &first_crossing, &gauss_normal_eq};
  if (!__builtin_cpu_supports("avx2")) return nullptr;
  return &table;
}

#else

const Kernels* avx2_table() noexcept { return nullptr; }

#endif

}  // namespace tesl::simd::detail

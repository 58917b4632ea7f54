#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "tesl/rng.hpp"
#include "tesl/simd/kernels.hpp"

using namespace tesl;
using namespace tesl::simd;

namespace {

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool bits_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 1000, 4099};

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(g);
  return v;
}

}  // namespace

TEST_CASE("scalar uniform and normal fills match the counter rng") {
  const auto& k = scalar_kernels();
  std::vector<double> u(101);
  k.uniform_fill(77, 5, u);
  CounterRng r(77, 5);
  for (double x : u) CHECK(bits_equal(x, r.uniform()));

  std::vector<double> n(11);
  k.normal_fill(77, 0, n);
  CounterRng rn(77);
  std::vector<double> via_rng(11);
  rn.fill_normal(via_rng);
  CHECK(bits_equal(n, via_rng));
  CHECK(rn.counter() == 12);
  double s2 = 0;
  std::vector<double> big(200001);
  k.normal_fill(123, 0, big);
  for (double x : big) s2 += x * x;
  CHECK(s2 / big.size() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("exp_poly tracks std::exp") {
  double worst = 0.0;
  for (double t = -40.0; t <= 0.0; t += 1e-3) worst = std::max(worst, std::abs(exp_poly(t) / std::exp(t) - 1.0));
  CHECK(worst < 1e-14);
}

TEST_CASE("avx2 kernels are bit-identical to the scalar reference") {
  const Kernels* v = avx2_kernels();
  if (v == nullptr) {
    MESSAGE("AVX2 unavailable on this build or CPU; equivalence not exercised");
    return;
  }
  const auto& s = scalar_kernels();

  for (std::size_t n : kSizes) {
    CAPTURE(n);
    std::vector<double> a(n), b(n);
    for (std::uint64_t c0 : {0ULL, 1ULL, 12345ULL}) {
      s.uniform_fill(99, c0, a);
      v->uniform_fill(99, c0, b);
      CHECK(bits_equal(a, b));
      s.normal_fill(99, c0, a);
      v->normal_fill(99, c0, b);
      CHECK(bits_equal(a, b));
    }

    const auto sig = random_vec(n, n + 1, 1e-7), noise = random_vec(n, n + 2);
    std::vector<float> fa(n), fb(n);
    s.add_noise_to_f32(sig, noise, 6e-9, fa);
    v->add_noise_to_f32(sig, noise, 6e-9, fb);
    CHECK(std::memcmp(fa.data(), fb.data(), n * sizeof(float)) == 0);

    auto x = random_vec(n, n + 3);
    CHECK(s.argmax(x) == v->argmax(x));
    if (n > 3) {
      x[n / 2] = 10.0;
      x[n - 1] = 10.0;  // ties resolve to the first
      CHECK(s.argmax(x) == n / 2);
      CHECK(v->argmax(x) == n / 2);
    }
    for (double th : {-0.5, 0.0, 0.7, 3.0, 50.0}) CHECK(s.first_crossing(x, th) == v->first_crossing(x, th));

    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = 0.4 + 0.01 * static_cast<double>(i) / std::max<double>(1, n) * 80;
      ys[i] = 500 * std::exp(-(xs[i] - 0.8) * (xs[i] - 0.8) / (2 * 0.07 * 0.07)) + noise[i];
    }
    const auto ga = s.gauss_normal_eq(xs, ys, 480, 0.79, 0.075);
    const auto gb = v->gauss_normal_eq(xs, ys, 480, 0.79, 0.075);
    for (int i = 0; i < 6; ++i) CHECK(bits_equal(ga.jtj[i], gb.jtj[i]));
    for (int i = 0; i < 3; ++i) CHECK(bits_equal(ga.jtr[i], gb.jtr[i]));
    CHECK(bits_equal(ga.chi2, gb.chi2));
  }
}

TEST_CASE("first_crossing and argmax semantics") {
  const auto& s = scalar_kernels();
  const std::vector<double> x{0.0, 0.2, 0.5, 0.5, 0.1, 0.9};
  CHECK(s.first_crossing(x, 0.3) == 2);
  CHECK(s.first_crossing(x, 0.5) == 5);
  CHECK(s.first_crossing(x, 1.0) == x.size());
  CHECK(s.first_crossing(std::span<const double>(), 0.0) == 0);
  CHECK(s.argmax(x) == 5);
  CHECK(s.argmax(std::span<const double>()) == 0);
}

TEST_CASE("gauss_normal_eq matches a direct evaluation") {
  const auto& s = scalar_kernels();
  std::vector<double> x, y;
  for (int i = 0; i < 37; ++i) {
    x.push_back(0.5 + 0.02 * i);
    y.push_back(100.0 * std::exp(-std::pow(x.back() - 0.8, 2) / (2 * 0.01)) + 0.3 * (i % 3));
  }
  const double a = 95, m = 0.78, sg = 0.11;
  double jtj[3][3] = {}, jtr[3] = {}, chi2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - m) / sg, e = std::exp(-0.5 * z * z), f = a * e, r = y[i] - f;
    const double j[3] = {e, f * z / sg, f * z * z / sg};
    for (int p = 0; p < 3; ++p) {
      jtr[p] += j[p] * r;
      for (int q = 0; q < 3; ++q) jtj[p][q] += j[p] * j[q];
    }
    chi2 += r * r;
  }
  const auto g = s.gauss_normal_eq(x, y, a, m, sg);
  const double up[6] = {jtj[0][0], jtj[0][1], jtj[0][2], jtj[1][1], jtj[1][2], jtj[2][2]};
  for (int i = 0; i < 6; ++i) CHECK(g.jtj[i] == doctest::Approx(up[i]).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) CHECK(g.jtr[i] == doctest::Approx(jtr[i]).epsilon(1e-10));
  CHECK(g.chi2 == doctest::Approx(chi2).epsilon(1e-12));
}

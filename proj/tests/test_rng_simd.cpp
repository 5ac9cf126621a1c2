#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "oulab/rng.hpp"
#include "oulab/simd/kernels.hpp"

using namespace oulab;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = PhiloxCounter;
  CHECK(philox4x32_10(C{0, 0, 0, 0}, PhiloxKey{0, 0}) ==
        C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                      PhiloxKey{0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                      PhiloxKey{0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams reproduce and differ") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    differs_c |= x != c.normal();
    differs_d |= x != d.normal();
  }
  CHECK(differs_c);
  CHECK(differs_d);
  CHECK(noise_stream(5) != aux_stream(5));
  CHECK(start_stream(5) != aux_stream(5));
}

TEST_CASE("uniform and normal moments") {
  RngStream s(1, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    su += u;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
  }
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(umin > 0.0);
  CHECK(umax < 1.0);
  CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(sn / n) < 4 / std::sqrt(double(n)));
  CHECK(std::abs(sn2 / n - 1.0) < 4 * std::sqrt(2.0 / n));
}

namespace {

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(gen);
  return v;
}

}  // namespace

TEST_CASE("SIMD kernels are bit-identical to scalar kernels") {
  const simd::KernelTable* avx = simd::avx2_kernels();
  if (avx == nullptr) {
    MESSAGE("AVX2 unavailable; equivalence test skipped");
    return;
  }
  const simd::KernelTable& sc = simd::scalar_kernels();
  std::mt19937_64 gen(99);
  for (int d : {1, 2, 3, 5}) {
    for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
      const std::size_t stride = n + 3;
      const auto e = random_vec(d * d, gen), c = random_vec(d * d, gen);
      const auto x = random_vec(d * stride, gen), z = random_vec(d * stride, gen);
      std::vector<double> o1(d * stride, 0.0), o2(d * stride, 0.0);
      sc.affine_step(e.data(), c.data(), d, x.data(), z.data(), o1.data(), n, stride);
      avx->affine_step(e.data(), c.data(), d, x.data(), z.data(), o2.data(), n, stride);
      CHECK(bit_equal(o1, o2));

      const auto normal = random_vec(d, gen);
      std::vector<double> s1(n), s2(n);
      sc.halfspace_distance(normal.data(), 0.3, d, x.data(), n, stride, s1.data());
      avx->halfspace_distance(normal.data(), 0.3, d, x.data(), n, stride, s2.data());
      CHECK(bit_equal(s1, s2));
      sc.ball_distance(normal.data(), 1.2, d, x.data(), n, stride, s1.data());
      avx->ball_distance(normal.data(), 1.2, d, x.data(), n, stride, s2.data());
      CHECK(bit_equal(s1, s2));

      std::vector<double> v1(n), v2(n);
      sc.ramp_potential(s1.data(), 0.25, n, v1.data());
      avx->ramp_potential(s1.data(), 0.25, n, v2.data());
      CHECK(bit_equal(v1, v2));
      for (double v : v1) CHECK((v >= 0.0 && v <= 1.0));

      auto acc1 = random_vec(n, gen), acc2 = acc1;
      const auto prev = random_vec(n, gen);
      sc.trapezoid_accumulate(prev.data(), v1.data(), 0.005, n, acc1.data());
      avx->trapezoid_accumulate(prev.data(), v1.data(), 0.005, n, acc2.data());
      CHECK(bit_equal(acc1, acc2));
    }
  }
}

TEST_CASE("scalar kernels compute the documented formulas") {
  const simd::KernelTable& k = simd::scalar_kernels();
  const double e[4] = {1, 2, 3, 4}, c[4] = {0.5, 0, 0, 0.5};
  // Two paths, stride 2: path 0 = (1, 0), path 1 = (0, 1).
  const double x[4] = {1, 0, 0, 1}, z[4] = {2, 2, 2, 2};
  double out[4];
  k.affine_step(e, c, 2, x, z, out, 2, 2);
  CHECK(out[0] == 2.0);  // 1*1 + 2*0 + 1
  CHECK(out[1] == 3.0);  // 1*0 + 2*1 + 1
  CHECK(out[2] == 4.0);
  CHECK(out[3] == 5.0);
  const double sd[3] = {0.1, 0.0, 0.05};
  double v[3];
  k.ramp_potential(sd, 0.1, 3, v);
  CHECK(v[0] == 0.0);
  CHECK(v[1] == 1.0);
  CHECK(v[2] == doctest::Approx(0.5));
}

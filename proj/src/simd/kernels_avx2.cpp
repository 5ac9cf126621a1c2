// Compiled with -mavx2 (and without -mfma) when the compiler targets x86-64.

#include "kernels_internal.hpp"
#include "oulab/simd/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>

namespace oulab::simd {

namespace {

constexpr std::size_t kLanes = 4;

void affine_step(const double* e, const double* c, int d, const double* x, const double* z,
                 double* out, std::size_t n, std::size_t stride) {
  const std::size_t vec_end = n - n % kLanes;
  for (int k = 0; k < d; ++k) {
    const double* erow = e + k * d;
    const double* crow = c + k * d;
    for (std::size_t p = 0; p < vec_end; p += kLanes) {
      __m256d acc = _mm256_setzero_pd();
      for (int j = 0; j < d; ++j) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(erow[j]),
                                               _mm256_loadu_pd(x + j * stride + p)));
      }
      for (int j = 0; j < d; ++j) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(crow[j]),
                                               _mm256_loadu_pd(z + j * stride + p)));
      }
      _mm256_storeu_pd(out + k * stride + p, acc);
    }
  }
  detail::affine_step_scalar(e, c, d, x, z, out, n, stride, vec_end);
}

void halfspace_distance(const double* normal, double offset, int d, const double* x,
                        std::size_t n, std::size_t stride, double* sd) {
  const std::size_t vec_end = n - n % kLanes;
  const __m256d off = _mm256_set1_pd(offset);
  for (std::size_t p = 0; p < vec_end; p += kLanes) {
    __m256d acc = _mm256_setzero_pd();
    for (int j = 0; j < d; ++j) {
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(normal[j]),
                                             _mm256_loadu_pd(x + j * stride + p)));
    }
    _mm256_storeu_pd(sd + p, _mm256_sub_pd(acc, off));
  }
  detail::halfspace_distance_scalar(normal, offset, d, x, n, stride, sd, vec_end);
}

void ball_distance(const double* center, double radius, int d, const double* x, std::size_t n,
                   std::size_t stride, double* sd) {
  const std::size_t vec_end = n - n % kLanes;
  const __m256d r = _mm256_set1_pd(radius);
  for (std::size_t p = 0; p < vec_end; p += kLanes) {
    __m256d acc = _mm256_setzero_pd();
    for (int j = 0; j < d; ++j) {
      const __m256d diff =
          _mm256_sub_pd(_mm256_loadu_pd(x + j * stride + p), _mm256_set1_pd(center[j]));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
    }
    _mm256_storeu_pd(sd + p, _mm256_sub_pd(r, _mm256_sqrt_pd(acc)));
  }
  detail::ball_distance_scalar(center, radius, d, x, n, stride, sd, vec_end);
}

void ramp_potential(const double* sd, double eps, std::size_t n, double* v) {
  const std::size_t vec_end = n - n % kLanes;
  const __m256d ve = _mm256_set1_pd(eps);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  for (std::size_t p = 0; p < vec_end; p += kLanes) {
    __m256d t = _mm256_div_pd(_mm256_sub_pd(ve, _mm256_loadu_pd(sd + p)), ve);
    t = _mm256_max_pd(t, zero);
    t = _mm256_min_pd(t, one);
    _mm256_storeu_pd(v + p, t);
  }
  detail::ramp_potential_scalar(sd, eps, n, v, vec_end);
}

void trapezoid_accumulate(const double* v_prev, const double* v_cur, double half_h,
                          std::size_t n, double* acc) {
  const std::size_t vec_end = n - n % kLanes;
  const __m256d hh = _mm256_set1_pd(half_h);
  for (std::size_t p = 0; p < vec_end; p += kLanes) {
    const __m256d sum = _mm256_add_pd(_mm256_loadu_pd(v_prev + p), _mm256_loadu_pd(v_cur + p));
    _mm256_storeu_pd(acc + p, _mm256_add_pd(_mm256_loadu_pd(acc + p), _mm256_mul_pd(hh, sum)));
  }
  detail::trapezoid_accumulate_scalar(v_prev, v_cur, half_h, n, acc, vec_end);
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{Level::avx2,   "avx2",         affine_step,         halfspace_distance,
                                 ball_distance, ramp_potential, trapezoid_accumulate};
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &table : nullptr;
}

}  // namespace oulab::simd

#else

namespace oulab::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace oulab::simd

#endif

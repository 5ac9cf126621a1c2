#pragma once

// Batch kernels for path simulation. States are stored structure-of-arrays:
// component k of path p lives at x[k * stride + p].
//
// Every variant performs the same IEEE operations in the same order (no FMA),
// so scalar and vector results are bit-identical.

#include <cstddef>

namespace oulab::simd {

enum class Level { scalar, avx2 };

struct KernelTable {
  Level level;
  const char* name;

  /// out = E x + C z, with E and C row-major d x d. Sums run over j
  /// ascending, E terms first.
  void (*affine_step)(const double* e, const double* c, int d, const double* x,
                      const double* z, double* out, std::size_t n, std::size_t stride);

  /// sd[p] = <normal, x_p> - offset.
  void (*halfspace_distance)(const double* normal, double offset, int d, const double* x,
                             std::size_t n, std::size_t stride, double* sd);

  /// sd[p] = radius - |x_p - center|.
  void (*ball_distance)(const double* center, double radius, int d, const double* x,
                        std::size_t n, std::size_t stride, double* sd);

  /// v[p] = min(max((eps - sd[p]) / eps, 0), 1). Valid for domains whose
  /// shrunk set is the eps-offset of a half-space or ball boundary.
  void (*ramp_potential)(const double* sd, double eps, std::size_t n, double* v);

  /// acc[p] += half_h * (v_prev[p] + v_cur[p]).
  void (*trapezoid_accumulate)(const double* v_prev, const double* v_cur, double half_h,
                               std::size_t n, double* acc);
};

const KernelTable& scalar_kernels();

/// nullptr when the build or the running CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// Best table for this CPU. Setting OULAB_SIMD=scalar in the environment
/// forces the scalar table.
const KernelTable& active_kernels();

const char* level_name(Level level);

}  // namespace oulab::simd

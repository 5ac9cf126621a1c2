#pragma once

// Scalar loops shared by every table; vector variants reuse them for tails.

#include <cstddef>

namespace oulab::simd::detail {

void affine_step_scalar(const double* e, const double* c, int d, const double* x, const double* z,
                        double* out, std::size_t n, std::size_t stride, std::size_t begin);
void halfspace_distance_scalar(const double* normal, double offset, int d, const double* x,
                               std::size_t n, std::size_t stride, double* sd, std::size_t begin);
void ball_distance_scalar(const double* center, double radius, int d, const double* x,
                          std::size_t n, std::size_t stride, double* sd, std::size_t begin);
void ramp_potential_scalar(const double* sd, double eps, std::size_t n, double* v,
                           std::size_t begin);
void trapezoid_accumulate_scalar(const double* v_prev, const double* v_cur, double half_h,
                                 std::size_t n, double* acc, std::size_t begin);

}  // namespace oulab::simd::detail

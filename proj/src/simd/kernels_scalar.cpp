#include <cmath>

#include "kernels_internal.hpp"
#include "oulab/simd/kernels.hpp"

namespace oulab::simd {

namespace detail {

void affine_step_scalar(const double* e, const double* c, int d, const double* x, const double* z,
                        double* out, std::size_t n, std::size_t stride, std::size_t begin) {
  for (int k = 0; k < d; ++k) {
    const double* erow = e + k * d;
    const double* crow = c + k * d;
    for (std::size_t p = begin; p < n; ++p) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) acc = acc + erow[j] * x[j * stride + p];
      for (int j = 0; j < d; ++j) acc = acc + crow[j] * z[j * stride + p];
      out[k * stride + p] = acc;
    }
  }
}

void halfspace_distance_scalar(const double* normal, double offset, int d, const double* x,
                               std::size_t n, std::size_t stride, double* sd, std::size_t begin) {
  for (std::size_t p = begin; p < n; ++p) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc = acc + normal[j] * x[j * stride + p];
    sd[p] = acc - offset;
  }
}

void ball_distance_scalar(const double* center, double radius, int d, const double* x,
                          std::size_t n, std::size_t stride, double* sd, std::size_t begin) {
  for (std::size_t p = begin; p < n; ++p) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
      const double diff = x[j * stride + p] - center[j];
      acc = acc + diff * diff;
    }
    sd[p] = radius - std::sqrt(acc);
  }
}

void ramp_potential_scalar(const double* sd, double eps, std::size_t n, double* v,
                           std::size_t begin) {
  for (std::size_t p = begin; p < n; ++p) {
    double t = (eps - sd[p]) / eps;
    t = t > 0.0 ? t : 0.0;  // same operand order as maxpd/minpd
    t = t < 1.0 ? t : 1.0;
    v[p] = t;
  }
}

void trapezoid_accumulate_scalar(const double* v_prev, const double* v_cur, double half_h,
                                 std::size_t n, double* acc, std::size_t begin) {
  for (std::size_t p = begin; p < n; ++p) acc[p] = acc[p] + half_h * (v_prev[p] + v_cur[p]);
}

}  // namespace detail

namespace {

void affine_step(const double* e, const double* c, int d, const double* x, const double* z,
                 double* out, std::size_t n, std::size_t stride) {
  detail::affine_step_scalar(e, c, d, x, z, out, n, stride, 0);
}
void halfspace_distance(const double* normal, double offset, int d, const double* x,
                        std::size_t n, std::size_t stride, double* sd) {
  detail::halfspace_distance_scalar(normal, offset, d, x, n, stride, sd, 0);
}
void ball_distance(const double* center, double radius, int d, const double* x, std::size_t n,
                   std::size_t stride, double* sd) {
  detail::ball_distance_scalar(center, radius, d, x, n, stride, sd, 0);
}
void ramp_potential(const double* sd, double eps, std::size_t n, double* v) {
  detail::ramp_potential_scalar(sd, eps, n, v, 0);
}
void trapezoid_accumulate(const double* v_prev, const double* v_cur, double half_h,
                          std::size_t n, double* acc) {
  detail::trapezoid_accumulate_scalar(v_prev, v_cur, half_h, n, acc, 0);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Level::scalar,  "scalar",       affine_step,         halfspace_distance,
                                 ball_distance,  ramp_potential, trapezoid_accumulate};
  return table;
}

}  // namespace oulab::simd

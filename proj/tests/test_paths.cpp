#include <cmath>
#include <cstring>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "oulab/errors.hpp"
#include "oulab/paths.hpp"

using namespace oulab;

namespace {
Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}
Vec v1(double a) { return (Vec(1) << a).finished(); }
}  // namespace

TEST_CASE("step kernel covariance") {
  const double a = 1.7, h = 0.3;
  const OUModel m1 = build_model(-a * Mat::Identity(1, 1));
  const StepKernel k1 = make_step_kernel(m1, h);
  CHECK(k1.q_h(0, 0) == doctest::Approx((1 - std::exp(-2 * a * h)) / (2 * a)).epsilon(1e-13));

  const OUModel m = build_model(m2(-1, 1, 0, -2));
  for (double hh : {0.01, 0.5, 2.0}) {
    const StepKernel k = make_step_kernel(m, hh);
    CHECK((k.q_h - oracle::qh_simpson(m.a, hh)).norm() <= 1e-9);
    const Mat stationary = m.q_inf - k.e_h * m.q_inf * k.e_h.transpose();
    CHECK((k.q_h - stationary).norm() <= 1e-9);
  }
  const StepKernel far = make_step_kernel(m, 40.0 / m.w);
  CHECK((far.q_h - m.q_inf).norm() <= 1e-8);
  // The integral itself for A = 0 is h I.
  CHECK((oracle::qh_simpson(Mat::Zero(2, 2), 0.7) - 0.7 * Mat::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("exact step moments") {
  const OUModel m = build_model(m2(-1, -1, 1, -1));
  const StepKernel k = make_step_kernel(m, 0.4);
  const Vec x = (Vec(2) << 1.0, -0.5).finished();
  CHECK(exact_step(k, x, Vec(Vec::Zero(2))).isApprox(k.e_h * x));
  const int n = 100000;
  Vec mean = Vec::Zero(2);
  Mat second = Mat::Zero(2, 2);
  std::vector<Vec> draws;
  draws.reserve(n);
  for (int i = 0; i < n; ++i) {
    RngStream rng(9, i);
    draws.push_back(exact_step(k, x, rng));
    mean += draws.back();
  }
  mean /= n;
  for (const Vec& y : draws) second += (y - mean) * (y - mean).transpose();
  second /= (n - 1);
  const Vec expect = k.e_h * x;
  for (int j = 0; j < 2; ++j)
    CHECK(std::abs(mean[j] - expect[j]) <= 4 * std::sqrt(k.q_h(j, j) / n));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((k.q_h(i, i) * k.q_h(j, j) + k.q_h(i, j) * k.q_h(i, j)) / n);
      CHECK(std::abs(second(i, j) - k.q_h(i, j)) <= 4 * se);
    }
}

TEST_CASE("marginal covariance of the grid simulation") {
  const OUModel m = build_model(m2(-1, 1, 0, -2));
  EnsembleSpec spec;
  spec.x0 = Vec::Zero(2);
  spec.t_end = 0.8;
  spec.h = 0.1;
  spec.n_paths = 100000;
  spec.seed = 17;
  const PathEnsemble e = simulate_ensemble(m, spec);
  const Mat qt = m.q_inf - expm(m.a, 0.8) * m.q_inf * expm(m.a, 0.8).transpose();
  const Mat cov = e.terminal * e.terminal.transpose() / double(spec.n_paths);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((qt(i, i) * qt(j, j) + qt(i, j) * qt(i, j)) / spec.n_paths);
      CHECK(std::abs(cov(i, j) - qt(i, j)) <= 4 * se);
    }
}

TEST_CASE("exit bookkeeping") {
  const OUModel m = build_model(-Mat::Identity(1, 1));
  const Domain line = Domain::half_space(v1(1), 0);
  const TrajectoryBatch outside = simulate_batch(m, v1(-0.5), 0.5, 0.1, 20, line, 1);
  for (std::size_t p = 0; p < 20; ++p) {
    CHECK(outside.exit_time[p] == 0.0);
    CHECK(outside.alive[p * outside.times.size()] == 0);
  }
  const TrajectoryBatch free = simulate_batch(m, v1(0.5), 0.5, 0.1, 20, Domain::whole_space(1), 1);
  for (std::size_t p = 0; p < 20; ++p) {
    CHECK(std::isinf(free.exit_time[p]));
    CHECK(free.alive[p * free.times.size() + 5] == 1);
    CHECK(free.state(p, 0)[0] == 0.5);
  }
  CHECK(interpolate_exit(0.3, 0.1, 0.2, -0.1) == doctest::Approx(0.3 + 0.1 * 2.0 / 3.0));
  CHECK(interpolate_exit(0.3, 0.1, 0.2, -0.1) == doctest::Approx(0.3667).epsilon(1e-3));

  const TrajectoryBatch b = simulate_batch(m, v1(0.3), 1.0, 0.01, 200, line, 5);
  const std::size_t nt = b.times.size();
  for (std::size_t p = 0; p < b.n_paths; ++p) {
    int first_dead = -1;
    for (std::size_t k = 0; k < nt; ++k) {
      if (k > 0) CHECK(b.alive[p * nt + k] <= b.alive[p * nt + k - 1]);
      if (first_dead < 0 && !b.alive[p * nt + k]) first_dead = static_cast<int>(k);
    }
    if (first_dead < 0) {
      CHECK(std::isinf(b.exit_time[p]));
    } else {
      CHECK(b.exit_time[p] > b.times[first_dead - 1] - 1e-12);
      CHECK(b.exit_time[p] <= b.times[first_dead] + 1e-12);
    }
  }
  std::ostringstream csv;
  write_trajectory_csv(simulate_batch(m, v1(0.3), 0.02, 0.01, 2, line, 5), csv);
  CHECK(csv.str().rfind("path,t,x1,alive\n", 0) == 0);
}

TEST_CASE("capacity limits") {
  const OUModel m = build_model(-Mat::Identity(1, 1));
  EnsembleSpec spec;
  spec.x0 = v1(0);
  spec.t_end = 10.0;
  spec.h = 1e-6;
  try {
    simulate_ensemble(m, spec);
    FAIL("expected capacity error");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::capacity);
  }
}

TEST_CASE("ensembles are independent of worker count and SIMD level") {
  const OUModel m = build_model(m2(-1, -1, 1, -1));
  EnsembleSpec spec;
  spec.x0 = (Vec(2) << 0.5, 0.2).finished();
  spec.t_end = 0.5;
  spec.h = 0.01;
  spec.n_paths = 1500;
  spec.seed = 21;
  spec.domain = Domain::half_space((Vec(2) << 1, 0.5).finished(), 0.0);
  spec.potential_eps = {0.1, 0.05};
  const PathEnsemble a = simulate_ensemble(m, spec);
  spec.jobs = 4;
  const PathEnsemble b = simulate_ensemble(m, spec);
  spec.force_scalar = true;
  spec.jobs = 3;
  const PathEnsemble c = simulate_ensemble(m, spec);
  for (const PathEnsemble* o : {&b, &c}) {
    CHECK(std::memcmp(a.terminal.data(), o->terminal.data(), a.terminal.size() * sizeof(double)) == 0);
    CHECK(a.alive == o->alive);
    CHECK(std::memcmp(a.exit_time.data(), o->exit_time.data(), a.exit_time.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.potential_integral.data(), o->potential_integral.data(),
                      a.potential_integral.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("stationary increments") {
  const OUModel m = build_model(-Mat::Identity(1, 1));
  const auto rows =
      stationary_increment_check(m, v1(1), {{0.3, 0.3}, {0.0, std::log(2.0)}, {0.2, 1.0}}, 50000, 3);
  CHECK(rows[0].closed_form == 0.0);
  CHECK(rows[0].measured.mean == 0.0);
  CHECK(rows[1].closed_form == doctest::Approx(0.5).epsilon(1e-12));
  for (const auto& r : rows) {
    CHECK(r.matches);
    CHECK(r.below_bound);
  }
}

#include <cmath>

#include "doctest.h"
#include "oulab/errors.hpp"
#include "oulab/semigroups.hpp"

using namespace oulab;

namespace {
Vec v1(double a) { return (Vec(1) << a).finished(); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
OUModel scalar_model(double a) { return build_model(-a * Mat::Identity(1, 1)); }
}  // namespace

TEST_CASE("semigroup on constants and linear functionals") {
  const OUModel m = build_model(-Mat::Identity(2, 2));
  const McEstimate one = mc_semigroup(m, TestFunction::constant(1.0), v2(1, 0), 0.7, 1000, 3);
  CHECK(one.mean == 1.0);
  CHECK(one.std_error == 0.0);

  const McEstimate lin =
      mc_semigroup(m, TestFunction::linear(v2(1, 0)), v2(1, 0), std::log(2.0), 40000, 5, 2);
  CHECK(lin.agrees_with(0.5));

  const TestFunction f = TestFunction::tanh_linear(v2(1, 2), 0.3);
  const McEstimate at0 = mc_semigroup(m, f, v2(0.2, -0.4), 0.0, 10, 1);
  CHECK(at0.mean == doctest::Approx(f.value(v2(0.2, -0.4))));
}

TEST_CASE("closed form on exponential functionals") {
  const OUModel m = scalar_model(1.0);
  CHECK(exact_on_exponentials(m, v1(1.0), std::log(2.0), v1(0.0)) ==
        doctest::Approx(std::exp(-1.0 / 16.0)).epsilon(1e-12));
  const TestFunction k = k_functional(m, v1(0.7));
  CHECK(exact_on_exponentials(m, v1(0.7), 0.0, v1(0.4)) == doctest::Approx(k.value(v1(0.4))));
  CHECK(exact_on_exponentials(m, v1(0.7), 60.0, v1(0.4)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gaussian_mean(m, k) == doctest::Approx(1.0).epsilon(1e-12));

  const OUModel rot = build_model((Mat(2, 2) << -1, -1, 1, -1).finished());
  for (double t : {0.2, 1.0}) {
    const Vec xs = v2(0.5, -0.3), x = v2(0.3, 0.8);
    const McEstimate e = mc_semigroup(rot, k_functional(rot, xs), x, t, 50000, 11);
    CHECK(e.agrees_with(exact_on_exponentials(rot, xs, t, x)));
  }
  // Semigroup law: P(s) applied to the closed form of P(t) K.
  const double s = 0.4, t = 0.3;
  const Vec xs = v2(0.5, -0.3), x = v2(0.1, 0.2);
  const TestFunction pt = TestFunction::custom(
      [&](const Vec& y) { return exact_on_exponentials(rot, xs, t, y); }, "P(t)K");
  CHECK(mc_semigroup(rot, pt, x, s, 50000, 13).agrees_with(exact_on_exponentials(rot, xs, s + t, x)));
}

TEST_CASE("invariance of the Gaussian measure") {
  const OUModel rot = build_model((Mat(2, 2) << -1, -1, 1, -1).finished());
  const TestFunction f = TestFunction::tanh_linear(v2(1, 0.5), 0.2);
  const double mean = gaussian_mean(rot, f);
  CHECK(mc_invariance(rot, f, 0.8, 40000, 17).agrees_with(mean));
}

TEST_CASE("feynman-kac weights") {
  const OUModel m = scalar_model(1.0);
  const PotentialSpec spec{Domain::half_space(v1(1.0), 0.0), 0.25};
  FkOptions opts;
  opts.constant_potential = 1.0;
  opts.zero_extend = false;
  const McEstimate c = mc_feynman_kac(m, spec, TestFunction::constant(1.0), v1(1.0), 0.5, 200, 0.01,
                                      1, 1, opts);
  CHECK(c.mean == doctest::Approx(std::exp(-0.5 / 0.25)).epsilon(1e-12));

  // Deep inside the domain for a short time the potential vanishes.
  const PotentialSpec far{Domain::half_space(v1(1.0), -50.0), 0.25};
  const TestFunction lin = TestFunction::linear(v1(1.0));
  const McEstimate fk = mc_feynman_kac(m, far, lin, v1(1.0), 0.2, 4000, 0.01, 21);
  const McEstimate plain = mc_semigroup(m, lin, v1(1.0), 0.2, 40000, 23);
  CHECK(fk.agrees_with(plain.mean, 5));

  CHECK_THROWS_AS(mc_feynman_kac(m, spec, lin, v1(1.0), 0.5, 10, 0.1, 1), Error);

  const McEstimate l2 = fk_l2_norm_squared(m, spec, lin, 0.5, 4000, 0.02, 29);
  CHECK(l2.mean <= 0.5 + 4 * l2.std_error);
}

TEST_CASE("killed semigroup basics") {
  const OUModel m = scalar_model(1.0);
  const Domain half = Domain::half_space(v1(1.0), 0.0);
  const TestFunction lin = TestFunction::linear(v1(1.0));
  const McEstimate t0 = mc_killed(m, half, lin, v1(1.3), 0.0, 10, 0.01, 1);
  CHECK(t0.mean == doctest::Approx(1.3));
  CHECK_THROWS_AS(mc_killed(m, half, lin, v1(-1.0), 1.0, 10, 0.01, 1), Error);

  const McEstimate k = mc_killed(m, half, lin, v1(1.0), 1.0, 20000, 0.005, 31);
  CHECK(std::abs(k.mean - std::exp(-1.0)) <= 4 * k.std_error + k.bias_budget + 0.01);

  const McEstimate l2 = killed_l2_norm_squared(m, half, lin, 0.5, 4000, 0.01, 37);
  CHECK(l2.mean <= 0.25 + 4 * l2.std_error);

  const KilledProfile prof = killed_profile(m, half, TestFunction::constant(1.0), v1(1.0),
                                            {1.0, 1.5, 2.0, 2.5, 3.0}, 20000, 0.005, 41);
  CHECK(prof.log_survival_slope == doctest::Approx(-1.0).epsilon(0.2));
}

TEST_CASE("penalization sweep") {
  const OUModel m = scalar_model(1.0);
  const SweepReport whole = penalization_sweep(m, Domain::whole_space(1), TestFunction::constant(1.0),
                                               v1(0.5), 1.0, {0.4, 0.2}, 500, 0.02, 3);
  for (const SweepRow& r : whole.rows) CHECK(r.gap.mean == 0.0);

  const SweepReport rep = penalization_sweep(m, Domain::half_space(v1(1.0), 0.0),
                                             TestFunction::linear(v1(1.0)), v1(1.0), 1.0,
                                             {0.4, 0.2, 0.1}, 4000, 0.005, 5);
  REQUIRE(rep.rows.size() == 3);
  for (const SweepRow& r : rep.rows) CHECK(r.dominance);
  CHECK(rep.rows.back().gap.mean < rep.rows.front().gap.mean);
}

TEST_CASE("ergodic decay") {
  const double a = 1.0;
  const OUModel m = scalar_model(a);
  const ErgodicReport c = ergodic_limit(m, TestFunction::constant(2.0), {1.0, 2.0}, 100, 3);
  for (const ErgodicRow& r : c.rows) CHECK(r.squared_norm.mean == 0.0);

  const ErgodicReport rep = ergodic_limit(m, TestFunction::linear(v1(1.0)), {0.5, 1.0, 2.0}, 40000, 7);
  CHECK(rep.mean == doctest::Approx(0.0));
  for (const ErgodicRow& r : rep.rows)
    CHECK(r.squared_norm.agrees_with(std::exp(-2 * a * r.t) * 0.5 / a));
  CHECK(rep.decaying);
}

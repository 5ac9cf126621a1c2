#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "oulab/errors.hpp"
#include "oulab/model.hpp"

using namespace oulab;

namespace {

Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

Polynomial random_cubic(int d, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> pick(0, d - 1);
  Polynomial p = Polynomial::constant(d, nd(gen));
  for (int t = 0; t < 6; ++t) {
    Polynomial::Exponent e(d, 0);
    const int deg = 1 + t % 3;
    for (int k = 0; k < deg; ++k) e[pick(gen)] += 1;
    p.add_term(e, nd(gen));
  }
  return p;
}

}  // namespace

TEST_CASE("symmetric and rotation models") {
  const OUModel s = build_model(-2.0 * Mat::Identity(2, 2));
  CHECK(s.q_inf.isApprox(0.25 * Mat::Identity(2, 2), 1e-14));
  CHECK(s.b.isApprox(0.5 * Mat::Identity(2, 2), 1e-14));
  CHECK(s.w == doctest::Approx(2.0));
  CHECK(s.m_const == doctest::Approx(1.0).epsilon(1e-12));

  const OUModel r = build_model(m2(-1, -1, 1, -1));
  CHECK(r.q_inf.isApprox(0.5 * Mat::Identity(2, 2), 1e-14));
  CHECK((r.b - m2(0.5, -0.5, 0.5, 0.5)).norm() < 1e-14);
  CHECK((r.b + r.b.transpose() - Mat::Identity(2, 2)).norm() < 1e-12);
  CHECK(r.duality_residual < 1e-12);
  CHECK(r.alternative_duality_residual > 1e-3);

  const OUModel t = build_model(m2(-1, 1, 0, -2));
  CHECK((t.b + t.q_inf * t.a.transpose()).norm() < 1e-14);
  CHECK(t.m_const >= t.m_sup);
  CHECK(t.m_sup >= 1.0);
}

TEST_CASE("unstable drift is rejected") {
  try {
    build_model(m2(0.5, 0, 0, -1));
    FAIL("expected a stability error");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::stability);
  }
}

TEST_CASE("B properties on random models") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 12; ++trial) {
    const int d = 1 + trial % 6;
    const OUModel m = build_model(oracle::random_stable(d, gen));
    CHECK((m.b + m.b.transpose() - Mat::Identity(d, d)).norm() <= 1e-12);
    for (int k = 0; k < 100; ++k) {
      Vec h(d);
      for (auto& x : h) x = nd(gen);
      CHECK(std::abs(h.dot(m.b * h) / h.squaredNorm() - 0.5) <= 1e-12);
    }
  }
}

TEST_CASE("generator_apply examples") {
  const OUModel m = build_model(-Mat::Identity(2, 2));
  Polynomial::Exponent e{2, 0};
  const auto f = TestFunction::polynomial(Polynomial::monomial(e));
  CHECK(generator_apply(m, f, Vec::Unit(2, 0)) == doctest::Approx(-1.0));
  CHECK(generator_apply(m, TestFunction::constant(3.0), Vec::Ones(2)) == 0.0);
  const Vec xs = (Vec(2) << 0.3, -0.7).finished();
  const Vec x = (Vec(2) << 1.1, 2.0).finished();
  CHECK(generator_apply(m, TestFunction::linear(xs), x) == doctest::Approx((m.a * x).dot(xs)));
  const auto c = TestFunction::custom([](const Vec& v) { return v[0]; }, "probe");
  CHECK_THROWS_AS(generator_apply(m, c, x), Error);
}

TEST_CASE("Gauss-Hermite rules") {
  const OUModel m = build_model(m2(-1, 1, 0, -2));
  const QuadratureRule q = gauss_hermite_rule(m.measure, 4);
  CHECK(q.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(q.integrate([](const Vec& x) { return x[0] * x[0]; }) ==
        doctest::Approx(m.q_inf(0, 0)).epsilon(1e-13));
  CHECK(std::abs(q.integrate([](const Vec& x) { return std::pow(x[0], 4); }) -
                 3 * m.q_inf(0, 0) * m.q_inf(0, 0)) < 1e-12);
  // Density normalization by brute quadrature in 2D.
  const QuadratureRule fine = gauss_hermite_rule(m.measure, 30);
  double mass = 0.0;
  const int n = 400;
  const double r = 8.0, h = 2 * r / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec x(2);
      x << -r + (i + 0.5) * h, -r + (j + 0.5) * h;
      mass += m.measure.density(x) * h * h;
    }
  CHECK(std::abs(mass - 1.0) < 1e-8);
  CHECK(fine.size() == 900);
  const GaussianMeasure g4 = GaussianMeasure::make(Mat::Identity(4, 4));
  CHECK_THROWS_AS(gauss_hermite_rule(g4, 3), Error);
}

TEST_CASE("Isserlis moments agree with quadrature") {
  const OUModel m = build_model(m2(-1, 1, 0, -2));
  const QuadratureRule q = gauss_hermite_rule(m.measure, 6);
  std::mt19937_64 gen(2);
  for (int k = 0; k < 10; ++k) {
    const Polynomial p = random_cubic(2, gen) * random_cubic(2, gen);
    CHECK(std::abs(gaussian_expectation(p, m.q_inf) - q.integrate([&](const Vec& x) { return p(x); })) <
          1e-11);
  }
}

TEST_CASE("Dirichlet form examples and generator duality") {
  const OUModel m = build_model(m2(-1, -1, 1, -1));
  const QuadratureRule q = gauss_hermite_rule(m.measure, 5);
  const auto one = TestFunction::constant(1.0);
  CHECK(dirichlet_form(m, one, one, q) == 0.0);
  const auto e1 = TestFunction::linear(Vec::Unit(2, 0));
  CHECK(dirichlet_form(m, e1, e1, q) == doctest::Approx(0.5).epsilon(1e-14));

  std::mt19937_64 gen(8);
  for (int k = 0; k < 10; ++k) {
    const auto f = TestFunction::polynomial(random_cubic(2, gen));
    const auto g = TestFunction::polynomial(random_cubic(2, gen));
    const double form = dirichlet_form(m, f, g, q);
    const double pairing =
        q.integrate([&](const Vec& x) { return generator_apply(m, f, x) * g.value(x); });
    CHECK(std::abs(form + pairing) <= 1e-8 * std::max(1.0, std::abs(form)));
    CHECK(duality_residual(m, m.b, *f.as_polynomial(), *g.as_polynomial()) < 1e-12);
  }
}

TEST_CASE("exp and tanh derivatives match finite differences") {
  const Vec a = (Vec(2) << 0.4, -0.9).finished();
  const Vec x = (Vec(2) << 0.2, 0.5).finished();
  for (const auto& f : {TestFunction::exp_linear(a, -0.3), TestFunction::tanh_linear(a, 0.1)}) {
    const double h = 1e-5;
    for (int k = 0; k < 2; ++k) {
      const Vec dx = Vec::Unit(2, k) * h;
      CHECK(f.gradient(x)[k] == doctest::Approx((f.value(x + dx) - f.value(x - dx)) / (2 * h)).epsilon(1e-8));
      const Vec hd = (f.gradient(x + dx) - f.gradient(x - dx)) / (2 * h);
      CHECK((f.hessian(x).col(k) - hd).norm() < 1e-8);
    }
  }
}

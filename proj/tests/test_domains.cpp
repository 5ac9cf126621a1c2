#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "oulab/domains.hpp"
#include "oulab/errors.hpp"
#include "oulab/model.hpp"

using namespace oulab;

namespace {
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v1(double a) { return (Vec(1) << a).finished(); }
}  // namespace

TEST_CASE("membership") {
  CHECK(Domain::half_space(v2(1, 0), 0).contains(v2(1, 0)));
  const Domain b = Domain::ball(v2(0, 0), 1.0);
  CHECK_FALSE(b.contains(v2(1, 0)));
  CHECK(b.contains(v2(0.5, 0)));
  CHECK_FALSE(Domain::complement(b).contains(v2(0, 0)));
  CHECK_FALSE(Domain::complement(b).contains(v2(1, 0)));
  CHECK(Domain::complement(b).contains(v2(1.5, 0)));
  CHECK(Domain::whole_space(2).contains(v2(1e9, 0)));
}

TEST_CASE("distance to the complement") {
  CHECK(Domain::half_space(v2(1, 0), 0).dist_to_complement(v2(0.3, 7)) == doctest::Approx(0.3));
  CHECK(Domain::ball(v2(0, 0), 1).dist_to_complement(v2(0, 0)) == 1.0);
  CHECK(Domain::box(v2(0, 0), v2(2, 1)).dist_to_complement(v2(1, 0.25)) == doctest::Approx(0.25));
  CHECK(Domain::box(v2(0, 0), v2(2, 1)).dist_to_complement(v2(3, 0.25)) == 0.0);
  CHECK(Domain::box(v2(0, 0), v2(2, 1)).signed_distance(v2(3, 2)) == doctest::Approx(-std::sqrt(2.0)));
  // Unnormalized normals are rescaled.
  CHECK(Domain::half_space(v2(2, 0), 1).dist_to_complement(v2(1, 0)) == doctest::Approx(0.5));
}

TEST_CASE("penalization potential") {
  const Domain line = Domain::half_space(v1(1), 0);
  const PotentialSpec spec{line, 0.1};
  CHECK(penalized_potential(spec, v1(0.1)) == 0.0);
  CHECK(penalized_potential(spec, v1(0.0)) == 1.0);
  CHECK(penalized_potential(spec, v1(0.05)) == doctest::Approx(0.5));
  CHECK(penalized_potential(spec, v1(0.3)) == 0.0);
  const PotentialSpec ball{Domain::ball(v2(0, 0), 1), 0.2};
  CHECK(penalized_potential(ball, v2(1.5, 0)) == 1.0);
  CHECK(ball.domain.dist_to_shrunk(0.2, v2(1.5, 0)) == doctest::Approx(0.7));
  // Empty shrunk set: constant 1.
  const PotentialSpec tiny{Domain::ball(v2(0, 0), 0.1), 0.2};
  CHECK(penalized_potential(tiny, v2(0, 0)) == 1.0);
}

TEST_CASE("potential properties on random points") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd(0.0, 1.5);
  const Domain doms[] = {Domain::half_space(v2(1, 1), 0.2), Domain::ball(v2(0.3, 0), 1.2),
                         Domain::box(v2(-1, -1), v2(1, 0.5)),
                         Domain::complement(Domain::ball(v2(0, 0), 0.7))};
  for (const Domain& dom : doms) {
    for (double eps : {0.05, 0.2, 0.5}) {
      const PotentialSpec spec{dom, eps};
      for (int k = 0; k < 300; ++k) {
        const Vec x = v2(nd(gen), nd(gen));
        const Vec y = v2(nd(gen), nd(gen));
        const double vx = penalized_potential(spec, x);
        CHECK(std::abs(vx - penalized_potential(spec, y)) <= (x - y).norm() / eps + 1e-12);
        if (!dom.contains(x)) CHECK(vx == 1.0);
        if (dom.signed_distance(x) >= eps) CHECK(vx == 0.0);
        CHECK((dom.dist_to_complement(x) > 0.0) == dom.contains(x));
        // Monotone in eps on half-spaces and balls.
        if (dom.kind() == Domain::Kind::half_space || dom.kind() == Domain::Kind::ball)
          CHECK(penalized_potential({dom, eps / 2}, x) <= vx + 1e-15);
        // Pointwise limit away from the boundary.
        if (std::abs(dom.signed_distance(x)) > 1e-3)
          CHECK(penalized_potential({dom, 1e-4}, x) == (dom.contains(x) ? 0.0 : 1.0));
      }
    }
  }
}

TEST_CASE("Gaussian mass of domains") {
  const OUModel m1 = build_model(-Mat::Identity(1, 1));
  CHECK(mu_mass(Domain::whole_space(1), m1, MassMethod::quadrature).mean == 1.0);
  CHECK(mu_mass(Domain::half_space(v1(1), 0), m1, MassMethod::quadrature).mean == doctest::Approx(0.5));
  const double sigma = std::sqrt(0.5);
  CHECK(mu_mass(Domain::ball(v1(0), sigma), m1, MassMethod::quadrature).mean ==
        doctest::Approx(2 * oracle::normal_cdf(1.0) - 1).epsilon(1e-12));
  CHECK(2 * oracle::normal_cdf(1.0) - 1 == doctest::Approx(0.6827).epsilon(1e-4));

  Mat a(2, 2);
  a << -1, 1, 0, -2;
  const OUModel m2d = build_model(a);
  const Domain ball = Domain::ball(v2(0.2, 0), 0.6);
  const McEstimate grid = mu_mass(ball, m2d, MassMethod::quadrature);
  const McEstimate mc = mu_mass(ball, m2d, MassMethod::monte_carlo, 100000, 3);
  CHECK(std::abs(grid.mean - mc.mean) <= 4 * mc.std_error + 1e-3);
  const Domain hs = Domain::half_space(v2(1, -1), 0.3);
  const McEstimate exact = mu_mass(hs, m2d, MassMethod::quadrature);
  const McEstimate hs_mc = mu_mass(hs, m2d, MassMethod::monte_carlo, 100000, 4);
  CHECK(hs_mc.agrees_with(exact.mean));
}

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "oulab/errors.hpp"
#include "oulab/matkit.hpp"

using namespace oulab;

namespace {
Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}
}  // namespace

TEST_CASE("expm basic cases") {
  CHECK(expm(Mat::Zero(3, 3), 5.0).isApprox(Mat::Identity(3, 3), 1e-15));
  const Mat e = expm(m2(-1, 0, 0, -2), std::log(2.0));
  CHECK(std::abs(e(0, 0) - 0.5) < 1e-14);
  CHECK(std::abs(e(1, 1) - 0.25) < 1e-14);
  CHECK(std::abs(e(0, 1)) < 1e-15);
  const Mat rot = m2(0, -1, 1, 0);
  const Mat r = expm(rot, std::numbers::pi / 2);
  CHECK((r - oracle::expm_taylor(rot, std::numbers::pi / 2)).norm() < 1e-12);
  CHECK((r - rot).norm() < 1e-12);
  CHECK_THROWS_AS(expm(Mat(Mat::Zero(2, 3))), Error);
}

TEST_CASE("expm against Taylor oracle and semigroup law") {
  std::mt19937_64 gen(7);
  for (int d = 1; d <= 8; ++d) {
    const Mat a = oracle::random_stable(d, gen);
    for (double t : {0.01, 0.7, 3.0, 12.0}) {
      const Mat ref = oracle::expm_taylor(a, t);
      CHECK((expm(a, t) - ref).norm() <= 1e-12 * std::max(1.0, ref.norm()));
    }
    CHECK((expm(a, 0.4) * expm(a, 1.1) - expm(a, 1.5)).norm() < 1e-10);
  }
}

TEST_CASE("complex expm matches real expm on real input") {
  const Mat a = m2(-1, 1, 0, -2);
  const CMat c = expm(CMat(a.cast<Complex>()));
  CHECK((c.real() - expm(a)).norm() < 1e-14);
  CHECK(c.imag().norm() < 1e-14);
}

TEST_CASE("Lyapunov examples") {
  CHECK(solve_lyapunov(-Mat::Identity(2, 2)).isApprox(0.5 * Mat::Identity(2, 2), 1e-14));
  CHECK(solve_lyapunov(m2(-1, -1, 1, -1)).isApprox(0.5 * Mat::Identity(2, 2), 1e-14));
  const Mat a = m2(-1, 1, 0, -2);
  const Mat q = solve_lyapunov(a);
  const Mat kron = oracle::lyapunov_kron(a, Mat::Identity(2, 2));
  CHECK((q - kron).norm() < 1e-13);
  CHECK((q - m2(7.0 / 12, 1.0 / 12, 1.0 / 12, 0.25)).norm() < 1e-13);
  CHECK_THROWS_AS(solve_lyapunov(m2(0.1, 0, 0, -1)), Error);
  try {
    solve_lyapunov(m2(0.1, 0, 0, -1));
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::stability);
  }
}

TEST_CASE("Lyapunov properties on random stable drifts") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + trial % 8;
    const Mat a = oracle::random_stable(d, gen);
    const Mat q = solve_lyapunov(a);
    const Mat id = Mat::Identity(d, d);
    CHECK((a * q + q * a.transpose() + id).norm() <= 1e-10 * d);
    CHECK((q - q.transpose()).norm() < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(q).eigenvalues().minCoeff() > 0.0);
    CHECK((q - oracle::lyapunov_kron(a, id)).norm() < 1e-9 * std::max(1.0, q.norm()));
  }
}

TEST_CASE("sqrtm examples") {
  const Mat r = sqrtm_principal(m2(4, 0, 0, 9));
  CHECK(r.isApprox(m2(2, 0, 0, 3), 1e-14));
  const Mat j = m2(2, 1, 0, 2);
  const Mat rj = sqrtm_principal(j);
  CHECK((rj * rj - j).norm() < 1e-13);
  CHECK((rj - m2(std::sqrt(2.0), 1.0 / (2 * std::sqrt(2.0)), 0, std::sqrt(2.0))).norm() < 1e-13);
  CHECK(sqrtm_principal(Mat::Identity(3, 3)).isApprox(Mat::Identity(3, 3), 1e-15));
  CHECK_THROWS_AS(sqrtm_principal(m2(-1, 0, 0, 1)), Error);
}

TEST_CASE("sqrtm on random sectorial matrices with complex pairs") {
  std::mt19937_64 gen(3);
  for (int d = 2; d <= 30; d += 4) {
    const Mat a = -oracle::random_stable(d, gen, 0.5);
    const Mat r = sqrtm_principal(a);
    CHECK((r * r - a).norm() <= 1e-9 * a.norm());
    // Principal branch: every eigenvalue in the open right half-plane.
    CHECK(spectral_abscissa(-r) < 0.0);
  }
}

TEST_CASE("resolvent") {
  CHECK(resolvent(Mat::Zero(2, 2), 1.0).isApprox(CMat::Identity(2, 2), 1e-15));
  const CMat r1 = resolvent(m2(-1, 0, 0, -1).topLeftCorner(1, 1), 1.0);
  CHECK(std::abs(r1(0, 0) - 0.5) < 1e-15);
  const Mat m = m2(-1, 1, 0, -2);
  const Complex z(0, 1);
  const CMat r = resolvent(m, z);
  const CMat back = (z * CMat::Identity(2, 2) - m.cast<Complex>()) * r;
  CHECK((back - CMat::Identity(2, 2)).norm() < 1e-14);
  CHECK_THROWS_AS(resolvent(m, Complex(-1.0, 0.0)), Error);
}

TEST_CASE("operator norms and spectra") {
  CHECK(op_norm(Mat(Mat::Identity(3, 3))) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(op_norm(m2(3, 0, 0, -5)) == doctest::Approx(5.0).epsilon(1e-14));
  const Mat n = m2(0, 2, 0, 0);
  CHECK(op_norm(n) == doctest::Approx(2.0).epsilon(1e-14));
  const double via_gram =
      std::sqrt(Eigen::SelfAdjointEigenSolver<Mat>(n.transpose() * n).eigenvalues().maxCoeff());
  CHECK(std::abs(op_norm(n) - via_gram) < 1e-12);

  const Spectrum s = spectrum(m2(-1, -1, 1, -1));
  REQUIRE(s.eigenvalues.size() == 2);
  CHECK(std::abs(s.eigenvalues[0] - Complex(-1, 1)) < 1e-14);
  CHECK(std::abs(s.eigenvalues[1] - Complex(-1, -1)) < 1e-14);
  CHECK(spectral_abscissa(m2(-1, 1, 0, -2)) == doctest::Approx(-1.0));
  CHECK(min_symmetric_eigenvalue(m2(1, 2, 0, 1)) == doctest::Approx(0.0).epsilon(1e-14));
}

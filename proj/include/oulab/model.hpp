#pragma once

// The finite-dimensional OU model dX = AX dt + dW on R^d: invariant
// Gaussian N(0, Q), non-symmetry matrix B, test functions with analytic
// derivatives, polynomial algebra with exact Gaussian moments, and
// Gauss-Hermite quadrature.

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "oulab/matkit.hpp"

namespace oulab {

struct GaussianMeasure {
  Mat cov;
  Mat chol;  // lower triangular, cov = chol * chol^T
  double log_norm = 0.0;

  static GaussianMeasure make(const Mat& cov);
  int dim() const { return static_cast<int>(cov.rows()); }
  double log_density(const Vec& x) const;
  double density(const Vec& x) const;
};

struct QuadratureRule {
  Mat nodes;    // d x n, one node per column
  Vec weights;  // positive, summing to 1
  int exact_degree = 0;

  int size() const { return static_cast<int>(weights.size()); }
  double integrate(const std::function<double(const Vec&)>& f) const;
};

/// Tensor Gauss-Hermite rule for the given Gaussian, mapped through its
/// Cholesky factor; exact for total degree <= 2*level - 1. Requires d <= 3.
QuadratureRule gauss_hermite_rule(const GaussianMeasure& measure, int level);

/// Sparse multivariate polynomial: exponent vector -> coefficient.
class Polynomial {
 public:
  using Exponent = std::vector<int>;

  explicit Polynomial(int dim = 1) : dim_(dim) {}
  static Polynomial constant(int dim, double c);
  static Polynomial linear(const Vec& coeffs);
  static Polynomial monomial(const Exponent& powers, double coeff = 1.0);

  int dim() const { return dim_; }
  int degree() const;
  const std::map<Exponent, double>& terms() const { return terms_; }
  void add_term(const Exponent& powers, double coeff);

  double operator()(const Vec& x) const;
  Polynomial derivative(int k) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double s) const;

 private:
  int dim_;
  std::map<Exponent, double> terms_;
};

/// E[p(X)] for X ~ N(0, cov), exact up to rounding (Isserlis recursion).
double gaussian_expectation(const Polynomial& p, const Mat& cov);

/// Closed family of scalar test functions with analytic derivatives.
class TestFunction {
 public:
  enum class Kind { constant, polynomial, exp_linear, tanh_linear, custom };

  static TestFunction constant(double c);
  static TestFunction polynomial(Polynomial p);
  static TestFunction linear(const Vec& xstar);
  /// exp(<x, xstar> + shift).
  static TestFunction exp_linear(const Vec& xstar, double shift);
  /// tanh(<x, a> + b), a bounded test function.
  static TestFunction tanh_linear(const Vec& a, double b);
  /// Value-only function; derivatives raise a capability error.
  static TestFunction custom(std::function<double(const Vec&)> f, std::string name);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool has_derivatives() const { return kind_ != Kind::custom; }
  const Polynomial* as_polynomial() const { return kind_ == Kind::polynomial ? &poly_ : nullptr; }
  const Vec& direction() const { return vec_; }
  double shift() const { return scalar_; }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

 private:
  Kind kind_ = Kind::constant;
  std::string name_;
  double scalar_ = 0.0;
  Vec vec_;
  Polynomial poly_;
  std::shared_ptr<const std::function<double(const Vec&)>> custom_;
};

struct ModelOptions {
  double lyapunov_tol = 1e-10;
  int norm_grid_points = 200;  // initial log grid for the M estimate
  double norm_grid_rel_tol = 0.01;
};

struct OUModel {
  int d = 0;
  Mat a;
  Mat q_inf;
  Mat chol_q;
  Mat b;             // -Q A^T, selected by the generator-form duality
  Mat b_alternative; // -A Q, the other candidate, kept for reporting
  double duality_residual = 0.0;              // of b on quadratic test pairs
  double alternative_duality_residual = 0.0;  // of b_alternative
  double w = 0.0;       // -spectral abscissa of A
  double m_const = 1.0; // sup_t ||e^{tA}|| e^{wt} on the sampled grid
  double m_sup = 1.0;   // sup_t ||e^{tA}|| on the same grid
  GaussianMeasure measure;

  /// sup over [0, T] of ||e^{tA}||, sampled on a uniform grid.
  double m_t(double horizon) const;
};

OUModel build_model(const Mat& a, const ModelOptions& opts = {});

/// (1/2) tr D^2 f(x) + <Ax, grad f(x)>.
double generator_apply(const OUModel& m, const TestFunction& f, const Vec& x);

/// The generator applied symbolically to a polynomial.
Polynomial generator_polynomial(const OUModel& m, const Polynomial& p);

/// sum_i w_i <B grad f(x_i), grad g(x_i)>.
double dirichlet_form(const OUModel& m, const TestFunction& f, const TestFunction& g,
                      const QuadratureRule& q);

/// Exact Dirichlet form for polynomials, using the given B.
double dirichlet_form_exact(const OUModel& m, const Mat& b, const Polynomial& f,
                            const Polynomial& g);

/// |l(f,g) + int Lf g dmu| / scale for polynomial f, g, computed exactly.
double duality_residual(const OUModel& m, const Mat& b, const Polynomial& f, const Polynomial& g);

}  // namespace oulab

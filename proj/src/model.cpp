#include "oulab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "oulab/errors.hpp"

namespace oulab {

GaussianMeasure GaussianMeasure::make(const Mat& cov) {
  require_finite(cov, "covariance");
  if (cov.rows() != cov.cols()) throw argument_error("covariance must be square");
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw numerical_error("covariance is not positive definite");
  GaussianMeasure g;
  g.cov = cov;
  g.chol = llt.matrixL();
  const int d = g.dim();
  g.log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi) -
               g.chol.diagonal().array().log().sum();
  return g;
}

double GaussianMeasure::log_density(const Vec& x) const {
  const Vec y = chol.triangularView<Eigen::Lower>().solve(x);
  return log_norm - 0.5 * y.squaredNorm();
}

double GaussianMeasure::density(const Vec& x) const { return std::exp(log_density(x)); }

double QuadratureRule::integrate(const std::function<double(const Vec&)>& f) const {
  double acc = 0.0;
  for (int i = 0; i < size(); ++i) acc += weights[i] * f(nodes.col(i));
  return acc;
}

QuadratureRule gauss_hermite_rule(const GaussianMeasure& measure, int level) {
  const int d = measure.dim();
  if (d > 3) throw capability_error("tensor Gauss-Hermite limited to d <= 3; use Monte Carlo");
  if (level < 1 || level > 60) throw argument_error("quadrature level must lie in [1, 60]");

  // Golub-Welsch for the probabilists' Hermite weight exp(-z^2/2)/sqrt(2 pi).
  Mat jacobi = Mat::Zero(level, level);
  for (int k = 1; k < level; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
  const Vec z = es.eigenvalues();
  Vec w1 = es.eigenvectors().row(0).transpose().array().square();
  w1 /= w1.sum();

  int total = 1;
  for (int k = 0; k < d; ++k) total *= level;
  QuadratureRule rule;
  rule.nodes.resize(d, total);
  rule.weights.resize(total);
  rule.exact_degree = 2 * level - 1;
  std::vector<int> idx(d, 0);
  Vec std_node(d);
  for (int n = 0; n < total; ++n) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      std_node[k] = z[idx[k]];
      w *= w1[idx[k]];
    }
    rule.nodes.col(n) = measure.chol * std_node;
    rule.weights[n] = w;
    for (int k = 0; k < d; ++k) {
      if (++idx[k] < level) break;
      idx[k] = 0;
    }
  }
  rule.weights /= rule.weights.sum();
  return rule;
}

// ---------------------------------------------------------------- Polynomial

Polynomial Polynomial::constant(int dim, double c) {
  Polynomial p(dim);
  p.add_term(Exponent(dim, 0), c);
  return p;
}

Polynomial Polynomial::linear(const Vec& coeffs) {
  const int dim = static_cast<int>(coeffs.size());
  Polynomial p(dim);
  for (int k = 0; k < dim; ++k) {
    Exponent e(dim, 0);
    e[k] = 1;
    p.add_term(e, coeffs[k]);
  }
  return p;
}

Polynomial Polynomial::monomial(const Exponent& powers, double coeff) {
  Polynomial p(static_cast<int>(powers.size()));
  p.add_term(powers, coeff);
  return p;
}

void Polynomial::add_term(const Exponent& powers, double coeff) {
  if (static_cast<int>(powers.size()) != dim_) throw argument_error("exponent dimension mismatch");
  if (coeff == 0.0) return;
  auto [it, inserted] = terms_.emplace(powers, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

int Polynomial::degree() const {
  int deg = 0;
  for (const auto& [e, c] : terms_) {
    int s = 0;
    for (int p : e) s += p;
    deg = std::max(deg, s);
  }
  return deg;
}

double Polynomial::operator()(const Vec& x) const {
  if (x.size() != dim_) throw argument_error("polynomial evaluated at wrong dimension");
  double acc = 0.0;
  for (const auto& [e, c] : terms_) {
    double t = c;
    for (int k = 0; k < dim_; ++k)
      for (int p = 0; p < e[k]; ++p) t *= x[k];
    acc += t;
  }
  return acc;
}

Polynomial Polynomial::derivative(int k) const {
  Polynomial out(dim_);
  for (const auto& [e, c] : terms_) {
    if (e[k] == 0) continue;
    Exponent f = e;
    f[k] -= 1;
    out.add_term(f, c * e[k]);
  }
  return out;
}

Vec Polynomial::gradient(const Vec& x) const {
  Vec g(dim_);
  for (int k = 0; k < dim_; ++k) g[k] = derivative(k)(x);
  return g;
}

Mat Polynomial::hessian(const Vec& x) const {
  Mat h(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    const Polynomial di = derivative(i);
    for (int j = 0; j < dim_; ++j) h(i, j) = di.derivative(j)(x);
  }
  return h;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  if (o.dim_ != dim_) throw argument_error("polynomial dimension mismatch");
  Polynomial out = *this;
  for (const auto& [e, c] : o.terms_) out.add_term(e, c);
  return out;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (o.dim_ != dim_) throw argument_error("polynomial dimension mismatch");
  Polynomial out(dim_);
  for (const auto& [e1, c1] : terms_)
    for (const auto& [e2, c2] : o.terms_) {
      Exponent e(dim_);
      for (int k = 0; k < dim_; ++k) e[k] = e1[k] + e2[k];
      out.add_term(e, c1 * c2);
    }
  return out;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial out(dim_);
  for (const auto& [e, c] : terms_) out.add_term(e, c * s);
  return out;
}

namespace {

struct ExponentHash {
  std::size_t operator()(const Polynomial::Exponent& e) const {
    std::size_t h = 1469598103934665603ull;
    for (int p : e) h = (h ^ static_cast<std::size_t>(p)) * 1099511628211ull;
    return h;
  }
};

class MomentTable {
 public:
  explicit MomentTable(const Mat& cov) : cov_(cov) {}

  // E[x^k] = sum_b Q_ab (k - e_a)_b E[x^{k - e_a - e_b}], a = first nonzero index.
  double moment(const Polynomial::Exponent& k) {
    int total = 0;
    int a = -1;
    for (std::size_t i = 0; i < k.size(); ++i) {
      total += k[i];
      if (a < 0 && k[i] > 0) a = static_cast<int>(i);
    }
    if (total == 0) return 1.0;
    if (total % 2 == 1) return 0.0;
    if (auto it = memo_.find(k); it != memo_.end()) return it->second;
    Polynomial::Exponent rest = k;
    rest[a] -= 1;
    double acc = 0.0;
    for (std::size_t b = 0; b < k.size(); ++b) {
      if (rest[b] == 0 || cov_(a, b) == 0.0) continue;
      Polynomial::Exponent next = rest;
      next[b] -= 1;
      acc += cov_(a, b) * rest[b] * moment(next);
    }
    memo_.emplace(k, acc);
    return acc;
  }

 private:
  const Mat& cov_;
  std::unordered_map<Polynomial::Exponent, double, ExponentHash> memo_;
};

}  // namespace

double gaussian_expectation(const Polynomial& p, const Mat& cov) {
  if (cov.rows() != p.dim()) throw argument_error("covariance dimension mismatch");
  MomentTable table(cov);
  double acc = 0.0;
  for (const auto& [e, c] : p.terms()) acc += c * table.moment(e);
  return acc;
}

// -------------------------------------------------------------- TestFunction

TestFunction TestFunction::constant(double c) {
  TestFunction f;
  f.kind_ = Kind::constant;
  f.scalar_ = c;
  f.name_ = "constant";
  return f;
}

TestFunction TestFunction::polynomial(Polynomial p) {
  TestFunction f;
  f.kind_ = Kind::polynomial;
  f.poly_ = std::move(p);
  f.name_ = "polynomial";
  return f;
}

TestFunction TestFunction::linear(const Vec& xstar) {
  TestFunction f = polynomial(Polynomial::linear(xstar));
  f.vec_ = xstar;
  f.name_ = "linear";
  return f;
}

TestFunction TestFunction::exp_linear(const Vec& xstar, double shift) {
  TestFunction f;
  f.kind_ = Kind::exp_linear;
  f.vec_ = xstar;
  f.scalar_ = shift;
  f.name_ = "exp_linear";
  return f;
}

TestFunction TestFunction::tanh_linear(const Vec& a, double b) {
  TestFunction f;
  f.kind_ = Kind::tanh_linear;
  f.vec_ = a;
  f.scalar_ = b;
  f.name_ = "tanh_linear";
  return f;
}

TestFunction TestFunction::custom(std::function<double(const Vec&)> fn, std::string name) {
  TestFunction f;
  f.kind_ = Kind::custom;
  f.custom_ = std::make_shared<const std::function<double(const Vec&)>>(std::move(fn));
  f.name_ = std::move(name);
  return f;
}

double TestFunction::value(const Vec& x) const {
  switch (kind_) {
    case Kind::constant:
      return scalar_;
    case Kind::polynomial:
      return poly_(x);
    case Kind::exp_linear:
      return std::exp(x.dot(vec_) + scalar_);
    case Kind::tanh_linear:
      return std::tanh(x.dot(vec_) + scalar_);
    case Kind::custom:
      return (*custom_)(x);
  }
  return 0.0;
}

Vec TestFunction::gradient(const Vec& x) const {
  switch (kind_) {
    case Kind::constant:
      return Vec::Zero(x.size());
    case Kind::polynomial:
      return poly_.gradient(x);
    case Kind::exp_linear:
      return vec_ * value(x);
    case Kind::tanh_linear: {
      const double t = value(x);
      return vec_ * (1.0 - t * t);
    }
    case Kind::custom:
      break;
  }
  throw capability_error("test function '" + name_ + "' has no analytic gradient");
}

Mat TestFunction::hessian(const Vec& x) const {
  switch (kind_) {
    case Kind::constant:
      return Mat::Zero(x.size(), x.size());
    case Kind::polynomial:
      return poly_.hessian(x);
    case Kind::exp_linear:
      return vec_ * vec_.transpose() * value(x);
    case Kind::tanh_linear: {
      const double t = value(x);
      return vec_ * vec_.transpose() * (-2.0 * t * (1.0 - t * t));
    }
    case Kind::custom:
      break;
  }
  throw capability_error("test function '" + name_ + "' has no analytic second derivatives");
}

// -------------------------------------------------------------------- Model

double OUModel::m_t(double horizon) const {
  if (horizon <= 0.0) return 1.0;
  const int points = 400;
  double sup = 1.0;
  for (int k = 1; k <= points; ++k) sup = std::max(sup, op_norm(expm(a, horizon * k / points)));
  return sup;
}

namespace {

std::pair<double, double> sample_growth(const Mat& a, double w, int points) {
  const double t0 = 1e-3;
  const double t1 = 20.0 / w;
  double m_exp = 1.0;
  double m_sup = 1.0;
  for (int k = 0; k < points; ++k) {
    const double t = t0 * std::pow(t1 / t0, static_cast<double>(k) / (points - 1));
    const double norm = op_norm(expm(a, t));
    m_sup = std::max(m_sup, norm);
    m_exp = std::max(m_exp, norm * std::exp(w * t));
  }
  return {m_exp, m_sup};
}

// Test pairs for the duality selection. Quadratic terms only when the
// dimension keeps the products small.
std::vector<std::pair<Polynomial, Polynomial>> duality_pairs(int d) {
  std::vector<std::pair<Polynomial, Polynomial>> pairs;
  auto coeff = [](int i, int salt) { return std::sin(1.0 + 0.7 * i + 1.3 * salt); };
  for (int salt = 0; salt < 4; ++salt) {
    Vec u(d), v(d);
    for (int i = 0; i < d; ++i) {
      u[i] = coeff(i, salt);
      v[i] = coeff(i, salt + 11);
    }
    Polynomial f = Polynomial::linear(u);
    Polynomial g = Polynomial::linear(v);
    if (d <= 8) {
      Polynomial::Exponent e(d, 0);
      e[salt % d] = 2;
      f.add_term(e, 0.5);
      Polynomial::Exponent e2(d, 0);
      e2[(salt + 1) % d] += 1;
      e2[salt % d] += 1;
      g.add_term(e2, -0.3);
    }
    pairs.emplace_back(std::move(f), std::move(g));
  }
  return pairs;
}

}  // namespace

OUModel build_model(const Mat& a, const ModelOptions& opts) {
  require_finite(a, "drift A");
  if (a.rows() != a.cols()) throw argument_error("drift A must be square");
  if (a.rows() > 64) throw argument_error("model dimension limited to 64");
  OUModel m;
  m.d = static_cast<int>(a.rows());
  m.a = a;
  m.w = -spectral_abscissa(a);
  if (!(m.w > 0.0)) {
    const Complex top = spectrum(a).eigenvalues.front();
    std::ostringstream msg;
    msg << "drift is not stable: eigenvalue " << top.real() << (top.imag() < 0 ? " - " : " + ")
        << std::abs(top.imag()) << "i has non-negative real part";
    throw stability_error(msg.str());
  }
  m.q_inf = solve_lyapunov(a, LyapunovOptions{opts.lyapunov_tol});
  m.q_inf = 0.5 * (m.q_inf + m.q_inf.transpose());
  m.measure = GaussianMeasure::make(m.q_inf);
  m.chol_q = m.measure.chol;

  const Mat cand1 = -m.q_inf * a.transpose();
  const Mat cand2 = -a * m.q_inf;
  double r1 = 0.0, r2 = 0.0;
  for (const auto& [f, g] : duality_pairs(m.d)) {
    r1 = std::max(r1, duality_residual(m, cand1, f, g));
    r2 = std::max(r2, duality_residual(m, cand2, f, g));
  }
  if (r1 <= r2) {
    m.b = cand1;
    m.b_alternative = cand2;
    m.duality_residual = r1;
    m.alternative_duality_residual = r2;
  } else {
    m.b = cand2;
    m.b_alternative = cand1;
    m.duality_residual = r2;
    m.alternative_duality_residual = r1;
  }
  if (m.duality_residual > 1e-8)
    throw numerical_error("no candidate B satisfies the generator-form duality");

  int points = opts.norm_grid_points;
  auto [m_exp, m_sup] = sample_growth(a, m.w, points);
  for (int refine = 0; refine < 4; ++refine) {
    points *= 2;
    auto [e2, s2] = sample_growth(a, m.w, points);
    const bool stable = std::abs(e2 - m_exp) <= opts.norm_grid_rel_tol * m_exp &&
                        std::abs(s2 - m_sup) <= opts.norm_grid_rel_tol * m_sup;
    m_exp = std::max(m_exp, e2);
    m_sup = std::max(m_sup, s2);
    if (stable) break;
  }
  m.m_const = m_exp;
  m.m_sup = m_sup;
  return m;
}

double generator_apply(const OUModel& m, const TestFunction& f, const Vec& x) {
  if (x.size() != m.d) throw argument_error("point dimension mismatch");
  if (!f.has_derivatives())
    throw capability_error("generator needs second derivatives of '" + f.name() + "'");
  return 0.5 * f.hessian(x).trace() + (m.a * x).dot(f.gradient(x));
}

Polynomial generator_polynomial(const OUModel& m, const Polynomial& p) {
  if (p.dim() != m.d) throw argument_error("polynomial dimension mismatch");
  Polynomial out(m.d);
  for (int k = 0; k < m.d; ++k) {
    const Polynomial dk = p.derivative(k);
    out = out + dk.derivative(k) * 0.5;
    out = out + Polynomial::linear(m.a.row(k).transpose()) * dk;
  }
  return out;
}

double dirichlet_form(const OUModel& m, const TestFunction& f, const TestFunction& g,
                      const QuadratureRule& q) {
  double acc = 0.0;
  for (int i = 0; i < q.size(); ++i) {
    const Vec x = q.nodes.col(i);
    acc += q.weights[i] * (m.b * f.gradient(x)).dot(g.gradient(x));
  }
  return acc;
}

double dirichlet_form_exact(const OUModel& m, const Mat& b, const Polynomial& f,
                            const Polynomial& g) {
  Polynomial integrand(m.d);
  std::vector<Polynomial> df, dg;
  for (int k = 0; k < m.d; ++k) {
    df.push_back(f.derivative(k));
    dg.push_back(g.derivative(k));
  }
  for (int i = 0; i < m.d; ++i)
    for (int j = 0; j < m.d; ++j) {
      if (b(i, j) == 0.0 || df[j].terms().empty() || dg[i].terms().empty()) continue;
      integrand = integrand + (df[j] * dg[i]) * b(i, j);
    }
  return gaussian_expectation(integrand, m.q_inf);
}

double duality_residual(const OUModel& m, const Mat& b, const Polynomial& f, const Polynomial& g) {
  const double form = dirichlet_form_exact(m, b, f, g);
  const double pairing = gaussian_expectation(generator_polynomial(m, f) * g, m.q_inf);
  const double scale = std::max({1.0, std::abs(form), std::abs(pairing)});
  return std::abs(form + pairing) / scale;
}

}  // namespace oulab

#include "oulab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "oulab/errors.hpp"
#include "oulab/galerkin.hpp"
#include "oulab/parallel.hpp"
#include "oulab/paths.hpp"
#include "oulab/rng.hpp"
#include "oulab/semigroups.hpp"

namespace oulab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<CheckInfo> kCatalog = {
    {"fk.contraction", "penalized semigroups are L2 contractions", true},
    {"fk.resolvent4", "resolvent estimates for the penalized generator", false},
    {"grid.bisector", "resolvent of the block operator along the imaginary axis", false},
    {"grid.gradres", "gradient bound for the Dirichlet resolvent", false},
    {"grid.hinf", "functional calculus probe on the range of the gradient", false},
    {"grid.identities", "commutation, block square and weak-solution identities", false},
    {"grid.ndr", "uniform bound on t D (I - t^2 L)^-1", false},
    {"grid.poincare.domain", "invertibility of the Dirichlet operator", false},
    {"grid.poincare.whole", "Poincare inequality on the whole space", false},
    {"grid.riesz", "equivalence of the square-root and gradient seminorms", false},
    {"kill.eigen", "first Dirichlet eigenfunction on the half-line", true},
    {"kill.t0", "killed semigroup at time zero", false},
    {"model.bmatrix", "B + B^T = I and the Lyapunov identity", false},
    {"model.duality", "duality of the generator and the Dirichlet form", false},
    {"paths.increment", "stationary increment second moments and their linear bound", true},
    {"pen.sweep", "penalized semigroups converge to the killed semigroup", true},
    {"sg.ergodic", "L2 convergence to the mean", true},
    {"sg.invariance", "invariance of the Gaussian measure", true},
    {"sg.oracle", "closed form on exponential functionals", true},
};

const CheckInfo& info(const std::string& id) {
  for (const CheckInfo& c : kCatalog)
    if (c.id == id) return c;
  throw config_error("unknown check id: " + id);
}

std::uint64_t check_seed(std::uint64_t seed, const std::string& id) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : id) h = (h ^ c) * 1099511628211ull;
  std::uint64_t z = seed ^ h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::pow(10.0, lo + (hi - lo) * i / (n - 1));
  return out;
}

Vec unit(int d, int k) {
  Vec e = Vec::Zero(d);
  e[k] = 1.0;
  return e;
}

bool is_symmetric_b(const OUModel& m) { return (m.b - m.b.transpose()).norm() <= 1e-12; }

bool is_normal(const Mat& a) {
  return (a * a.transpose() - a.transpose() * a).norm() <= 1e-12 * std::max(1.0, a.squaredNorm());
}

/// Returns a, when the model is A = -a on the half-line (0, inf).
std::optional<double> half_line_rate(const OUModel& m, const Domain& dom) {
  if (m.d != 1 || dom.kind() != Domain::Kind::half_space) return std::nullopt;
  if (dom.normal()[0] != 1.0 || dom.offset() != 0.0) return std::nullopt;
  return -m.a(0, 0);
}

// A point of the domain at distance about 1 from its boundary.
Vec interior_point(const Domain& dom) {
  switch (dom.kind()) {
    case Domain::Kind::half_space:
      return dom.normal() * (dom.offset() + 1.0);
    case Domain::Kind::ball:
      return dom.center();
    case Domain::Kind::box:
      return 0.5 * (dom.lo() + dom.hi());
    case Domain::Kind::whole_space:
      return Vec::Zero(dom.dim());
    case Domain::Kind::complement: {
      const Domain& in = dom.inner();
      if (in.kind() == Domain::Kind::half_space) return in.normal() * (in.offset() - 1.0);
      if (in.kind() == Domain::Kind::ball) return in.center() + unit(dom.dim(), 0) * (in.radius() + 1.0);
      return in.hi() + Vec::Ones(dom.dim());
    }
  }
  return Vec::Zero(dom.dim());
}

// Direction along which the test functions vary: the inward normal when
// there is one, else e_1.
Vec inward_direction(const Domain& dom) {
  if (dom.kind() == Domain::Kind::half_space) return dom.normal();
  return unit(dom.dim(), 0);
}

struct Context {
  const OUModel& m;
  const Suite& s;
  Domain dom;
  std::uint64_t seed;
  std::vector<SeriesPoint>* series;
  std::string id;

  std::size_t samples(double base) const {
    const auto n = static_cast<std::size_t>(std::llround(base * s.sample_scale));
    if (n > s.limits.max_paths) throw capacity_error("check " + id + " needs more paths than allowed");
    return std::max<std::size_t>(n, 2);
  }
  int grid_n(int desired) const {
    const long nodes = m.d == 1 ? desired : static_cast<long>(desired) * desired;
    if (nodes > s.limits.max_grid_nodes) throw capacity_error("check " + id + " needs a finer grid than allowed");
    return desired;
  }
  void point(const std::string& name, double x, double y, double err = 0.0) const {
    if (series) series->push_back({id, name, x, y, err});
  }
  void require_grid() const {
    if (m.d > 2) throw capability_error("grid checks need d <= 2");
  }
};

struct GridBundle {
  Grid grid;
  GridOperator op;
  ReducedOperator red;
};

// The reduced operator keeps a pointer to the operator, so the bundle is
// heap-allocated and never moved after reduction.
std::unique_ptr<GridBundle> make_bundle(const Context& c, const std::optional<Domain>& dom, int n,
                                        double radius = 5.0) {
  auto b = std::make_unique<GridBundle>();
  b->grid = build_grid(c.m, dom, c.grid_n(n), radius);
  b->op = assemble(c.m, b->grid, dom.has_value());
  b->red = reduce(b->op);
  return b;
}

int grid_size(const Context& c, int n1, int n2) { return c.m.d == 1 ? n1 : n2; }

double max_of(const std::vector<double>& v) {
  double out = -std::numeric_limits<double>::infinity();
  for (double x : v) out = std::max(out, x);
  return out;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

Polynomial random_cubic(int d, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> pick(0, d - 1);
  Polynomial p(d);
  for (int k = 0; k < 6; ++k) {
    Polynomial::Exponent e(d, 0);
    const int deg = 1 + k % 3;
    for (int j = 0; j < deg; ++j) ++e[pick(gen)];
    p.add_term(e, nd(gen));
  }
  return p;
}

// int g dmu_inf by direct sampling from the invariant measure.
McEstimate sample_mean(const OUModel& m, const std::function<double(const Vec&)>& g, std::size_t n,
                       std::uint64_t seed, int jobs) {
  std::vector<double> vals(n);
  parallel_for(n, jobs, [&](std::size_t p) {
    RngStream rng(seed, start_stream(p));
    Vec z(m.d);
    for (int j = 0; j < m.d; ++j) z[j] = rng.normal();
    vals[p] = g(m.chol_q * z);
  });
  return summarize(vals);
}

// ---------------------------------------------------------------- checks

CheckResult check_bmatrix(const Context& c) {
  CheckResult r;
  const OUModel& m = c.m;
  const int d = m.d;
  const double sym = (m.b + m.b.transpose() - Mat::Identity(d, d)).norm();
  std::mt19937_64 gen(c.seed);
  std::normal_distribution<double> nd;
  double form = 0.0;
  for (int k = 0; k < 20; ++k) {
    Vec h(d);
    for (auto& x : h) x = nd(gen);
    form = std::max(form, std::abs(h.dot(m.b * h) - 0.5 * h.squaredNorm()) / h.squaredNorm());
  }
  const double lyap = (m.a * m.q_inf + m.q_inf * m.a.transpose() + Mat::Identity(d, d)).norm();
  r.measured = {sym, form, lyap};
  r.bound = {0.0, 0.0, 0.0};
  r.tol = {1e-12, 1e-12, 1e-10 * d};
  r.verdict = sym <= 1e-12 && form <= 1e-12 && lyap <= 1e-10 * d ? Verdict::pass : Verdict::fail;
  r.detail = "|B+B^T-I|, max |<Bh,h>-|h|^2/2|/|h|^2, Lyapunov residual; alternative -AQ duality residual " +
             fmt(m.alternative_duality_residual);
  return r;
}

CheckResult check_duality(const Context& c) {
  CheckResult r;
  std::mt19937_64 gen(c.seed);
  double exact = 0.0;
  std::vector<std::pair<Polynomial, Polynomial>> pairs;
  for (int k = 0; k < 10; ++k) {
    pairs.emplace_back(random_cubic(c.m.d, gen), random_cubic(c.m.d, gen));
    exact = std::max(exact, duality_residual(c.m, c.m.b, pairs.back().first, pairs.back().second));
  }
  r.measured = {exact};
  r.bound = {0.0};
  r.tol = {1e-8};
  bool ok = exact <= 1e-8;
  if (c.m.d <= 3) {
    // The same residual with both integrals by Gauss-Hermite quadrature,
    // exact for the degree-5 integrands involved.
    const QuadratureRule q = gauss_hermite_rule(c.m.measure, 4);
    double quad = 0.0;
    for (const auto& [f, g] : pairs) {
      const TestFunction tf = TestFunction::polynomial(f), tg = TestFunction::polynomial(g);
      const double form = dirichlet_form(c.m, tf, tg, q);
      const Polynomial lf = generator_polynomial(c.m, f);
      const double pairing = q.integrate([&](const Vec& x) { return lf(x) * g(x); });
      quad = std::max(quad, std::abs(form + pairing) / std::max({1.0, std::abs(form), std::abs(pairing)}));
    }
    r.measured.push_back(quad);
    r.bound.push_back(0.0);
    r.tol.push_back(1e-8);
    ok = ok && quad <= 1e-8;
  }
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  r.detail = "max relative |l(f,g) + <Lf,g>| over random cubic pairs (exact; quadrature when d <= 3)";
  return r;
}

CheckResult check_increment(const Context& c) {
  CheckResult r;
  const Vec xs = unit(c.m.d, 0);
  std::vector<std::pair<double, double>> pairs;
  for (double tau : {0.05, 0.1, 0.25, std::numbers::ln2, 1.0}) pairs.emplace_back(0.0, tau);
  pairs.emplace_back(0.3, 0.8);
  const auto rows = stationary_increment_check(c.m, xs, pairs, c.samples(1e5), c.seed, c.s.jobs);
  double zmax = 0.0, ratio = 0.0;
  bool ok = true;
  for (const IncrementRow& row : rows) {
    const double se = std::max(row.measured.std_error, 1e-300);
    zmax = std::max(zmax, std::abs(row.measured.mean - row.closed_form) / se);
    ratio = std::max(ratio, row.closed_form / row.bound);
    ok = ok && row.matches && row.below_bound &&
         row.measured.mean <= row.bound + 4.0 * row.measured.std_error;
    const double tau = row.t - row.s;
    c.point("measured", tau, row.measured.mean, row.measured.std_error);
    c.point("closed_form", tau, row.closed_form);
    c.point("bound", tau, row.bound);
  }
  r.measured = {zmax, ratio};
  r.bound = {0.0, 1.0};
  r.tol = {4.0, 0.0};
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  std::ostringstream os;
  os << "max z-score vs closed form, max closed/bound; second moment at tau=ln2: "
     << fmt(rows[3].measured.mean) << " (closed " << fmt(rows[3].closed_form) << ")";
  r.detail = os.str();
  return r;
}

CheckResult check_invariance(const Context& c) {
  CheckResult r;
  const TestFunction f = TestFunction::tanh_linear(Vec::Constant(c.m.d, 0.8), 0.3);
  const double exact = gaussian_mean(c.m, f, c.seed);
  const McEstimate e = mc_invariance(c.m, f, 0.7, c.samples(1e5), c.seed, c.s.jobs);
  r.measured = {e.mean};
  r.bound = {exact};
  r.tol = {4.0 * e.std_error};
  r.verdict = e.agrees_with(exact) ? Verdict::pass : Verdict::fail;
  r.detail = "int P(0.7) tanh(<x,a>+b) dmu vs int tanh(<x,a>+b) dmu";
  return r;
}

CheckResult check_oracle(const Context& c) {
  CheckResult r;
  const int d = c.m.d;
  const Vec u1 = unit(d, 0);
  const Vec u2 = Vec::Ones(d).normalized();
  const std::vector<double> times{0.25, std::numbers::ln2, 1.5};
  const std::vector<Vec> xs{Vec::Zero(d), 0.5 * u2, -u1};
  const std::vector<Vec> xstars{u1, 0.5 * u2, -0.75 * u1};
  const std::size_t n = c.samples(1e5);
  double zmax = 0.0;
  bool ok = true;
  std::uint64_t k = 0;
  for (double t : times)
    for (const Vec& x : xs)
      for (const Vec& xs_ : xstars) {
        const double exact = exact_on_exponentials(c.m, xs_, t, x);
        const McEstimate e = mc_semigroup(c.m, k_functional(c.m, xs_), x, t, n, c.seed + (k++ << 32), c.s.jobs);
        zmax = std::max(zmax, std::abs(e.mean - exact) / std::max(e.std_error, 1e-300));
        ok = ok && e.agrees_with(exact);
      }
  const double ref = exact_on_exponentials(c.m, u1, std::numbers::ln2, Vec::Zero(d));
  r.measured = {zmax, ref};
  r.bound = {0.0, kNaN};
  r.tol = {4.0, kNaN};
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  r.detail = "max z-score over a 3x3x3 grid of (t, x, x*); closed form at t=ln2, x=0, x*=e1";
  return r;
}

CheckResult check_ergodic(const Context& c) {
  CheckResult r;
  const Vec xs = unit(c.m.d, 0);
  const std::vector<double> times{1.0, 2.0, 3.0};
  const ErgodicReport rep = ergodic_limit(c.m, TestFunction::linear(xs), times, c.samples(1e5), c.seed, c.s.jobs);
  double zmax = 0.0;
  bool ok = rep.decaying;
  for (const ErgodicRow& row : rep.rows) {
    const Vec y = expm(c.m.a.transpose(), row.t) * xs;
    const double exact = y.dot(c.m.q_inf * y);
    zmax = std::max(zmax, std::abs(row.squared_norm.mean - exact) / std::max(row.squared_norm.std_error, 1e-300));
    ok = ok && row.squared_norm.agrees_with(exact);
    c.point("norm", row.t, row.norm);
    c.point("exact", row.t, std::sqrt(exact));
  }
  r.measured = {zmax};
  r.bound = {0.0};
  r.tol = {4.0};
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  r.detail = std::string("max z-score of |P(t)f - mean|^2 vs |Q^1/2 e^{tA^T} x*|^2 at t=1,2,3; decaying=") +
             (rep.decaying ? "yes" : "no");
  return r;
}

CheckResult check_contraction(const Context& c) {
  CheckResult r;
  const Vec dir = inward_direction(c.dom);
  const TestFunction f = TestFunction::tanh_linear(dir, 0.2);
  const double eps = 0.1, t = 0.5, h = 0.01;
  const std::size_t n = c.samples(2e4);
  const McEstimate fk = fk_l2_norm_squared(c.m, PotentialSpec{c.dom, eps}, f, t, n, h, c.seed, c.s.jobs);
  const McEstimate kl = killed_l2_norm_squared(c.m, c.dom, f, t, n, h, c.seed + 1, c.s.jobs);
  const McEstimate ref = sample_mean(
      c.m, [&](const Vec& x) { return c.dom.contains(x) ? std::pow(f.value(x), 2) : 0.0; }, 10 * n,
      c.seed + 2, c.s.jobs);
  const double tol_fk = 4.0 * std::hypot(fk.std_error, ref.std_error);
  const double tol_kl = 4.0 * std::hypot(kl.std_error, ref.std_error);
  r.measured = {fk.mean, kl.mean};
  r.bound = {ref.mean, ref.mean};
  r.tol = {tol_fk, tol_kl};
  r.verdict = fk.mean <= ref.mean + tol_fk && kl.mean <= ref.mean + tol_kl ? Verdict::pass : Verdict::fail;
  r.detail = "|P_eps(t) f~|^2 and |P_Omega(t) f|^2 vs |f~|^2 in L2(mu), eps=0.1, t=0.5";
  return r;
}

CheckResult check_resolvent4(const Context& c) {
  c.require_grid();
  CheckResult r;
  const int n = grid_size(c, 200, 61);
  const Grid g = build_grid(c.m, std::nullopt, c.grid_n(n));
  const GridOperator op = assemble(c.m, g, false);
  std::mt19937_64 gen(c.seed);
  std::normal_distribution<double> nd;
  std::vector<Vec> fs;
  for (int k = 0; k < 10; ++k) {
    Vec f(op.size());
    for (auto& x : f) x = nd(gen);
    fs.push_back(f);
  }
  std::array<double, 4> worst{0, 0, 0, 0};
  for (double lambda : {0.5, 1.0, 2.0, 4.0})
    for (double eps : {0.05, 0.1, 0.2})
      for (const Vec& f : fs) {
        const PotentialEstimates e = potential_resolvent_estimates(op, g, PotentialSpec{c.dom, eps}, lambda, f);
        worst = {std::max(worst[0], e.r), std::max(worst[1], e.dr), std::max(worst[2], e.vr),
                 std::max(worst[3], e.dv)};
      }
  r.measured.assign(worst.begin(), worst.end());
  r.bound = {1.0, 1.0, 1.0, 1.0};
  r.tol = {1e-8, 1e-8, 1e-8, 1e-8};
  bool ok = true;
  for (double v : worst) ok = ok && v <= 1.0 + 1e-8;
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  r.detail = "max ratios |phi|/(|f|/l), |Dphi|^2/(2|f|^2/l), <V phi,phi>/(eps|f|^2/l), "
             "<V,|Dphi|^2>/(sqrt(eps/l)|f|^2) on a " + std::to_string(n) + (c.m.d == 2 ? "^2" : "") + " grid";
  return r;
}

CheckResult check_kill_t0(const Context& c) {
  CheckResult r;
  const Vec x = interior_point(c.dom);
  const TestFunction f = TestFunction::tanh_linear(inward_direction(c.dom), 0.1);
  const McEstimate e = mc_killed(c.m, c.dom, f, x, 0.0, c.samples(100), 0.01, c.seed, c.s.jobs);
  r.measured = {e.mean};
  r.bound = {f.value(x)};
  r.tol = {0.0};
  r.verdict = e.mean == f.value(x) && e.std_error == 0.0 ? Verdict::pass : Verdict::fail;
  r.detail = "P_Omega(0) f(x) at an interior point";
  return r;
}

CheckResult check_kill_eigen(const Context& c) {
  CheckResult r;
  const Vec dir = inward_direction(c.dom);
  const Vec x = interior_point(c.dom);
  const std::vector<double> times{1.0, 1.5, 2.0, 2.5, 3.0};
  const KilledProfile prof = killed_profile(c.m, c.dom, TestFunction::linear(dir), x, times,
                                            c.samples(2e5), 1e-3, c.seed, c.s.jobs);
  for (std::size_t k = 0; k < times.size(); ++k) {
    c.point("survival", times[k], prof.survival[k].mean, prof.survival[k].std_error);
    c.point("value", times[k], prof.value[k].mean, prof.value[k].std_error);
  }
  const McEstimate& v = prof.value[0];
  const auto rate = half_line_rate(c.m, c.dom);
  std::ostringstream os;
  os << "P_Omega(1) f(x) with f(x)=<x,n>, SE " << fmt(v.std_error) << ", bias budget " << fmt(v.bias_budget)
     << "; log-survival slope on [1,3] " << fmt(prof.log_survival_slope) << " +- " << fmt(prof.slope_std_error);
  r.detail = os.str();
  if (!rate) {
    r.measured = {v.mean, prof.log_survival_slope};
    r.bound = {kNaN, kNaN};
    r.tol = {kNaN, kNaN};
    r.verdict = Verdict::observe_only;
    r.detail += "; no closed form for this model and domain";
    return r;
  }
  const double exact = std::exp(-*rate) * x[0];
  const double tol_v = 4.0 * v.std_error + v.bias_budget;
  const double tol_s = 0.1 * *rate;
  r.measured = {v.mean, prof.log_survival_slope};
  r.bound = {exact, -*rate};
  r.tol = {tol_v, tol_s};
  r.verdict = std::abs(v.mean - exact) <= tol_v && std::abs(prof.log_survival_slope + *rate) <= tol_s
                  ? Verdict::pass
                  : Verdict::fail;
  return r;
}

CheckResult check_sweep(const Context& c) {
  CheckResult r;
  const Vec dir = inward_direction(c.dom);
  const Vec x = interior_point(c.dom);
  const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
  const SweepReport rep = penalization_sweep(c.m, c.dom, TestFunction::linear(dir), x, 1.0, eps,
                                             c.samples(2e5), 1e-3, c.seed, c.s.jobs);
  bool dominance = true;
  std::ostringstream os;
  os << "gaps";
  for (const SweepRow& row : rep.rows) {
    r.measured.push_back(row.gap.mean);
    r.bound.push_back(0.0);
    r.tol.push_back(kNaN);
    dominance = dominance && row.dominance;
    c.point("gap", row.eps, row.gap.mean, row.gap.std_error);
    c.point("fk", row.eps, row.fk.mean, row.fk.std_error);
    os << " " << fmt(row.gap.mean) << "(" << fmt(row.gap.std_error) << ")";
  }
  r.tol.back() = rep.final_tolerance;
  os << "; killed " << fmt(rep.rows.back().killed.mean) << "; monotone=" << (rep.monotone ? "yes" : "no")
     << "; final tolerance 3SE+bias=" << fmt(rep.final_tolerance) << "; dominance=" << (dominance ? "yes" : "no");
  r.detail = os.str();
  r.verdict = rep.monotone && rep.final_within && dominance ? Verdict::pass : Verdict::fail;
  return r;
}

CheckResult check_identities(const Context& c) {
  c.require_grid();
  CheckResult r;
  const int n = grid_size(c, 201, 41);
  IdentityReport worst;
  for (const std::optional<Domain>& dom : {std::optional<Domain>{}, std::optional<Domain>{c.dom}}) {
    const Grid g = build_grid(c.m, dom, c.grid_n(n));
    const GridOperator op = assemble(c.m, g, dom.has_value());
    const IdentityReport rep = oulab::check_identities(op, c.seed);
    worst.accretivity = std::max(worst.accretivity, rep.accretivity);
    worst.duality = std::max(worst.duality, rep.duality);
    worst.constants = std::max(worst.constants, rep.constants);
    worst.commutation = std::max(worst.commutation, rep.commutation);
    worst.pi_square = std::max(worst.pi_square, rep.pi_square);
    worst.resolvent_commutation = std::max(worst.resolvent_commutation, rep.resolvent_commutation);
    worst.weak_solution = std::max(worst.weak_solution, rep.weak_solution);
  }
  r.measured = {worst.accretivity, worst.duality,           worst.constants,   worst.commutation,
                worst.pi_square,   worst.resolvent_commutation, worst.weak_solution};
  r.bound.assign(r.measured.size(), 0.0);
  r.tol.assign(r.measured.size(), 1e-8);
  r.verdict = worst.max_residual() <= 1e-8 ? Verdict::pass : Verdict::fail;
  r.detail = "accretivity, duality, L1, DL-UL D, Pi^2 blocks, resolvent commutation, weak form; "
             "whole-space and Dirichlet operators";
  return r;
}

CheckResult check_gradres(const Context& c) {
  c.require_grid();
  CheckResult r;
  auto b = make_bundle(c, c.dom, grid_size(c, 201, 31));
  const std::vector<double> lambdas = logspace(-2, 2, 21);
  const std::vector<double> v = gradient_resolvent_norms(b->red, lambdas, c.s.jobs);
  for (std::size_t k = 0; k < v.size(); ++k) c.point("norm", lambdas[k], v[k]);
  r.measured = {max_of(v)};
  r.bound = {std::sqrt(2.0)};
  r.tol = {1e-6};
  r.verdict = r.measured[0] <= std::sqrt(2.0) + 1e-6 ? Verdict::pass : Verdict::fail;
  r.detail = "sup over lambda in [1e-2,1e2] of sqrt(lambda)|D(lambda-L_Omega)^-1|, Dirichlet operator";
  return r;
}

CheckResult check_ndr(const Context& c) {
  c.require_grid();
  CheckResult r;
  auto b = make_bundle(c, c.dom, grid_size(c, 201, 31));
  const std::vector<double> ts = logspace(-3, 3, 61);
  const std::vector<double> v = ndr_norms(b->red, ts, c.s.jobs);
  for (std::size_t k = 0; k < v.size(); ++k) c.point("norm", ts[k], v[k]);
  r.measured = {max_of(v)};
  r.bound = {2.0};
  r.tol = {1e-6};
  r.verdict = r.measured[0] <= 2.0 + 1e-6 ? Verdict::pass : Verdict::fail;
  r.detail = "sup over t in [1e-3,1e3] of |t D (I - t^2 L_Omega)^-1|, Dirichlet operator";
  return r;
}

CheckResult check_bisector(const Context& c) {
  c.require_grid();
  CheckResult r;
  auto b = make_bundle(c, c.dom, grid_size(c, 201, 21));
  const std::vector<double> ts = logspace(-3, 3, 61);
  const ScanReport rep = bisectoriality_scan(b->red, ts, c.s.jobs);
  for (const ScanPoint& p : rep.points) {
    c.point("energy", p.t, p.norm_energy);
    c.point("product", p.t, p.norm_product);
  }
  const bool sym = is_symmetric_b(c.m);
  r.measured = {rep.sup_energy, rep.sup_product, rep.max_formula_mismatch};
  r.bound = {sym ? 1.0 : kNaN, kNaN, 0.0};
  r.tol = {sym ? 1e-8 : kNaN, kNaN, 1e-8};
  bool ok = rep.all_invertible && std::isfinite(rep.sup_energy) && std::isfinite(rep.sup_product) &&
            rep.max_formula_mismatch <= 1e-8;
  if (sym) ok = ok && rep.sup_energy <= 1.0 + 1e-8;
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  r.detail = std::string("sup |(I - it Pi)^-1| in the energy norm |f|^2+|G|^2/2 and the product norm, "
                         "max block-formula mismatch; 61 t in [1e-3,1e3]; invertible everywhere=") +
             (rep.all_invertible ? "yes" : "no");
  return r;
}

CheckResult check_riesz(const Context& c) {
  c.require_grid();
  CheckResult r;
  const int coarse = grid_size(c, 101, 41), fine = grid_size(c, 201, 61);
  auto bc = make_bundle(c, c.dom, coarse);
  const RieszResult rc = riesz_constants(bc->red);
  bc.reset();
  auto bf = make_bundle(c, c.dom, fine);
  const RieszResult rf = riesz_constants(bf->red);
  std::ostringstream os;
  os << "c, C on the " << fine << " grid; coarse " << coarse << " grid gives c=" << fmt(rc.c)
     << ", C=" << fmt(rc.C);
  if (is_symmetric_b(c.m)) {
    const double s = 1.0 / std::sqrt(2.0);
    r.measured = {rf.c, rf.C, rc.c, rc.C};
    r.bound.assign(4, s);
    r.tol.assign(4, 1e-6);
    bool ok = true;
    for (double v : r.measured) ok = ok && std::abs(v - s) <= 1e-6;
    r.verdict = ok ? Verdict::pass : Verdict::fail;
  } else {
    const double dc = std::abs(rf.c - rc.c) / rc.c, dC = std::abs(rf.C - rc.C) / rc.C;
    r.measured = {rf.c, rf.C, dc, dC};
    r.bound = {kNaN, kNaN, 0.0, 0.0};
    r.tol = {kNaN, kNaN, 0.05, 0.05};
    r.verdict = rf.c > 0.0 && rc.c > 0.0 && std::isfinite(rf.C) && rf.c <= rf.C && dc <= 0.05 && dC <= 0.05
                    ? Verdict::pass
                    : Verdict::fail;
    os << "; relative changes between grids are the last two values";
  }
  r.detail = os.str();
  return r;
}

CheckResult check_poincare_whole(const Context& c) {
  c.require_grid();
  CheckResult r;
  auto b = make_bundle(c, std::nullopt, grid_size(c, 200, 41), 6.0);
  const PoincareResult p = poincare_gap(b->red, c.m, GapMode::whole_meanzero);
  std::vector<Complex> ev = grid_spectrum(b->red);
  if (ev.size() > 60) ev.resize(60);
  for (const Complex& z : ev) c.point("eigenvalue", z.real(), z.imag());
  r.measured = {p.gap, p.variance_constant};
  std::ostringstream os;
  os << "mean-zero gap and variance constant 1/(2 gap) vs w/M^2 and M^2/(2w); M=" << fmt(c.m.m_const)
     << ", w=" << fmt(c.m.w);
  if (is_normal(c.m.a)) {
    r.bound = {c.m.w, 1.0 / (2.0 * c.m.w)};
    r.tol = {0.02 * c.m.w, 0.02 / (2.0 * c.m.w)};
    r.verdict = std::abs(p.gap - c.m.w) <= 0.02 * c.m.w ? Verdict::pass : Verdict::fail;
    os << "; normal drift, so the gap should equal w";
  } else {
    r.bound = {p.gap_lower_bound, p.paper_variance_constant};
    r.tol = {0.02 * p.gap_lower_bound, 0.02 * p.paper_variance_constant};
    r.verdict = p.gap >= 0.98 * p.gap_lower_bound ? Verdict::pass : Verdict::fail;
  }
  r.detail = os.str();
  return r;
}

CheckResult check_poincare_domain(const Context& c) {
  c.require_grid();
  CheckResult r;
  const int n = grid_size(c, 201, 41);
  auto b = make_bundle(c, c.dom, n, 6.0);
  const double gap = poincare_gap(b->red, c.m, GapMode::dirichlet).gap;
  b.reset();
  auto ball = make_bundle(c, Domain::ball(Vec::Zero(c.m.d), 1.0), n, 6.0);
  const double gap_ball = poincare_gap(ball->red, c.m, GapMode::dirichlet).gap;
  r.measured = {gap, gap_ball};
  const auto rate = half_line_rate(c.m, c.dom);
  bool ok = gap > 0.0 && gap_ball > 0.0;
  if (rate) {
    r.bound = {*rate, 0.0};
    r.tol = {0.02 * *rate, kNaN};
    ok = ok && std::abs(gap - *rate) <= 0.02 * *rate;
  } else {
    r.bound = {0.0, 0.0};
    r.tol = {kNaN, kNaN};
  }
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  r.detail = "smallest real part of spec(-L_Omega) on the suite domain and on the unit ball";
  return r;
}

CheckResult check_hinf(const Context& c) {
  c.require_grid();
  CheckResult r;
  auto b = make_bundle(c, c.dom, grid_size(c, 101, 21));
  const HinfReport rep = hinf_norm_probe(b->red, default_hinf_family());
  r.measured = {rep.probe, rep.spectral_ratio};
  r.bound = {kNaN, kNaN};
  r.tol = {kNaN, kNaN};
  r.verdict = Verdict::observe_only;
  r.detail = "probe: max |f(-UL)| over imaginary powers and rational bumps (worst " + rep.worst +
             "), and max |f(-UL)| / sup|f| on the spectrum" + (rep.used_contour ? "; contour evaluation" : "");
  return r;
}

using CheckFn = CheckResult (*)(const Context&);

const std::map<std::string, CheckFn>& registry() {
  static const std::map<std::string, CheckFn> r = {
      {"fk.contraction", check_contraction},
      {"fk.resolvent4", check_resolvent4},
      {"grid.bisector", check_bisector},
      {"grid.gradres", check_gradres},
      {"grid.hinf", check_hinf},
      {"grid.identities", check_identities},
      {"grid.ndr", check_ndr},
      {"grid.poincare.domain", check_poincare_domain},
      {"grid.poincare.whole", check_poincare_whole},
      {"grid.riesz", check_riesz},
      {"kill.eigen", check_kill_eigen},
      {"kill.t0", check_kill_t0},
      {"model.bmatrix", check_bmatrix},
      {"model.duality", check_duality},
      {"paths.increment", check_increment},
      {"pen.sweep", check_sweep},
      {"sg.ergodic", check_ergodic},
      {"sg.invariance", check_invariance},
      {"sg.oracle", check_oracle},
  };
  return r;
}

std::vector<std::string> all_check_ids() {
  std::vector<std::string> ids;
  for (const CheckInfo& c : kCatalog) ids.push_back(c.id);
  return ids;
}

}  // namespace

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::observe_only: return "observe-only";
    case Verdict::resource: return "resource";
  }
  return "?";
}

bool SuiteReport::any_failed() const {
  return std::any_of(results.begin(), results.end(), [](const CheckResult& r) { return r.verdict == Verdict::fail; });
}

bool SuiteReport::any_resource() const {
  return std::any_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.verdict == Verdict::resource; });
}

const std::vector<CheckInfo>& check_catalog() { return kCatalog; }

bool is_known_check(const std::string& id) {
  return std::any_of(kCatalog.begin(), kCatalog.end(), [&](const CheckInfo& c) { return c.id == id; });
}

std::vector<std::string> builtin_suite_names() { return {"rotation-2d", "symmetric-1d"}; }

Suite builtin_suite(const std::string& name) {
  Suite s;
  s.name = name;
  s.checks = all_check_ids();
  if (name == "symmetric-1d") {
    s.a = -Mat::Identity(1, 1);
    s.domain = Domain::half_space(Vec::Ones(1), 0.0);
  } else if (name == "rotation-2d") {
    s.a.resize(2, 2);
    s.a << -1.0, -1.0, 1.0, -1.0;
    s.domain = Domain::half_space(unit(2, 0), 0.0);
  } else {
    throw config_error("unknown suite: " + name);
  }
  return s;
}

CheckResult run_check(const std::string& id, const OUModel& m, const Suite& s, std::vector<SeriesPoint>* series) {
  const CheckInfo& ci = info(id);
  const Domain dom = s.domain ? *s.domain : Domain::half_space(unit(m.d, 0), 0.0);
  if (dom.dim() != m.d) throw config_error("domain dimension does not match the model");
  const auto start = std::chrono::steady_clock::now();
  Context ctx{m, s, dom, check_seed(s.seed, id), series, id};
  CheckResult r;
  try {
    r = registry().at(id)(ctx);
  } catch (const Error& e) {
    if (e.kind() == Error::Kind::capacity) {
      r = CheckResult{};
      r.verdict = Verdict::resource;
      r.detail = e.what();
    } else if (e.kind() == Error::Kind::capability) {
      r = CheckResult{};
      r.verdict = Verdict::observe_only;
      r.detail = std::string("not applicable: ") + e.what();
    } else {
      throw;
    }
  }
  r.id = id;
  r.anchor = ci.anchor;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

SuiteReport run_suite(const Suite& s) {
  for (const std::string& id : s.checks)
    if (!is_known_check(id)) throw config_error("unknown check id: " + id);
  const OUModel m = build_model(s.a);
  std::vector<std::string> ids = s.checks;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  SuiteReport rep;
  const auto start = std::chrono::steady_clock::now();
  for (const std::string& id : ids) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > s.limits.wall_clock_seconds) {
      CheckResult r;
      r.id = id;
      r.anchor = info(id).anchor;
      r.verdict = Verdict::resource;
      r.detail = "wall-clock budget exhausted before the check started";
      rep.results.push_back(r);
      continue;
    }
    std::vector<SeriesPoint> series;
    CheckResult r = run_check(id, m, s, &series);
    if (r.verdict == Verdict::fail && info(id).statistical) {
      Suite bigger = s;
      bigger.sample_scale *= 4.0;
      series.clear();
      const double first = r.seconds;
      r = run_check(id, m, bigger, &series);
      r.rerun = true;
      r.seconds += first;
    }
    rep.series.insert(rep.series.end(), series.begin(), series.end());
    rep.results.push_back(std::move(r));
  }
  return rep;
}

}  // namespace oulab

#include "oulab/semigroups.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oulab/errors.hpp"
#include "oulab/parallel.hpp"
#include "oulab/rng.hpp"

namespace oulab {

namespace {

constexpr double kExitShift = 0.5826;  // expected overshoot of a discretely monitored walk

Vec column(const Mat& m, std::size_t p) { return m.col(static_cast<Eigen::Index>(p)); }

double f_tilde(const TestFunction& f, const Domain& dom, const Vec& y) {
  return dom.contains(y) ? f.value(y) : 0.0;
}

// Per-path values from an ensemble, evaluated in parallel into fixed slots.
template <typename Fn>
std::vector<double> per_path(std::size_t n, int jobs, Fn fn) {
  std::vector<double> v(n);
  const std::size_t chunk = 4096;
  parallel_for((n + chunk - 1) / chunk, jobs, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * chunk);
    for (std::size_t p = c * chunk; p < end; ++p) v[p] = fn(p);
  });
  return v;
}

McEstimate pair_products(const std::vector<double>& values, double centre) {
  std::vector<double> products(values.size() / 2);
  for (std::size_t i = 0; i < products.size(); ++i)
    products[i] = (values[2 * i] - centre) * (values[2 * i + 1] - centre);
  return summarize(products);
}

}  // namespace

TestFunction k_functional(const OUModel& m, const Vec& xstar) {
  if (xstar.size() != m.d) throw argument_error("x* dimension mismatch");
  return TestFunction::exp_linear(xstar, -0.5 * xstar.dot(m.q_inf * xstar));
}

double gaussian_mean(const OUModel& m, const TestFunction& f, std::uint64_t seed) {
  switch (f.kind()) {
    case TestFunction::Kind::constant:
      return f.value(Vec::Zero(m.d));
    case TestFunction::Kind::polynomial:
      return gaussian_expectation(*f.as_polynomial(), m.q_inf);
    case TestFunction::Kind::exp_linear:
      return std::exp(f.shift() + 0.5 * f.direction().dot(m.q_inf * f.direction()));
    default:
      break;
  }
  if (m.d <= 3) return gauss_hermite_rule(m.measure, m.d == 1 ? 60 : (m.d == 2 ? 40 : 20))
      .integrate([&](const Vec& x) { return f.value(x); });
  const std::size_t n = 400000;
  double acc = 0.0;
  Vec z(m.d);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(seed, start_stream(i));
    for (int j = 0; j < m.d; ++j) z[j] = rng.normal();
    acc += f.value(m.chol_q * z);
  }
  return acc / static_cast<double>(n);
}

McEstimate mc_semigroup(const OUModel& m, const TestFunction& f, const Vec& x, double t,
                        std::size_t n, std::uint64_t seed, int jobs) {
  if (!(t >= 0.0)) throw argument_error("time must be non-negative");
  if (x.size() != m.d) throw argument_error("point dimension mismatch");
  if (f.kind() == TestFunction::Kind::constant || t == 0.0) {
    McEstimate e;
    e.mean = f.value(x);
    e.n = n;
    return e;
  }
  EnsembleSpec spec;
  spec.x0 = x;
  spec.t_end = t;
  spec.h = t;
  spec.n_paths = n;
  spec.seed = seed;
  spec.jobs = jobs;
  const PathEnsemble e = simulate_ensemble(m, spec);
  return summarize(per_path(n, jobs, [&](std::size_t p) { return f.value(column(e.terminal, p)); }));
}

double exact_on_exponentials(const OUModel& m, const Vec& xstar, double t, const Vec& x) {
  if (!(t >= 0.0)) throw argument_error("time must be non-negative");
  const Vec y = expm(m.a.transpose(), t) * xstar;
  return std::exp(x.dot(y) - 0.5 * y.dot(m.q_inf * y));
}

McEstimate mc_feynman_kac(const OUModel& m, const PotentialSpec& pspec, const TestFunction& f,
                          const Vec& x, double t, std::size_t n, double h, std::uint64_t seed,
                          int jobs, const FkOptions& opts) {
  if (!(t > 0.0) || !(h > 0.0) || h > t) throw argument_error("need 0 < h <= t");
  if (!(pspec.eps > 0.0)) throw argument_error("eps must be positive");
  if (!opts.constant_potential && h > pspec.eps / 5.0 * (1.0 + 1e-12))
    throw argument_error("step must satisfy h <= eps / 5 to resolve the potential");
  EnsembleSpec spec;
  spec.x0 = x;
  spec.t_end = t;
  spec.h = h;
  spec.n_paths = n;
  spec.seed = seed;
  spec.jobs = jobs;
  spec.domain = pspec.domain;
  spec.bridge = BridgeMode::off;
  if (!opts.constant_potential) spec.potential_eps = {pspec.eps};
  const PathEnsemble e = simulate_ensemble(m, spec);
  const double inv_eps = 1.0 / pspec.eps;
  return summarize(per_path(n, jobs, [&](std::size_t p) {
    const Vec y = column(e.terminal, p);
    const double integral =
        opts.constant_potential ? *opts.constant_potential * t : e.potential_integral(0, p);
    const double value = opts.zero_extend ? f_tilde(f, pspec.domain, y) : f.value(y);
    return value * std::exp(-inv_eps * integral);
  }));
}

KilledProfile killed_profile(const OUModel& m, const Domain& dom, const TestFunction& f,
                             const Vec& x, const std::vector<double>& times, std::size_t n,
                             double h, std::uint64_t seed, int jobs, BridgeMode bridge) {
  if (!dom.contains(x)) throw argument_error("killed semigroup is defined on the domain only");
  if (times.empty()) throw argument_error("need at least one time");
  KilledProfile prof;
  prof.times = times;
  const double t_end = *std::max_element(times.begin(), times.end());
  if (t_end == 0.0) {
    for (std::size_t r = 0; r < times.size(); ++r) {
      McEstimate v;
      v.mean = f.value(x);
      v.n = n;
      prof.value.push_back(v);
      McEstimate s;
      s.mean = 1.0;
      s.n = n;
      prof.survival.push_back(s);
    }
    return prof;
  }
  EnsembleSpec spec;
  spec.x0 = x;
  spec.t_end = t_end;
  spec.h = std::min(h, t_end);
  spec.n_paths = n;
  spec.seed = seed;
  spec.jobs = jobs;
  spec.domain = dom;
  spec.bridge = bridge;
  spec.record_times = times;
  const PathEnsemble e = simulate_ensemble(m, spec);
  const double delta = kExitShift * std::sqrt(e.h);
  for (std::size_t r = 0; r < times.size(); ++r) {
    std::vector<double> vals(n), surv(n), near(n);
    for (std::size_t p = 0; p < n; ++p) {
      const bool alive = e.alive_at[r * n + p] != 0;
      Vec y(m.d);
      for (int j = 0; j < m.d; ++j)
        y[j] = e.recorded_states(static_cast<Eigen::Index>(r * m.d + j), static_cast<Eigen::Index>(p));
      const double fy = alive ? f.value(y) : 0.0;
      vals[p] = fy;
      surv[p] = alive ? 1.0 : 0.0;
      near[p] = alive && e.min_distance_at[r * n + p] <= delta ? std::abs(fy) : 0.0;
    }
    McEstimate v = summarize(vals);
    McEstimate s = summarize(surv);
    double near_mass = 0.0, near_surv = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      near_mass += near[p];
      if (surv[p] > 0.0 && e.min_distance_at[r * n + p] <= delta) near_surv += 1.0;
    }
    v.bias_budget = near_mass / static_cast<double>(n);
    s.bias_budget = near_surv / static_cast<double>(n);
    v.bias_note = e.bridge ? "exit monitoring with bridge correction" : "discrete exit monitoring";
    s.bias_note = v.bias_note;
    prof.value.push_back(v);
    prof.survival.push_back(s);
  }
  // Weighted least squares of log survival against t.
  double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
  int used = 0;
  for (std::size_t r = 0; r < times.size(); ++r) {
    const McEstimate& s = prof.survival[r];
    if (s.mean <= 0.0 || s.std_error <= 0.0) continue;
    const double y = std::log(s.mean);
    const double var = std::pow(s.std_error / s.mean, 2);
    const double w = 1.0 / var;
    sw += w;
    st += w * times[r];
    sy += w * y;
    stt += w * times[r] * times[r];
    sty += w * times[r] * y;
    ++used;
  }
  if (used >= 2) {
    const double det = sw * stt - st * st;
    prof.log_survival_slope = (sw * sty - st * sy) / det;
    prof.slope_std_error = std::sqrt(sw / det);
  } else {
    prof.log_survival_slope = std::numeric_limits<double>::quiet_NaN();
  }
  return prof;
}

McEstimate mc_killed(const OUModel& m, const Domain& dom, const TestFunction& f, const Vec& x,
                     double t, std::size_t n, double h, std::uint64_t seed, int jobs,
                     BridgeMode bridge) {
  if (!(t >= 0.0)) throw argument_error("time must be non-negative");
  return killed_profile(m, dom, f, x, {t}, n, h, seed, jobs, bridge).value.front();
}

SweepReport penalization_sweep(const OUModel& m, const Domain& dom, const TestFunction& f,
                               const Vec& x, double t, const std::vector<double>& eps_list,
                               std::size_t n, double h, std::uint64_t seed, int jobs) {
  if (!dom.contains(x)) throw argument_error("sweep start must lie in the domain");
  if (eps_list.empty()) throw argument_error("empty eps list");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw argument_error("eps must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw argument_error("eps list must decrease");
  }
  if (h > eps_list.back() / 5.0 * (1.0 + 1e-12))
    throw argument_error("step must satisfy h <= eps / 5 for the smallest eps");

  // One ensemble: the same Gaussian increments drive every estimator, and
  // the bridge draws come from a separate stream.
  EnsembleSpec spec;
  spec.x0 = x;
  spec.t_end = t;
  spec.h = h;
  spec.n_paths = n;
  spec.seed = seed;
  spec.jobs = jobs;
  spec.domain = dom;
  spec.potential_eps = eps_list;
  spec.record_times = {t};
  const PathEnsemble e = simulate_ensemble(m, spec);
  const double delta = kExitShift * std::sqrt(e.h);

  std::vector<double> killed(n), ftilde(n);
  double near_mass = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const Vec y = column(e.terminal, p);
    ftilde[p] = f_tilde(f, dom, y);
    killed[p] = e.alive[p] ? f.value(y) : 0.0;
    if (e.alive[p] && e.min_distance[p] <= delta) near_mass += std::abs(killed[p]);
  }
  McEstimate killed_est = summarize(killed);
  killed_est.bias_budget = near_mass / static_cast<double>(n);
  killed_est.bias_note = e.bridge ? "exit monitoring with bridge correction" : "discrete exit monitoring";

  SweepReport rep;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    SweepRow row;
    row.eps = eps_list[i];
    std::vector<double> fk(n), gap(n);
    for (std::size_t p = 0; p < n; ++p) {
      const double w = std::exp(-e.potential_integral(static_cast<Eigen::Index>(i),
                                                      static_cast<Eigen::Index>(p)) / row.eps);
      fk[p] = ftilde[p] * w;
      gap[p] = fk[p] - killed[p];
      if (ftilde[p] >= 0.0 && fk[p] < killed[p] * w) row.dominance = false;
    }
    row.fk = summarize(fk);
    row.killed = killed_est;
    row.gap = summarize(gap);
    row.gap.bias_budget = killed_est.bias_budget;
    rep.rows.push_back(row);
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (!(std::abs(rep.rows[i].gap.mean) < std::abs(rep.rows[i - 1].gap.mean))) rep.monotone = false;
  const McEstimate& last = rep.rows.back().gap;
  rep.final_tolerance = 3.0 * last.std_error + last.bias_budget;
  rep.final_within = std::abs(last.mean) <= rep.final_tolerance;
  return rep;
}

ErgodicReport ergodic_limit(const OUModel& m, const TestFunction& f,
                            const std::vector<double>& t_list, std::size_t n, std::uint64_t seed,
                            int jobs) {
  ErgodicReport rep;
  rep.mean = gaussian_mean(m, f, seed);
  for (std::size_t i = 0; i < t_list.size(); ++i) {
    const double t = t_list[i];
    if (!(t > 0.0)) throw argument_error("ergodic times must be positive");
    EnsembleSpec spec;
    spec.stationary_start = true;
    spec.paths_per_start = 2;
    spec.t_end = t;
    spec.h = t;
    spec.n_paths = 2 * n;
    spec.seed = seed + 0x9e3779b97f4a7c15ull * (i + 1);
    spec.jobs = jobs;
    const PathEnsemble e = simulate_ensemble(m, spec);
    const std::vector<double> values =
        per_path(2 * n, jobs, [&](std::size_t p) { return f.value(column(e.terminal, p)); });
    ErgodicRow row;
    row.t = t;
    row.squared_norm = pair_products(values, rep.mean);
    row.norm = std::sqrt(std::max(row.squared_norm.mean, 0.0));
    rep.rows.push_back(row);
  }
  rep.decaying = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const McEstimate& a = rep.rows[i - 1].squared_norm;
    const McEstimate& b = rep.rows[i].squared_norm;
    if (b.mean > a.mean + 4.0 * std::hypot(a.std_error, b.std_error)) rep.decaying = false;
  }
  return rep;
}

McEstimate fk_l2_norm_squared(const OUModel& m, const PotentialSpec& pspec, const TestFunction& f,
                              double t, std::size_t n_outer, double h, std::uint64_t seed,
                              int jobs) {
  if (h > pspec.eps / 5.0 * (1.0 + 1e-12))
    throw argument_error("step must satisfy h <= eps / 5 to resolve the potential");
  EnsembleSpec spec;
  spec.stationary_start = true;
  spec.paths_per_start = 2;
  spec.t_end = t;
  spec.h = h;
  spec.n_paths = 2 * n_outer;
  spec.seed = seed;
  spec.jobs = jobs;
  spec.domain = pspec.domain;
  spec.bridge = BridgeMode::off;
  spec.potential_eps = {pspec.eps};
  const PathEnsemble e = simulate_ensemble(m, spec);
  const std::vector<double> values = per_path(2 * n_outer, jobs, [&](std::size_t p) {
    return f_tilde(f, pspec.domain, column(e.terminal, p)) *
           std::exp(-e.potential_integral(0, static_cast<Eigen::Index>(p)) / pspec.eps);
  });
  return pair_products(values, 0.0);
}

McEstimate killed_l2_norm_squared(const OUModel& m, const Domain& dom, const TestFunction& f,
                                  double t, std::size_t n_outer, double h, std::uint64_t seed,
                                  int jobs) {
  EnsembleSpec spec;
  spec.stationary_start = true;
  spec.paths_per_start = 2;
  spec.t_end = t;
  spec.h = h;
  spec.n_paths = 2 * n_outer;
  spec.seed = seed;
  spec.jobs = jobs;
  spec.domain = dom;
  const PathEnsemble e = simulate_ensemble(m, spec);
  const std::vector<double> values = per_path(2 * n_outer, jobs, [&](std::size_t p) {
    return e.alive[p] ? f.value(column(e.terminal, p)) : 0.0;
  });
  return pair_products(values, 0.0);
}

McEstimate mc_invariance(const OUModel& m, const TestFunction& f, double t, std::size_t n,
                         std::uint64_t seed, int jobs) {
  EnsembleSpec spec;
  spec.stationary_start = true;
  spec.t_end = t;
  spec.h = t > 0.0 ? t : 1.0;
  spec.n_paths = n;
  spec.seed = seed;
  spec.jobs = jobs;
  const PathEnsemble e = simulate_ensemble(m, spec);
  return summarize(per_path(n, jobs, [&](std::size_t p) { return f.value(column(e.terminal, p)); }));
}

}  // namespace oulab

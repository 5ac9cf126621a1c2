#pragma once

// Monte-Carlo and closed-form evaluation of the OU semigroup P(t), the
// Feynman-Kac semigroups P_eps(t) and the killed semigroup P_Omega(t).

#include <cstdint>
#include <optional>
#include <vector>

#include "oulab/domains.hpp"
#include "oulab/estimate.hpp"
#include "oulab/model.hpp"
#include "oulab/paths.hpp"

namespace oulab {

/// K_{x*}(x) = exp(<x, x*> - <Q x*, x*>/2), which integrates to 1 against mu_inf.
TestFunction k_functional(const OUModel& m, const Vec& xstar);

/// int f dmu_inf: exact for polynomials, constants and exponentials;
/// Gauss-Hermite (d <= 3) or Monte Carlo otherwise.
double gaussian_mean(const OUModel& m, const TestFunction& f, std::uint64_t seed = 1);

/// E f(X^x(t)) by one exact step of size t per sample.
McEstimate mc_semigroup(const OUModel& m, const TestFunction& f, const Vec& x, double t,
                        std::size_t n, std::uint64_t seed, int jobs = 1);

/// P(t) K_{x*}(x) = exp(<x, y> - <Q y, y>/2) with y = e^{tA^T} x*.
double exact_on_exponentials(const OUModel& m, const Vec& xstar, double t, const Vec& x);

struct FkOptions {
  bool zero_extend = true;                    // evaluate f~ = f 1_Omega at the endpoint
  std::optional<double> constant_potential;   // replace V_eps by a constant (test hook)
};

/// E[f~(X(t)) exp(-(1/eps) int_0^t V_eps(X(r)) dr)], trapezoid rule on the
/// grid. Requires h <= eps / 5.
McEstimate mc_feynman_kac(const OUModel& m, const PotentialSpec& spec, const TestFunction& f,
                          const Vec& x, double t, std::size_t n, double h, std::uint64_t seed,
                          int jobs = 1, const FkOptions& opts = {});

/// E[f(X(t)) 1{tau > t}]; bias_budget is the mass of surviving paths whose
/// grid minimum distance is within 0.5826 sqrt(h) of the boundary.
McEstimate mc_killed(const OUModel& m, const Domain& dom, const TestFunction& f, const Vec& x,
                     double t, std::size_t n, double h, std::uint64_t seed, int jobs = 1,
                     BridgeMode bridge = BridgeMode::automatic);

struct KilledProfile {
  std::vector<double> times;
  std::vector<McEstimate> value;     // P_Omega(t) f(x)
  std::vector<McEstimate> survival;  // P(tau > t)
  double log_survival_slope = 0.0;   // weighted least squares over all times
  double slope_std_error = 0.0;
};

KilledProfile killed_profile(const OUModel& m, const Domain& dom, const TestFunction& f,
                             const Vec& x, const std::vector<double>& times, std::size_t n,
                             double h, std::uint64_t seed, int jobs = 1,
                             BridgeMode bridge = BridgeMode::automatic);

struct SweepRow {
  double eps = 0.0;
  McEstimate fk;      // P_eps(t) f~(x)
  McEstimate killed;  // P_Omega(t) f(x), same paths
  McEstimate gap;     // mean of the pathwise difference
  bool dominance = true;  // pathwise f~ w >= f 1{alive} w
};

struct SweepReport {
  std::vector<SweepRow> rows;
  bool monotone = false;      // |gap| strictly decreasing along the eps list
  double final_tolerance = 0.0;  // 3 SE of the final gap + bias budget
  bool final_within = false;
};

SweepReport penalization_sweep(const OUModel& m, const Domain& dom, const TestFunction& f,
                               const Vec& x, double t, const std::vector<double>& eps_list,
                               std::size_t n, double h, std::uint64_t seed, int jobs = 1);

struct ErgodicRow {
  double t = 0.0;
  McEstimate squared_norm;  // ||P(t)f - mean||^2 in L^2(mu_inf)
  double norm = 0.0;        // sqrt of the estimate, clamped at 0
};

struct ErgodicReport {
  double mean = 0.0;
  std::vector<ErgodicRow> rows;
  bool decaying = false;  // estimates non-increasing within 4 SE
};

/// Outer samples x ~ mu_inf with two independent inner endpoints, so the
/// product (f(Y1) - mean)(f(Y2) - mean) is unbiased for (P(t)f(x) - mean)^2.
ErgodicReport ergodic_limit(const OUModel& m, const TestFunction& f,
                            const std::vector<double>& t_list, std::size_t n, std::uint64_t seed,
                            int jobs = 1);

/// int (P_eps(t) f~)^2 dmu_inf by the same product construction.
McEstimate fk_l2_norm_squared(const OUModel& m, const PotentialSpec& spec, const TestFunction& f,
                              double t, std::size_t n_outer, double h, std::uint64_t seed,
                              int jobs = 1);

/// int_Omega (P_Omega(t) f)^2 dmu_inf by the same product construction.
McEstimate killed_l2_norm_squared(const OUModel& m, const Domain& dom, const TestFunction& f,
                                  double t, std::size_t n_outer, double h, std::uint64_t seed,
                                  int jobs = 1);

/// int P(t) f dmu_inf from stationary starts.
McEstimate mc_invariance(const OUModel& m, const TestFunction& f, double t, std::size_t n,
                         std::uint64_t seed, int jobs = 1);

}  // namespace oulab

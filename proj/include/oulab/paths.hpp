#pragma once

// Exact-in-law simulation of X(t) = e^{tA}x + int_0^t e^{(t-s)A} dW(s) on a
// time grid, with exit detection against a domain and optional
// accumulation of penalization integrals along each path.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "oulab/domains.hpp"
#include "oulab/estimate.hpp"
#include "oulab/model.hpp"
#include "oulab/rng.hpp"

namespace oulab {

struct StepKernel {
  double h = 0.0;
  Mat e_h;      // e^{hA}
  Mat q_h;      // int_0^h e^{sA} e^{sA^T} ds
  Mat chol_qh;  // lower Cholesky factor of q_h
};

/// Van Loan: exponentiate [[A, I], [0, -A^T]] h and read Q_h off the blocks.
StepKernel make_step_kernel(const OUModel& m, double h);

Vec exact_step(const StepKernel& k, const Vec& x, RngStream& rng);
/// Same step with the standard normal vector supplied by the caller.
Vec exact_step(const StepKernel& k, const Vec& x, const Vec& z);

enum class BridgeMode { automatic, on, off };
enum class Stepper { exact, euler };

struct EnsembleSpec {
  Vec x0;
  bool stationary_start = false;  // draw X(0) ~ mu_inf instead of x0
  std::size_t paths_per_start = 1;  // consecutive paths sharing one stationary start
  double t_end = 1.0;
  double h = 1e-2;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 0;
  std::optional<Domain> domain;
  BridgeMode bridge = BridgeMode::automatic;  // automatic = on for half-spaces
  std::vector<double> potential_eps;          // accumulate int_0^t V_eps(X_s) ds per eps
  std::vector<double> record_times;           // grid times to snapshot
  bool keep_paths = false;                    // store every state (capacity-limited)
  Stepper stepper = Stepper::exact;
  bool force_scalar = false;  // bypass the SIMD kernels
  int jobs = 1;
};

struct PathEnsemble {
  int d = 0;
  std::size_t n_paths = 0;
  int steps = 0;
  double h = 0.0;
  bool bridge = false;
  const char* kernel_level = "";

  Mat terminal;                       // d x n_paths, state at t_end
  std::vector<std::uint8_t> alive;    // at t_end
  std::vector<double> exit_time;      // +inf when the path never left
  std::vector<double> min_distance;   // smallest grid signed distance while alive
  Mat potential_integral;             // n_eps x n_paths

  std::vector<double> record_times;
  std::vector<std::uint8_t> alive_at;  // [r * n_paths + p]
  std::vector<double> min_distance_at; // [r * n_paths + p]
  Mat recorded_states;                 // (d * n_records) x n_paths

  std::vector<double> path_states;          // [(p * (steps + 1) + k) * d + j] when kept
  std::vector<std::uint8_t> path_alive;     // [p * (steps + 1) + k] when kept
};

/// Streaming path engine. Paths are simulated in blocks using the active
/// SIMD kernel table; every path draws from its own counter-based streams,
/// so results do not depend on `jobs`.
PathEnsemble simulate_ensemble(const OUModel& m, const EnsembleSpec& spec);

/// Linear interpolation of the zero of the signed distance across a step.
double interpolate_exit(double t_prev, double h, double sd_prev, double sd_cur);

/// Probability that a Brownian bridge with variance rate sigma2 crosses a
/// flat boundary between two interior points at distances d1, d2.
double bridge_crossing_probability(double d1, double d2, double sigma2, double h);

struct TrajectoryBatch {
  int d = 0;
  std::size_t n_paths = 0;
  std::vector<double> times;
  std::vector<double> states;         // [(p * times.size() + k) * d + j]
  std::vector<std::uint8_t> alive;    // [p * times.size() + k]
  std::vector<double> exit_time;
  std::vector<std::uint64_t> stream_ids;

  Vec state(std::size_t path, std::size_t k) const;
};

TrajectoryBatch simulate_batch(const OUModel& m, const Vec& x0, double t_end, double h,
                               std::size_t n_paths, const std::optional<Domain>& dom,
                               std::uint64_t seed, int jobs = 1,
                               BridgeMode bridge = BridgeMode::automatic);

/// CSV with columns path,t,x1..xd,alive.
void write_trajectory_csv(const TrajectoryBatch& batch, std::ostream& out);

struct IncrementRow {
  double s = 0.0;
  double t = 0.0;
  McEstimate measured;  // E <Z(t) - Z(s), x*>^2
  double closed_form = 0.0;
  double bound = 0.0;   // 2 M_T |t - s| ||B|| ||x*||^2
  bool matches = false; // within 4 standard errors
  bool below_bound = false;
};

/// Stationary increments Z(0) ~ mu_inf. Pairs must satisfy 0 <= s <= t.
std::vector<IncrementRow> stationary_increment_check(const OUModel& m, const Vec& xstar,
                                                     const std::vector<std::pair<double, double>>& pairs,
                                                     std::size_t n_paths, std::uint64_t seed,
                                                     int jobs = 1);

}  // namespace oulab

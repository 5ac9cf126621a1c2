#include "oulab/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "oulab/errors.hpp"
#include "oulab/parallel.hpp"
#include "oulab/simd/kernels.hpp"

namespace oulab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kBlock = 256;
constexpr std::size_t kMaxPaths = 10'000'000;
constexpr long kMaxSteps = 1'000'000;
constexpr double kMaxStoredValues = 5e7;

std::vector<double> row_major(const Mat& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
  return out;
}

// How signed distances and potentials are evaluated for a block.
struct Geometry {
  const Domain* dom = nullptr;
  enum class Fast { none, half_space, ball } fast = Fast::none;
  bool negate = false;  // complement of the fast primitive
  Vec normal_or_center;
  double offset_or_radius = 0.0;
};

Geometry make_geometry(const std::optional<Domain>& dom) {
  Geometry g;
  if (!dom || dom->kind() == Domain::Kind::whole_space) return g;
  g.dom = &*dom;
  const Domain* base = g.dom;
  if (base->kind() == Domain::Kind::complement) {
    base = &base->inner();
    g.negate = true;
  }
  if (base->kind() == Domain::Kind::half_space) {
    g.fast = Geometry::Fast::half_space;
    g.normal_or_center = g.negate ? Vec(-base->normal()) : base->normal();
    g.offset_or_radius = g.negate ? -base->offset() : base->offset();
    g.negate = false;
  } else if (base->kind() == Domain::Kind::ball) {
    g.fast = Geometry::Fast::ball;
    g.normal_or_center = base->center();
    g.offset_or_radius = base->radius();
  }
  return g;
}

void signed_distances(const Geometry& g, const simd::KernelTable& kt, int d, const double* x,
                      std::size_t n, std::size_t stride, double* sd) {
  if (g.dom == nullptr) {
    std::fill(sd, sd + n, kInf);
    return;
  }
  switch (g.fast) {
    case Geometry::Fast::half_space:
      kt.halfspace_distance(g.normal_or_center.data(), g.offset_or_radius, d, x, n, stride, sd);
      return;
    case Geometry::Fast::ball:
      kt.ball_distance(g.normal_or_center.data(), g.offset_or_radius, d, x, n, stride, sd);
      if (g.negate)
        for (std::size_t p = 0; p < n; ++p) sd[p] = -sd[p];
      return;
    case Geometry::Fast::none:
      break;
  }
  Vec point(d);
  for (std::size_t p = 0; p < n; ++p) {
    for (int j = 0; j < d; ++j) point[j] = x[j * stride + p];
    sd[p] = g.dom->signed_distance(point);
  }
}

void potentials(const Geometry& g, const simd::KernelTable& kt, double eps, int d, const double* x,
                const double* sd, std::size_t n, std::size_t stride, double* v) {
  if (g.dom == nullptr) {
    std::fill(v, v + n, 0.0);
  } else if (g.dom->shrunk_is_empty(eps)) {
    std::fill(v, v + n, 1.0);
  } else if (g.dom->potential_is_ramp()) {
    kt.ramp_potential(sd, eps, n, v);
  } else {
    const PotentialSpec spec{*g.dom, eps};
    Vec point(d);
    for (std::size_t p = 0; p < n; ++p) {
      for (int j = 0; j < d; ++j) point[j] = x[j * stride + p];
      v[p] = penalized_potential(spec, point);
    }
  }
}

}  // namespace

StepKernel make_step_kernel(const OUModel& m, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw argument_error("step size must be positive");
  const int d = m.d;
  Mat block = Mat::Zero(2 * d, 2 * d);
  block.topLeftCorner(d, d) = m.a;
  block.topRightCorner(d, d) = Mat::Identity(d, d);
  block.bottomRightCorner(d, d) = -m.a.transpose();
  StepKernel k;
  k.h = h;
  k.e_h = expm(m.a, h);
  if (h * m.w <= 30.0) {
    const Mat f = expm(block, h);
    k.q_h = f.topRightCorner(d, d) * f.topLeftCorner(d, d).transpose();
  } else {
    // The off-diagonal block overflows relative precision for very long
    // steps; use the stationary identity Q_h = Q - e^{hA} Q e^{hA^T}.
    k.q_h = m.q_inf - k.e_h * m.q_inf * k.e_h.transpose();
  }
  k.q_h = 0.5 * (k.q_h + k.q_h.transpose());
  const double gap = Eigen::SelfAdjointEigenSolver<Mat>(m.q_inf - k.q_h).eigenvalues().minCoeff();
  if (gap < -1e-10 * std::max(1.0, m.q_inf.norm()))
    throw numerical_error("step covariance exceeds the invariant covariance");
  Eigen::LLT<Mat> llt(k.q_h);
  if (llt.info() != Eigen::Success) throw numerical_error("step covariance is not positive definite");
  k.chol_qh = llt.matrixL();
  return k;
}

Vec exact_step(const StepKernel& k, const Vec& x, const Vec& z) { return k.e_h * x + k.chol_qh * z; }

Vec exact_step(const StepKernel& k, const Vec& x, RngStream& rng) {
  Vec z(x.size());
  for (auto& v : z) v = rng.normal();
  return exact_step(k, x, z);
}

double interpolate_exit(double t_prev, double h, double sd_prev, double sd_cur) {
  if (!(sd_prev > 0.0)) return t_prev;
  return t_prev + h * sd_prev / (sd_prev - sd_cur);
}

double bridge_crossing_probability(double d1, double d2, double sigma2, double h) {
  if (d1 <= 0.0 || d2 <= 0.0) return 1.0;
  return std::exp(-2.0 * d1 * d2 / (sigma2 * h));
}

PathEnsemble simulate_ensemble(const OUModel& m, const EnsembleSpec& spec) {
  const int d = m.d;
  if (!spec.stationary_start && spec.x0.size() != d) throw argument_error("x0 dimension mismatch");
  if (spec.domain && spec.domain->dim() != d) throw argument_error("domain dimension mismatch");
  if (!(spec.t_end >= 0.0) || !(spec.h > 0.0)) throw argument_error("need t_end >= 0 and h > 0");
  if (spec.n_paths == 0) throw argument_error("need at least one path");
  if (spec.n_paths > kMaxPaths) throw capacity_error("path count exceeds 1e7");
  const double ratio = spec.t_end / spec.h;
  if (ratio > static_cast<double>(kMaxSteps)) throw capacity_error("step count exceeds 1e6");
  const int steps = spec.t_end == 0.0 ? 0 : static_cast<int>(std::ceil(ratio - 1e-9));
  const double h = steps == 0 ? spec.h : spec.t_end / steps;
  if (!spec.potential_eps.empty() && !spec.domain)
    throw argument_error("penalization integrals need a domain");
  for (double eps : spec.potential_eps)
    if (!(eps > 0.0)) throw argument_error("eps must be positive");
  if (spec.keep_paths &&
      static_cast<double>(spec.n_paths) * (steps + 1) * (d + 1) > kMaxStoredValues)
    throw capacity_error("trajectory storage exceeds 5e7 values; use streaming estimators");

  std::vector<int> record_steps;
  for (double t : spec.record_times) {
    const double k = t / h;
    const long r = std::lround(k);
    if (std::abs(k - r) > 1e-6 || r < 0 || r > steps)
      throw argument_error("record time is not on the simulation grid");
    record_steps.push_back(static_cast<int>(r));
  }

  const Geometry geom = make_geometry(spec.domain);
  bool bridge = false;
  if (geom.dom != nullptr) {
    const bool flat = geom.fast == Geometry::Fast::half_space;
    if (spec.bridge == BridgeMode::on && !flat)
      throw capability_error("bridge correction is implemented for half-spaces only");
    bridge = spec.bridge == BridgeMode::on || (spec.bridge == BridgeMode::automatic && flat);
  }

  const simd::KernelTable& kt = spec.force_scalar ? simd::scalar_kernels() : simd::active_kernels();
  const StepKernel sk = steps > 0 ? make_step_kernel(m, h) : StepKernel{};
  std::vector<double> e_rm, c_rm;
  if (steps > 0) {
    if (spec.stepper == Stepper::exact) {
      e_rm = row_major(sk.e_h);
      c_rm = row_major(sk.chol_qh);
    } else {
      e_rm = row_major(Mat::Identity(d, d) + h * m.a);
      c_rm = row_major(std::sqrt(h) * Mat::Identity(d, d));
    }
  }
  const double sigma2_normal = 1.0;  // unit normal, identity noise covariance

  const std::size_t n = spec.n_paths;
  const std::size_t n_eps = spec.potential_eps.size();
  const std::size_t n_rec = record_steps.size();
  PathEnsemble out;
  out.d = d;
  out.n_paths = n;
  out.steps = steps;
  out.h = h;
  out.bridge = bridge;
  out.kernel_level = kt.name;
  out.terminal.resize(d, static_cast<Eigen::Index>(n));
  out.alive.assign(n, 1);
  out.exit_time.assign(n, kInf);
  out.min_distance.assign(n, kInf);
  out.potential_integral = Mat::Zero(static_cast<Eigen::Index>(n_eps), static_cast<Eigen::Index>(n));
  out.record_times = spec.record_times;
  out.alive_at.assign(n_rec * n, 0);
  out.recorded_states.resize(static_cast<Eigen::Index>(d * n_rec), static_cast<Eigen::Index>(n));
  if (spec.keep_paths) {
    out.path_states.assign(n * (steps + 1) * d, 0.0);
    out.path_alive.assign(n * (steps + 1), 0);
  }

  const std::size_t group = std::max<std::size_t>(spec.paths_per_start, 1);
  out.min_distance_at.assign(n_rec * n, kInf);
  const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
  parallel_for(n_blocks, spec.jobs, [&](std::size_t blk) {
    const std::size_t first = blk * kBlock;
    const std::size_t nb = std::min(kBlock, n - first);
    const std::size_t stride = nb;
    std::vector<double> x(d * stride), xn(d * stride), z(d * stride);
    std::vector<double> sd_prev(nb), sd_cur(nb);
    std::vector<double> v_prev(n_eps * nb), v_cur(n_eps * nb), acc(n_eps * nb, 0.0);
    std::vector<std::uint8_t> alive(nb);
    std::vector<double> exit_t(nb, kInf), min_sd(nb);
    std::vector<RngStream> noise, aux;
    noise.reserve(nb);
    aux.reserve(nb);
    for (std::size_t p = 0; p < nb; ++p) {
      noise.emplace_back(spec.seed, noise_stream(first + p));
      aux.emplace_back(spec.seed, aux_stream(first + p));
    }

    if (spec.stationary_start) {
      Vec zs(d);
      for (std::size_t p = 0; p < nb; ++p) {
        RngStream st(spec.seed, start_stream((first + p) / group));
        for (int j = 0; j < d; ++j) zs[j] = st.normal();
        const Vec x0 = m.chol_q * zs;
        for (int j = 0; j < d; ++j) x[j * stride + p] = x0[j];
      }
    } else {
      for (std::size_t p = 0; p < nb; ++p)
        for (int j = 0; j < d; ++j) x[j * stride + p] = spec.x0[j];
    }

    signed_distances(geom, kt, d, x.data(), nb, stride, sd_prev.data());
    for (std::size_t p = 0; p < nb; ++p) {
      alive[p] = sd_prev[p] > 0.0 ? 1 : 0;
      if (!alive[p]) exit_t[p] = 0.0;
      min_sd[p] = sd_prev[p];
    }
    for (std::size_t e = 0; e < n_eps; ++e)
      potentials(geom, kt, spec.potential_eps[e], d, x.data(), sd_prev.data(), nb, stride,
                 v_prev.data() + e * nb);

    auto snapshot = [&](int k) {
      for (std::size_t r = 0; r < n_rec; ++r) {
        if (record_steps[r] != k) continue;
        for (std::size_t p = 0; p < nb; ++p) {
          out.alive_at[r * n + first + p] = alive[p];
          out.min_distance_at[r * n + first + p] = min_sd[p];
          for (int j = 0; j < d; ++j)
            out.recorded_states(static_cast<Eigen::Index>(r * d + j),
                                static_cast<Eigen::Index>(first + p)) = x[j * stride + p];
        }
      }
      if (spec.keep_paths) {
        for (std::size_t p = 0; p < nb; ++p) {
          const std::size_t base = (first + p) * (steps + 1) + k;
          out.path_alive[base] = alive[p];
          for (int j = 0; j < d; ++j) out.path_states[base * d + j] = x[j * stride + p];
        }
      }
    };
    snapshot(0);

    for (int k = 1; k <= steps; ++k) {
      for (std::size_t p = 0; p < nb; ++p)
        for (int j = 0; j < d; ++j) z[j * stride + p] = noise[p].normal();
      kt.affine_step(e_rm.data(), c_rm.data(), d, x.data(), z.data(), xn.data(), nb, stride);
      std::swap(x, xn);
      signed_distances(geom, kt, d, x.data(), nb, stride, sd_cur.data());
      const double t_prev = (k - 1) * h;
      for (std::size_t p = 0; p < nb; ++p) {
        if (!alive[p]) continue;
        if (!(sd_cur[p] > 0.0)) {
          alive[p] = 0;
          exit_t[p] = interpolate_exit(t_prev, h, sd_prev[p], sd_cur[p]);
          continue;
        }
        if (bridge &&
            aux[p].uniform() < bridge_crossing_probability(sd_prev[p], sd_cur[p], sigma2_normal, h)) {
          alive[p] = 0;
          exit_t[p] = t_prev + 0.5 * h;
          continue;
        }
        min_sd[p] = std::min(min_sd[p], sd_cur[p]);
      }
      for (std::size_t e = 0; e < n_eps; ++e) {
        potentials(geom, kt, spec.potential_eps[e], d, x.data(), sd_cur.data(), nb, stride,
                   v_cur.data() + e * nb);
        kt.trapezoid_accumulate(v_prev.data() + e * nb, v_cur.data() + e * nb, 0.5 * h, nb,
                                acc.data() + e * nb);
      }
      std::swap(sd_prev, sd_cur);
      std::swap(v_prev, v_cur);
      snapshot(k);
    }

    for (std::size_t p = 0; p < nb; ++p) {
      const std::size_t g = first + p;
      for (int j = 0; j < d; ++j)
        out.terminal(j, static_cast<Eigen::Index>(g)) = x[j * stride + p];
      out.alive[g] = alive[p];
      out.exit_time[g] = exit_t[p];
      out.min_distance[g] = min_sd[p];
      for (std::size_t e = 0; e < n_eps; ++e)
        out.potential_integral(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(g)) =
            acc[e * nb + p];
    }
  });
  return out;
}

Vec TrajectoryBatch::state(std::size_t path, std::size_t k) const {
  Vec v(d);
  const std::size_t base = (path * times.size() + k) * d;
  for (int j = 0; j < d; ++j) v[j] = states[base + j];
  return v;
}

TrajectoryBatch simulate_batch(const OUModel& m, const Vec& x0, double t_end, double h,
                               std::size_t n_paths, const std::optional<Domain>& dom,
                               std::uint64_t seed, int jobs, BridgeMode bridge) {
  EnsembleSpec spec;
  spec.x0 = x0;
  spec.t_end = t_end;
  spec.h = h;
  spec.n_paths = n_paths;
  spec.seed = seed;
  spec.domain = dom;
  spec.bridge = bridge;
  spec.keep_paths = true;
  spec.jobs = jobs;
  PathEnsemble e = simulate_ensemble(m, spec);
  TrajectoryBatch b;
  b.d = m.d;
  b.n_paths = n_paths;
  b.times.resize(e.steps + 1);
  for (int k = 0; k <= e.steps; ++k) b.times[k] = k * e.h;
  b.states = std::move(e.path_states);
  b.alive = std::move(e.path_alive);
  b.exit_time = std::move(e.exit_time);
  b.stream_ids.resize(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) b.stream_ids[p] = noise_stream(p);
  return b;
}

void write_trajectory_csv(const TrajectoryBatch& batch, std::ostream& out) {
  out << "path,t";
  for (int j = 0; j < batch.d; ++j) out << ",x" << (j + 1);
  out << ",alive\n";
  const std::size_t nt = batch.times.size();
  for (std::size_t p = 0; p < batch.n_paths; ++p)
    for (std::size_t k = 0; k < nt; ++k) {
      out << p << ',' << batch.times[k];
      for (int j = 0; j < batch.d; ++j) out << ',' << batch.states[(p * nt + k) * batch.d + j];
      out << ',' << int(batch.alive[p * nt + k]) << '\n';
    }
}

std::vector<IncrementRow> stationary_increment_check(
    const OUModel& m, const Vec& xstar, const std::vector<std::pair<double, double>>& pairs,
    std::size_t n_paths, std::uint64_t seed, int jobs) {
  if (xstar.size() != m.d) throw argument_error("x* dimension mismatch");
  double horizon = 0.0;
  for (const auto& [s, t] : pairs) {
    if (!(s >= 0.0 && t >= s)) throw argument_error("increment pairs need 0 <= s <= t");
    horizon = std::max(horizon, t - s);
  }
  const double m_t = m.m_t(horizon);
  const double b_norm = op_norm(m.b);
  std::vector<IncrementRow> rows(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    const auto [s, t] = pairs[i];
    const double tau = t - s;
    IncrementRow& row = rows[i];
    row.s = s;
    row.t = t;
    row.closed_form =
        2.0 * xstar.dot(m.q_inf * (xstar - expm(m.a.transpose(), tau) * xstar));
    row.bound = 2.0 * m_t * tau * b_norm * xstar.squaredNorm();
    std::vector<double> samples(n_paths, 0.0);
    if (tau > 0.0) {
      const StepKernel k = make_step_kernel(m, tau);
      Vec zs(m.d);
      for (std::size_t p = 0; p < n_paths; ++p) {
        // Distinct stream range per pair keeps pairs independent.
        const std::uint64_t id = (static_cast<std::uint64_t>(i) << 40) | p;
        RngStream start(seed, start_stream(id));
        for (int j = 0; j < m.d; ++j) zs[j] = start.normal();
        const Vec xs = m.chol_q * zs;  // X(s) is stationary
        RngStream noise(seed, noise_stream(id));
        const Vec xt = exact_step(k, xs, noise);
        const double inc = (xt - xs).dot(xstar);
        samples[p] = inc * inc;
      }
    }
    row.measured = summarize(samples);
    row.matches = row.measured.agrees_with(row.closed_form);
    row.below_bound = row.closed_form <= row.bound * (1.0 + 1e-12) &&
                      row.measured.mean - 4.0 * row.measured.std_error <= row.bound;
  });
  return rows;
}

}  // namespace oulab

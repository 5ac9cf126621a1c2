#include "oulab/galerkin.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

#include "oulab/errors.hpp"
#include "oulab/parallel.hpp"

namespace oulab {

namespace {

using Triplet = Eigen::Triplet<double>;

SpMat diag_sparse(const Vec& v) {
  SpMat s(v.size(), v.size());
  std::vector<Triplet> t;
  t.reserve(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) t.emplace_back(i, i, v[i]);
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

double sparse_frob(const SpMat& s) { return s.norm(); }

Vec random_vector(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (auto& x : v) x = nd(gen);
  return v;
}

// Largest singular value through the Gram matrix; adequate for the
// O(1) bounds checked here and much cheaper than an SVD.
double gram_norm(const CMat& x) {
  if (x.size() == 0) return 0.0;
  const CMat g = x.cols() <= x.rows() ? CMat(x.adjoint() * x) : CMat(x * x.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
}

// Orthonormal basis of the complement of the unit vector s.
Mat complement_basis(const Vec& s) {
  const int n = static_cast<int>(s.size());
  Vec v = s;
  v[0] += s[0] >= 0.0 ? 1.0 : -1.0;
  v.normalize();
  Mat h = Mat::Identity(n, n) - 2.0 * v * v.transpose();
  return h.rightCols(n - 1);
}

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int m, Vec& x, Vec& w) {
  Mat j = Mat::Zero(m, m);
  for (int k = 1; k < m; ++k) j(k, k - 1) = j(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Mat> es(j);
  x = es.eigenvalues();
  w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
}

}  // namespace

Grid build_grid(const OUModel& m, const std::optional<Domain>& dom, int n_per_dim, double radius) {
  const int d = m.d;
  if (d > 2) throw capability_error("grids support d <= 2; use Monte Carlo for d >= 3");
  if (n_per_dim < 3) throw argument_error("need at least 3 nodes per dimension");
  if ((d == 1 && n_per_dim > 400) || (d == 2 && n_per_dim > 141))
    throw capacity_error("grid resolution exceeds the dense-solver limit");
  if (!(radius > 0.0)) throw argument_error("truncation radius must be positive");
  if (dom && dom->dim() != d) throw argument_error("domain dimension mismatch");
  Grid g;
  g.d = d;
  g.n = n_per_dim;
  g.radius = radius;
  g.domain = dom;
  g.sigma = m.q_inf.diagonal().array().sqrt();
  g.spacing = 2.0 * radius * g.sigma / (n_per_dim - 1);
  const int total = d == 1 ? n_per_dim : n_per_dim * n_per_dim;
  g.nodes.resize(d, total);
  g.weights.resize(total);
  g.mask.resize(total);
  const double cell = g.spacing.prod();
  for (int idx = 0; idx < total; ++idx) {
    const int i = idx % n_per_dim;
    const int j = idx / n_per_dim;
    g.nodes(0, idx) = -radius * g.sigma[0] + i * g.spacing[0];
    if (d == 2) g.nodes(1, idx) = -radius * g.sigma[1] + j * g.spacing[1];
    const Vec x = g.nodes.col(idx);
    g.weights[idx] = m.measure.density(x) * cell;
    g.mask[idx] = !dom || dom->contains(x) ? 1 : 0;
  }
  g.weights /= g.weights.sum();
  if (std::none_of(g.mask.begin(), g.mask.end(), [](std::uint8_t b) { return b != 0; }))
    throw domain_error("no grid node lies inside the domain");

  if (d == 1) {
    for (int i = 0; i + 1 < n_per_dim; ++i) g.elements.push_back({i, i + 1, -1});
  } else {
    const int n = n_per_dim;
    for (int j = 0; j + 1 < n; ++j)
      for (int i = 0; i + 1 < n; ++i) {
        const int v00 = i + n * j, v10 = v00 + 1, v01 = v00 + n, v11 = v01 + 1;
        g.elements.push_back({v00, v10, v01});
        g.elements.push_back({v11, v01, v10});
      }
  }
  const int ne = static_cast<int>(g.elements.size());
  g.element_weights.resize(ne);
  g.centroids.resize(d, ne);
  const double volume = d == 1 ? g.spacing[0] : 0.5 * cell;
  for (int e = 0; e < ne; ++e) {
    Vec c = Vec::Zero(d);
    const int nv = d + 1;
    for (int v = 0; v < nv; ++v) c += g.nodes.col(g.elements[e][v]);
    c /= nv;
    g.centroids.col(e) = c;
    g.element_weights[e] = m.measure.density(c) * volume;
  }
  g.element_weights /= g.element_weights.sum();
  return g;
}

GridOperator assemble(const OUModel& m, const Grid& grid, bool dirichlet) {
  const int d = grid.d;
  GridOperator op;
  op.d = d;
  op.dirichlet = dirichlet;
  op.b = m.b;
  std::vector<int> local(grid.size(), -1);
  for (int i = 0; i < grid.size(); ++i)
    if (!dirichlet || grid.mask[i]) {
      local[i] = static_cast<int>(op.node_index.size());
      op.node_index.push_back(i);
    }
  const int nv = d + 1;
  for (int e = 0; e < grid.element_count(); ++e) {
    bool touches = false;
    for (int v = 0; v < nv; ++v) touches |= local[grid.elements[e][v]] >= 0;
    if (touches) op.element_index.push_back(e);
  }
  const int n = static_cast<int>(op.node_index.size());
  const int ne = static_cast<int>(op.element_index.size());

  op.w.resize(n);
  for (int i = 0; i < n; ++i) op.w[i] = grid.weights[op.node_index[i]];
  op.w2.resize(d * ne);
  for (int e = 0; e < ne; ++e)
    for (int k = 0; k < d; ++k) op.w2[e * d + k] = grid.element_weights[op.element_index[e]];

  std::vector<Triplet> t;
  auto add = [&](int row, int node, double value) {
    if (local[node] >= 0) t.emplace_back(row, local[node], value);
  };
  const double hx = grid.spacing[0];
  for (int e = 0; e < ne; ++e) {
    const auto& el = grid.elements[op.element_index[e]];
    if (d == 1) {
      add(e, el[0], -1.0 / hx);
      add(e, el[1], 1.0 / hx);
      continue;
    }
    const double hy = grid.spacing[1];
    // Lower triangles are (v00, v10, v01), upper ones (v11, v01, v10); in
    // both the first vertex is the right angle.
    const bool lower = op.element_index[e] % 2 == 0;
    const double sx = lower ? 1.0 : -1.0;
    add(d * e, el[0], -sx / hx);
    add(d * e, el[1], sx / hx);
    add(d * e + 1, el[0], -sx / hy);
    add(d * e + 1, el[2], sx / hy);
  }
  op.D.resize(d * ne, n);
  op.D.setFromTriplets(t.begin(), t.end());

  std::vector<Triplet> tb;
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (m.b(i, j) != 0.0) tb.emplace_back(d * e + i, d * e + j, m.b(i, j));
  op.Bblk.resize(d * ne, d * ne);
  op.Bblk.setFromTriplets(tb.begin(), tb.end());

  const Vec w_inv = op.w.cwiseInverse();
  op.Dstar = diag_sparse(w_inv) * SpMat(op.D.transpose()) * diag_sparse(op.w2);
  op.L = -(op.Dstar * op.Bblk * op.D);
  op.UL = -(op.D * op.Dstar * op.Bblk);
  const SpMat upper = op.Dstar * op.Bblk;
  std::vector<Triplet> tp;
  for (int k = 0; k < upper.outerSize(); ++k)
    for (SpMat::InnerIterator it(upper, k); it; ++it) tp.emplace_back(it.row(), n + it.col(), it.value());
  for (int k = 0; k < op.D.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.D, k); it; ++it) tp.emplace_back(n + it.row(), it.col(), it.value());
  op.Pi.resize(n + d * ne, n + d * ne);
  op.Pi.setFromTriplets(tp.begin(), tp.end());
  op.Dt = diag_sparse(op.w2.cwiseSqrt()) * op.D * diag_sparse(w_inv.cwiseSqrt());
  return op;
}

Mat ReducedOperator::apply_d(const Mat& x) const {
  if (deflated) return op->Dt * (basis * x);
  return op->Dt * x;
}

ReducedOperator reduce(const GridOperator& op) {
  ReducedOperator r;
  r.op = &op;
  const SpMat lt = -(SpMat(op.Dt.transpose()) * op.Bblk * op.Dt);
  const SpMat gt = SpMat(op.Dt.transpose()) * op.Dt;
  // Constants lie in the kernel exactly when no node was removed.
  Vec ones_image = op.Dt * Vec(op.w.cwiseSqrt().cwiseInverse().cwiseProduct(op.w));
  r.deflated = ones_image.norm() <= 1e-12 * std::max(1.0, sparse_frob(op.Dt));
  if (r.deflated) {
    const Vec s = op.w.cwiseSqrt().normalized();
    r.basis = complement_basis(s);
    r.lhat = r.basis.transpose() * (lt * r.basis);
    r.gram = r.basis.transpose() * (gt * r.basis);
  } else {
    r.lhat = Mat(lt);
    r.gram = Mat(gt);
  }
  r.gram = 0.5 * (r.gram + r.gram.transpose());
  return r;
}

double IdentityReport::max_residual() const {
  return std::max({accretivity, duality, constants, commutation, pi_square, resolvent_commutation,
                   weak_solution});
}

IdentityReport check_identities(const GridOperator& op, std::uint64_t seed) {
  IdentityReport rep;
  std::mt19937_64 gen(seed);
  const int n = op.size();
  const int nf = op.field_size();
  for (int trial = 0; trial < 5; ++trial) {
    const Vec f = random_vector(n, gen);
    const Vec g = random_vector(n, gen);
    const Vec df = op.D * f, dg = op.D * g;
    const double energy = op.field_inner(df, df);
    rep.accretivity =
        std::max(rep.accretivity, std::abs(-op.inner(op.L * f, f) - 0.5 * energy) / energy);
    const double lhs = op.inner(op.L * f, g);
    const double rhs = op.field_inner(op.Bblk * df, dg);
    const double scale = std::sqrt(energy * op.field_inner(dg, dg));
    rep.duality = std::max(rep.duality, std::abs(lhs + rhs) / scale);
  }
  const Vec ones = Vec::Ones(n);
  const double l_scale = std::max(1.0, sparse_frob(op.L) / std::sqrt(double(n)));
  const Vec dones = op.D * ones;
  if (dones.norm() <= 1e-12 * sparse_frob(op.D)) rep.constants = (op.L * ones).norm() / l_scale;

  const SpMat comm = op.D * op.L - op.UL * op.D;
  rep.commutation = sparse_frob(comm) / (sparse_frob(op.D) * sparse_frob(op.L));

  std::vector<Triplet> td;
  for (int k = 0; k < op.L.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.L, k); it; ++it) td.emplace_back(it.row(), it.col(), -it.value());
  for (int k = 0; k < op.UL.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.UL, k); it; ++it)
      td.emplace_back(n + it.row(), n + it.col(), -it.value());
  SpMat blocks(n + nf, n + nf);
  blocks.setFromTriplets(td.begin(), td.end());
  const SpMat pi2 = op.Pi * op.Pi;
  rep.pi_square = sparse_frob(pi2 - blocks) / std::max(1.0, sparse_frob(pi2));

  SpMat id_n(n, n), id_f(nf, nf);
  id_n.setIdentity();
  id_f.setIdentity();
  for (double t : {0.1, 1.0, 10.0}) {
    Eigen::SparseLU<SpMat> lu_l, lu_u;
    lu_l.compute(SpMat(id_n - t * op.L));
    lu_u.compute(SpMat(id_f - t * op.UL));
    if (lu_l.info() != Eigen::Success || lu_u.info() != Eigen::Success)
      throw numerical_error("resolvent factorization failed");
    for (int trial = 0; trial < 3; ++trial) {
      const Vec v = random_vector(n, gen);
      const Vec left = op.D * Vec(lu_l.solve(v));
      const Vec right = lu_u.solve(Vec(op.D * v));
      const double denom = std::sqrt(std::max(op.field_inner(left, left), 1e-300));
      const Vec diff = left - right;
      rep.resolvent_commutation =
          std::max(rep.resolvent_commutation, std::sqrt(op.field_inner(diff, diff)) / denom);
    }
  }

  for (double lambda : {0.5, 2.0}) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(SpMat(lambda * id_n - op.L));
    if (lu.info() != Eigen::Success) throw numerical_error("resolvent factorization failed");
    const Vec f = random_vector(n, gen);
    const Vec phi = lu.solve(f);
    // lambda <phi, v>_w + <B D phi, D v>_w2 - <f, v>_w for every grid v, as one vector.
    const Vec res = lambda * op.w.cwiseProduct(phi) +
                    SpMat(op.D.transpose()) * op.w2.cwiseProduct(op.Bblk * (op.D * phi)) -
                    op.w.cwiseProduct(f);
    rep.weak_solution = std::max(rep.weak_solution, res.norm() / op.w.cwiseProduct(f).norm());
  }
  return rep;
}

RieszResult riesz_constants(const ReducedOperator& r) {
  const Mat root = sqrtm_principal(-r.lhat);
  const Mat rtr = root.transpose() * root;
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(0.5 * (rtr + rtr.transpose()), r.gram,
                                                   Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numerical_error("generalized eigensolve failed");
  RieszResult out;
  out.c = std::sqrt(std::max(es.eigenvalues().minCoeff(), 0.0));
  out.C = std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
  return out;
}

ScanReport bisectoriality_scan(const ReducedOperator& r, const std::vector<double>& t_grid, int jobs) {
  const int n = r.size();
  Eigen::LLT<Mat> llt(r.gram);
  if (llt.info() != Eigen::Success) throw numerical_error("gradient Gram matrix is singular");
  const Mat lchol = llt.matrixL();
  const Mat lcholt = lchol.transpose();
  // lhat * lchol^{-T}
  const Mat l_over = lchol.triangularView<Eigen::Lower>().solve(r.lhat.transpose()).transpose();
  Mat tmat = Mat::Zero(2 * n, 2 * n);
  tmat.topRightCorner(n, n) = -l_over;
  tmat.bottomLeftCorner(n, n) = lcholt;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  ScanReport rep;
  rep.points.resize(t_grid.size());
  parallel_for(t_grid.size(), jobs, [&](std::size_t k) {
    const double t = t_grid[k];
    ScanPoint& p = rep.points[k];
    p.t = t;
    const Complex it(0.0, t);
    CMat sys = CMat::Identity(2 * n, 2 * n) - it * tmat.cast<Complex>();
    Eigen::PartialPivLU<CMat> lu(sys);
    if (!(lu.rcond() > 1e-14)) {
      p.invertible = false;
      return;
    }
    const CMat inv = lu.inverse();
    p.norm_product = gram_norm(inv);
    CMat energy = inv;
    energy.topRightCorner(n, n) *= 1.0 / inv_sqrt2;
    energy.bottomLeftCorner(n, n) *= inv_sqrt2;
    p.norm_energy = gram_norm(energy);

    Eigen::PartialPivLU<Mat> alu(Mat(Mat::Identity(n, n) - t * t * r.lhat));
    const Mat a = alu.inverse();
    CMat formula(2 * n, 2 * n);
    formula.topLeftCorner(n, n) = a.cast<Complex>();
    formula.topRightCorner(n, n) = (-it) * (a * l_over).cast<Complex>();
    formula.bottomLeftCorner(n, n) = it * (lcholt * a).cast<Complex>();
    formula.bottomRightCorner(n, n) = (lcholt * a * lchol.transpose().triangularView<Eigen::Upper>()
                                                      .solve(Mat::Identity(n, n)))
                                          .cast<Complex>();
    p.formula_mismatch = (inv - formula).norm() / inv.norm();
    p.block_norms = {gram_norm(CMat(inv.topLeftCorner(n, n))), gram_norm(CMat(inv.topRightCorner(n, n))),
                     gram_norm(CMat(inv.bottomLeftCorner(n, n))),
                     gram_norm(CMat(inv.bottomRightCorner(n, n)))};
  });
  for (const ScanPoint& p : rep.points) {
    if (!p.invertible) {
      rep.all_invertible = false;
      continue;
    }
    rep.sup_product = std::max(rep.sup_product, p.norm_product);
    rep.sup_energy = std::max(rep.sup_energy, p.norm_energy);
    rep.sup_ndr = std::max(rep.sup_ndr, p.block_norms[2]);
    rep.max_formula_mismatch = std::max(rep.max_formula_mismatch, p.formula_mismatch);
  }
  return rep;
}

std::vector<double> gradient_resolvent_norms(const ReducedOperator& r, const std::vector<double>& lambdas,
                                             int jobs) {
  const int n = r.size();
  std::vector<double> out(lambdas.size());
  parallel_for(lambdas.size(), jobs, [&](std::size_t k) {
    const double lambda = lambdas[k];
    const Mat x = Eigen::PartialPivLU<Mat>(Mat(lambda * Mat::Identity(n, n) - r.lhat)).inverse();
    const Mat gx = x.transpose() * (r.gram * x);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (gx + gx.transpose()), Eigen::EigenvaluesOnly);
    out[k] = std::sqrt(lambda * std::max(es.eigenvalues().maxCoeff(), 0.0));
  });
  return out;
}

std::vector<double> ndr_norms(const ReducedOperator& r, const std::vector<double>& t_grid, int jobs) {
  const int n = r.size();
  std::vector<double> out(t_grid.size());
  parallel_for(t_grid.size(), jobs, [&](std::size_t k) {
    const double t = t_grid[k];
    const Mat a = Eigen::PartialPivLU<Mat>(Mat(Mat::Identity(n, n) - t * t * r.lhat)).inverse();
    const Mat ga = a.transpose() * (r.gram * a);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (ga + ga.transpose()), Eigen::EigenvaluesOnly);
    out[k] = std::abs(t) * std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
  });
  return out;
}

PoincareResult poincare_gap(const ReducedOperator& r, const OUModel& m, GapMode mode) {
  PoincareResult out;
  if (mode == GapMode::whole_meanzero) {
    if (!r.deflated) throw argument_error("mean-zero gap needs the whole-space operator");
    const Mat sym = -0.5 * (r.lhat + r.lhat.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    out.gap = es.eigenvalues().minCoeff();
  } else {
    Eigen::EigenSolver<Mat> es(-r.lhat, false);
    out.gap = es.eigenvalues().real().minCoeff();
  }
  out.gap_lower_bound = m.w / (m.m_const * m.m_const);
  out.paper_variance_constant = m.m_const * m.m_const / (2.0 * m.w);
  out.variance_constant = out.gap > 0.0 ? 1.0 / (2.0 * out.gap) : std::numeric_limits<double>::infinity();
  return out;
}

std::vector<Complex> grid_spectrum(const ReducedOperator& r) {
  Eigen::EigenSolver<Mat> es(r.lhat, false);
  std::vector<Complex> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  if (r.deflated) ev.emplace_back(0.0, 0.0);
  std::sort(ev.begin(), ev.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return ev;
}

std::vector<Complex> chaos_spectrum(const OUModel& m, int max_degree) {
  if (max_degree < 0 || max_degree > 6) throw argument_error("chaos degree must lie in [0, 6]");
  const Spectrum s = spectrum(m.a);
  std::vector<Complex> out;
  std::vector<int> counts(m.d, 0);
  // Enumerate multi-indices with total degree <= max_degree.
  std::function<void(int, int)> rec = [&](int k, int left) {
    if (k == m.d) {
      Complex z(0.0, 0.0);
      for (int i = 0; i < m.d; ++i) z += static_cast<double>(counts[i]) * s.eigenvalues[i];
      for (const Complex& e : out)
        if (std::abs(e - z) <= 1e-9 * std::max(1.0, std::abs(z))) return;
      out.push_back(z);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[k] = c;
      rec(k + 1, left - c);
    }
    counts[k] = 0;
  };
  rec(0, max_degree);
  std::sort(out.begin(), out.end(), [](Complex a, Complex b) {
    if (std::abs(a.real() - b.real()) > 1e-12) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

std::vector<HinfFunction> default_hinf_family() {
  std::vector<HinfFunction> fam;
  for (int s = -5; s <= 5; ++s) {
    if (s == 0) continue;
    fam.push_back({"z^(i" + std::to_string(s) + ")",
                   [s](Complex z) { return std::exp(Complex(0.0, double(s)) * std::log(z)); }});
  }
  for (double a : {0.5, 1.0, 2.0})
    for (double b : {0.5, 1.0, 2.0}) {
      fam.push_back({"bump(" + std::to_string(a).substr(0, 3) + "," + std::to_string(b).substr(0, 3) + ")",
                     [a, b](Complex z) {
                       return std::exp(a * std::log(z / (1.0 + z)) + b * std::log(1.0 / (1.0 + z)));
                     }});
    }
  return fam;
}

HinfReport hinf_norm_probe(const ReducedOperator& r, const std::vector<HinfFunction>& family,
                           bool force_contour) {
  const int n = r.size();
  Eigen::LLT<Mat> llt(r.gram);
  if (llt.info() != Eigen::Success) throw numerical_error("gradient Gram matrix is singular");
  const Mat lchol = llt.matrixL();
  // -UL on Ran(D) in orthonormal coordinates: Lchol^T (-lhat) Lchol^{-T}.
  const Mat right = lchol.triangularView<Eigen::Lower>().solve((-r.lhat).transpose()).transpose();
  const Mat tmat = lchol.transpose() * right;

  Eigen::EigenSolver<Mat> es(tmat, true);
  const CVec lam = es.eigenvalues();
  const CMat v = es.eigenvectors();
  Eigen::JacobiSVD<CMat> svd(v);
  const double cond = svd.singularValues()(0) / svd.singularValues()(n - 1);
  HinfReport rep;
  rep.used_contour = force_contour || !(cond < 1e8);

  double re_min = lam.real().minCoeff(), re_max = lam.real().maxCoeff();
  double im_max = lam.imag().cwiseAbs().maxCoeff();
  if (!(re_min > 0.0)) throw sectoriality_error("spectrum touches the closed left half-plane");

  Eigen::PartialPivLU<CMat> vlu;
  if (!rep.used_contour) vlu.compute(v);

  // Contour: rectangle [re_min/2, 2 re_max + 1] x [-(im_max + re_min/2), +], counterclockwise.
  const double left = 0.5 * re_min, rightx = 2.0 * re_max + 1.0, top = im_max + 0.5 * re_min + 1.0;
  const std::array<Complex, 5> corners{Complex(left, -top), Complex(rightx, -top),
                                       Complex(rightx, top), Complex(left, top), Complex(left, -top)};
  auto contour_eval = [&](const std::function<Complex(Complex)>& f, int m) {
    Vec gx, gw;
    gauss_legendre(m, gx, gw);
    CMat acc = CMat::Zero(n, n);
    const CMat tc = tmat.cast<Complex>();
    for (int e = 0; e < 4; ++e) {
      const Complex a = corners[e], b = corners[e + 1];
      for (int k = 0; k < m; ++k) {
        const Complex z = 0.5 * (a + b) + 0.5 * (b - a) * gx[k];
        const Complex dz = 0.5 * (b - a) * gw[k];
        const CMat res = Eigen::PartialPivLU<CMat>(z * CMat::Identity(n, n) - tc).inverse();
        acc += (f(z) * dz) * res;
      }
    }
    return CMat(acc / Complex(0.0, 2.0 * std::numbers::pi));
  };

  for (const HinfFunction& hf : family) {
    double spec_sup = 0.0;
    for (Eigen::Index k = 0; k < lam.size(); ++k) spec_sup = std::max(spec_sup, std::abs(hf.f(lam[k])));
    CMat fx;
    if (!rep.used_contour) {
      CVec fl(n);
      for (int k = 0; k < n; ++k) fl[k] = hf.f(lam[k]);
      fx = v * fl.asDiagonal() * vlu.inverse();
    } else {
      int m = 16;
      CMat prev = contour_eval(hf.f, m);
      for (;;) {
        m *= 2;
        fx = contour_eval(hf.f, m);
        if ((fx - prev).norm() <= 1e-6 * std::max(1.0, fx.norm()) || m >= 512) break;
        prev = fx;
      }
    }
    const double norm = gram_norm(fx);
    if (norm > rep.probe) {
      rep.probe = norm;
      rep.worst = hf.name;
    }
    if (spec_sup > 0.0) rep.spectral_ratio = std::max(rep.spectral_ratio, norm / spec_sup);
  }
  return rep;
}

PotentialEstimates potential_resolvent_estimates(const GridOperator& op, const Grid& grid,
                                                 const PotentialSpec& spec, double lambda,
                                                 const Vec& f) {
  if (op.dirichlet) throw argument_error("potential estimates use the whole-space operator");
  const int n = op.size();
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = penalized_potential(spec, grid.nodes.col(op.node_index[i]));
  SpMat id(n, n);
  id.setIdentity();
  const SpMat sys = lambda * id - op.L + diag_sparse(v / spec.eps);
  Eigen::SparseLU<SpMat> lu;
  lu.compute(sys);
  if (lu.info() != Eigen::Success) throw numerical_error("penalized resolvent factorization failed");
  const Vec phi = lu.solve(f);
  const Vec dphi = op.D * phi;
  const double f2 = op.inner(f, f);
  const int d = op.d;
  const int ne = static_cast<int>(op.element_index.size());
  double dv = 0.0;
  for (int e = 0; e < ne; ++e) {
    const auto& el = grid.elements[op.element_index[e]];
    double vbar = 0.0;
    for (int k = 0; k <= d; ++k) vbar += v[el[k]];
    vbar /= d + 1;
    for (int k = 0; k < d; ++k) dv += op.w2[e * d + k] * vbar * dphi[e * d + k] * dphi[e * d + k];
  }
  PotentialEstimates out;
  out.r = op.inner(phi, phi) / (f2 / (lambda * lambda));
  out.dr = op.field_inner(dphi, dphi) / (2.0 * f2 / lambda);
  out.vr = op.inner(v.cwiseProduct(phi), phi) / (spec.eps * f2 / lambda);
  out.dv = dv / (std::sqrt(spec.eps / lambda) * f2);
  return out;
}

}  // namespace oulab

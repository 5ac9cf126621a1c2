#include "oulab/matkit.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "oulab/errors.hpp"

namespace oulab {

namespace {

// Pade coefficients b_0..b_m and the 1-norm thresholds theta_m for
// double precision (Higham 2005).
constexpr std::array<double, 4> kPade3 = {120., 60., 12., 1.};
constexpr std::array<double, 6> kPade5 = {30240., 15120., 3360., 420., 30., 1.};
constexpr std::array<double, 8> kPade7 = {17297280., 8648640., 1995840., 277200.,
                                          25200.,    1512.,    56.,      1.};
constexpr std::array<double, 10> kPade9 = {17643225600., 8821612800., 2075673600., 302702400.,
                                           30270240.,    2162160.,    110880.,     3960.,
                                           90.,          1.};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
    129060195264000.,   10559470521600.,    670442572800.,     33522128640.,
    1323241920.,        40840800.,          960960.,           16380.,
    182.,               1.};
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

template <class M, std::size_t N>
M pade_low(const M& a, const std::array<double, N>& b) {
  const auto n = a.rows();
  const M ident = M::Identity(n, n);
  const M a2 = a * a;
  // U = a * sum b_{2k+1} a2^k, V = sum b_{2k} a2^k.
  M u_acc = M::Zero(n, n);
  M v_acc = M::Zero(n, n);
  M power = ident;
  for (std::size_t k = 0; 2 * k < N; ++k) {
    v_acc += b[2 * k] * power;
    if (2 * k + 1 < N) u_acc += b[2 * k + 1] * power;
    power = power * a2;
  }
  const M u = a * u_acc;
  return (v_acc - u).partialPivLu().solve(v_acc + u);
}

template <class M>
M pade13(const M& a) {
  const auto& b = kPade13;
  const auto n = a.rows();
  const M ident = M::Identity(n, n);
  const M a2 = a * a;
  const M a4 = a2 * a2;
  const M a6 = a4 * a2;
  const M u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                   b[3] * a2 + b[1] * ident);
  const M v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
              b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

template <class M>
M expm_impl(const M& a) {
  if (a.rows() != a.cols()) throw argument_error("expm: matrix must be square");
  if (a.rows() == 0) return a;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm1)) throw argument_error("expm: non-finite input");
  if (norm1 <= kTheta3) return pade_low(a, kPade3);
  if (norm1 <= kTheta5) return pade_low(a, kPade5);
  if (norm1 <= kTheta7) return pade_low(a, kPade7);
  if (norm1 <= kTheta9) return pade_low(a, kPade9);
  int s = 0;
  if (norm1 > kTheta13) s = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / kTheta13))));
  const M scaled = a / std::ldexp(1.0, s);
  M r = pade13(scaled);
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

double frob(const Mat& m) { return m.norm(); }

// Principal square root of a real 2x2 block with complex conjugate
// eigenvalues theta +- i mu.
Eigen::Matrix2d sqrt_2x2_complex_block(const Eigen::Matrix2d& t) {
  const double theta = 0.5 * (t(0, 0) + t(1, 1));
  const double disc = 0.25 * (t(0, 0) - t(1, 1)) * (t(0, 0) - t(1, 1)) + t(0, 1) * t(1, 0);
  const double mu = std::sqrt(-disc);
  const Complex root = std::sqrt(Complex(theta, mu));
  const double alpha = root.real();
  return alpha * Eigen::Matrix2d::Identity() +
         (t - theta * Eigen::Matrix2d::Identity()) / (2.0 * alpha);
}

// Solves R11 X + X R22 = C for small blocks (sizes 1 or 2) via the
// Kronecker form.
Mat solve_small_sylvester(const Mat& r11, const Mat& r22, const Mat& c) {
  const auto p = r11.rows();
  const auto q = r22.rows();
  Mat k = Mat::Zero(p * q, p * q);
  // vec(R11 X) = (I_q kron R11) vec X; vec(X R22) = (R22^T kron I_p) vec X.
  for (Eigen::Index j = 0; j < q; ++j) {
    k.block(j * p, j * p, p, p) += r11;
    for (Eigen::Index l = 0; l < q; ++l) {
      k.block(j * p, l * p, p, p) += r22(l, j) * Mat::Identity(p, p);
    }
  }
  Vec rhs(p * q);
  for (Eigen::Index j = 0; j < q; ++j) rhs.segment(j * p, p) = c.col(j);
  const Vec x = k.fullPivLu().solve(rhs);
  Mat out(p, q);
  for (Eigen::Index j = 0; j < q; ++j) out.col(j) = x.segment(j * p, p);
  return out;
}

}  // namespace

void require_finite(const Mat& m, const char* what) {
  if (m.rows() <= 0 || m.cols() <= 0) {
    throw argument_error(std::string(what) + ": dimensions must be positive");
  }
  if (!m.allFinite()) throw argument_error(std::string(what) + ": entries must be finite");
}

Mat expm(const Mat& m, double t) {
  if (m.rows() != m.cols()) throw argument_error("expm: matrix must be square");
  if (!std::isfinite(t)) throw argument_error("expm: t must be finite");
  return expm_impl<Mat>(t * m);
}

CMat expm(const CMat& m) { return expm_impl<CMat>(m); }

Mat solve_lyapunov(const Mat& a, const Mat& c, const LyapunovOptions& opts) {
  if (a.rows() != a.cols() || c.rows() != a.rows() || c.cols() != a.cols()) {
    throw argument_error("solve_lyapunov: dimension mismatch");
  }
  require_finite(a, "solve_lyapunov");
  const auto n = a.rows();
  const double abscissa = spectral_abscissa(a);
  if (!(abscissa < 0.0)) {
    std::ostringstream os;
    os << "solve_lyapunov: drift is not stable (spectral abscissa " << abscissa << ")";
    throw stability_error(os.str());
  }

  Eigen::ComplexSchur<CMat> schur(a.cast<Complex>());
  const CMat& t = schur.matrixT();
  const CMat& u = schur.matrixU();
  // T Y + Y T^H = F with F = -U^H C U; columns are solved from the last one
  // backwards because T^H couples column j to columns k > j.
  const CMat f = -(u.adjoint() * c.cast<Complex>() * u);
  CMat y = CMat::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    CVec rhs = f.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) rhs -= std::conj(t(j, k)) * y.col(k);
    CMat sys = t;
    sys.diagonal().array() += std::conj(t(j, j));
    const double pivot = sys.diagonal().cwiseAbs().minCoeff();
    if (pivot == 0.0) throw numerical_error("solve_lyapunov: singular Sylvester step");
    y.col(j) = sys.triangularView<Eigen::Upper>().solve(rhs);
  }
  Mat q = (u * y * u.adjoint()).real();
  q = 0.5 * (q + q.transpose()).eval();

  const double residual = (a * q + q * a.transpose() + c).norm();
  const double scale = std::max(1.0, c.norm() / std::sqrt(static_cast<double>(n)));
  if (!(residual <= opts.residual_tol * static_cast<double>(n) * scale)) {
    std::ostringstream os;
    os << "solve_lyapunov: residual " << residual << " exceeds tolerance";
    throw numerical_error(os.str());
  }
  return q;
}

Mat solve_lyapunov(const Mat& a, const LyapunovOptions& opts) {
  return solve_lyapunov(a, Mat::Identity(a.rows(), a.cols()), opts);
}

Mat sqrtm_principal(const Mat& m, const SqrtmOptions& opts) {
  if (m.rows() != m.cols()) throw argument_error("sqrtm_principal: matrix must be square");
  require_finite(m, "sqrtm_principal");
  const auto n = m.rows();
  Eigen::RealSchur<Mat> schur(m);
  if (schur.info() != Eigen::Success) throw numerical_error("sqrtm_principal: Schur failed");
  const Mat& t = schur.matrixT();
  const Mat& z = schur.matrixU();

  // Block partition of the quasi-triangular factor.
  std::vector<Eigen::Index> start;
  std::vector<Eigen::Index> size;
  for (Eigen::Index i = 0; i < n;) {
    start.push_back(i);
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      size.push_back(2);
      i += 2;
    } else {
      size.push_back(1);
      i += 1;
    }
  }

  double scale = 0.0;
  for (std::size_t b = 0; b < start.size(); ++b) {
    const auto i = start[b];
    if (size[b] == 1) {
      scale = std::max(scale, std::abs(t(i, i)));
    } else {
      scale = std::max(scale, std::sqrt(std::abs(t.block(i, i, 2, 2).determinant())));
    }
  }
  const double axis_tol = opts.negative_axis_tol * std::max(scale, 1e-300);

  Mat r = Mat::Zero(n, n);
  for (std::size_t b = 0; b < start.size(); ++b) {
    const auto i = start[b];
    if (size[b] == 1) {
      const double lambda = t(i, i);
      if (lambda <= axis_tol) {
        std::ostringstream os;
        os << "sqrtm_principal: eigenvalue " << lambda << " on the closed negative real axis";
        throw sectoriality_error(os.str());
      }
      r(i, i) = std::sqrt(lambda);
    } else {
      const Eigen::Matrix2d block = t.block(i, i, 2, 2);
      const double theta = 0.5 * block.trace();
      const double disc = 0.25 * (block(0, 0) - block(1, 1)) * (block(0, 0) - block(1, 1)) +
                          block(0, 1) * block(1, 0);
      const double mu = std::sqrt(std::max(0.0, -disc));
      if (theta < 0.0 && mu <= axis_tol) {
        throw sectoriality_error("sqrtm_principal: complex pair on the negative real axis");
      }
      r.block(i, i, 2, 2) = sqrt_2x2_complex_block(block);
    }
  }
  // Off-diagonal blocks, one block column at a time, bottom to top.
  for (std::size_t bj = 1; bj < start.size(); ++bj) {
    const auto j = start[bj];
    const auto q = size[bj];
    for (std::size_t bi1 = bj; bi1-- > 0;) {
      const auto i = start[bi1];
      const auto p = size[bi1];
      Mat rhs = t.block(i, j, p, q);
      const auto inner = j - (i + p);
      if (inner > 0) rhs.noalias() -= r.block(i, i + p, p, inner) * r.block(i + p, j, inner, q);
      if (p == 1 && q == 1) {
        r(i, j) = rhs(0, 0) / (r(i, i) + r(j, j));
      } else {
        r.block(i, j, p, q) =
            solve_small_sylvester(r.block(i, i, p, p), r.block(j, j, q, q), rhs);
      }
    }
  }
  Mat root = z * r * z.transpose();
  const double residual = frob(root * root - m);
  if (!(residual <= opts.residual_tol * std::max(frob(m), 1e-300))) {
    std::ostringstream os;
    os << "sqrtm_principal: relative residual " << residual / frob(m) << " exceeds tolerance";
    throw numerical_error(os.str());
  }
  return root;
}

CMat resolvent(const Mat& m, Complex z, const ResolventOptions& opts) {
  if (m.rows() != m.cols()) throw argument_error("resolvent: matrix must be square");
  require_finite(m, "resolvent");
  const auto n = m.rows();
  const Spectrum spec = spectrum(m);
  for (const auto& lambda : spec.eigenvalues) {
    if (std::abs(z - lambda) <= opts.eigen_gap_tol * std::max(1.0, std::abs(lambda))) {
      std::ostringstream os;
      os << "resolvent: z = " << z << " is within tolerance of eigenvalue " << lambda;
      throw numerical_error(os.str());
    }
  }
  CMat shifted = -m.cast<Complex>();
  shifted.diagonal().array() += z;
  CMat out = shifted.partialPivLu().solve(CMat::Identity(n, n));
  const double residual = (shifted * out - CMat::Identity(n, n)).norm();
  if (!(residual <= opts.residual_tol)) {
    std::ostringstream os;
    os << "resolvent: residual " << residual << " exceeds tolerance";
    throw numerical_error(os.str());
  }
  return out;
}

double op_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

double op_norm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<CMat> svd(m);
  return svd.singularValues()(0);
}

Spectrum spectrum(const Mat& m) {
  if (m.rows() != m.cols()) throw argument_error("spectrum: matrix must be square");
  Eigen::EigenSolver<Mat> es(m, true);
  if (es.info() != Eigen::Success) throw numerical_error("spectrum: eigensolver failed");
  Spectrum out;
  const CVec& ev = es.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  Eigen::BDCSVD<CMat> svd(es.eigenvectors());
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  out.condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  return out;
}

double spectral_abscissa(const Mat& m) {
  Eigen::EigenSolver<Mat> es(m, false);
  if (es.info() != Eigen::Success) throw numerical_error("spectral_abscissa: eigensolver failed");
  return es.eigenvalues().real().maxCoeff();
}

double min_symmetric_eigenvalue(const Mat& m) {
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace oulab

#pragma once

// Dense real-matrix kernel: exponentials, Lyapunov solves, principal square
// roots, resolvents, spectra and operator norms.

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace oulab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Throws an argument error unless every entry is finite and both
/// dimensions are positive.
void require_finite(const Mat& m, const char* what);

struct Spectrum {
  std::vector<Complex> eigenvalues;  // sorted by decreasing real part, then imaginary part
  double condition = 1.0;            // 2-norm condition number of the eigenvector matrix
};

struct LyapunovOptions {
  double residual_tol = 1e-10;  // scaled by the dimension
};

struct SqrtmOptions {
  double negative_axis_tol = 1e-12;  // relative to the largest eigenvalue modulus
  double residual_tol = 1e-9;        // relative Frobenius residual of R*R - M
};

struct ResolventOptions {
  double eigen_gap_tol = 1e-12;
  double residual_tol = 1e-10;
};

/// e^{tM} by scaling and squaring with a diagonal Pade approximant
/// (degree 3, 5, 7, 9 or 13 chosen from the 1-norm).
Mat expm(const Mat& m, double t = 1.0);

/// Complex variant used for resolvent/functional-calculus work.
CMat expm(const CMat& m);

/// Solves A Q + Q A^T = -C by Bartels-Stewart on the complex Schur form.
/// Requires a stable A (all eigenvalues in the open left half-plane).
Mat solve_lyapunov(const Mat& a, const Mat& c, const LyapunovOptions& opts = {});
Mat solve_lyapunov(const Mat& a, const LyapunovOptions& opts = {});

/// Principal square root through the real Schur form and the quasi-triangular
/// block recurrence. Fails if some eigenvalue lies on the closed negative
/// real axis.
Mat sqrtm_principal(const Mat& m, const SqrtmOptions& opts = {});

/// (zI - M)^{-1}.
CMat resolvent(const Mat& m, Complex z, const ResolventOptions& opts = {});

/// Largest singular value.
double op_norm(const Mat& m);
double op_norm(const CMat& m);

Spectrum spectrum(const Mat& m);

/// max Re(lambda) over the spectrum.
double spectral_abscissa(const Mat& m);

/// Smallest eigenvalue of the symmetric part.
double min_symmetric_eigenvalue(const Mat& m);

}  // namespace oulab

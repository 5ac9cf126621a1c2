#pragma once

// Gaussian-weighted P1 finite elements on a uniform box grid (d <= 2).
// D is the elementwise gradient, Dstar its exact adjoint for the weighted
// inner products, and L = -Dstar (I x B) D, so the identities between D,
// L, UL and Pi hold to rounding.

#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oulab/domains.hpp"
#include "oulab/model.hpp"

namespace oulab {

using SpMat = Eigen::SparseMatrix<double>;

struct Grid {
  int d = 1;
  int n = 0;     // nodes per dimension
  double radius = 5.0;
  Vec sigma;     // sqrt of the diagonal of Q
  Vec spacing;
  Mat nodes;     // d x N
  Vec weights;   // Gaussian density times cell volume, normalized
  std::vector<std::uint8_t> mask;  // node lies in the domain
  std::optional<Domain> domain;
  std::vector<std::array<int, 3>> elements;  // vertex indices; 1D uses two
  Vec element_weights;  // density at the centroid times element volume, normalized
  Mat centroids;        // d x E

  int size() const { return static_cast<int>(weights.size()); }
  int element_count() const { return static_cast<int>(element_weights.size()); }
};

/// Uniform grid on prod_k [-R sigma_k, R sigma_k]. Requires d <= 2,
/// n <= 400 (1D) or 141 (2D), and a non-empty mask.
Grid build_grid(const OUModel& m, const std::optional<Domain>& dom, int n_per_dim, double radius = 5.0);

struct GridOperator {
  int d = 1;
  bool dirichlet = false;
  Mat b;
  std::vector<int> node_index;     // grid node of each unknown
  std::vector<int> element_index;  // grid element of each vector block
  Vec w;    // node weights of the unknowns
  Vec w2;   // element weights, repeated d times (one per component)
  SpMat D;      // (d E) x N, rows ordered element-major
  SpMat Dstar;  // N x (d E), = W^{-1} D^T W2
  SpMat Bblk;   // I_E (x) B
  SpMat L;      // -Dstar Bblk D
  SpMat UL;     // -D Dstar Bblk
  SpMat Pi;     // [[0, Dstar Bblk], [D, 0]]
  SpMat Dt;     // W2^{1/2} D W^{-1/2}: D in orthonormal coordinates

  int size() const { return static_cast<int>(w.size()); }
  int field_size() const { return static_cast<int>(w2.size()); }
  double inner(const Vec& f, const Vec& g) const { return (f.array() * g.array() * w.array()).sum(); }
  double field_inner(const Vec& u, const Vec& v) const {
    return (u.array() * v.array() * w2.array()).sum();
  }
};

/// dirichlet = true keeps only masked nodes (zero extension outside) and
/// the elements touching them.
GridOperator assemble(const OUModel& m, const Grid& grid, bool dirichlet);

/// Dense orthonormal-coordinate form of an operator. For the whole space
/// the constants are deflated through an orthonormal basis of the
/// weighted mean-zero subspace.
struct ReducedOperator {
  bool deflated = false;
  Mat basis;  // N x N'' (empty when not deflated: identity)
  Mat lhat;   // N'' x N'': W^{1/2} L W^{-1/2} restricted
  Mat gram;   // Dhat^T Dhat
  const GridOperator* op = nullptr;

  int size() const { return static_cast<int>(lhat.rows()); }
  /// Dhat * X for a dense X with N'' rows.
  Mat apply_d(const Mat& x) const;
};

ReducedOperator reduce(const GridOperator& op);

struct IdentityReport {
  double accretivity = 0.0;        // max |<-Lf,f>_w - |Df|^2/2| / |Df|^2 over random f
  double duality = 0.0;            // max |<Lf,g> + <B Df, Dg>| relative
  double constants = 0.0;          // |L 1| (whole space only, else 0)
  double commutation = 0.0;        // |D L - UL D|_F / (|D| |L|)
  double pi_square = 0.0;          // |Pi^2 - diag(-L, -UL)|_F relative
  double resolvent_commutation = 0.0;  // max over t in {0.1, 1, 10} on random vectors
  double weak_solution = 0.0;      // discrete weak-form residual, relative
  double max_residual() const;
};

IdentityReport check_identities(const GridOperator& op, std::uint64_t seed = 1);

struct RieszResult {
  double c = 0.0;
  double C = 0.0;
};

/// Extremes of ||(-L)^{1/2} f|| / ||D f|| over f orthogonal to the kernel.
RieszResult riesz_constants(const ReducedOperator& r);

struct ScanPoint {
  double t = 0.0;
  bool invertible = true;
  double norm_product = 0.0;  // ||(I - it Pi)^{-1}|| in ||f||^2 + ||G||^2
  double norm_energy = 0.0;   // same in ||f||^2 + ||G||^2 / 2
  std::array<double, 4> block_norms{};  // (1,1), (1,2), (2,1), (2,2), product norm
  double formula_mismatch = 0.0;        // inverse vs block formula, relative
};

struct ScanReport {
  std::vector<ScanPoint> points;
  double sup_product = 0.0;
  double sup_energy = 0.0;
  double sup_ndr = 0.0;            // sup_t ||t D (I - t^2 L)^{-1}||
  double max_formula_mismatch = 0.0;
  bool all_invertible = true;
};

/// Resolvents of Pi on L^2 (+) Ran(D) along the imaginary axis.
ScanReport bisectoriality_scan(const ReducedOperator& r, const std::vector<double>& t_grid, int jobs = 1);

/// sqrt(lambda) ||D (lambda - L)^{-1}|| for each lambda.
std::vector<double> gradient_resolvent_norms(const ReducedOperator& r, const std::vector<double>& lambdas,
                                             int jobs = 1);

/// ||t D (I - t^2 L)^{-1}|| for each t.
std::vector<double> ndr_norms(const ReducedOperator& r, const std::vector<double>& t_grid, int jobs = 1);

enum class GapMode { whole_meanzero, dirichlet };

struct PoincareResult {
  double gap = 0.0;
  double gap_lower_bound = 0.0;          // w / M^2, the gap implied by paper_variance_constant
  double paper_variance_constant = 0.0;  // M^2 / (2w)
  double variance_constant = 0.0;        // 1 / (2 gap), the sharp constant in Var f <= C |Df|^2
};

/// whole_meanzero: smallest eigenvalue of the symmetric part of -L on the
/// mean-zero subspace. dirichlet: smallest real part of the spectrum of -L.
PoincareResult poincare_gap(const ReducedOperator& r, const OUModel& m, GapMode mode);

/// Eigenvalues of L_h sorted by decreasing real part.
std::vector<Complex> grid_spectrum(const ReducedOperator& r);

/// {sum_k n_k lambda_k(A) : sum n_k <= N}, without repetition.
std::vector<Complex> chaos_spectrum(const OUModel& m, int max_degree);

struct HinfFunction {
  std::string name;
  std::function<Complex(Complex)> f;
};

/// Imaginary powers z^{is}, s in [-5, 5], and bumps (z/(1+z))^a (1/(1+z))^b.
std::vector<HinfFunction> default_hinf_family();

struct HinfReport {
  double probe = 0.0;           // max over the family of ||f(-UL)|| on Ran(D)
  double spectral_ratio = 0.0;  // max of ||f(-UL)|| / sup over the spectrum of |f|
  bool used_contour = false;
  std::string worst;
};

/// Measures the functional calculus of -UL restricted to Ran(D) on the
/// given family; falls back to a contour integral when the eigenvector
/// basis is too ill-conditioned.
HinfReport hinf_norm_probe(const ReducedOperator& r, const std::vector<HinfFunction>& family,
                           bool force_contour = false);

struct PotentialEstimates {
  double r = 0.0;   // |phi|^2 / (|f|^2 / lambda^2)
  double dr = 0.0;  // |D phi|^2 / (2 |f|^2 / lambda)
  double vr = 0.0;  // <V phi, phi> / (eps |f|^2 / lambda)
  double dv = 0.0;  // <V, |D phi|^2> / (sqrt(eps / lambda) |f|^2)
};

/// Ratios measured/bound for phi = (lambda - L + V_eps / eps)^{-1} f on the
/// whole-space operator; V_eps is evaluated at nodes and averaged over each
/// element's vertices for the gradient estimate.
PotentialEstimates potential_resolvent_estimates(const GridOperator& op, const Grid& grid,
                                                 const PotentialSpec& spec, double lambda,
                                                 const Vec& f);

}  // namespace oulab

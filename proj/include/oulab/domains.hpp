#pragma once

// Open convex domains, their complements, exact distances, shrunk sets
// and the ramp penalization potentials.

#include <cstdint>
#include <memory>
#include <string>

#include "oulab/estimate.hpp"
#include "oulab/matkit.hpp"

namespace oulab {

struct OUModel;

class Domain {
 public:
  enum class Kind { half_space, ball, box, complement, whole_space };

  /// {x : <x, normal> > offset}; the normal is rescaled to unit length.
  static Domain half_space(const Vec& normal, double offset);
  static Domain ball(const Vec& center, double radius);
  static Domain box(const Vec& lo, const Vec& hi);
  /// Interior of the complement of a convex primitive.
  static Domain complement(const Domain& inner);
  static Domain whole_space(int dim);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::string describe() const;

  const Vec& normal() const { return a_; }  // half_space
  double offset() const { return s_; }      // half_space
  const Vec& center() const { return a_; }  // ball
  double radius() const { return s_; }      // ball
  const Vec& lo() const { return a_; }      // box
  const Vec& hi() const { return b_; }      // box
  const Domain& inner() const { return *inner_; }

  bool contains(const Vec& x) const;

  /// Positive inside, negative outside; |value| is the Euclidean distance to
  /// the boundary. +inf for the whole space.
  double signed_distance(const Vec& x) const;

  /// Distance from x to the complement; 0 outside.
  double dist_to_complement(const Vec& x) const;

  /// True when the shrunk set {x in Omega : d(x, complement) > eps} is empty.
  bool shrunk_is_empty(double eps) const;

  /// Distance from x to the shrunk set. Requires a non-empty shrunk set.
  double dist_to_shrunk(double eps, const Vec& x) const;

  /// True when dist_to_shrunk(eps, x) == max(eps - signed_distance(x), 0),
  /// which lets batch kernels evaluate the potential from signed distances.
  bool potential_is_ramp() const;

 private:
  Kind kind_ = Kind::whole_space;
  int dim_ = 0;
  Vec a_, b_;
  double s_ = 0.0;
  std::shared_ptr<const Domain> inner_;
};

struct PotentialSpec {
  Domain domain;
  double eps = 0.1;
};

/// min(d(x, Omega_eps) / eps, 1); constant 1 when Omega_eps is empty.
double penalized_potential(const PotentialSpec& spec, const Vec& x);

enum class MassMethod { quadrature, monte_carlo };

/// mu_inf(Omega). Quadrature uses closed forms where available and a
/// midpoint grid in whitened coordinates otherwise (d <= 3).
McEstimate mu_mass(const Domain& dom, const OUModel& m, MassMethod method,
                   std::size_t samples = 200000, std::uint64_t seed = 1);

}  // namespace oulab

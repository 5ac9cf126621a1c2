#include "oulab/domains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "oulab/errors.hpp"
#include "oulab/model.hpp"
#include "oulab/rng.hpp"

namespace oulab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_convex_primitive(Domain::Kind k) {
  return k == Domain::Kind::half_space || k == Domain::Kind::ball || k == Domain::Kind::box;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

Domain Domain::half_space(const Vec& normal, double offset) {
  const double len = normal.norm();
  if (!(len > 0.0) || !std::isfinite(len) || !std::isfinite(offset))
    throw argument_error("half-space needs a finite nonzero normal");
  Domain d;
  d.kind_ = Kind::half_space;
  d.dim_ = static_cast<int>(normal.size());
  d.a_ = normal / len;
  d.s_ = offset / len;
  return d;
}

Domain Domain::ball(const Vec& center, double radius) {
  if (!(radius > 0.0) || !center.allFinite()) throw argument_error("ball radius must be positive");
  Domain d;
  d.kind_ = Kind::ball;
  d.dim_ = static_cast<int>(center.size());
  d.a_ = center;
  d.s_ = radius;
  return d;
}

Domain Domain::box(const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size() || lo.size() == 0) throw argument_error("box corners differ in size");
  if (!((hi - lo).array() > 0.0).all()) throw argument_error("box needs lo < hi componentwise");
  Domain d;
  d.kind_ = Kind::box;
  d.dim_ = static_cast<int>(lo.size());
  d.a_ = lo;
  d.b_ = hi;
  return d;
}

Domain Domain::complement(const Domain& inner) {
  if (!is_convex_primitive(inner.kind()))
    throw argument_error("complement is supported for half-spaces, balls and boxes only");
  Domain d;
  d.kind_ = Kind::complement;
  d.dim_ = inner.dim();
  d.inner_ = std::make_shared<const Domain>(inner);
  return d;
}

Domain Domain::whole_space(int dim) {
  if (dim < 1) throw argument_error("dimension must be positive");
  Domain d;
  d.kind_ = Kind::whole_space;
  d.dim_ = dim;
  return d;
}

std::string Domain::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::half_space:
      os << "half_space(normal=" << a_.transpose() << ", offset=" << s_ << ")";
      break;
    case Kind::ball:
      os << "ball(center=" << a_.transpose() << ", radius=" << s_ << ")";
      break;
    case Kind::box:
      os << "box(lo=" << a_.transpose() << ", hi=" << b_.transpose() << ")";
      break;
    case Kind::complement:
      os << "complement(" << inner_->describe() << ")";
      break;
    case Kind::whole_space:
      os << "whole_space(d=" << dim_ << ")";
      break;
  }
  return os.str();
}

double Domain::signed_distance(const Vec& x) const {
  if (x.size() != dim_) throw argument_error("point dimension does not match domain");
  switch (kind_) {
    case Kind::half_space:
      return x.dot(a_) - s_;
    case Kind::ball:
      return s_ - (x - a_).norm();
    case Kind::box: {
      const Vec clamped = x.cwiseMax(a_).cwiseMin(b_);
      const double outside = (x - clamped).norm();
      if (outside > 0.0) return -outside;
      return std::min((x - a_).minCoeff(), (b_ - x).minCoeff());
    }
    case Kind::complement:
      return -inner_->signed_distance(x);
    case Kind::whole_space:
      return kInf;
  }
  return 0.0;
}

bool Domain::contains(const Vec& x) const { return signed_distance(x) > 0.0; }

double Domain::dist_to_complement(const Vec& x) const {
  return std::max(signed_distance(x), 0.0);
}

bool Domain::shrunk_is_empty(double eps) const {
  switch (kind_) {
    case Kind::ball:
      return s_ <= eps;
    case Kind::box:
      return ((b_ - a_).array() <= 2.0 * eps).any();
    default:
      return false;
  }
}

double Domain::dist_to_shrunk(double eps, const Vec& x) const {
  if (!(eps > 0.0)) throw argument_error("eps must be positive");
  if (shrunk_is_empty(eps)) throw domain_error("shrunk domain is empty");
  switch (kind_) {
    case Kind::box: {
      const Vec lo = a_.array() + eps;
      const Vec hi = b_.array() - eps;
      return (x - x.cwiseMax(lo).cwiseMin(hi)).norm();
    }
    case Kind::whole_space:
      return 0.0;
    default:
      // Half-spaces, balls and complements of convex sets: the distance to
      // {sd > eps} is exactly (eps - sd)_+.
      return std::max(eps - signed_distance(x), 0.0);
  }
}

bool Domain::potential_is_ramp() const {
  return kind_ == Kind::half_space || kind_ == Kind::ball || kind_ == Kind::complement ||
         kind_ == Kind::whole_space;
}

double penalized_potential(const PotentialSpec& spec, const Vec& x) {
  if (!(spec.eps > 0.0)) throw argument_error("eps must be positive");
  if (spec.domain.shrunk_is_empty(spec.eps)) return 1.0;
  return std::min(spec.domain.dist_to_shrunk(spec.eps, x) / spec.eps, 1.0);
}

namespace {

// Closed forms in the cases that reduce to one-dimensional Gaussian masses.
bool closed_form_mass(const Domain& dom, const OUModel& m, double& mass) {
  switch (dom.kind()) {
    case Domain::Kind::whole_space:
      mass = 1.0;
      return true;
    case Domain::Kind::half_space: {
      const double sigma = std::sqrt(dom.normal().dot(m.q_inf * dom.normal()));
      mass = 1.0 - std_normal_cdf(dom.offset() / sigma);
      return true;
    }
    case Domain::Kind::ball:
    case Domain::Kind::box:
      if (m.d != 1) return false;
      {
        const double sigma = std::sqrt(m.q_inf(0, 0));
        double lo, hi;
        if (dom.kind() == Domain::Kind::ball) {
          lo = dom.center()[0] - dom.radius();
          hi = dom.center()[0] + dom.radius();
        } else {
          lo = dom.lo()[0];
          hi = dom.hi()[0];
        }
        mass = std_normal_cdf(hi / sigma) - std_normal_cdf(lo / sigma);
        return true;
      }
    case Domain::Kind::complement: {
      double inner = 0.0;
      if (!closed_form_mass(dom.inner(), m, inner)) return false;
      mass = 1.0 - inner;
      return true;
    }
  }
  return false;
}

}  // namespace

McEstimate mu_mass(const Domain& dom, const OUModel& m, MassMethod method, std::size_t samples,
                   std::uint64_t seed) {
  if (dom.dim() != m.d) throw argument_error("domain and model dimensions differ");
  McEstimate est;
  if (method == MassMethod::quadrature) {
    double mass = 0.0;
    if (closed_form_mass(dom, m, mass)) {
      est.mean = mass;
      est.bias_note = "closed form";
      return est;
    }
    if (m.d > 3) throw capability_error("quadrature mass limited to d <= 3");
    const int per_dim = m.d == 1 ? 4000 : (m.d == 2 ? 600 : 120);
    const double r = 8.0;
    const double h = 2.0 * r / per_dim;
    std::vector<int> idx(m.d, 0);
    long total = 1;
    for (int k = 0; k < m.d; ++k) total *= per_dim;
    Vec z(m.d);
    double acc = 0.0, norm = 0.0;
    for (long n = 0; n < total; ++n) {
      for (int k = 0; k < m.d; ++k) z[k] = -r + (idx[k] + 0.5) * h;
      const double w = std::exp(-0.5 * z.squaredNorm());
      norm += w;
      if (dom.contains(m.chol_q * z)) acc += w;
      for (int k = 0; k < m.d; ++k) {
        if (++idx[k] < per_dim) break;
        idx[k] = 0;
      }
    }
    est.mean = acc / norm;
    est.n = static_cast<std::size_t>(total);
    est.bias_note = "midpoint grid in whitened coordinates";
    return est;
  }
  std::size_t hits = 0;
  Vec z(m.d);
  for (std::size_t i = 0; i < samples; ++i) {
    RngStream rng(seed, start_stream(i));
    for (int k = 0; k < m.d; ++k) z[k] = rng.normal();
    if (dom.contains(m.chol_q * z)) ++hits;
  }
  est.n = samples;
  est.mean = static_cast<double>(hits) / static_cast<double>(samples);
  est.std_error = std::sqrt(est.mean * (1.0 - est.mean) / static_cast<double>(samples));
  return est;
}

}  // namespace oulab

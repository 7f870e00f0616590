#pragma once

// Minimization of the double-Laplace objective
//   G(z) = log sum_x w(x) exp(lp(x) + c z.x),   c = q (or -1 for the polar),
// whose minimizer is the Santalo point, and the geometric test deciding
// whether the infimum is zero.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lsvp/error.hpp"
#include "lsvp/gridfn.hpp"
#include "lsvp/logsum.hpp"

namespace lsvp {

struct SolverOptions {
  double grad_tol = 1e-8;
  int max_iter = 100;
  // Iterates leaving this ball with G still decreasing are read as an escape
  // to infinity. Non-positive means 10 times the dual window radius.
  double escape_radius = 0.0;
  double shrink = 0.5;
  double armijo = 1e-4;
  // Start point; empty means the origin.
  Vector z0;
};

enum class OutcomeKind { InfimumZero, Attained };

inline const char* to_string(OutcomeKind k) { return k == OutcomeKind::Attained ? "Attained" : "InfimumZero"; }

struct SantaloOutcome {
  OutcomeKind kind = OutcomeKind::Attained;
  Vector point;            // minimizer, valid iff Attained
  double log_inf = kNegInf;
  double bary_residual = 0.0;
  int iterations = 0;
  Vector escape_ray;       // unit direction, valid iff InfimumZero
  std::vector<std::string> flags;
};

struct ObjectiveEval {
  double value = kNegInf;
  Vector gradient;
  Matrix hessian;
  Vector mean;  // barycenter of the reweighted measure
};

// Precomputed nodes and log-weights of lp for repeated evaluation.
class DoubleLaplaceObjective {
 public:
  DoubleLaplaceObjective(const GridFunction& lp, double tilt) : tilt_(tilt), dim_(lp.dim()) {
    const std::size_t d = lp.dim();
    std::vector<std::vector<double>> lw(d);
    for (std::size_t a = 0; a < d; ++a) lw[a] = log_trapezoid_weights(lp.spec.axis(a));
    std::vector<std::size_t> lo(d, SIZE_MAX), hi(d, 0);
    for (std::size_t k = 0; k < lp.size(); ++k) {
      if (lp.logv[k] == kNegInf) continue;
      for (std::size_t a = 0; a < d; ++a) {
        lo[a] = std::min(lo[a], lp.spec.index(k, a));
        hi[a] = std::max(hi[a], lp.spec.index(k, a));
      }
      double b = lp.logv[k];
      for (std::size_t a = 0; a < d; ++a) b += lw[a][lp.spec.index(k, a)];
      base_.push_back(b);
      const Vector x = lp.point(k);
      for (std::size_t a = 0; a < d; ++a) coords_.push_back(x[a]);
    }
    for (std::size_t a = 0; a < d; ++a) degenerate_ = degenerate_ || lo[a] == SIZE_MAX || hi[a] < lo[a] + 2;
    for (std::size_t a = 0; a < d; ++a) {
      const Axis& ax = lp.spec.axis(a);
      radius_ = std::max({radius_, std::abs(ax.lo + lp.shift[a]), std::abs(ax.hi + lp.shift[a])});
    }
  }

  bool empty() const { return base_.empty(); }
  // Nonzero nodes span fewer than three grid lines along some axis, so the
  // support has no interior at this resolution.
  bool degenerate() const { return degenerate_; }
  std::size_t dim() const { return dim_; }
  double tilt() const { return tilt_; }
  double window_radius() const { return radius_; }

  double value(const Vector& z) const {
    std::vector<double> t(base_.size()), scratch;
    fill_terms(z, t);
    return logsumexp(t, scratch);
  }

  ObjectiveEval eval(const Vector& z) const {
    const std::size_t K = base_.size(), d = dim_;
    std::vector<double> t(K), scratch;
    fill_terms(z, t);
    ObjectiveEval out;
    out.value = logsumexp(t, scratch);
    std::vector<double> w(K);
    for (std::size_t k = 0; k < K; ++k) w[k] = std::exp(t[k] - out.value);
    out.mean = Vector::Zero(d);
    std::vector<double> buf(K);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t k = 0; k < K; ++k) buf[k] = w[k] * coords_[k * d + a];
      out.mean[a] = pairwise_sum(buf);
    }
    Matrix cov(d, d);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) {
        for (std::size_t k = 0; k < K; ++k)
          buf[k] = w[k] * (coords_[k * d + a] - out.mean[a]) * (coords_[k * d + b] - out.mean[b]);
        cov(a, b) = cov(b, a) = pairwise_sum(buf);
      }
    }
    out.gradient = tilt_ * out.mean;
    out.hessian = tilt_ * tilt_ * cov;
    return out;
  }

 private:
  void fill_terms(const Vector& z, std::vector<double>& t) const {
    const std::size_t d = dim_;
    for (std::size_t k = 0; k < base_.size(); ++k) {
      double s = 0.0;
      for (std::size_t a = 0; a < d; ++a) s += z[a] * coords_[k * d + a];
      t[k] = base_[k] + tilt_ * s;
    }
  }

  double tilt_;
  std::size_t dim_;
  double radius_ = 0.0;
  bool degenerate_ = false;
  std::vector<double> base_;
  std::vector<double> coords_;
};

// log of the integral of exp(lp(x) + q z.x) over the dual grid.
inline double log_double_laplace(const GridFunction& lp, double q, const Vector& z) {
  return DoubleLaplaceObjective(lp, q).value(z);
}

inline ObjectiveEval objective_gradient_hessian(const GridFunction& lp, double q, const Vector& z) {
  return DoubleLaplaceObjective(lp, q).eval(z);
}

namespace detail {

inline SantaloOutcome minimize_objective(const DoubleLaplaceObjective& obj, const SolverOptions& opts) {
  const std::size_t d = obj.dim();
  SantaloOutcome out;
  if (obj.empty()) {
    // the transform vanishes on the whole dual grid: nothing to minimize
    out.kind = OutcomeKind::InfimumZero;
    out.log_inf = kNegInf;
    out.escape_ray = Vector::Zero(d);
    out.flags.push_back("transform vanishes identically");
    return out;
  }
  if (obj.degenerate()) {
    out.kind = OutcomeKind::InfimumZero;
    out.log_inf = kNegInf;
    out.escape_ray = Vector::Zero(d);
    out.flags.push_back("transform support has empty interior");
    return out;
  }
  const double radius = opts.escape_radius > 0.0 ? opts.escape_radius : 10.0 * obj.window_radius();
  const double c = std::abs(obj.tilt());
  Vector z = opts.z0.size() == 0 ? Vector::Zero(d) : opts.z0;
  ObjectiveEval ev = obj.eval(z);
  double best = ev.value;

  auto converged = [&](const ObjectiveEval& e) {
    return e.gradient.norm() <= opts.grad_tol * std::max(1.0, std::abs(e.value));
  };
  auto attained = [&](int it) {
    // one extra full Newton step tightens the certificate when it helps
    Eigen::LDLT<Matrix> ldlt(ev.hessian);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      const Vector zp = z - ldlt.solve(ev.gradient);
      if (zp.allFinite()) {
        const ObjectiveEval ep = obj.eval(zp);
        if (ep.gradient.norm() < ev.gradient.norm() && ep.value <= ev.value + 1e-14 * std::max(1.0, std::abs(ev.value))) {
          z = zp;
          ev = ep;
        }
      }
    }
    out.kind = OutcomeKind::Attained;
    out.point = z;
    out.log_inf = ev.value;
    out.bary_residual = ev.mean.norm();
    out.iterations = it;
    return out;
  };

  for (int it = 0; it < opts.max_iter; ++it) {
    if (converged(ev)) return attained(it);

    Vector dir;
    Eigen::SelfAdjointEigenSolver<Matrix> es(ev.hessian);
    const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
    if (lmin > 0.0 && lmax / lmin <= 1e12) {
      dir = -es.eigenvectors() * (es.eigenvalues().cwiseInverse().asDiagonal() *
                                  (es.eigenvectors().transpose() * ev.gradient));
    } else {
      dir = -ev.gradient;
      out.flags.push_back("gradient step");
    }
    const double slope = ev.gradient.dot(dir);
    double alpha = 1.0, next = kPosInf;
    Vector zn;
    for (int ls = 0; ls < 200; ++ls) {
      zn = z + alpha * dir;
      next = obj.value(zn);
      if (next <= ev.value + opts.armijo * alpha * slope) break;
      alpha *= opts.shrink;
      next = kPosInf;
    }
    if (next == kPosInf) {
      // no decrease available: at the round-off floor of the minimum
      if (ev.mean.norm() <= 1e3 * opts.grad_tol / std::max(c, 1e-300)) {
        out.flags.push_back("line search stalled at round-off");
        return attained(it);
      }
      throw NonConvergedError("Santalo solver: line search failed with gradient " + std::to_string(ev.gradient.norm()));
    }
    const double prev = ev.value;
    z = zn;
    ev = obj.eval(z);
    best = std::min(best, ev.value);
    if (z.norm() > radius && ev.value < prev) {
      out.kind = OutcomeKind::InfimumZero;
      out.escape_ray = z / z.norm();
      out.log_inf = best;
      out.iterations = it + 1;
      out.point = z;
      out.flags.push_back("non-certified infimum");
      return out;
    }
    if (ev.value == kNegInf) {
      out.kind = OutcomeKind::InfimumZero;
      out.escape_ray = dir.normalized();
      out.log_inf = kNegInf;
      out.iterations = it + 1;
      out.flags.push_back("objective underflow");
      return out;
    }
  }
  if (converged(ev)) return attained(opts.max_iter);
  throw NonConvergedError("Santalo solver: no verdict after " + std::to_string(opts.max_iter) + " iterations");
}

}  // namespace detail

// Santalo point of f from lp = log 𝓛ₚf: minimizer of z -> log L(𝓛ₚf)(qz).
inline SantaloOutcome santalo_point(const GridFunction& lp, const ExponentPair& pq, const SolverOptions& opts = {}) {
  if (pq.polar_limit()) throw ParameterError("santalo_point needs p > 0; use santalo_point_polar");
  return detail::minimize_objective(DoubleLaplaceObjective(lp, pq.q), opts);
}

// Same for the essential polar: minimizer of z -> log L(f^box)(-z).
inline SantaloOutcome santalo_point_polar(const GridFunction& fsq, const SolverOptions& opts = {}) {
  return detail::minimize_objective(DoubleLaplaceObjective(fsq, -1.0), opts);
}

enum class SupportVerdict { OriginInterior, OriginNotInterior };

inline const char* to_string(SupportVerdict v) {
  return v == SupportVerdict::OriginInterior ? "OriginInterior" : "OriginNotInterior";
}

// OriginInterior iff every node within 3h of the origin (per axis) has
// logv > max(logv) + log(tol). The threshold is relative so the test does
// not depend on the normalization of lp.
inline SupportVerdict support_dichotomy(const GridFunction& lp, double tol = 1e-12) {
  if (!(tol > 0.0 && tol < 1.0)) throw ParameterError("support_dichotomy: tol must lie in (0,1)");
  const std::size_t d = lp.dim();
  for (std::size_t a = 0; a < d; ++a) {
    const Axis& ax = lp.spec.axis(a);
    const double lo = ax.lo + lp.shift[a], hi = ax.hi + lp.shift[a];
    if (!(lo + 3.0 * ax.step() <= 0.0 && hi - 3.0 * ax.step() >= 0.0))
      throw ConfigurationError("support_dichotomy: origin is not inside the dual grid");
  }
  const double top = lp.max_logv();
  if (top == kNegInf) return SupportVerdict::OriginNotInterior;
  const double thr = top + std::log(tol);
  for (std::size_t k = 0; k < lp.size(); ++k) {
    bool near = true;
    for (std::size_t a = 0; a < d && near; ++a)
      near = std::abs(lp.coord(a, lp.spec.index(k, a))) <= 3.0 * lp.spec.axis(a).step() * (1.0 + 1e-12);
    if (near && !(lp.logv[k] > thr)) return SupportVerdict::OriginNotInterior;
  }
  return SupportVerdict::OriginInterior;
}

}  // namespace lsvp

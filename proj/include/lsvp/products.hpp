#pragma once

// Volume products and the checks built on them: M_p(f) and M(f), the
// Gaussian constants, the centred variants, the Laplace-norm bound,
// monotonicity along flows, the Hamilton-Jacobi residual, reverse
// hypercontractivity, Santalo curves and the p -> 0 sweep.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lsvp/error.hpp"
#include "lsvp/gridfn.hpp"
#include "lsvp/santalo.hpp"
#include "lsvp/semigroups.hpp"
#include "lsvp/transforms.hpp"

namespace lsvp {

struct GaussianConstants {
  double log_Cp = 0.0;
  double log_Mp_gauss = 0.0;
};

// C_p = [p^{1/p} (-q)^{-1/q}]^{n/2} (2 pi)^{n/q} and
// M_p(gamma_1) = [p^{-p} (1-p)^{1-p}]^{n/2} (2 pi)^{n(1-p)}.
inline GaussianConstants gaussian_constants(double p, std::size_t n) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("gaussian_constants: p must lie in (0,1)");
  if (n == 0) throw ParameterError("gaussian_constants: dimension must be positive");
  const double q = p / (p - 1.0), dn = static_cast<double>(n), l2pi = std::log(2.0 * std::numbers::pi);
  GaussianConstants c;
  c.log_Cp = 0.5 * dn * (std::log(p) / p - std::log(-q) / q) + dn / q * l2pi;
  c.log_Mp_gauss = 0.5 * dn * (-p * std::log(p) + (1.0 - p) * std::log1p(-p)) + dn * (1.0 - p) * l2pi;
  return c;
}

// log of the bound: M_p(gamma_1), or (2 pi)^n at p = 0.
inline double log_gaussian_bound(const ExponentPair& pq, std::size_t n) {
  if (pq.polar_limit()) return static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  return gaussian_constants(pq.p, n).log_Mp_gauss;
}

struct ProductOptions {
  std::optional<Resolution> resolution;  // default: Resolution::for_dim
  SolverOptions solver;                  // escape_radius <= 0: chosen from the source window
  bool recenter = true;                  // translate f to its barycenter first
  double dichotomy_tol = 1e-12;
  std::optional<GridSpec> dual;          // fixed transform grid instead of the heuristic
};

struct ProductReport {
  double p = 0.0;
  std::size_t dim = 1;
  double log_integral_f = kNegInf;
  SantaloOutcome santalo;
  SupportVerdict dichotomy = SupportVerdict::OriginNotInterior;
  double log_Mp = kNegInf;
  double log_gaussian_bound = 0.0;
  double ratio_log = kNegInf;
  std::vector<std::string> tail_flags;
  GridSpec dual;
};

// Transform of f ready for the objective: f recentred at `center` (g = f
// translated by -center), its tail model, and the chosen transform grid.
struct TransformPlan {
  GridFunction g;
  Vector center;
  TailModel tails;
  LogIntegral integral;
  GridSpec dual;
  double escape_radius = 0.0;
};

namespace detail {

inline GridFunction apply_transform(const GridFunction& g, const ExponentPair& pq, const GridSpec& dual,
                                    const TailModel& tails) {
  if (pq.polar_limit()) return essential_polar(g, dual, tails, true);
  return p_laplace_nonzero(g, pq, dual, tails);
}

inline double window_radius(const GridFunction& f) {
  double r = 0.0;
  for (std::size_t a = 0; a < f.dim(); ++a)
    r = std::max({r, std::abs(f.coord(a, 0)), std::abs(f.coord(a, f.spec.axis(a).n - 1))});
  return r;
}

}  // namespace detail

inline TransformPlan plan_transform(const GridFunction& f, const ExponentPair& pq, const ProductOptions& opts = {}) {
  if (!f.nonzero()) throw TransformOfZeroError("transform plan for the zero function");
  TransformPlan plan;
  plan.integral = integrate_log(f);
  plan.center = Vector::Zero(f.dim());
  if (opts.recenter && !plan.integral.tail_suspect) plan.center = barycenter(f);
  plan.g = translate(f, -plan.center);
  plan.tails = open_tails(plan.g);
  const double r = detail::window_radius(plan.g);
  plan.escape_radius = plan.integral.tail_suspect ? 0.25 * r : r;
  if (opts.dual) {
    plan.dual = *opts.dual;
  } else {
    const Resolution res = opts.resolution ? *opts.resolution : Resolution::for_dim(f.dim());
    const GridSpec window = default_dual_window(plan.g, pq, res);
    plan.dual = choose_dual_grid(plan.g, pq, window,
                                 [&](const GridSpec& s) { return detail::apply_transform(plan.g, pq, s, plan.tails); },
                                 res)
                    .spec;
  }
  return plan;
}

inline GridFunction plan_apply(const TransformPlan& plan, const ExponentPair& pq) {
  return detail::apply_transform(plan.g, pq, plan.dual, plan.tails);
}

namespace detail {

inline double log_mp_from(const ExponentPair& pq, std::size_t n, double log_int, double log_inf) {
  if (pq.polar_limit()) return log_int + log_inf;
  const double dn = static_cast<double>(n);
  return -(dn * pq.p / pq.q) * std::log(pq.p) + log_int - (pq.p / pq.q) * log_inf;
}

inline ProductReport zero_function_report(const ExponentPair& pq, std::size_t n) {
  ProductReport r;
  r.p = pq.p;
  r.dim = n;
  r.log_gaussian_bound = log_gaussian_bound(pq, n);
  r.santalo.kind = OutcomeKind::InfimumZero;
  r.santalo.flags.push_back("f vanishes identically");
  return r;
}

}  // namespace detail

// M_p(f) = p^{-np/q} (integral f) (inf_z integral 𝓛ₚ(τ_z f))^{-p/q} for p > 0,
// and M(f) = (integral f) inf_z integral (τ_z f)^box at p = 0.
inline ProductReport mp_product(const GridFunction& f, const ExponentPair& pq, const ProductOptions& opts = {}) {
  const std::size_t n = f.dim();
  if (!f.nonzero()) return detail::zero_function_report(pq, n);
  ProductReport r;
  r.p = pq.p;
  r.dim = n;
  r.log_gaussian_bound = log_gaussian_bound(pq, n);
  const TransformPlan plan = plan_transform(f, pq, opts);
  r.dual = plan.dual;
  r.log_integral_f = plan.integral.value;
  if (plan.integral.tail_suspect) r.tail_flags.push_back("tail-suspect integral of f");
  if (any_open(plan.tails)) r.tail_flags.push_back("open tails: f does not decay at the grid edge");

  const GridFunction lp = plan_apply(plan, pq);
  SolverOptions so = opts.solver;
  if (so.escape_radius <= 0.0) so.escape_radius = plan.escape_radius;
  r.santalo = detail::minimize_objective(DoubleLaplaceObjective(lp, pq.tilt()), so);
  r.dichotomy = support_dichotomy(lp, opts.dichotomy_tol);
  const bool attained = r.santalo.kind == OutcomeKind::Attained;
  if (attained != (r.dichotomy == SupportVerdict::OriginInterior))
    throw DichotomyDisagreementError(std::string("solver verdict ") + to_string(r.santalo.kind) +
                                     " disagrees with support test " + to_string(r.dichotomy));
  if (r.santalo.point.size() == static_cast<Eigen::Index>(n)) r.santalo.point -= plan.center;

  if (attained && !plan.integral.tail_suspect) {
    r.log_Mp = detail::log_mp_from(pq, n, r.log_integral_f, r.santalo.log_inf);
    r.ratio_log = r.log_Mp - r.log_gaussian_bound;
  } else if (attained) {
    r.tail_flags.push_back("product not certified: integral of f may be infinite");
  }
  return r;
}

inline ProductReport volume_product(const GridFunction& f, const ProductOptions& opts = {}) {
  return mp_product(f, ExponentPair::from_p(0.0), opts);
}

enum class Centering { CenterF, CenterLp };

inline const char* to_string(Centering c) { return c == Centering::CenterF ? "CenterF" : "CenterLp"; }

// Product at z = 0 after centring: CenterF translates f to barycenter 0;
// CenterLp does the same and then multiplies by e^{s.x} so that the
// transform has barycenter 0 (s = p bar(𝓛ₚf), or bar(f^box) at p = 0).
// The report's santalo.point is
// the shift or modulation vector, bary_residual the barycenter of the
// transform actually used.
inline ProductReport mp_centered(const GridFunction& f, const ExponentPair& pq, Centering which,
                                 const ProductOptions& opts = {}) {
  const std::size_t n = f.dim();
  if (!f.nonzero()) throw TransformOfZeroError("mp_centered: f vanishes identically");
  const LogIntegral I = integrate_log(f);
  if (I.tail_suspect) throw UndefinedBarycenterError("mp_centered: integral of f is tail-suspect");
  ProductOptions o = opts;
  o.recenter = false;

  GridFunction h;
  Vector shift;
  if (which == Centering::CenterF) {
    shift = barycenter(f);
    h = translate(f, -shift);
  } else {
    // Modulation only translates the transform, so f is first moved to its
    // barycenter, where the transform is integrable.
    // A few fixed-point passes absorb truncation effects of the transform grid.
    const GridFunction g = translate(f, -barycenter(f));
    shift = Vector::Zero(n);
    h = g;
    for (int it = 0; it < 8; ++it) {
      const GridFunction t = plan_apply(plan_transform(h, pq, o), pq);
      if (!t.nonzero() || integrate_log(t).tail_suspect)
        throw UndefinedBarycenterError("mp_centered: transform of f is not integrable on its grid");
      const Vector b = barycenter(t);
      if (b.norm() <= 1e-10) break;
      shift += pq.polar_limit() ? b : Vector(pq.p * b);
      h = modulate(g, shift);
    }
  }

  ProductReport r;
  r.p = pq.p;
  r.dim = n;
  r.log_gaussian_bound = log_gaussian_bound(pq, n);
  const TransformPlan plan = plan_transform(h, pq, o);
  r.dual = plan.dual;
  r.log_integral_f = plan.integral.value;
  if (plan.integral.tail_suspect) r.tail_flags.push_back("tail-suspect integral of the centred f");
  const GridFunction t = plan_apply(plan, pq);
  const LogIntegral It = integrate_log(t);
  if (It.tail_suspect) r.tail_flags.push_back("tail-suspect integral of the transform");
  r.santalo.kind = OutcomeKind::Attained;
  r.santalo.point = shift;
  r.santalo.log_inf = It.value;
  r.santalo.bary_residual = t.nonzero() ? barycenter(t).norm() : 0.0;
  r.dichotomy = support_dichotomy(t, opts.dichotomy_tol);
  if (t.nonzero() && !plan.integral.tail_suspect && !It.tail_suspect) {
    r.log_Mp = detail::log_mp_from(pq, n, r.log_integral_f, It.value);
    r.ratio_log = r.log_Mp - r.log_gaussian_bound;
  }
  return r;
}

struct LaplaceBoundResult {
  double lhs_log = 0.0;  // log sup_z ||L(τ_z f)||_q
  double rhs_log = 0.0;  // log C_p + log ||f||_p
  double margin = 0.0;
  SantaloOutcome santalo;
  std::vector<std::string> flags;
};

// sup_z ||L(τ_z f)||_{L^q} >= C_p ||f||_{L^p}, using ||L(τ_z f)||_q^q = L𝓛ₚ(f^p)(qz).
inline LaplaceBoundResult laplace_lp_bound_check(const GridFunction& f, const ExponentPair& pq,
                                                 const ProductOptions& opts = {}) {
  if (pq.polar_limit()) throw ParameterError("laplace_lp_bound_check needs p in (0,1)");
  if (!f.nonzero()) throw TransformOfZeroError("laplace_lp_bound_check: f vanishes identically");
  const GridFunction fp = power(f, pq.p);
  const ProductReport r = mp_product(fp, pq, opts);
  LaplaceBoundResult out;
  out.santalo = r.santalo;
  out.flags = r.tail_flags;
  out.lhs_log = r.santalo.kind == OutcomeKind::InfimumZero ? kPosInf : r.santalo.log_inf / pq.q;
  const LogIntegral I = integrate_log(fp);
  out.rhs_log = gaussian_constants(pq.p, f.dim()).log_Cp + (I.tail_suspect ? kPosInf : I.value / pq.p);
  if (out.lhs_log == kPosInf) {
    out.margin = kPosInf;
    out.flags.push_back("left side infinite: the bound holds trivially");
  } else {
    out.margin = out.lhs_log - out.rhs_log;
  }
  return out;
}

struct MonotonicityCurve {
  std::vector<double> times;
  std::vector<double> alpha_log;
  std::vector<double> mp_log;
  std::vector<Vector> santalo_points;
  std::vector<OutcomeKind> kinds;
  std::vector<ProductReport> reports;
  std::string error;  // empty unless a stage failed; the curve is then partial
};

// Node cap for evolved grids: none in 1D, 257 per axis otherwise.
inline std::size_t default_flow_cap(std::size_t dim) { return dim == 1 ? 0 : 257; }

inline MonotonicityCurve monotonicity_sweep(const GridFunction& f, const ExponentPair& pq, FlowKind kind,
                                            const std::vector<double>& times, const ProductOptions& opts = {}) {
  if (times.empty() || !(times.front() >= 0.0)) throw ParameterError("monotonicity_sweep: times must start at t >= 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ParameterError("times must be strictly increasing");
  MonotonicityCurve c;
  for (double t : times) {
    try {
      const GridFunction ft = flow(f, {kind, t}, default_flow_cap(f.dim()));
      ProductReport r = mp_product(ft, pq, opts);
      c.times.push_back(t);
      c.alpha_log.push_back(r.santalo.log_inf);
      c.mp_log.push_back(r.log_Mp);
      c.santalo_points.push_back(r.santalo.kind == OutcomeKind::Attained ? r.santalo.point : Vector());
      c.kinds.push_back(r.santalo.kind);
      c.reports.push_back(std::move(r));
    } catch (const Error& e) {
      c.error = "t = " + detail::format_double(t) + ": " + e.what();
      break;
    }
  }
  return c;
}

struct HjbResult {
  double t = 0.0, dt = 0.0, dz = 0.0;
  std::vector<Vector> z;
  std::vector<double> residual;   // d_t Q + (1/2)(p/-q)|grad_z Q|^2
  std::vector<double> dtQ;
  std::vector<double> grad_norm;
  std::vector<double> budget;     // finite-difference error bound per sample
  double max_budget = 0.0;
};

// Samples the Hamilton-Jacobi inequality for Q(t,z) = log integral 𝓛ₚ(τ_z E_t f)
// by central differences. The budget adds the truncation terms estimated
// from third differences and a round-off term.
inline HjbResult hjb_residual(const GridFunction& f, const ExponentPair& pq, double t, const std::vector<Vector>& zs,
                              double dt = 0.0, double dz = 1e-3, const ProductOptions& opts = {}) {
  if (pq.polar_limit()) throw ParameterError("hjb_residual needs p in (0,1)");
  if (dt <= 0.0) dt = 1e-3 * std::max(t, 1.0);
  if (!(t - 2.0 * dt > 0.0)) throw ParameterError("hjb_residual: need t > 2 dt");
  if (!(dz > 0.0)) throw ParameterError("hjb_residual: dz must be positive");
  const std::size_t n = f.dim();
  const GridSpec grid = evolved_grid(f, {FlowKind::Heat, t + 2.0 * dt}, default_flow_cap(n));
  const GridFunction ft = heat(f, t, grid);
  const TransformPlan plan = plan_transform(ft, pq, opts);

  // objectives at t + k dt, k = -2..2, on a common transform grid
  std::vector<DoubleLaplaceObjective> obj;
  for (int k = -2; k <= 2; ++k) {
    const GridFunction fk = k == 0 ? ft : heat(f, t + k * dt, grid);
    const GridFunction lp = detail::apply_transform(translate(fk, -plan.center), pq, plan.dual, plan.tails);
    obj.emplace_back(lp, pq.q);
  }
  auto Q = [&](int k, const Vector& z) { return obj[k + 2].value(z + plan.center); };

  HjbResult out;
  out.t = t;
  out.dt = dt;
  out.dz = dz;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double coef = 0.5 * pq.p / -pq.q;
  for (const Vector& z : zs) {
    if (static_cast<std::size_t>(z.size()) != n) throw ParameterError("hjb_residual: z dimension mismatch");
    const double q0 = Q(0, z);
    const double qt = (Q(1, z) - Q(-1, z)) / (2.0 * dt);
    const double qttt = (Q(2, z) - 2.0 * Q(1, z) + 2.0 * Q(-1, z) - Q(-2, z)) / (2.0 * dt * dt * dt);
    Vector grad(n);
    double zbudget = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      Vector e = Vector::Zero(n);
      e[a] = dz;
      const double p1 = Q(0, z + e), m1 = Q(0, z - e), p2 = Q(0, z + 2.0 * e), m2 = Q(0, z - 2.0 * e);
      grad[a] = (p1 - m1) / (2.0 * dz);
      const double third = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * dz * dz * dz);
      zbudget += std::abs(third) * dz * dz / 3.0 + 10.0 * eps * std::max(1.0, std::abs(q0)) / dz;
    }
    const double g2 = grad.squaredNorm();
    // truncation terms carry a factor 2 over their leading-order values
    const double budget = std::abs(qttt) * dt * dt / 3.0 + 10.0 * eps * std::max(1.0, std::abs(q0)) / dt +
                          2.0 * coef * grad.norm() * zbudget + coef * zbudget * zbudget;
    out.z.push_back(z);
    out.dtQ.push_back(qt);
    out.grad_norm.push_back(std::sqrt(g2));
    out.residual.push_back(qt + coef * g2);
    out.budget.push_back(budget);
    out.max_budget = std::max(out.max_budget, budget);
  }
  return out;
}

struct HypercontractResult {
  double s = 0.0;
  double lhs_log = 0.0;  // log ||U_s f||_{L^{p2}(gamma)}
  double rhs_log = 0.0;  // log ||f||_{L^{p1}(gamma)}
  double margin = 0.0;
  double centering_f = 0.0;  // |barycenter of f^p gamma|
  double centering_u = 0.0;  // |barycenter of (U_s f)^q gamma|
  std::vector<std::string> flags;
};

namespace detail {
// |barycenter of f^r gamma|, or +inf when it is undefined on the grid.
inline double gaussian_weighted_bary(const GridFunction& f, double r) {
  GridFunction w = f;
  for (std::size_t k = 0; k < w.size(); ++k)
    w.logv[k] = f.logv[k] == kNegInf ? (r > 0.0 ? kNegInf : kPosInf) : r * f.logv[k] - 0.5 * f.point(k).squaredNorm();
  for (double v : w.logv)
    if (v == kPosInf) return kPosInf;
  if (!w.nonzero() || integrate_log(w).tail_suspect) return kPosInf;
  return barycenter(w).norm();
}
}  // namespace detail

// ||U_s f||_{L^{p2}(gamma)} >= ||f||_{L^{p1}(gamma)} with p = 1 - e^{-2s},
// p1 <= p, p2 >= q, under a centring hypothesis checked to centering_tol.
// U_s f is evaluated on the grid of f, which should be wide enough for the
// Gaussian-weighted integrals.
inline HypercontractResult hypercontract_check(const GridFunction& f, double p, double p1, double p2,
                                               double centering_tol = 1e-6) {
  const ExponentPair pq = ExponentPair::from_p(p);
  if (pq.polar_limit()) throw ParameterError("hypercontract_check needs p in (0,1)");
  if (!(p1 <= p) || p1 == 0.0) throw ParameterError("hypercontract_check: need p1 <= p, p1 != 0");
  if (!(p2 >= pq.q) || p2 == 0.0) throw ParameterError("hypercontract_check: need p2 >= q, p2 != 0");
  if (!f.nonzero()) throw TransformOfZeroError("hypercontract_check: f vanishes identically");
  HypercontractResult out;
  out.s = -0.5 * std::log1p(-p);
  const GridFunction u = ou(f, out.s, f.spec);
  out.centering_f = detail::gaussian_weighted_bary(f, p);
  out.centering_u = detail::gaussian_weighted_bary(u, pq.q);
  if (!(out.centering_f <= centering_tol) && !(out.centering_u <= centering_tol))
    throw HypothesisViolatedError("hypercontract_check: neither f^p gamma nor (U_s f)^q gamma is centred (" +
                                  detail::format_double(out.centering_f) + ", " + detail::format_double(out.centering_u) + ")");
  const NormResult lhs = lp_norm_log(u, p2, Measure::Gaussian);
  const NormResult rhs = lp_norm_log(f, p1, Measure::Gaussian);
  out.lhs_log = lhs.log_norm;
  out.rhs_log = rhs.log_norm;
  if (lhs.divergent || lhs.integral.tail_suspect) out.flags.push_back("norm of U_s f not certified");
  if (rhs.divergent || rhs.integral.tail_suspect) out.flags.push_back("norm of f not certified");
  out.margin = out.lhs_log - out.rhs_log;
  return out;
}

struct SantaloCurveResult {
  std::vector<double> times;
  std::vector<Vector> points;
  std::vector<double> objective_log;  // log integral 𝓛ₚ(τ_{s(t)} f_t)
  bool objective_monotone = true;
  double max_decrease = 0.0;
};

// Integrates s'(t) = (p/2) bar(𝓛ₚ(τ_s f_t)) (at p = 0: (1/2) bar((τ_s f_t)^box))
// from s(0) = s_p(f) with the explicit midpoint rule, f_t following `clock`.
// Reports the objective along the curve; monotonicity is recorded, not required.
inline SantaloCurveResult santalo_curve(const GridFunction& f, const ExponentPair& pq, const std::vector<double>& times,
                                        double ode_step, FlowKind clock = FlowKind::FokkerPlanck,
                                        const ProductOptions& opts = {}) {
  if (!(ode_step > 0.0)) throw ParameterError("santalo_curve: ode_step must be positive");
  if (times.empty() || !(times.front() >= 0.0)) throw ParameterError("santalo_curve: times must start at t >= 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ParameterError("times must be strictly increasing");
  const ProductReport r0 = mp_product(f, pq, opts);
  if (r0.santalo.kind != OutcomeKind::Attained)
    throw HypothesisViolatedError(
        "santalo_curve: the infimum at t = 0 is zero (support dichotomy: origin not interior to the support of the transform), "
        "so there is no Santalo point to start from");

  struct Eval {
    Vector center;
    DoubleLaplaceObjective obj;
    double radius;
  };
  std::map<double, Eval> cache;
  const std::size_t cap = default_flow_cap(f.dim());
  auto at = [&](double t) -> const Eval& {
    auto it = cache.find(t);
    if (it != cache.end()) return it->second;
    const GridFunction ft = flow(f, {clock, t}, cap);
    const TransformPlan plan = plan_transform(ft, pq, opts);
    Eval e{plan.center, DoubleLaplaceObjective(plan_apply(plan, pq), pq.tilt()), detail::window_radius(ft)};
    return cache.emplace(t, std::move(e)).first->second;
  };
  const double factor = pq.polar_limit() ? 0.5 : 0.5 * pq.p;
  auto rhs = [&](double t, const Vector& s) -> Vector {
    const Eval& e = at(t);
    if (s.norm() > e.radius) throw NonConvergedError("santalo_curve: s(t) left the window at t = " + detail::format_double(t));
    return factor * e.obj.eval(s + e.center).mean;
  };

  SantaloCurveResult out;
  Vector s = r0.santalo.point;
  double t = 0.0;
  for (double target : times) {
    while (t < target - 1e-12) {
      const double h = std::min(ode_step, target - t);
      const Vector k1 = rhs(t, s);
      const Vector k2 = rhs(t + 0.5 * h, s + 0.5 * h * k1);
      s += h * k2;
      t = t + h >= target - 1e-12 ? target : t + h;
      // keep only the states still needed
      for (auto it = cache.begin(); it != cache.end();) it = it->first < t ? cache.erase(it) : std::next(it);
    }
    const Eval& e = at(target);
    out.times.push_back(target);
    out.points.push_back(s);
    out.objective_log.push_back(e.obj.value(s + e.center));
  }
  for (std::size_t i = 1; i < out.objective_log.size(); ++i) {
    const double d = out.objective_log[i - 1] - out.objective_log[i];
    out.max_decrease = std::max(out.max_decrease, d);
  }
  out.objective_monotone = out.max_decrease <= 0.0;
  return out;
}

struct PLimitRow {
  double p = 0.0;
  double gap = 0.0;         // sup over test nodes of |log 𝓛ₚf(x/p) - log f^box(x)|
  double log_Mp = 0.0;      // log M_p(f)
  double mp_gap = 0.0;      // |log M_p(f) - log M(f)|
};

struct PLimitTable {
  std::vector<PLimitRow> rows;
  double log_M = 0.0;               // volume product at p = 0
  double log_M_extrapolated = 0.0;  // fit a + b p + c p log p to log M_p, value a
  bool gap_decreasing = true;
  bool mp_gap_decreasing = true;
};

// p -> 0 behaviour of 𝓛ₚ and of the scaled product. `test_grid` holds the
// points x where the pointwise gap is measured; nodes where f^box vanishes
// are skipped.
inline PLimitTable p_limit_sweep(const GridFunction& f, const std::vector<double>& ps, const GridSpec& test_grid,
                                 const ProductOptions& opts = {}) {
  if (ps.empty()) throw ParameterError("p_limit_sweep: empty list of p");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!(ps[i] > 0.0 && ps[i] < 1.0)) throw ParameterError("p must lie in (0,1) for the sweep");
    if (i > 0 && !(ps[i] < ps[i - 1])) throw ParameterError("p_limit_sweep: p values must decrease");
  }
  if (test_grid.dim() != f.dim()) throw ParameterError("p_limit_sweep: test grid dimension mismatch");
  const TailModel tails = open_tails(f);
  const GridFunction polar = essential_polar(f, test_grid, tails, true);
  const ProductReport vp = volume_product(f, opts);
  if (vp.santalo.kind != OutcomeKind::Attained || !std::isfinite(vp.log_Mp))
    throw HypothesisViolatedError("p_limit_sweep: the volume product of f is not certified");
  PLimitTable table;
  table.log_M = vp.log_Mp;
  for (double p : ps) {
    const ExponentPair pq = ExponentPair::from_p(p);
    std::vector<Axis> axes;
    for (const Axis& ax : test_grid.axes()) axes.push_back(Axis{ax.lo / p, ax.hi / p, ax.n});
    const GridFunction lp = p_laplace_nonzero(f, pq, GridSpec(axes), tails);
    PLimitRow row;
    row.p = p;
    for (std::size_t k = 0; k < polar.size(); ++k) {
      if (polar.logv[k] == kNegInf) continue;
      row.gap = std::max(row.gap, std::abs(lp.logv[k] - polar.logv[k]));
    }
    const ProductReport r = mp_product(f, pq, opts);
    if (r.santalo.kind != OutcomeKind::Attained)
      throw HypothesisViolatedError("p_limit_sweep: infimum is zero at p = " + detail::format_double(p));
    row.log_Mp = r.log_Mp;
    row.mp_gap = std::abs(row.log_Mp - table.log_M);
    table.rows.push_back(row);
  }
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    table.gap_decreasing = table.gap_decreasing && table.rows[i].gap < table.rows[i - 1].gap;
    table.mp_gap_decreasing = table.mp_gap_decreasing && table.rows[i].mp_gap < table.rows[i - 1].mp_gap;
  }
  const std::size_t m = table.rows.size();
  if (m >= 3) {
    Matrix A(m, 3);
    Vector b(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double p = table.rows[i].p;
      A(i, 0) = 1.0;
      A(i, 1) = p;
      A(i, 2) = p * std::log(p);
      b[i] = table.rows[i].log_Mp;
    }
    table.log_M_extrapolated = A.colPivHouseholderQr().solve(b)[0];
  } else {
    table.log_M_extrapolated = table.rows.back().log_Mp;
  }
  return table;
}

}  // namespace lsvp

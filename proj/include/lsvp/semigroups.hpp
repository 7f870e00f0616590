#pragma once

// Heat, Fokker-Planck and Ornstein-Uhlenbeck flows by direct quadrature of
// their Gaussian kernels. All three kernels factor over coordinates, so they
// share the separable transform engine. Outside its grid a function is zero.

#include <cmath>
#include <numbers>
#include <string>

#include "lsvp/error.hpp"
#include "lsvp/gridfn.hpp"
#include "lsvp/transforms.hpp"

namespace lsvp {

enum class FlowKind { Heat, FokkerPlanck, OrnsteinUhlenbeck };

inline const char* to_string(FlowKind k) {
  switch (k) {
    case FlowKind::Heat: return "Heat";
    case FlowKind::FokkerPlanck: return "FokkerPlanck";
    case FlowKind::OrnsteinUhlenbeck: return "OrnsteinUhlenbeck";
  }
  return "?";
}

struct SemigroupSpec {
  FlowKind kind = FlowKind::Heat;
  double t = 0.0;
};

namespace detail {
inline void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ParameterError("flow time must be finite and nonnegative");
}
inline double half_dim_log(std::size_t n, double v) { return 0.5 * static_cast<double>(n) * std::log(v); }
}  // namespace detail

// E_t f(y) = (2 pi t)^{-n/2} integral f(x) exp(-|y - x|^2 / (2t)) dx.
inline GridFunction heat(const GridFunction& f, double t, const GridSpec& out) {
  detail::check_time(t);
  if (t == 0.0) return f;
  GridFunction g = separable_log_transform(f, out, [t](std::size_t, double y, double x) {
    const double d = y - x;
    return -d * d / (2.0 * t);
  });
  const double c = detail::half_dim_log(f.dim(), 2.0 * std::numbers::pi * t);
  for (double& v : g.logv) v = v == kNegInf ? kNegInf : v - c;
  return g;
}

// P_t f(x) = e^{nt/2} (2 pi (e^t - 1))^{-n/2} integral f(y) exp(-|e^{t/2} x - y|^2 / (2 (e^t - 1))) dy.
inline GridFunction fokker_planck(const GridFunction& f, double t, const GridSpec& out) {
  detail::check_time(t);
  if (t == 0.0) return f;
  const double v = std::expm1(t), s = std::exp(0.5 * t);
  GridFunction g = separable_log_transform(f, out, [v, s](std::size_t, double x, double y) {
    const double d = s * x - y;
    return -d * d / (2.0 * v);
  });
  const double c = 0.5 * static_cast<double>(f.dim()) * t - detail::half_dim_log(f.dim(), 2.0 * std::numbers::pi * v);
  for (double& x : g.logv) x = x == kNegInf ? kNegInf : x + c;
  return g;
}

// U_t g(x) = integral g(e^{-t} x + sqrt(1 - e^{-2t}) z) dgamma(z), written as a
// quadrature over the source nodes u = e^{-t} x + sqrt(1 - e^{-2t}) z.
inline GridFunction ou(const GridFunction& f, double t, const GridSpec& out) {
  detail::check_time(t);
  if (t == 0.0) return f;
  const double var = -std::expm1(-2.0 * t), e = std::exp(-t);
  GridFunction g = separable_log_transform(f, out, [var, e](std::size_t, double x, double u) {
    const double d = u - e * x;
    return -d * d / (2.0 * var);
  });
  const double c = detail::half_dim_log(f.dim(), 2.0 * std::numbers::pi * var);
  for (double& x : g.logv) x = x == kNegInf ? kNegInf : x - c;
  return g;
}

inline GridFunction evolve(const GridFunction& f, const SemigroupSpec& sg, const GridSpec& out) {
  switch (sg.kind) {
    case FlowKind::Heat: return heat(f, sg.t, out);
    case FlowKind::FokkerPlanck: return fokker_planck(f, sg.t, out);
    case FlowKind::OrnsteinUhlenbeck: return ou(f, sg.t, out);
  }
  throw ParameterError("unknown flow");
}

// Output grid that holds the evolved function: heat widens each axis by
// 6 sqrt(t); Fokker-Planck maps [lo, hi] to e^{-t/2}[lo - 6 sqrt(e^t - 1),
// hi + 6 sqrt(e^t - 1)]; Ornstein-Uhlenbeck keeps the grid. The source step
// is kept unless that exceeds max_nodes per axis (0 = no cap).
inline GridSpec evolved_grid(const GridFunction& f, const SemigroupSpec& sg, std::size_t max_nodes = 0) {
  detail::check_time(sg.t);
  if (sg.t == 0.0 || sg.kind == FlowKind::OrnsteinUhlenbeck) {
    std::vector<Axis> axes;
    for (std::size_t a = 0; a < f.dim(); ++a)
      axes.push_back(Axis{f.coord(a, 0), f.coord(a, f.spec.axis(a).n - 1), f.spec.axis(a).n});
    return GridSpec(axes);
  }
  std::vector<Axis> axes;
  for (std::size_t a = 0; a < f.dim(); ++a) {
    const Axis& ax = f.spec.axis(a);
    double lo = f.coord(a, 0), hi = f.coord(a, ax.n - 1);
    if (sg.kind == FlowKind::Heat) {
      const double w = 6.0 * std::sqrt(sg.t);
      lo -= w;
      hi += w;
    } else {
      const double w = 6.0 * std::sqrt(std::expm1(sg.t)), s = std::exp(-0.5 * sg.t);
      lo = s * (lo - w);
      hi = s * (hi + w);
    }
    auto n = static_cast<std::size_t>(std::ceil((hi - lo) / ax.step())) + 1;
    if (max_nodes > 0) n = std::min(n, max_nodes);
    axes.push_back(Axis{lo, hi, std::max<std::size_t>(n, 2)});
  }
  return GridSpec(axes);
}

// Evolves f onto its evolved_grid.
inline GridFunction flow(const GridFunction& f, const SemigroupSpec& sg, std::size_t max_nodes = 0) {
  return evolve(f, sg, evolved_grid(f, sg, max_nodes));
}

// sup over interior nodes x of |log E_t f(x) - log[(1+t)^{-n/2} P_{log(1+t)} f((1+t)^{-1/2} x)]|.
// The Fokker-Planck side is computed on the heat grid scaled by (1+t)^{-1/2},
// and read back by interpolation. Nodes where either side is below the
// maximum by more than 46 (about 20 decades) are skipped.
inline double convert_heat_fp_check(const GridFunction& f, double t) {
  detail::check_time(t);
  if (t == 0.0) return 0.0;
  const GridSpec eg = evolved_grid(f, {FlowKind::Heat, t});
  const GridFunction e = heat(f, t, eg);
  const double r = 1.0 / std::sqrt(1.0 + t);
  std::vector<Axis> paxes;
  for (const Axis& ax : eg.axes()) paxes.push_back(Axis{r * ax.lo, r * ax.hi, ax.n});
  const GridFunction pf = fokker_planck(f, std::log1p(t), GridSpec(paxes));
  const double scale = 0.5 * static_cast<double>(f.dim()) * std::log1p(t);
  const double top = e.max_logv();
  double worst = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    bool interior = true;
    for (std::size_t a = 0; a < e.dim(); ++a) {
      const std::size_t i = eg.index(k, a);
      interior = interior && i > 0 && i + 1 < eg.axis(a).n;
    }
    if (!interior || e.logv[k] < top - 46.0) continue;
    const double rhs = interpolate_log(pf, r * e.point(k));
    if (rhs == kNegInf) continue;
    worst = std::max(worst, std::abs(e.logv[k] - (rhs - scale)));
  }
  return worst;
}

}  // namespace lsvp

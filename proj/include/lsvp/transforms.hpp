#pragma once

// Laplace transform, p-Laplace transform and essential polar of grid
// functions, plus the selection of the grid that carries the transform
// variable.
//
// All kernels used here are products of one-dimensional kernels, so every
// transform is applied one axis at a time: an n-dimensional transform on an
// N^n grid costs n * N^(n+1) kernel evaluations instead of N^(2n).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "lsvp/error.hpp"
#include "lsvp/gridfn.hpp"
#include "lsvp/logsum.hpp"
#include "lsvp/parallel.hpp"

namespace lsvp {

// Sides of each axis beyond which f is taken to continue with its edge
// values instead of vanishing. Used for functions that are not integrable on
// the grid (large boundary mass), where truncation would invent a support.
struct TailSides {
  bool lo = false;
  bool hi = false;
  bool operator==(const TailSides&) const = default;
};
using TailModel = std::vector<TailSides>;

// A side is open when the edge layer on that side alone carries more than
// the tail threshold of the total mass.
inline TailModel open_tails(const GridFunction& f) {
  const std::size_t d = f.dim();
  TailModel out(d);
  if (!f.nonzero()) return out;
  std::vector<double> all(f.size());
  std::vector<std::vector<double>> lo(d), hi(d);
  detail::for_each_weighted_node(f.spec, [&](std::size_t k, double w, bool) {
    const double t = f.logv[k] == kNegInf ? kNegInf : f.logv[k] + w;
    all[k] = t;
    for (std::size_t a = 0; a < d; ++a) {
      const std::size_t i = f.spec.index(k, a);
      if (i == 0) lo[a].push_back(t);
      if (i + 1 == f.spec.axis(a).n) hi[a].push_back(t);
    }
  });
  std::vector<double> scratch;
  const double total = logsumexp(all, scratch);
  for (std::size_t a = 0; a < d; ++a) {
    out[a].lo = logsumexp(lo[a], scratch) - total > kTailLogThreshold;
    out[a].hi = logsumexp(hi[a], scratch) - total > kTailLogThreshold;
  }
  return out;
}

inline bool any_open(const TailModel& t) {
  return std::any_of(t.begin(), t.end(), [](const TailSides& s) { return s.lo || s.hi; });
}

namespace detail {

// Axis-by-axis log-domain quadrature. Values may become +inf when an open
// tail integral diverges; the caller decides how to map them.
// `tail(a, y, x_edge, upper)` is the log of the kernel integrated from the
// edge to infinity on that side.
template <class Kernel, class Tail>
std::vector<double> separable_transform_raw(const GridFunction& src, const GridSpec& out, Kernel&& kernel,
                                            Tail&& tail, const TailModel& tails) {
  const std::size_t d = src.dim();
  if (out.dim() != d) throw ParameterError("transform: output grid dimension mismatch");
  if (!tails.empty() && tails.size() != d) throw ParameterError("transform: tail model dimension mismatch");
  std::vector<double> cur = src.logv;
  std::vector<std::size_t> shape(d);
  for (std::size_t a = 0; a < d; ++a) shape[a] = src.spec.axis(a).n;

  for (std::size_t a = 0; a < d; ++a) {
    const std::vector<double> xs = src.axis_coords(a);
    const std::vector<double> lw = log_trapezoid_weights(src.spec.axis(a));
    const TailSides open = tails.empty() ? TailSides{} : tails[a];
    const Axis& oax = out.axis(a);
    const std::size_t N = shape[a];
    const std::size_t M = oax.n;
    std::size_t outer = 1, inner = 1;
    for (std::size_t b = 0; b < a; ++b) outer *= shape[b];
    for (std::size_t b = a + 1; b < d; ++b) inner *= shape[b];
    std::vector<double> next(outer * M * inner);

    parallel_for(M, [&](std::size_t mb, std::size_t me) {
      std::vector<double> krow(N), terms(N), scratch(N);
      for (std::size_t m = mb; m < me; ++m) {
        const double y = oax.node(m);
        for (std::size_t i = 0; i < N; ++i) krow[i] = kernel(a, y, xs[i]) + lw[i];
        const double tail_lo = open.lo ? tail(a, y, xs.front(), false) : kNegInf;
        const double tail_hi = open.hi ? tail(a, y, xs.back(), true) : kNegInf;
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t in = 0; in < inner; ++in) {
            const double* line = cur.data() + o * N * inner + in;
            for (std::size_t i = 0; i < N; ++i) {
              const double v = line[i * inner];
              terms[i] = v == kNegInf ? kNegInf : v + krow[i];
            }
            double r = logsumexp(terms, scratch);
            if (open.lo && line[0] != kNegInf) r = logaddexp(r, line[0] + tail_lo);
            if (open.hi && line[(N - 1) * inner] != kNegInf) r = logaddexp(r, line[(N - 1) * inner] + tail_hi);
            next[(o * M + m) * inner + in] = r;
          }
        }
      }
    });
    cur = std::move(next);
    shape[a] = M;
  }
  return cur;
}

// log of the integral of exp(y s) for s beyond the edge.
inline double laplace_tail(std::size_t, double y, double edge, bool upper) {
  if (upper) return y < 0.0 ? y * edge - std::log(-y) : kPosInf;
  return y > 0.0 ? y * edge - std::log(y) : kPosInf;
}

}  // namespace detail

// out(y) = log sum_x exp(logv(x) + sum_a kernel(a, y_a, x_a) + log w(x)).
// `kernel(a, y, x)` is the log kernel along axis a; x includes the source
// shift, y is a node of `out` (which carries no shift).
template <class Kernel>
GridFunction separable_log_transform(const GridFunction& src, const GridSpec& out, Kernel&& kernel) {
  auto none = [](std::size_t, double, double, bool) { return kNegInf; };
  return GridFunction(out, detail::separable_transform_raw(src, out, kernel, none, TailModel{}));
}

// log Lf on the dual grid; Lf(y) = integral of f(x) exp(x . y).
inline GridFunction laplace(const GridFunction& f, const GridSpec& dual) {
  if (!f.nonzero()) throw TransformOfZeroError("Laplace transform of the zero function");
  return separable_log_transform(f, dual, [](std::size_t, double y, double x) { return x * y; });
}

// The p-Laplace transform of f = 0 is identically +infinity; that case is a
// value of its own rather than a number on the grid.
struct IdenticallyInfinite {};
using PLaplaceResult = std::variant<IdenticallyInfinite, GridFunction>;

// log of (L(f^{1/p}))^q on the dual grid. With open tails, nodes where the
// Laplace integral diverges get 𝓛ₚ = 0.
inline PLaplaceResult p_laplace(const GridFunction& f, const ExponentPair& pq, const GridSpec& dual,
                                const TailModel& tails = {}) {
  if (pq.polar_limit()) throw ParameterError("p_laplace needs p > 0; use essential_polar for p = 0");
  if (!f.nonzero()) return IdenticallyInfinite{};
  std::vector<double> v = detail::separable_transform_raw(
      power(f, 1.0 / pq.p), dual, [](std::size_t, double y, double x) { return x * y; }, detail::laplace_tail,
      tails);
  for (double& x : v) x = x == kPosInf ? kNegInf : pq.q * x;
  return GridFunction(dual, std::move(v));
}

// Convenience for callers that already ruled out f = 0.
inline GridFunction p_laplace_nonzero(const GridFunction& f, const ExponentPair& pq, const GridSpec& dual,
                                      const TailModel& tails = {}) {
  auto r = p_laplace(f, pq, dual, tails);
  if (std::holds_alternative<IdenticallyInfinite>(r))
    throw TransformOfZeroError("p-Laplace transform of the zero function is identically infinite");
  return std::get<GridFunction>(std::move(r));
}

// ---------------------------------------------------------------------------
// Discrete Legendre transform

// out[j] = max_i (xs[i] * ys[j] + ls[i]) by direct search.
inline std::vector<double> legendre_brute(std::span<const double> xs, std::span<const double> ls,
                                          std::span<const double> ys) {
  std::vector<double> out(ys.size(), kNegInf);
  for (std::size_t j = 0; j < ys.size(); ++j) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (ls[i] == kNegInf) continue;
      out[j] = std::max(out[j], xs[i] * ys[j] + ls[i]);
    }
  }
  return out;
}

// Index of the maximizer for each y, via the upper concave hull of (xs, ls):
// the maximizer moves right as y increases. xs and ys must be ascending.
// Returns SIZE_MAX for every y when ls is identically -inf.
inline std::vector<std::size_t> legendre_argmax(std::span<const double> xs, std::span<const double> ls,
                                                std::span<const double> ys) {
  std::vector<std::size_t> hull;
  hull.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (ls[i] == kNegInf) continue;
    while (hull.size() >= 2) {
      const std::size_t o = hull[hull.size() - 2], a = hull.back();
      const double cross = (xs[a] - xs[o]) * (ls[i] - ls[o]) - (ls[a] - ls[o]) * (xs[i] - xs[o]);
      if (cross >= 0.0) hull.pop_back();
      else break;
    }
    hull.push_back(i);
  }
  std::vector<std::size_t> arg(ys.size(), SIZE_MAX);
  if (hull.empty()) return arg;
  if (hull.size() < 8) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      double best = kNegInf;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (ls[i] == kNegInf) continue;
        const double v = xs[i] * ys[j] + ls[i];
        if (v > best) best = v, arg[j] = i;
      }
    }
    return arg;
  }
  std::size_t k = 0;
  for (std::size_t j = 0; j < ys.size(); ++j) {
    const double y = ys[j];
    while (k + 1 < hull.size() && xs[hull[k + 1]] * y + ls[hull[k + 1]] >= xs[hull[k]] * y + ls[hull[k]]) ++k;
    arg[j] = hull[k];
  }
  return arg;
}

// Same result as legendre_brute in linear time.
inline std::vector<double> legendre_1d(std::span<const double> xs, std::span<const double> ls,
                                       std::span<const double> ys) {
  const std::vector<std::size_t> arg = legendre_argmax(xs, ls, ys);
  std::vector<double> out(ys.size(), kNegInf);
  for (std::size_t j = 0; j < ys.size(); ++j)
    if (arg[j] != SIZE_MAX) out[j] = xs[arg[j]] * ys[j] + ls[arg[j]];
  return out;
}

// Discrete Legendre transform on uniform xs with a parabolic correction at
// the maximizer where ls is locally smooth and concave: the three second
// differences around it are negative and within a factor 2 of each other.
// This removes the O(h^2) grid error for smooth ls and leaves kinks and
// edges untouched.
inline std::vector<double> legendre_1d_refined(std::span<const double> xs, std::span<const double> ls,
                                               std::span<const double> ys) {
  const std::vector<std::size_t> arg = legendre_argmax(xs, ls, ys);
  const std::size_t N = xs.size();
  std::vector<double> out(ys.size(), kNegInf);
  auto d2 = [&](std::size_t i) { return ls[i + 1] - 2.0 * ls[i] + ls[i - 1]; };
  for (std::size_t j = 0; j < ys.size(); ++j) {
    const std::size_t i = arg[j];
    if (i == SIZE_MAX) continue;
    const double y = ys[j];
    out[j] = xs[i] * y + ls[i];
    if (i < 2 || i + 2 >= N) continue;
    bool finite = true;
    for (std::size_t k = i - 2; k <= i + 2; ++k) finite = finite && std::isfinite(ls[k]);
    if (!finite) continue;
    const double a = d2(i - 1), b = d2(i), c = d2(i + 1);
    if (!(a < 0.0 && b < 0.0 && c < 0.0)) continue;
    if (std::min({a, b, c}) < 2.0 * std::max({a, b, c})) continue;
    const double pm = xs[i - 1] * y + ls[i - 1], pp = xs[i + 1] * y + ls[i + 1];
    out[j] += (pp - pm) * (pp - pm) / (8.0 * -b);
  }
  return out;
}

// log f^box(x) = -sup_y [x . y + log f(y)], the essential polar (equal to
// exp(-psi*) for psi = -log f) evaluated on the dual grid. An open tail makes
// the supremum infinite for every x pointing into it.
// With refine = true each one-dimensional pass uses legendre_1d_refined.
inline GridFunction essential_polar(const GridFunction& f, const GridSpec& dual, const TailModel& tails = {},
                                    bool refine = false) {
  if (!f.nonzero()) throw TransformOfZeroError("polar of the zero function");
  const std::size_t d = f.dim();
  if (dual.dim() != d) throw ParameterError("essential_polar: dual grid dimension mismatch");
  std::vector<double> cur = f.logv;
  std::vector<std::size_t> shape(d);
  for (std::size_t a = 0; a < d; ++a) shape[a] = f.spec.axis(a).n;

  for (std::size_t a = 0; a < d; ++a) {
    const std::vector<double> xs = f.axis_coords(a);
    std::vector<double> ys(dual.axis(a).n);
    for (std::size_t m = 0; m < ys.size(); ++m) ys[m] = dual.axis(a).node(m);
    const std::size_t N = shape[a], M = ys.size();
    std::size_t outer = 1, inner = 1;
    for (std::size_t b = 0; b < a; ++b) outer *= shape[b];
    for (std::size_t b = a + 1; b < d; ++b) inner *= shape[b];
    std::vector<double> next(outer * M * inner);
    const TailSides open = tails.empty() ? TailSides{} : tails.at(a);
    const std::size_t lines = outer * inner;
    parallel_for(lines, [&](std::size_t lb, std::size_t le) {
      std::vector<double> ls(N);
      for (std::size_t l = lb; l < le; ++l) {
        const std::size_t o = l / inner, in = l % inner;
        bool infinite = false;
        for (std::size_t i = 0; i < N; ++i) {
          ls[i] = cur[(o * N + i) * inner + in];
          infinite = infinite || ls[i] == kPosInf;
        }
        std::vector<double> s = infinite  ? std::vector<double>(M, kPosInf)
                                      : refine ? legendre_1d_refined(xs, ls, ys)
                                               : legendre_1d(xs, ls, ys);
        for (std::size_t m = 0; m < M; ++m) {
          if (open.lo && ls.front() != kNegInf && ys[m] < 0.0) s[m] = kPosInf;
          if (open.hi && ls.back() != kNegInf && ys[m] > 0.0) s[m] = kPosInf;
          next[(o * M + m) * inner + in] = s[m];
        }
      }
    }, 1);
    cur = std::move(next);
    shape[a] = M;
  }
  for (double& v : cur) v = -v;
  return GridFunction(dual, std::move(cur));
}

// ---------------------------------------------------------------------------
// Dual grid selection

enum class DualProvenance { UserGiven, SupportHeuristic };

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct DualGridChoice {
  GridSpec spec;
  DualProvenance provenance = DualProvenance::UserGiven;
  // Per axis, (-q) times the hull of the finite nodes of f (factor 1 at p = 0).
  std::vector<Interval> containment_report;
};

struct DualHeuristicOptions {
  double pad_factor = 0.25;
  std::size_t min_nodes = 129;
};

// Per-axis index range of the nodes where f is nonzero.
inline std::vector<std::pair<std::size_t, std::size_t>> support_index_box(const GridFunction& f) {
  const std::size_t d = f.dim();
  std::vector<std::pair<std::size_t, std::size_t>> box(d, {SIZE_MAX, 0});
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f.logv[k] == kNegInf) continue;
    for (std::size_t a = 0; a < d; ++a) {
      const std::size_t i = f.spec.index(k, a);
      box[a].first = std::min(box[a].first, i);
      box[a].second = std::max(box[a].second, i);
    }
  }
  return box;
}

// Support of a grid function: the union of the cells [x - h/2, x + h/2]
// around its nonzero nodes, clipped to the grid. Indicators sampled with the
// jump halfway between two nodes get their exact support this way.
inline std::vector<Interval> support_hull(const GridFunction& f) {
  const auto box = support_index_box(f);
  std::vector<Interval> out;
  for (std::size_t a = 0; a < f.dim(); ++a) {
    const Axis& ax = f.spec.axis(a);
    const double h = ax.step();
    const double lo = box[a].first == 0 ? f.coord(a, 0) : f.coord(a, box[a].first) - 0.5 * h;
    const double hi = box[a].second + 1 == ax.n ? f.coord(a, ax.n - 1) : f.coord(a, box[a].second) + 0.5 * h;
    out.push_back({lo, hi});
  }
  return out;
}

// Scales the support hull of f by (-q) and pads it. A side where the support
// reaches the edge of f's grid is treated as unbounded and takes the
// max_window bound. Keeps the max_window spacing, at least min_nodes.
inline DualGridChoice dual_grid_heuristic(const GridFunction& f, const ExponentPair& pq,
                                          const GridSpec& max_window,
                                          const DualHeuristicOptions& opts = {}) {
  if (!f.nonzero()) throw TransformOfZeroError("dual grid for the zero function");
  if (max_window.dim() != f.dim()) throw ParameterError("dual_grid_heuristic: dimension mismatch");
  const double scale = pq.polar_limit() ? 1.0 : -pq.q;
  const auto box = support_index_box(f);
  const auto hull = support_hull(f);
  DualGridChoice out;
  out.provenance = DualProvenance::SupportHeuristic;
  std::vector<Axis> axes;
  for (std::size_t a = 0; a < f.dim(); ++a) {
    const Axis& mw = max_window.axis(a);
    const double slo = hull[a].lo, shi = hull[a].hi;
    out.containment_report.push_back({scale * slo, scale * shi});
    const double pad = opts.pad_factor * scale * (shi - slo);
    const bool open_lo = box[a].first == 0;
    const bool open_hi = box[a].second + 1 == f.spec.axis(a).n;
    const double lo = std::max(open_lo ? mw.lo : scale * slo - pad, mw.lo);
    const double hi = std::min(open_hi ? mw.hi : scale * shi + pad, mw.hi);
    if (!(hi > lo)) throw DegenerateDualGridError("dual window does not meet the allowed window");
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / mw.step())) + 1;
    axes.push_back(Axis{lo, hi, std::max(n, opts.min_nodes)});
  }
  out.spec = GridSpec(axes);
  return out;
}

// Node budget for transform grids.
struct Resolution {
  std::size_t probe_nodes = 513;   // per axis, first pass over the max window
  std::size_t target_nodes = 1024; // across the effective window
  std::size_t min_nodes = 129;
  std::size_t max_nodes = 4097;
  double cutoff = 46.0;            // log-range kept below the maximum

  static Resolution for_dim(std::size_t dim) {
    if (dim == 1) return {};
    return Resolution{65, 257, 129, 257, 46.0};
  }
};

// Per-axis hull of {x : g(x) + tilt . x >= max - cutoff} over the given tilts
// (an empty list means no tilt).
inline std::vector<Interval> level_set_box(const GridFunction& g, double cutoff,
                                           const std::vector<Vector>& tilts = {}) {
  const std::size_t d = g.dim();
  std::vector<Vector> ts = tilts;
  if (ts.empty()) ts.push_back(Vector::Zero(d));
  std::vector<Interval> box(d, {kPosInf, kNegInf});
  std::vector<double> tilted(g.size());
  for (const Vector& t : ts) {
    double m = kNegInf;
    for (std::size_t k = 0; k < g.size(); ++k) {
      tilted[k] = g.logv[k] == kNegInf ? kNegInf : g.logv[k] + t.dot(g.point(k));
      m = std::max(m, tilted[k]);
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (tilted[k] < m - cutoff) continue;
      for (std::size_t a = 0; a < d; ++a) {
        const std::size_t i = g.spec.index(k, a);
        const Axis& ax = g.spec.axis(a);
        box[a].lo = std::min(box[a].lo, ax.node(i == 0 ? 0 : i - 1));
        box[a].hi = std::max(box[a].hi, ax.node(std::min(i + 1, ax.n - 1)));
      }
    }
  }
  return box;
}

// Finds where a transform carries its mass: evaluates it on a coarse probe
// over max_window, zooms in while the retained region spans few probe nodes,
// and returns the padded region.
template <class Transform>
std::vector<Interval> effective_window(Transform&& transform, const GridSpec& max_window,
                                       const Resolution& res, const std::vector<Vector>& tilts = {}) {
  const std::size_t d = max_window.dim();
  std::vector<Axis> probe_axes;
  for (std::size_t a = 0; a < d; ++a)
    probe_axes.push_back(Axis{max_window.axis(a).lo, max_window.axis(a).hi, res.probe_nodes});
  std::vector<Interval> box;
  for (int iter = 0; iter < 8; ++iter) {
    const GridSpec probe(probe_axes);
    const GridFunction g = transform(probe);
    box = level_set_box(g, res.cutoff, tilts);
    bool zoom = false;
    for (std::size_t a = 0; a < d; ++a) {
      const Axis& pa = probe_axes[a];
      const double h = pa.step();
      if ((box[a].hi - box[a].lo) / h < 32.0) {
        zoom = true;
        const double lo = std::max(box[a].lo - 2.0 * h, max_window.axis(a).lo);
        const double hi = std::min(box[a].hi + 2.0 * h, max_window.axis(a).hi);
        probe_axes[a] = Axis{lo, hi, res.probe_nodes};
      }
    }
    if (!zoom) break;
  }
  return box;
}

// Transform grid used by the higher-level routines: the support heuristic
// box joined with the effective window of the transform itself, clipped to
// max_window, with enough nodes to resolve the effective window.
template <class Transform>
DualGridChoice choose_dual_grid(const GridFunction& f, const ExponentPair& pq, const GridSpec& max_window,
                                Transform&& transform, const Resolution& res,
                                const std::vector<Vector>& tilts = {}) {
  DualHeuristicOptions hopts;
  hopts.min_nodes = res.min_nodes;
  DualGridChoice choice = dual_grid_heuristic(f, pq, max_window, hopts);
  const auto eff = effective_window(transform, max_window, res, tilts);
  std::vector<Axis> axes;
  for (std::size_t a = 0; a < f.dim(); ++a) {
    const Axis& mw = max_window.axis(a);
    const double lo = std::max(std::min(choice.spec.axis(a).lo, eff[a].lo), mw.lo);
    const double hi = std::min(std::max(choice.spec.axis(a).hi, eff[a].hi), mw.hi);
    const double h = (eff[a].hi - eff[a].lo) / static_cast<double>(res.target_nodes);
    auto n = static_cast<std::size_t>(std::ceil((hi - lo) / h)) + 1;
    n = std::clamp(n, res.min_nodes, res.max_nodes);
    axes.push_back(Axis{lo, hi, n});
  }
  choice.spec = GridSpec(axes);
  return choice;
}

// Symmetric window wide enough for the transform of f: the transform
// variable scale is inversely proportional to the spread of f.
inline GridSpec default_dual_window(const GridFunction& f, const ExponentPair& pq, const Resolution& res) {
  const double scale = -pq.tilt();
  const Vector mean = barycenter(f);
  std::vector<Axis> axes;
  for (std::size_t a = 0; a < f.dim(); ++a) {
    const GridFunction centered = translate(f, -mean);
    // second moment along a
    std::vector<double> terms;
    GridFunction sq = centered;
    for (std::size_t k = 0; k < sq.size(); ++k) {
      if (sq.logv[k] == kNegInf) continue;
      const double x = centered.coord(a, centered.spec.index(k, a));
      sq.logv[k] += x == 0.0 ? kNegInf : 2.0 * std::log(std::abs(x));
    }
    const double var = std::exp(integrate_log(sq).value - integrate_log(centered).value);
    const double spread = std::max(std::sqrt(var), f.spec.axis(a).step());
    const double w = 50.0 / (scale * spread);
    axes.push_back(Axis{-w, w, res.probe_nodes});
  }
  return GridSpec(axes);
}

}  // namespace lsvp

#pragma once

// Nonnegative functions sampled on rectangular grids, stored as log-values.
//
// A GridFunction is the product grid described by its GridSpec, with node
// coordinates offset by `shift` (so translations never resample), and one
// log-value per node in row-major order (last axis fastest). A log-value of
// -inf encodes f = 0 at that node. Integrals use the trapezoidal product rule
// evaluated in the log domain.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lsvp/error.hpp"
#include "lsvp/logsum.hpp"

namespace lsvp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// One axis of a grid: `n` equispaced nodes covering [lo, hi].
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 2;

  double step() const { return (hi - lo) / static_cast<double>(n - 1); }
  // Endpoints are reproduced exactly.
  double node(std::size_t i) const {
    if (i + 1 == n) return hi;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  bool operator==(const Axis&) const = default;
};

class GridSpec {
 public:
  GridSpec() = default;
  explicit GridSpec(std::vector<Axis> axes) : axes_(std::move(axes)) { validate(); }

  // Same axis repeated `dim` times.
  static GridSpec cube(std::size_t dim, double lo, double hi, std::size_t n) {
    return GridSpec(std::vector<Axis>(dim, Axis{lo, hi, n}));
  }

  std::size_t dim() const { return axes_.size(); }
  const Axis& axis(std::size_t a) const { return axes_[a]; }
  const std::vector<Axis>& axes() const { return axes_; }

  std::size_t size() const {
    std::size_t s = 1;
    for (const auto& ax : axes_) s *= ax.n;
    return s;
  }

  // Row-major stride of axis a.
  std::size_t stride(std::size_t a) const {
    std::size_t s = 1;
    for (std::size_t b = a + 1; b < axes_.size(); ++b) s *= axes_[b].n;
    return s;
  }

  // Index of axis a within the flat node index.
  std::size_t index(std::size_t flat, std::size_t a) const {
    return (flat / stride(a)) % axes_[a].n;
  }

  bool operator==(const GridSpec&) const = default;

 private:
  void validate() const {
    if (axes_.empty()) throw ParameterError("grid needs at least one axis");
    for (const auto& ax : axes_) {
      if (!(std::isfinite(ax.lo) && std::isfinite(ax.hi)))
        throw ParameterError("grid bounds must be finite");
      if (!(ax.hi > ax.lo)) throw ParameterError("grid upper bound must exceed lower bound");
      if (ax.n < 2) throw ParameterError("grid axis needs at least 2 nodes");
      if (!(ax.step() > 0.0)) throw ParameterError("grid spacing must be positive");
    }
  }

  std::vector<Axis> axes_;
};

// Log trapezoid weights along one axis.
inline std::vector<double> log_trapezoid_weights(const Axis& ax) {
  std::vector<double> w(ax.n, std::log(ax.step()));
  w.front() = w.back() = std::log(0.5 * ax.step());
  return w;
}

struct GridFunction {
  GridSpec spec;
  std::vector<double> logv;
  std::vector<double> shift;

  GridFunction() = default;
  GridFunction(GridSpec s, std::vector<double> values, std::vector<double> sh = {})
      : spec(std::move(s)), logv(std::move(values)), shift(std::move(sh)) {
    if (shift.empty()) shift.assign(spec.dim(), 0.0);
    if (logv.size() != spec.size()) throw ParameterError("log-value count does not match grid");
    if (shift.size() != spec.dim()) throw ParameterError("shift dimension does not match grid");
    for (double v : logv) {
      if (std::isnan(v) || v == kPosInf)
        throw ParameterError("log-values must be finite or -inf");
    }
  }

  std::size_t dim() const { return spec.dim(); }
  std::size_t size() const { return logv.size(); }

  double coord(std::size_t a, std::size_t i) const { return spec.axis(a).node(i) + shift[a]; }

  std::vector<double> axis_coords(std::size_t a) const {
    std::vector<double> c(spec.axis(a).n);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = coord(a, i);
    return c;
  }

  Vector point(std::size_t flat) const {
    Vector x(dim());
    for (std::size_t a = 0; a < dim(); ++a) x[a] = coord(a, spec.index(flat, a));
    return x;
  }

  // True iff f is not identically zero on the grid.
  bool nonzero() const {
    return std::any_of(logv.begin(), logv.end(), [](double v) { return v != kNegInf; });
  }

  double max_logv() const {
    double m = kNegInf;
    for (double v : logv) m = std::max(m, v);
    return m;
  }

  bool operator==(const GridFunction&) const = default;
};

// Conjugate exponents p in [0,1), q = p/(p-1). p = 0 is the polar limit,
// stored with q = 0.
struct ExponentPair {
  double p = 0.5;
  double q = -1.0;

  static ExponentPair from_p(double p) {
    if (!(p >= 0.0 && p < 1.0)) throw ParameterError("p must lie in [0,1)");
    if (p == 0.0) return {0.0, 0.0};
    return {p, p / (p - 1.0)};
  }
  bool polar_limit() const { return p == 0.0; }
  // Reweighting exponent of the double Laplace objective: q, or -1 at p = 0.
  double tilt() const { return polar_limit() ? -1.0 : q; }
};

enum class Measure { Lebesgue, Gaussian };

// log of an integral together with its truncation diagnostic.
struct LogIntegral {
  double value = kNegInf;
  // log(boundary-layer mass / total mass); -inf when there is no boundary mass.
  double boundary_log_ratio = kNegInf;
  bool tail_suspect = false;
};

inline constexpr double kTailLogThreshold = -18.420680743952367;  // log(1e-8)

// ---------------------------------------------------------------------------
// Construction

// Samples log f at every node from a callable taking the node coordinates.
template <class LogFn>
GridFunction sample_log(const GridSpec& spec, LogFn&& logf) {
  std::vector<double> v(spec.size());
  Vector x(spec.dim());
  for (std::size_t k = 0; k < v.size(); ++k) {
    for (std::size_t a = 0; a < spec.dim(); ++a) x[a] = spec.axis(a).node(spec.index(k, a));
    v[k] = logf(x);
  }
  return GridFunction(spec, std::move(v));
}

// amplitude * exp(-|x - center|^2 / (2 sigma)).
inline GridFunction gaussian(const GridSpec& spec, double sigma, const Vector& center,
                             double amplitude = 1.0) {
  if (!(sigma > 0.0)) throw ParameterError("gaussian: sigma must be positive");
  if (!(amplitude > 0.0)) throw ParameterError("gaussian: amplitude must be positive");
  if (static_cast<std::size_t>(center.size()) != spec.dim())
    throw ParameterError("gaussian: center dimension mismatch");
  if (!center.allFinite()) throw ParameterError("gaussian: center must be finite");
  const double la = std::log(amplitude);
  return sample_log(spec, [&](const Vector& x) {
    return la - (x - center).squaredNorm() / (2.0 * sigma);
  });
}

inline GridFunction gaussian(const GridSpec& spec, double sigma) {
  return gaussian(spec, sigma, Vector::Zero(spec.dim()));
}

// ---------------------------------------------------------------------------
// Quadrature

namespace detail {

// Calls fn(flat, log_weight, on_boundary) for every node.
template <class Fn>
void for_each_weighted_node(const GridSpec& spec, Fn&& fn) {
  const std::size_t d = spec.dim();
  std::vector<std::vector<double>> lw(d);
  for (std::size_t a = 0; a < d; ++a) lw[a] = log_trapezoid_weights(spec.axis(a));
  const std::size_t total = spec.size();
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t k = 0; k < total; ++k) {
    double w = 0.0;
    bool boundary = false;
    for (std::size_t a = 0; a < d; ++a) {
      w += lw[a][idx[a]];
      boundary = boundary || idx[a] == 0 || idx[a] + 1 == spec.axis(a).n;
    }
    fn(k, w, boundary);
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < spec.axis(a).n) break;
      idx[a] = 0;
    }
  }
}

inline LogIntegral finish_integral(std::vector<double>& all, std::vector<double>& edge) {
  LogIntegral r;
  std::vector<double> scratch;
  r.value = logsumexp(all, scratch);
  if (r.value == kNegInf || r.value == kPosInf) return r;
  const double b = logsumexp(edge, scratch);
  r.boundary_log_ratio = b == kNegInf ? kNegInf : b - r.value;
  r.tail_suspect = r.boundary_log_ratio > kTailLogThreshold;
  return r;
}

}  // namespace detail

// log of the trapezoidal integral of exp(logv + extra(x)) where extra is an
// optional log-density evaluated at node coordinates.
template <class Extra>
LogIntegral integrate_log_with(const GridFunction& f, Extra&& extra) {
  std::vector<double> all(f.size()), edge;
  detail::for_each_weighted_node(f.spec, [&](std::size_t k, double w, bool boundary) {
    const double t = f.logv[k] == kNegInf ? kNegInf : f.logv[k] + w + extra(k);
    all[k] = t;
    if (boundary) edge.push_back(t);
  });
  return detail::finish_integral(all, edge);
}

inline LogIntegral integrate_log(const GridFunction& f) {
  return integrate_log_with(f, [](std::size_t) { return 0.0; });
}

// Mass-normalized first moment, summed with positive and negative
// coordinates kept apart.
inline Vector barycenter(const GridFunction& f) {
  if (!f.nonzero()) throw UndefinedBarycenterError("barycenter of the zero function");
  const std::size_t d = f.dim();
  std::vector<double> all(f.size());
  std::vector<std::vector<double>> pos(d), neg(d);
  std::vector<std::vector<double>> coords(d);
  for (std::size_t a = 0; a < d; ++a) coords[a] = f.axis_coords(a);
  detail::for_each_weighted_node(f.spec, [&](std::size_t k, double w, bool) {
    const double t = f.logv[k] == kNegInf ? kNegInf : f.logv[k] + w;
    all[k] = t;
    for (std::size_t a = 0; a < d; ++a) {
      const double x = coords[a][f.spec.index(k, a)];
      if (x > 0.0) pos[a].push_back(t + std::log(x));
      else if (x < 0.0) neg[a].push_back(t + std::log(-x));
    }
  });
  std::vector<double> scratch;
  const double total = logsumexp(all, scratch);
  Vector b(d);
  for (std::size_t a = 0; a < d; ++a) {
    const double lp = logsumexp(pos[a], scratch);
    const double ln = logsumexp(neg[a], scratch);
    b[a] = (lp == kNegInf ? 0.0 : std::exp(lp - total)) - (ln == kNegInf ? 0.0 : std::exp(ln - total));
  }
  return b;
}

// Result of lp_norm_log.
struct NormResult {
  double log_norm = 0.0;
  // Set when r < 0 and the integral of f^r is infinite (zero of f) or the
  // truncation diagnostic says the integrand does not decay.
  bool divergent = false;
  LogIntegral integral;
};

// (1/r) log of the integral of f^r against Lebesgue or standard Gaussian measure.
inline NormResult lp_norm_log(const GridFunction& f, double r, Measure measure = Measure::Lebesgue) {
  if (r == 0.0 || !std::isfinite(r)) throw ParameterError("lp_norm_log: exponent must be finite and nonzero");
  NormResult out;
  const std::size_t d = f.dim();
  if (r < 0.0) {
    for (double v : f.logv) {
      if (v == kNegInf) {
        out.divergent = true;
        out.log_norm = kNegInf;
        out.integral.value = kPosInf;
        return out;
      }
    }
  }
  GridFunction powered = f;
  for (double& v : powered.logv) v = v == kNegInf ? kNegInf : r * v;
  const double log_gauss_norm = -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  if (measure == Measure::Gaussian) {
    out.integral = integrate_log_with(powered, [&](std::size_t k) {
      return log_gauss_norm - 0.5 * f.point(k).squaredNorm();
    });
  } else {
    out.integral = integrate_log(powered);
  }
  if (r < 0.0 && out.integral.tail_suspect) {
    out.divergent = true;
    out.log_norm = kNegInf;
    return out;
  }
  out.log_norm = out.integral.value / r;
  return out;
}

// ---------------------------------------------------------------------------
// Pointwise operations

// x -> f(x - z); exact, only the coordinate offset changes.
inline GridFunction translate(const GridFunction& f, const Vector& z) {
  if (static_cast<std::size_t>(z.size()) != f.dim()) throw ParameterError("translate: dimension mismatch");
  GridFunction g = f;
  for (std::size_t a = 0; a < f.dim(); ++a) g.shift[a] += z[a];
  return g;
}

// y -> f(y) exp(z . y).
inline GridFunction modulate(const GridFunction& f, const Vector& z) {
  GridFunction g = f;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.logv[k] != kNegInf) g.logv[k] += z.dot(f.point(k));
  }
  return g;
}

// f^a for a > 0 (zeros stay zero).
inline GridFunction power(const GridFunction& f, double a) {
  if (!(a > 0.0)) throw ParameterError("power: exponent must be positive");
  GridFunction g = f;
  for (double& v : g.logv) v = v == kNegInf ? kNegInf : a * v;
  return g;
}

// Multilinear interpolation of the log-values at an arbitrary point; -inf
// outside the grid or next to a zero node.
inline double interpolate_log(const GridFunction& f, const Vector& x) {
  const std::size_t d = f.dim();
  std::vector<std::size_t> base(d);
  std::vector<double> frac(d);
  for (std::size_t a = 0; a < d; ++a) {
    const Axis& ax = f.spec.axis(a);
    const double t = (x[a] - f.shift[a] - ax.lo) / ax.step();
    const double last = static_cast<double>(ax.n - 1);
    if (t < -1e-9 || t > last + 1e-9) return kNegInf;
    const double tc = std::clamp(t, 0.0, last);
    std::size_t i = static_cast<std::size_t>(std::floor(tc));
    if (i + 1 >= ax.n) i = ax.n - 2;
    base[a] = i;
    frac[a] = tc - static_cast<double>(i);
  }
  double acc = 0.0;
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const bool up = (corner >> a) & 1u;
      w *= up ? frac[a] : 1.0 - frac[a];
      flat += (base[a] + (up ? 1 : 0)) * f.spec.stride(a);
    }
    if (w == 0.0) continue;
    const double v = f.logv[flat];
    if (v == kNegInf) return kNegInf;
    acc += w * v;
  }
  return acc;
}

// Samples of lambda * f(A x). Diagonal A is exact (the grid is rescaled);
// any other invertible A is interpolated onto f's own grid.
inline GridFunction affine_image(const GridFunction& f, double lambda, const Matrix& A) {
  const std::size_t d = f.dim();
  if (!(lambda > 0.0)) throw ParameterError("affine_image: lambda must be positive");
  if (static_cast<std::size_t>(A.rows()) != d || static_cast<std::size_t>(A.cols()) != d)
    throw ParameterError("affine_image: matrix dimension mismatch");
  const double det = A.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-300) throw ParameterError("affine_image: singular matrix");
  const double ll = std::log(lambda);

  const bool identity = A.isIdentity(0.0);
  if (identity) {
    GridFunction g = f;
    if (lambda != 1.0)
      for (double& v : g.logv) v = v == kNegInf ? kNegInf : v + ll;
    return g;
  }

  const bool diagonal = (A - Matrix(A.diagonal().asDiagonal())).isZero(0.0);
  if (diagonal) {
    std::vector<Axis> axes(d);
    for (std::size_t a = 0; a < d; ++a) {
      const Axis& ax = f.spec.axis(a);
      const double c = A(a, a);
      const double lo = (ax.lo + f.shift[a]) / c;
      const double hi = (ax.hi + f.shift[a]) / c;
      axes[a] = Axis{std::min(lo, hi), std::max(lo, hi), ax.n};
    }
    GridSpec spec(axes);
    std::vector<double> v(f.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      std::size_t src = 0;
      for (std::size_t a = 0; a < d; ++a) {
        std::size_t i = spec.index(k, a);
        if (A(a, a) < 0.0) i = spec.axis(a).n - 1 - i;
        src += i * f.spec.stride(a);
      }
      const double s = f.logv[src];
      v[k] = s == kNegInf ? kNegInf : s + ll;
    }
    return GridFunction(spec, std::move(v));
  }

  std::vector<double> v(f.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double s = interpolate_log(f, A * f.point(k));
    v[k] = s == kNegInf ? kNegInf : s + ll;
  }
  return GridFunction(f.spec, std::move(v), f.shift);
}

// Values of f at the nodes of `spec` (zero shift) by multilinear interpolation.
inline GridFunction resample_log(const GridFunction& f, const GridSpec& spec) {
  GridFunction out = sample_log(spec, [&](const Vector& x) { return interpolate_log(f, x); });
  return out;
}

// ---------------------------------------------------------------------------
// Text serialization: "gridfn v1" format, shortest round-trip decimals.

namespace detail {

inline std::string format_double(double v) {
  if (v == kNegInf) return "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "-inf") return kNegInf;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("gridfn: bad number '" + std::string(s) + "'");
  return v;
}

inline std::string_view after_prefix(std::string_view tok, std::string_view prefix) {
  if (tok.substr(0, prefix.size()) != prefix)
    throw ParseError("gridfn: expected '" + std::string(prefix) + "' in '" + std::string(tok) + "'");
  return tok.substr(prefix.size());
}

}  // namespace detail

inline std::string to_text(const GridFunction& f) {
  std::string out = "gridfn v1 dim=" + std::to_string(f.dim()) + "\n";
  for (const auto& ax : f.spec.axes()) {
    out += "axis lo=" + detail::format_double(ax.lo) + " hi=" + detail::format_double(ax.hi) +
           " n=" + std::to_string(ax.n) + "\n";
  }
  out += "shift";
  for (double s : f.shift) out += " " + detail::format_double(s);
  out += "\n";
  for (double v : f.logv) {
    out += detail::format_double(v);
    out += '\n';
  }
  return out;
}

inline GridFunction from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line)) throw ParseError("gridfn: unexpected end of input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  std::istringstream header(next_line());
  std::string magic, version, dimtok;
  header >> magic >> version >> dimtok;
  if (magic != "gridfn" || version != "v1") throw ParseError("gridfn: bad header");
  const auto dimv = detail::after_prefix(dimtok, "dim=");
  std::size_t dim = 0;
  if (std::from_chars(dimv.data(), dimv.data() + dimv.size(), dim).ec != std::errc() || dim == 0)
    throw ParseError("gridfn: bad dimension");
  std::vector<Axis> axes(dim);
  for (auto& ax : axes) {
    std::istringstream ls(next_line());
    std::string kw, lo, hi, n;
    ls >> kw >> lo >> hi >> n;
    if (kw != "axis") throw ParseError("gridfn: expected axis line");
    ax.lo = detail::parse_double(detail::after_prefix(lo, "lo="));
    ax.hi = detail::parse_double(detail::after_prefix(hi, "hi="));
    const auto nv = detail::after_prefix(n, "n=");
    if (std::from_chars(nv.data(), nv.data() + nv.size(), ax.n).ec != std::errc())
      throw ParseError("gridfn: bad node count");
  }
  std::istringstream ss(next_line());
  std::string kw;
  ss >> kw;
  if (kw != "shift") throw ParseError("gridfn: expected shift line");
  std::vector<double> shift;
  for (std::string tok; ss >> tok;) shift.push_back(detail::parse_double(tok));
  if (shift.size() != dim) throw ParseError("gridfn: shift has wrong length");
  GridSpec spec(axes);
  std::vector<double> v;
  v.reserve(spec.size());
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    v.push_back(detail::parse_double(line));
  }
  if (v.size() != spec.size()) throw ParseError("gridfn: wrong number of values");
  return GridFunction(spec, std::move(v), std::move(shift));
}

}  // namespace lsvp

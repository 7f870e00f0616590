#pragma once

// Named test functions with their default grids and qualitative labels.
//
// Indicator-type fixtures are sampled by cell averages: a node carries the
// fraction of its cell [x - h/2, x + h/2] that lies in the set. Default grids
// put every jump exactly halfway between two nodes, so the samples are 0 or 1
// and all powers of the fixture integrate exactly.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lsvp/error.hpp"
#include "lsvp/gridfn.hpp"

namespace lsvp {

struct FixtureInfo {
  std::string name;
  std::string description;
  std::size_t dim = 1;
  bool even = false;
  bool log_concave = true;
  bool compact = false;      // bounded with compact support
  bool tail_open = false;    // does not decay at some grid edge
  bool integrable = true;    // finite integral over the whole space
};

struct Fixture {
  FixtureInfo info;
  GridFunction f;
};

namespace detail {

// Axis with step h whose cell midpoints include `anchor`, covering [lo, hi].
inline Axis aligned_axis(double anchor, double lo, double hi, double h) {
  const double m = std::ceil((anchor - lo) / h - 0.5);
  const double first = anchor - (m + 0.5) * h;
  const auto n = static_cast<std::size_t>(std::floor((hi - first) / h + 1e-9)) + 1;
  return Axis{first, first + static_cast<double>(n - 1) * h, n};
}

// Fraction of [x - h/2, x + h/2] inside [a, b].
inline double cell_fraction(double x, double h, double a, double b) {
  const double lo = std::max(x - 0.5 * h, a), hi = std::min(x + 0.5 * h, b);
  return std::clamp((hi - lo) / h, 0.0, 1.0);
}

inline double log_or_neginf(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

}  // namespace detail

inline const std::vector<FixtureInfo>& zoo_list() {
  static const std::vector<FixtureInfo> list = {
      {"gauss0.5", "gamma_0.5 = exp(-|x|^2)", 1, true, true, false, false, true},
      {"gauss1", "gamma_1 = exp(-|x|^2/2)", 1, true, true, false, false, true},
      {"gauss2", "gamma_2 = exp(-|x|^2/4)", 1, true, true, false, false, true},
      {"gauss_shift", "gamma_1 translated by 0.7", 1, false, true, false, false, true},
      {"box11", "indicator of [-1,1]", 1, true, true, true, false, true},
      {"box02", "indicator of [0,2]", 1, false, true, true, false, true},
      {"halfline", "indicator of [0,inf), grid ends at 60", 1, false, true, false, true, false},
      {"laplace", "exp(-|x|)", 1, true, true, false, false, true},
      {"exp_halfline", "exp(-x) on [0,inf), grid ends at 40", 1, false, true, false, false, true},
      {"bump", "1 on [-1,1], 1/2 elsewhere", 1, true, false, false, true, false},
      {"const_window", "constant 1 on the whole window", 1, true, true, false, true, false},
      {"box11_2d", "indicator of [-1,1]^2", 2, true, true, true, false, true},
      {"gauss1_2d", "gamma_1 in the plane", 2, true, true, false, false, true},
      {"gauss_rot_2d", "anisotropic Gaussian, variances 1 and 1/4, rotated by 30 degrees", 2, true, true,
       false, false, true},
  };
  return list;
}

inline const FixtureInfo& fixture_info(const std::string& name) {
  for (const auto& info : zoo_list())
    if (info.name == name) return info;
  throw ConfigurationError("unknown fixture '" + name + "'");
}

inline GridSpec default_fixture_grid(const std::string& name) {
  using detail::aligned_axis;
  if (name == "gauss_shift") return GridSpec({Axis{-10.0 + 0.7, 10.0 + 0.7, 2001}});
  if (name == "box11") return GridSpec({aligned_axis(-1.0, -3.0, 3.0, 0.005)});
  if (name == "box02") return GridSpec({aligned_axis(0.0, -2.0, 4.0, 0.005)});
  if (name == "halfline") return GridSpec({aligned_axis(0.0, -4.0, 60.0, 0.02)});
  if (name == "laplace") return GridSpec::cube(1, -40.0, 40.0, 8001);
  if (name == "exp_halfline") return GridSpec({aligned_axis(0.0, -4.0, 40.0, 0.01)});
  if (name == "bump") return GridSpec({aligned_axis(-1.0, -10.0, 10.0, 0.01)});
  if (name == "box11_2d") {
    const Axis a = aligned_axis(-1.0, -2.0, 2.0, 0.02);
    return GridSpec({a, a});
  }
  if (name == "gauss1_2d" || name == "gauss_rot_2d") return GridSpec::cube(2, -10.0, 10.0, 201);
  fixture_info(name);  // throws for unknown names
  return GridSpec::cube(1, -10.0, 10.0, 2001);
}

// Samples a zoo fixture on `grid`, or on its default grid.
inline Fixture make_fixture(const std::string& name, const std::optional<GridSpec>& grid = std::nullopt) {
  const FixtureInfo& info = fixture_info(name);
  const GridSpec spec = grid ? *grid : default_fixture_grid(name);
  if (spec.dim() != info.dim)
    throw ConfigurationError("fixture '" + name + "' needs a " + std::to_string(info.dim) + "-dimensional grid");
  using detail::cell_fraction;
  using detail::log_or_neginf;
  std::vector<double> h(spec.dim());
  for (std::size_t a = 0; a < spec.dim(); ++a) h[a] = spec.axis(a).step();
  constexpr double inf = std::numeric_limits<double>::infinity();

  auto logf = [&](const Vector& x) -> double {
    if (name == "gauss0.5") return -x.squaredNorm();
    if (name == "gauss1" || name == "gauss1_2d") return -0.5 * x.squaredNorm();
    if (name == "gauss2") return -0.25 * x.squaredNorm();
    if (name == "gauss_shift") return -0.5 * (x[0] - 0.7) * (x[0] - 0.7);
    if (name == "box11") return log_or_neginf(cell_fraction(x[0], h[0], -1.0, 1.0));
    if (name == "box02") return log_or_neginf(cell_fraction(x[0], h[0], 0.0, 2.0));
    if (name == "halfline") return log_or_neginf(cell_fraction(x[0], h[0], 0.0, inf));
    if (name == "laplace") return -std::abs(x[0]);
    if (name == "exp_halfline") {
      const double frac = cell_fraction(x[0], h[0], 0.0, inf);
      return frac > 0.0 ? std::log(frac) - std::max(x[0], 0.0) : kNegInf;
    }
    if (name == "bump") return std::log(0.5 + 0.5 * cell_fraction(x[0], h[0], -1.0, 1.0));
    if (name == "const_window") return 0.0;
    if (name == "box11_2d")
      return log_or_neginf(cell_fraction(x[0], h[0], -1.0, 1.0) * cell_fraction(x[1], h[1], -1.0, 1.0));
    if (name == "gauss_rot_2d") {
      const double c = std::cos(std::numbers::pi / 6.0), s = std::sin(std::numbers::pi / 6.0);
      const double u = c * x[0] + s * x[1], v = -s * x[0] + c * x[1];
      return -0.5 * (u * u + 4.0 * v * v);
    }
    throw ConfigurationError("unknown fixture '" + name + "'");
  };
  return Fixture{info, sample_log(spec, logf)};
}

}  // namespace lsvp

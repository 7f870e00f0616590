#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>

#include "lsvp/semigroups.hpp"
#include "lsvp/transforms.hpp"
#include "lsvp/zoo.hpp"

using namespace lsvp;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = std::numbers::pi;

// max |a - b| over nodes k whose coordinates lie in [lo, hi] in every axis.
double sup_log_diff(const GridFunction& f, double lo, double hi, auto&& expected) {
  double worst = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Vector x = f.point(k);
    if ((x.array() < lo).any() || (x.array() > hi).any()) continue;
    worst = std::max(worst, std::abs(f.logv[k] - expected(x)));
  }
  return worst;
}

// Composite Simpson rule for the integral of g over [a, b] with m (even) panels.
double simpson(auto&& g, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = g(a) + g(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("heat flow of a Gaussian", "[semigroups]") {
  const GridFunction f = gaussian(GridSpec::cube(1, -12.0, 12.0, 2401), 1.0);
  const double t = 0.5;
  const GridFunction g = heat(f, t, GridSpec::cube(1, -8.0, 8.0, 801));
  const double err = sup_log_diff(g, -8.0, 8.0, [&](const Vector& x) {
    return 0.5 * std::log(1.0 / (1.0 + t)) - x.squaredNorm() / (2.0 * (1.0 + t));
  });
  CHECK(err <= 1e-7);
}

TEST_CASE("heat flow conserves mass and is positive", "[semigroups]") {
  const GridFunction box = make_fixture("box11").f;
  const GridFunction g = flow(box, {FlowKind::Heat, 0.01});
  CHECK_THAT(std::exp(integrate_log(g).value), WithinAbs(2.0, 1e-6));

  const GridFunction b02 = make_fixture("box02").f;
  const GridFunction h = flow(b02, {FlowKind::Heat, 0.1});
  for (double v : h.logv) CHECK(std::isfinite(v));
}

TEST_CASE("t = 0 is an exact copy", "[semigroups]") {
  const GridFunction f = make_fixture("box02").f;
  const GridSpec other = GridSpec::cube(1, -1.0, 1.0, 11);
  CHECK(heat(f, 0.0, other) == f);
  CHECK(fokker_planck(f, 0.0, other) == f);
  CHECK(ou(f, 0.0, other) == f);
  CHECK(flow(f, {FlowKind::Heat, 0.0}) == f);
  CHECK(convert_heat_fp_check(f, 0.0) == 0.0);
  CHECK_THROWS_AS(heat(f, -1.0, other), ParameterError);
}

TEST_CASE("Fokker-Planck fixes the standard Gaussian", "[semigroups]") {
  const GridFunction f = gaussian(GridSpec::cube(1, -12.0, 12.0, 2401), 1.0);
  for (double t : {0.1, 1.0, 4.0}) {
    const GridFunction g = fokker_planck(f, t, GridSpec::cube(1, -8.0, 8.0, 801));
    CHECK(sup_log_diff(g, -8.0, 8.0, [](const Vector& x) { return -0.5 * x.squaredNorm(); }) <= 1e-7);
  }
}

TEST_CASE("Fokker-Planck converges to the Gaussian profile", "[semigroups]") {
  const GridFunction box = make_fixture("box11").f;
  const GridFunction g = flow(box, {FlowKind::FokkerPlanck, 8.0});
  double worst = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double x = g.point(k)[0];
    if (std::abs(x) > 4.0) continue;
    const double limit = 2.0 / std::sqrt(2.0 * kPi) * std::exp(-0.5 * x * x);
    worst = std::max(worst, std::abs(std::exp(g.logv[k]) - limit));
  }
  CHECK(worst <= 2e-3);
}

TEST_CASE("Fokker-Planck conserves mass", "[semigroups]") {
  const GridFunction box = make_fixture("box11").f;
  for (double t : {0.1, 1.0, 4.0}) {
    const GridFunction g = flow(box, {FlowKind::FokkerPlanck, t});
    CHECK_THAT(integrate_log(g).value, WithinAbs(std::log(2.0), 1e-6));
  }
}

TEST_CASE("Ornstein-Uhlenbeck examples", "[semigroups]") {
  const GridSpec grid = GridSpec::cube(1, -12.0, 12.0, 2401);
  const double t = 0.7, e = std::exp(-t), var = 1.0 - std::exp(-2.0 * t);
  // interior: the kernel window e^{-t}x +- 8 sqrt(var) stays inside the grid
  const double inner = (12.0 - 8.0 * std::sqrt(var)) / e;

  const GridFunction one = sample_log(grid, [](const Vector&) { return 0.0; });
  CHECK(sup_log_diff(ou(one, t, grid), -inner, inner, [](const Vector&) { return 0.0; }) <= 1e-10);

  const double a = 0.5;
  const GridFunction ex = sample_log(grid, [a](const Vector& x) { return a * x[0]; });
  CHECK(sup_log_diff(ou(ex, t, grid), -inner, inner,
                     [&](const Vector& x) { return e * a * x[0] + var * a * a / 2.0; }) <= 1e-7);

  // against a fine Simpson quadrature in z
  const GridFunction g = gaussian(grid, 1.0);
  const GridFunction ug = ou(g, t, grid);
  for (double x : {-4.0, -2.5, -1.0, -0.3, 0.0, 0.2, 0.9, 1.7, 3.0, 5.0}) {
    const double oracle = simpson(
        [&](double z) {
          const double u = e * x + std::sqrt(var) * z;
          return std::exp(-0.5 * u * u - 0.5 * z * z) / std::sqrt(2.0 * kPi);
        },
        -12.0, 12.0, 24000);
    CHECK_THAT(interpolate_log(ug, Vector::Constant(1, x)), WithinAbs(std::log(oracle), 1e-7));
  }
}

TEST_CASE("heat and Fokker-Planck conversion identity", "[semigroups]") {
  const GridFunction g = gaussian(GridSpec::cube(1, -10.0, 10.0, 2001), 1.0);
  CHECK(convert_heat_fp_check(g, 1.0) <= 1e-6);
  CHECK(convert_heat_fp_check(make_fixture("box02").f, 0.5) <= 5e-4);
  CHECK(convert_heat_fp_check(make_fixture("box11_2d").f, 0.5) <= 5e-4);
}

TEST_CASE("heat semigroup law", "[semigroups][property]") {
  const GridFunction f = make_fixture("box02").f;
  const GridFunction a = flow(flow(f, {FlowKind::Heat, 0.3}), {FlowKind::Heat, 0.7});
  const GridFunction b = heat(f, 1.0, a.spec);
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a.point(k)[0];
    if (x < -3.0 || x > 5.0) continue;
    worst = std::max(worst, std::abs(a.logv[k] - b.logv[k]));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("Laplace transform intertwines the heat flow", "[semigroups][property]") {
  const GridSpec dual = GridSpec::cube(1, -3.0, 3.0, 61);
  for (const char* name : {"box02", "laplace", "exp_halfline"}) {
    const GridFunction f = make_fixture(name).f;
    const double t = 0.5;
    const GridFunction lf = laplace(f, dual), le = laplace(flow(f, {FlowKind::Heat, t}), dual);
    const double top = std::string(name) == "box02" ? 3.0 : 0.9;  // Lf finite for |x| < 1 otherwise
    for (std::size_t k = 0; k < dual.size(); ++k) {
      const double x = le.point(k)[0];
      if (std::abs(x) > top) continue;
      CHECK_THAT(le.logv[k], WithinAbs(lf.logv[k] + t * x * x / 2.0, 1e-6));
    }
  }
}

TEST_CASE("support of the p-Laplace transform grows along the heat flow", "[semigroups][property]") {
  const GridFunction f = make_fixture("halfline").f;
  const ExponentPair pq = ExponentPair::from_p(0.5);
  const GridSpec dual = GridSpec::cube(1, -4.0, 4.0, 161);
  std::vector<std::vector<bool>> supports;
  for (double t : {0.0, 0.25, 1.0, 4.0}) {
    const GridFunction ft = flow(f, {FlowKind::Heat, t});
    const GridFunction lp = p_laplace_nonzero(ft, pq, dual, open_tails(ft));
    const double thr = lp.max_logv() + std::log(1e-12);
    std::vector<bool> s(lp.size());
    for (std::size_t k = 0; k < lp.size(); ++k) s[k] = lp.logv[k] > thr;
    supports.push_back(s);
  }
  for (std::size_t i = 0; i + 1 < supports.size(); ++i)
    for (std::size_t k = 0; k < dual.size(); ++k) CHECK((!supports[i][k] || supports[i + 1][k]));
  // node x = 0.1: outside the support at t = 0, inside once the tail has closed
  CHECK(!supports.front()[82]);
  CHECK(supports.back()[82]);
}

TEST_CASE("Jensen direction for powers of the heat flow", "[semigroups][property]") {
  for (const char* name : {"box02", "bump", "gauss_shift"}) {
    const GridFunction f = make_fixture(name).f;
    for (double p : {0.25, 0.5, 0.75}) {
      const GridSpec out = evolved_grid(f, {FlowKind::Heat, 0.5});
      const GridFunction lhs = power(heat(f, 0.5, out), 1.0 / p), rhs = heat(power(f, 1.0 / p), 0.5, out);
      for (std::size_t k = 0; k < out.size(); ++k)
        if (rhs.logv[k] > -600.0) CHECK(std::exp(lhs.logv[k]) <= std::exp(rhs.logv[k]) + 1e-9);
    }
  }
}

TEST_CASE("Ornstein-Uhlenbeck preserves the Gaussian integral", "[semigroups][property]") {
  auto gauss_int = [](const GridFunction& g) {
    return integrate_log_with(g, [&](std::size_t k) { return -0.5 * g.point(k).squaredNorm(); }).value;
  };
  for (const char* name : {"box02", "bump", "laplace"}) {
    const GridFunction f = make_fixture(name, GridSpec({detail::aligned_axis(0.0, -12.0, 12.0, 0.005)})).f;
    const GridFunction u = ou(f, 0.4, f.spec);
    CHECK_THAT(gauss_int(u), WithinAbs(gauss_int(f), 1e-6));
  }
}

TEST_CASE("flows are thread independent", "[semigroups][property]") {
  const GridFunction f = make_fixture("box11_2d").f;
  set_thread_cap(1);
  const GridFunction a = flow(f, {FlowKind::FokkerPlanck, 0.5}, 129);
  set_thread_cap(4);
  const GridFunction b = flow(f, {FlowKind::FokkerPlanck, 0.5}, 129);
  set_thread_cap(0);
  CHECK(a == b);
}

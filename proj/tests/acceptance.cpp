// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lsvp/cli.hpp"
#include "lsvp/products.hpp"
#include "lsvp/santalo.hpp"
#include "lsvp/semigroups.hpp"
#include "lsvp/transforms.hpp"
#include "lsvp/zoo.hpp"

using namespace lsvp;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;  // shown after the verdict
  std::vector<std::string> failures;

  void fail(const std::string& what) {
    pass = false;
    failures.push_back(what);
  }
  void require(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Same nodes, extended by k half-widths on every side of every axis.
GridSpec widen(const GridSpec& g, int k) {
  std::vector<Axis> axes;
  for (std::size_t a = 0; a < g.dim(); ++a) {
    const Axis& x = g.axis(a);
    const double h = (x.hi - x.lo) / static_cast<double>(x.n - 1);
    const std::size_t m = static_cast<std::size_t>(k) * (x.n - 1) / 2;
    axes.push_back(Axis{x.lo - static_cast<double>(m) * h, x.hi + static_cast<double>(m) * h, x.n + 2 * m});
  }
  return GridSpec(axes);
}

const std::vector<double> kTimes = {0.0, 0.25, 0.5, 1.0, 2.0, 4.0};

struct SweepKey {
  std::string fixture;
  double p;
  FlowKind kind;
  bool operator<(const SweepKey& o) const {
    return std::tie(fixture, p, kind) < std::tie(o.fixture, o.p, o.kind);
  }
};

// Monotonicity sweeps over the zoo, shared by the dichotomy, certificate and monotonicity criteria.
const std::map<SweepKey, MonotonicityCurve>& zoo_sweeps() {
  static const std::map<SweepKey, MonotonicityCurve> sweeps = [] {
    std::map<SweepKey, MonotonicityCurve> m;
    for (const FixtureInfo& info : zoo_list()) {
      const GridFunction f = make_fixture(info.name).f;
      for (double p : {0.0, 0.25, 0.5})
        for (FlowKind k : {FlowKind::Heat, FlowKind::FokkerPlanck})
          m.emplace(SweepKey{info.name, p, k}, monotonicity_sweep(f, ExponentPair::from_p(p), k, kTimes));
    }
    return m;
  }();
  return sweeps;
}

// 1. Gaussian equality.
Outcome gaussian_equality() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::size_t n : {1u, 2u})
    for (double p : {0.25, 0.5, 0.75})
      for (double sigma : {0.5, 1.0, 2.0}) {
        const GridSpec grid = n == 1 ? GridSpec::cube(1, -10.0, 10.0, 2001) : GridSpec::cube(2, -10.0, 10.0, 201);
        const ProductReport r = mp_product(gaussian(grid, sigma), ExponentPair::from_p(p));
        const double closed = gaussian_constants(p, n).log_Mp_gauss;
        const double rel = std::abs(r.log_Mp - closed) / std::abs(closed);
        worst = std::max(worst, rel);
        o.require(rel <= 2e-4 && r.tail_flags.empty(),
                  fmt("n=%zu p=%.2f sigma=%.1f relative log error %.3e", n, p, sigma, rel));
      }
  const double secs = seconds_since(t0);
  o.require(secs <= 60.0, fmt("runtime %.1f s", secs));
  o.note(fmt("18 cases, worst relative log error %.2e, %.1f s", worst, secs));
  return o;
}

// 2. The Laplace norm constant.
Outcome laplace_constant() {
  Outcome o;
  double worst_gauss = 0.0, min_margin = kPosInf;
  int flagged = 0;
  for (const FixtureInfo& info : zoo_list()) {
    const bool gauss = info.name.rfind("gauss", 0) == 0;
    for (double p : {0.25, 0.5, 0.75}) {
      // widen until the powers of f are resolved; non-integrable fixtures never are
      LaplaceBoundResult r;
      for (int k = 0; k < 4; ++k) {
        const GridFunction f = make_fixture(info.name, k ? std::optional(widen(default_fixture_grid(info.name), k)) : std::nullopt).f;
        r = laplace_lp_bound_check(f, ExponentPair::from_p(p));
        if (r.flags.empty() || !info.integrable) break;
      }
      min_margin = std::min(min_margin, r.margin);
      o.require(r.margin >= -2e-4, fmt("%s p=%.2f margin %.3e", info.name.c_str(), p, r.margin));
      if (!r.flags.empty()) {
        ++flagged;
        o.require(!info.integrable, fmt("%s p=%.2f unresolved: %s", info.name.c_str(), p, r.flags.front().c_str()));
      }
      if (gauss) {
        worst_gauss = std::max(worst_gauss, std::abs(r.margin));
        o.require(std::abs(r.margin) <= 2e-4, fmt("%s p=%.2f Gaussian margin %.3e", info.name.c_str(), p, r.margin));
      }
    }
  }
  o.note(fmt("Gaussians |margin| <= %.2e, zoo min margin %.2e, %d non-integrable cases flagged (margin +inf)", worst_gauss,
             min_margin, flagged));
  return o;
}

// 3. Santalo-point certificates.
Outcome santalo_certificates() {
  Outcome o;
  double worst_bary = 0.0, worst_even = 0.0, shift_err = 0.0;
  std::size_t attained = 0;
  auto visit = [&](const std::string& name, double p, const ProductReport& r, bool at_zero_time) {
    if (r.santalo.kind != OutcomeKind::Attained) return;
    ++attained;
    worst_bary = std::max(worst_bary, r.santalo.bary_residual);
    o.require(r.santalo.bary_residual <= 1e-6,
              fmt("%s p=%.2f barycentre residual %.3e", name.c_str(), p, r.santalo.bary_residual));
    if (!at_zero_time) return;
    if (fixture_info(name).even) {
      worst_even = std::max(worst_even, r.santalo.point.norm());
      o.require(r.santalo.point.norm() <= 1e-6, fmt("%s p=%.2f |s_p| = %.3e", name.c_str(), p, r.santalo.point.norm()));
    }
    if (name == "gauss_shift") {
      shift_err = std::max(shift_err, std::abs(r.santalo.point[0] + 0.7));
      o.require(std::abs(r.santalo.point[0] + 0.7) <= 1e-5, fmt("gauss_shift p=%.2f s_p = %.8f", p, r.santalo.point[0]));
    }
  };
  for (const FixtureInfo& info : zoo_list()) {
    const GridFunction f = make_fixture(info.name).f;
    for (double p : {0.0, 0.25, 0.5, 0.75}) {
      try {
        visit(info.name, p, mp_product(f, ExponentPair::from_p(p)), true);
      } catch (const Error& e) {
        o.fail(fmt("%s p=%.2f: %s", info.name.c_str(), p, e.what()));
      }
    }
  }
  for (const auto& [key, curve] : zoo_sweeps())
    for (std::size_t k = 0; k < curve.reports.size(); ++k) visit(key.fixture, key.p, curve.reports[k], false);
  o.note(fmt("%zu Attained outcomes, max barycentre residual %.2e, even |s_p| <= %.2e, shifted Gaussian error %.2e",
             attained, worst_bary, worst_even, shift_err));
  return o;
}

// 4. Dichotomy.
Outcome dichotomy() {
  Outcome o;
  std::size_t checked = 0;
  for (const FixtureInfo& info : zoo_list()) {
    const GridFunction f = make_fixture(info.name).f;
    for (double p : {0.0, 0.25, 0.5, 0.75}) {
      try {
        // mp_product raises DichotomyDisagreementError on a mismatch
        const ProductReport r = mp_product(f, ExponentPair::from_p(p));
        const bool agree = (r.santalo.kind == OutcomeKind::Attained) == (r.dichotomy == SupportVerdict::OriginInterior);
        o.require(agree, fmt("%s p=%.2f solver %s vs support %s", info.name.c_str(), p, to_string(r.santalo.kind),
                             to_string(r.dichotomy)));
        ++checked;
      } catch (const Error& e) {
        o.fail(fmt("%s p=%.2f: %s", info.name.c_str(), p, e.what()));
      }
    }
  }
  // one-way implication along every sweep: once Attained, Attained at all later times
  std::size_t curves = 0;
  for (const auto& [key, curve] : zoo_sweeps()) {
    ++curves;
    o.require(curve.error.empty(), fmt("%s sweep failed: %s", key.fixture.c_str(), curve.error.c_str()));
    bool seen = false;
    for (std::size_t k = 0; k < curve.kinds.size(); ++k) {
      if (curve.kinds[k] == OutcomeKind::Attained) seen = true;
      else if (seen) o.fail(fmt("%s p=%.2f %s: InfimumZero at t=%.2f after Attained", key.fixture.c_str(), key.p,
                                to_string(key.kind), curve.times[k]));
    }
    if (key.fixture == "halfline") {
      o.require(!curve.kinds.empty() && curve.kinds[0] == OutcomeKind::InfimumZero,
                fmt("halfline p=%.2f %s not InfimumZero at t=0", key.p, to_string(key.kind)));
      for (std::size_t k = 1; k < curve.kinds.size(); ++k)
        o.require(curve.kinds[k] == OutcomeKind::Attained,
                  fmt("halfline p=%.2f %s not Attained at t=%.2f", key.p, to_string(key.kind), curve.times[k]));
    }
  }
  o.note(fmt("%zu solver/support comparisons agree; %zu time sweeps respect the one-way implication", checked, curves));
  return o;
}

// 5. Monotonicity along heat and Fokker-Planck.
Outcome monotonicity() {
  Outcome o;
  double worst_dec = 0.0, worst_over = -kPosInf;
  for (const auto& [key, curve] : zoo_sweeps()) {
    const std::string tag = fmt("%s p=%.2f %s", key.fixture.c_str(), key.p, to_string(key.kind));
    if (!curve.error.empty()) {
      o.fail(tag + ": " + curve.error);
      continue;
    }
    const double bound = log_gaussian_bound(ExponentPair::from_p(key.p), make_fixture(key.fixture).f.dim());
    for (std::size_t k = 0; k < curve.mp_log.size(); ++k) {
      if (k > 0 && std::isfinite(curve.mp_log[k - 1])) {
        const double dec = curve.mp_log[k - 1] - curve.mp_log[k];
        worst_dec = std::max(worst_dec, dec);
        o.require(dec <= 1e-5, tag + fmt(": decrease %.3e at t=%.2f", dec, curve.times[k]));
      }
      worst_over = std::max(worst_over, curve.mp_log[k] - bound);
      o.require(curve.mp_log[k] <= bound + 2e-4, tag + fmt(": exceeds bound by %.3e", curve.mp_log[k] - bound));
    }
  }
  o.note(fmt("%zu curves, max step decrease %.2e, max excess over the Gaussian value %.2e", zoo_sweeps().size(),
             worst_dec, worst_over));
  return o;
}

// 6. Hamilton-Jacobi residual.
Outcome hjb() {
  Outcome o;
  double worst_budget = 0.0, min_slack = kPosInf;
  std::size_t pairs = 0;
  for (const FixtureInfo& info : zoo_list()) {
    if (!info.compact) continue;
    const GridFunction f = make_fixture(info.name).f;
    std::vector<Vector> zs;
    if (info.dim == 1) {
      for (double z : {-0.5, -0.25, 0.0, 0.25, 0.5}) zs.push_back(Vector::Constant(1, z));
    } else {
      for (const auto& z : std::vector<std::pair<double, double>>{{0, 0}, {0.5, 0}, {0, 0.5}, {-0.5, 0.25}, {0.3, -0.4}})
        zs.push_back(Vector{{z.first, z.second}});
    }
    for (double t : {0.5, 1.0, 2.0}) {
      try {
        const HjbResult h = hjb_residual(f, ExponentPair::from_p(0.5), t, zs);
        for (std::size_t k = 0; k < zs.size(); ++k) {
          ++pairs;
          worst_budget = std::max(worst_budget, h.budget[k]);
          min_slack = std::min(min_slack, h.residual[k] + h.budget[k]);
          o.require(h.residual[k] >= -h.budget[k],
                    fmt("%s t=%.2f z#%zu residual %.3e budget %.3e", info.name.c_str(), t, k, h.residual[k], h.budget[k]));
          o.require(h.budget[k] <= 1e-4, fmt("%s t=%.2f z#%zu budget %.3e", info.name.c_str(), t, k, h.budget[k]));
        }
      } catch (const Error& e) {
        o.fail(fmt("%s t=%.2f: %s", info.name.c_str(), t, e.what()));
      }
    }
  }
  o.note(fmt("%zu (t,z) pairs on compactly supported fixtures, max budget %.2e, min residual + budget %.2e", pairs,
             worst_budget, min_slack));
  return o;
}

// 7. p -> 0 limit.
Outcome p_limit() {
  Outcome o;
  const std::vector<double> ps = {0.2, 0.1, 0.05, 0.02};
  for (const char* name : {"gauss1", "box11", "laplace"}) {
    const double reach = std::string(name) == "laplace" ? 0.9 : 2.0;
    const PLimitTable t = p_limit_sweep(make_fixture(name).f, ps, GridSpec::cube(1, -reach, reach, 81));
    std::string gaps, mps;
    for (const PLimitRow& r : t.rows) {
      gaps += fmt(" %.3e", r.gap);
      mps += fmt(" %.3e", r.mp_gap);
    }
    o.require(t.gap_decreasing, fmt("%s pointwise gap not decreasing:%s", name, gaps.c_str()));
    o.require(t.mp_gap_decreasing, fmt("%s product gap |log M_p - log M| not decreasing:%s", name, mps.c_str()));
    o.note(fmt("%s gap%s | product gap%s", name, gaps.c_str(), mps.c_str()));
  }
  for (std::size_t n : {1u, 2u}) {
    const GridFunction g = make_fixture(n == 1 ? "gauss1" : "gauss1_2d").f;
    const double m = std::exp(volume_product(g).log_Mp), target = std::pow(2.0 * kPi, static_cast<double>(n));
    o.require(std::abs(m - target) <= 2e-4 * target, fmt("volume product of gamma_1 (n=%zu) = %.8f", n, m));
    o.note(fmt("M(gamma_1, n=%zu) = %.8f", n, m));
  }
  // the half-cell edge error of the sampled indicator is h/2 relative, so a fine source grid is needed
  ProductOptions opts;
  Resolution res;
  res.target_nodes = 4096;
  res.max_nodes = 16385;
  opts.resolution = res;
  const GridFunction box = make_fixture("box11", GridSpec({detail::aligned_axis(-1.0, -3.0, 3.0, 2e-4)})).f;
  const double mb = std::exp(volume_product(box, opts).log_Mp);
  o.require(std::abs(mb - 4.0) <= 1e-3, fmt("volume product of the interval = %.6f", mb));
  o.note(fmt("M(1_[-1,1]) = %.6f", mb));
  return o;
}

// 8. Reverse hypercontractivity.
Outcome hypercontractivity() {
  Outcome o;
  const GridSpec wide = GridSpec::cube(1, -20.0, 20.0, 4001);
  double worst_family = 0.0, min_margin = kPosInf;
  for (double p : {0.25, 0.5, 0.75})
    for (double v : {0.5, 0.8, 0.95}) {
      // f^p gamma_1 is the centred Gaussian of variance v: equality
      const double beta = (1.0 / v - 1.0) / (2.0 * p);
      const GridFunction f = sample_log(wide, [beta](const Vector& x) { return -beta * x.squaredNorm(); });
      const HypercontractResult r = hypercontract_check(f, p, p, ExponentPair::from_p(p).q);
      worst_family = std::max(worst_family, std::abs(r.margin));
      o.require(std::abs(r.margin) <= 5e-4 && r.flags.empty(), fmt("family p=%.2f v=%.2f margin %.3e", p, v, r.margin));
    }
  std::size_t centred = 0;
  const double p = 0.5, q = ExponentPair::from_p(p).q;
  for (const FixtureInfo& info : zoo_list()) {
    if (info.dim != 1 || !info.even) continue;  // the centring hypothesis needs an even fixture in the zoo
    const GridFunction f = make_fixture(info.name, GridSpec({detail::aligned_axis(-1.0, -20.0, 20.0, 0.01)})).f;
    for (const auto& [p1, p2] : std::vector<std::pair<double, double>>{{p, q}, {p / 2, q / 2}}) {
      try {
        const HypercontractResult r = hypercontract_check(f, p, p1, p2);
        ++centred;
        min_margin = std::min(min_margin, r.margin);
        o.require(r.margin >= -1e-5, fmt("%s (p1,p2)=(%.2f,%.2f) margin %.3e", info.name.c_str(), p1, p2, r.margin));
      } catch (const Error& e) {
        o.fail(fmt("%s: %s", info.name.c_str(), e.what()));
      }
    }
  }
  o.note(fmt("equality family |margin| <= %.2e; %zu centred zoo checks, min margin %.2e", worst_family, centred,
             min_margin));
  return o;
}

// 9. Oracle equivalences.
Outcome oracles() {
  Outcome o;
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double legendre = 0.0;
  for (std::size_t n : {8u, 64u, 200u, 512u}) {
    std::vector<double> xs(n), ls(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = -3.0 + 6.0 * static_cast<double>(i) / static_cast<double>(n - 1);
      ys[i] = -7.0 + 14.0 * static_cast<double>(i) / static_cast<double>(n - 1);
      ls[i] = u(rng) < -0.8 ? kNegInf : -xs[i] * xs[i] + 2.0 * u(rng);
    }
    ls[n / 2] = 0.0;
    const auto fast = legendre_1d(xs, ls, ys), slow = legendre_brute(xs, ls, ys);
    for (std::size_t j = 0; j < n; ++j) legendre = std::max(legendre, std::abs(fast[j] - slow[j]));
  }
  // essential_polar on a sampled fixture against the brute-force supremum
  {
    const GridFunction f = make_fixture("laplace", GridSpec::cube(1, -4.0, 4.0, 512)).f;
    const GridSpec dual = GridSpec::cube(1, -0.9, 0.9, 512);
    const GridFunction polar = essential_polar(f, dual);
    std::vector<double> xs(f.size()), ls(f.logv.begin(), f.logv.end()), ys(dual.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = f.point(i)[0];
    for (std::size_t j = 0; j < ys.size(); ++j) ys[j] = polar.point(j)[0];
    const auto slow = legendre_brute(xs, ls, ys);
    for (std::size_t j = 0; j < ys.size(); ++j) legendre = std::max(legendre, std::abs(polar.logv[j] + slow[j]));
  }
  o.require(legendre <= 1e-12, fmt("Legendre vs brute force %.3e", legendre));

  double grad = 0.0;
  const double q = ExponentPair::from_p(0.5).q;
  const GridFunction eh = make_fixture("exp_halfline").f;
  const GridFunction lp = p_laplace_nonzero(eh, ExponentPair::from_p(0.5), GridSpec::cube(1, -30.0, 30.0, 3001), open_tails(eh));
  for (double z : {-1.3, -0.9, -0.5, -0.25}) {
    const Vector zv = Vector::Constant(1, z), e = Vector::Constant(1, 1e-4);
    const double fd = (log_double_laplace(lp, q, zv + e) - log_double_laplace(lp, q, zv - e)) / 2e-4;
    const double g = objective_gradient_hessian(lp, q, zv).gradient[0];
    grad = std::max(grad, std::abs(fd - g) / std::max(1.0, std::abs(g)));
  }
  const GridFunction rot = p_laplace_nonzero(make_fixture("gauss_rot_2d").f, ExponentPair::from_p(0.5),
                                             GridSpec::cube(2, -12.0, 12.0, 121));
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{{0.3, -0.2}, {-0.5, 0.4}, {0.1, 0.55}}) {
    const Vector z{{a, b}};
    const Vector g = objective_gradient_hessian(rot, q, z).gradient;
    for (int i = 0; i < 2; ++i) {
      Vector e = Vector::Zero(2);
      e[i] = 1e-4;
      const double fd = (log_double_laplace(rot, q, z + e) - log_double_laplace(rot, q, z - e)) / 2e-4;
      grad = std::max(grad, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
    }
  }
  o.require(grad <= 1e-6, fmt("gradient vs central differences %.3e", grad));

  // OU of the Gaussian against composite Simpson in the kernel variable
  double oumax = 0.0;
  {
    const GridSpec grid = GridSpec::cube(1, -12.0, 12.0, 2401);
    const double t = 0.7, e = std::exp(-t), var = 1.0 - std::exp(-2.0 * t);
    const GridFunction ug = ou(gaussian(grid, 1.0), t, grid);
    for (double x : {-4.0, -1.0, 0.0, 0.9, 3.0, 5.0}) {
      const int m = 24000;
      const double a = -12.0, h = 24.0 / m;
      auto g = [&](double z) {
        const double w = e * x + std::sqrt(var) * z;
        return std::exp(-0.5 * w * w - 0.5 * z * z) / std::sqrt(2.0 * kPi);
      };
      double s = g(a) + g(a + m * h);
      for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
      const double oracle = std::log(s * h / 3.0);
      oumax = std::max(oumax, std::abs(interpolate_log(ug, Vector::Constant(1, x)) - oracle));
    }
  }
  o.require(oumax <= 1e-7, fmt("OU vs quadrature %.3e", oumax));

  const double conv_g = convert_heat_fp_check(gaussian(GridSpec::cube(1, -10.0, 10.0, 2001), 1.0), 1.0);
  double conv_ns = 0.0;
  for (const char* name : {"box02", "box11", "box11_2d"})
    conv_ns = std::max(conv_ns, convert_heat_fp_check(make_fixture(name).f, 0.5));
  o.require(conv_g <= 1e-6, fmt("heat/FP conversion on a Gaussian %.3e", conv_g));
  o.require(conv_ns <= 5e-4, fmt("heat/FP conversion on indicators %.3e", conv_ns));
  o.note(fmt("Legendre %.1e, gradient %.1e, OU %.1e, conversion %.1e / %.1e", legendre, grad, oumax, conv_g, conv_ns));
  return o;
}

// 10. Determinism.
Outcome determinism() {
  Outcome o;
  const std::vector<std::string> configs = {
      R"({"experiment":"MpProduct","fixture":"gauss_rot_2d","p_list":[0.25,0.5]})",
      R"({"experiment":"Monotonicity","fixture":"box11_2d","p_list":[0.5],"times":[0,0.5,1],"flow":"FokkerPlanck"})",
      R"({"experiment":"Monotonicity","fixture":"laplace","p_list":[0,0.5],"times":[0,1]})",
      R"({"experiment":"PLimit","fixture":"box11"})",
      R"({"experiment":"Hjb","fixture":"box02","times":[1]})",
  };
  auto render = [](const RunOutput& r) {
    std::string s = r.report.dump(2);
    for (const CurveCsv& c : r.curves) s += c.content;
    return s;
  };
  for (const std::string& text : configs) {
    const ExperimentConfig c = parse_config(text);
    std::vector<std::string> runs;
    for (const char* env : {"1", "4", "4"}) {
      ::setenv("LSVP_THREADS", env, 1);
      runs.push_back(render(run_experiment(c)));
    }
    ::unsetenv("LSVP_THREADS");
    runs.push_back(render(run_experiment(c)));
    for (std::size_t i = 1; i < runs.size(); ++i)
      o.require(runs[i] == runs[0], fmt("%s: run %zu differs", text.c_str(), i));
  }
  o.note(fmt("%zu configs, byte-identical reports with LSVP_THREADS = 1, 4, 4 and unset", configs.size()));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"Gaussian equality", gaussian_equality},
      {"Laplace norm constant", laplace_constant},
      {"Santalo-point certificates", santalo_certificates},
      {"support dichotomy", dichotomy},
      {"monotonicity along heat and Fokker-Planck", monotonicity},
      {"Hamilton-Jacobi residual", hjb},
      {"p -> 0 limit", p_limit},
      {"reverse hypercontractivity", hypercontractivity},
      {"oracle equivalences", oracles},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failed;
    std::printf("%s %zu %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, seconds_since(t0));
    for (const std::string& n : o.notes) std::printf("    %s\n", n.c_str());
    for (std::size_t k = 0; k < o.failures.size() && k < 12; ++k) std::printf("    fail: %s\n", o.failures[k].c_str());
    if (o.failures.size() > 12) std::printf("    ... %zu more\n", o.failures.size() - 12);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

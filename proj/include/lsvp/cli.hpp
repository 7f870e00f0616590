#pragma once

// Experiment configuration and orchestration behind the lsvp command line:
// strict JSON configs, one runner per experiment, report JSON and curve CSV
// emission, and PASS/FAIL/FLAGGED verdict lines.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lsvp/error.hpp"
#include "lsvp/gridfn.hpp"
#include "lsvp/products.hpp"
#include "lsvp/semigroups.hpp"
#include "lsvp/zoo.hpp"

namespace lsvp {

using Json = nlohmann::ordered_json;

enum class ExperimentKind { MpProduct, VolumeProduct, Monotonicity, PLimit, Hjb, Hypercontract, SantaloCurve, LaplaceBound };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::MpProduct: return "MpProduct";
    case ExperimentKind::VolumeProduct: return "VolumeProduct";
    case ExperimentKind::Monotonicity: return "Monotonicity";
    case ExperimentKind::PLimit: return "PLimit";
    case ExperimentKind::Hjb: return "Hjb";
    case ExperimentKind::Hypercontract: return "Hypercontract";
    case ExperimentKind::SantaloCurve: return "SantaloCurve";
    case ExperimentKind::LaplaceBound: return "LaplaceBound";
  }
  return "?";
}

struct GridOverride {
  std::optional<double> lo, hi;
  std::optional<std::size_t> n;
  bool any() const { return lo || hi || n; }
};

struct Tolerances {
  double ratio = 2e-4;          // log M_p above the Gaussian bound
  double slack = 1e-5;          // per-step decrease along a curve
  double margin = 2e-4;         // Laplace norm bound
  double hypercontract = 1e-5;  // hypercontractivity margin
  double centering = 1e-6;      // hypercontractivity centring hypothesis
  double extrapolation = 5e-3;  // p -> 0 extrapolation against M(f)
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::MpProduct;
  std::string fixture;
  std::vector<double> p_list;
  std::vector<double> times;
  GridOverride grid;
  Tolerances tol;
  FlowKind flow = FlowKind::Heat;
  std::optional<Centering> centering;
  std::vector<std::vector<double>> z_samples;  // empty: defaults for the dimension
  double ode_step = 0.05;
  std::optional<double> p1, p2;
  double dt = 0.0;  // 0: 1e-3 max(t, 1)
  double dz = 1e-3;
  double test_lo = -2.0, test_hi = 2.0;
  std::size_t test_n = 81;
  std::string out = "lsvp_report.json";
  std::string csv;  // empty: out with the extension replaced by .csv
};

namespace detail {

// 1-based line of the first occurrence of "key" in the config text, 0 if absent.
inline std::size_t key_line(const std::string& text, const std::string& key) {
  const std::size_t pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

}  // namespace detail

// Config text for line lookups, and keys set by command-line flags (key -> flag).
struct ConfigSource {
  std::string text;
  std::map<std::string, std::string> flags;
};

namespace detail {

[[noreturn]] inline void config_error(const ConfigSource& src, const std::string& key, const std::string& msg) {
  if (const auto it = src.flags.find(key); it != src.flags.end()) throw ConfigurationError(it->second + ": " + msg);
  const std::size_t line = key_line(src.text, key);
  throw ConfigurationError(line > 0 ? "config line " + std::to_string(line) + ": " + msg : "config: " + msg);
}

inline const std::map<std::string, ExperimentKind>& experiment_names() {
  static const std::map<std::string, ExperimentKind> m = {
      {"MpProduct", ExperimentKind::MpProduct},   {"VolumeProduct", ExperimentKind::VolumeProduct},
      {"Monotonicity", ExperimentKind::Monotonicity}, {"PLimit", ExperimentKind::PLimit},
      {"Hjb", ExperimentKind::Hjb},               {"Hypercontract", ExperimentKind::Hypercontract},
      {"SantaloCurve", ExperimentKind::SantaloCurve}, {"LaplaceBound", ExperimentKind::LaplaceBound}};
  return m;
}

inline std::set<std::string> allowed_keys(ExperimentKind k) {
  std::set<std::string> keys = {"experiment", "fixture", "p_list", "grid", "tolerances", "out"};
  switch (k) {
    case ExperimentKind::MpProduct:
    case ExperimentKind::VolumeProduct: keys.insert({"times", "flow", "centering"}); break;
    case ExperimentKind::LaplaceBound: keys.insert({"times", "flow"}); break;
    case ExperimentKind::Monotonicity: keys.insert({"times", "flow", "csv"}); break;
    case ExperimentKind::PLimit: keys.insert({"test_grid"}); break;
    case ExperimentKind::Hjb: keys.insert({"times", "z_samples", "dt", "dz"}); break;
    case ExperimentKind::Hypercontract: keys.insert({"p1", "p2"}); break;
    case ExperimentKind::SantaloCurve: keys.insert({"times", "flow", "ode_step", "csv"}); break;
  }
  return keys;
}

inline double get_number(const ConfigSource& text, const Json& j, const std::string& key) {
  if (!j.is_number()) config_error(text, key, "'" + key + "' must be a number");
  return j.get<double>();
}

inline std::vector<double> get_numbers(const ConfigSource& text, const Json& j, const std::string& key) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array() || j.empty()) config_error(text, key, "'" + key + "' must be a non-empty list of numbers");
  std::vector<double> v;
  for (const Json& e : j) v.push_back(get_number(text, e, key));
  return v;
}

inline bool is_zoo_name(const std::string& name) {
  for (const FixtureInfo& info : zoo_list())
    if (info.name == name) return true;
  return false;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::ios_base::failure("write failed for '" + path + "'");
}

}  // namespace detail

// Validates a parsed JSON config; `text` supplies line context for diagnostics.
inline ExperimentConfig config_from_json(const Json& j, const ConfigSource& text = {}) {
  using detail::config_error;
  if (!j.is_object()) throw ConfigurationError("config: top level must be a JSON object");
  ExperimentConfig c;

  if (!j.contains("experiment")) config_error(text, "experiment", "missing key 'experiment'");
  if (!j["experiment"].is_string()) config_error(text, "experiment", "'experiment' must be a string");
  const std::string ename = j["experiment"].get<std::string>();
  const auto eit = detail::experiment_names().find(ename);
  if (eit == detail::experiment_names().end()) config_error(text, "experiment", "unknown experiment '" + ename + "'");
  c.experiment = eit->second;

  const std::set<std::string> allowed = detail::allowed_keys(c.experiment);
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) config_error(text, key, "unknown key '" + key + "' for " + ename);

  if (!j.contains("fixture")) config_error(text, "fixture", "missing key 'fixture'");
  if (!j["fixture"].is_string()) config_error(text, "fixture", "'fixture' must be a string");
  c.fixture = j["fixture"].get<std::string>();
  if (!detail::is_zoo_name(c.fixture) && !std::filesystem::is_regular_file(c.fixture))
    config_error(text, "fixture", "unknown fixture '" + c.fixture + "' (neither a zoo name nor a readable file)");

  const bool positive_p = c.experiment == ExperimentKind::PLimit || c.experiment == ExperimentKind::Hjb ||
                          c.experiment == ExperimentKind::Hypercontract || c.experiment == ExperimentKind::LaplaceBound;
  switch (c.experiment) {
    case ExperimentKind::VolumeProduct: c.p_list = {0.0}; break;
    case ExperimentKind::PLimit: c.p_list = {0.2, 0.1, 0.05, 0.02}; break;
    default: c.p_list = {0.5}; break;
  }
  if (j.contains("p_list")) {
    c.p_list = detail::get_numbers(text, j["p_list"], "p_list");
    for (double p : c.p_list) {
      if (!(p >= 0.0 && p < 1.0)) config_error(text, "p_list", "p must lie in [0,1)");
      if (p == 0.0 && positive_p) config_error(text, "p_list", std::string("p = 0 is not allowed for ") + ename);
      if (p != 0.0 && c.experiment == ExperimentKind::VolumeProduct)
        config_error(text, "p_list", "VolumeProduct is the p = 0 product; use MpProduct for p > 0");
    }
    if (c.experiment == ExperimentKind::PLimit)
      for (std::size_t i = 1; i < c.p_list.size(); ++i)
        if (!(c.p_list[i] < c.p_list[i - 1])) config_error(text, "p_list", "p_list must be strictly decreasing for PLimit");
  }

  switch (c.experiment) {
    case ExperimentKind::Monotonicity: c.times = {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}; break;
    case ExperimentKind::Hjb: c.times = {0.5, 1.0, 2.0}; break;
    case ExperimentKind::SantaloCurve: c.times = {0.0, 0.5, 1.0, 2.0, 4.0}; break;
    default: c.times = {0.0}; break;
  }
  if (j.contains("times")) {
    c.times = detail::get_numbers(text, j["times"], "times");
    for (double t : c.times)
      if (!(t >= 0.0) || !std::isfinite(t)) config_error(text, "times", "times must be finite and nonnegative");
    for (std::size_t i = 1; i < c.times.size(); ++i)
      if (!(c.times[i] > c.times[i - 1])) config_error(text, "times", "times must be strictly increasing");
    if (c.experiment == ExperimentKind::Hjb)
      for (double t : c.times)
        if (!(t > 0.0)) config_error(text, "times", "Hjb needs positive times");
  }

  if (c.experiment == ExperimentKind::SantaloCurve) c.flow = FlowKind::FokkerPlanck;
  if (j.contains("flow")) {
    const Json& f = j["flow"];
    const std::string s = f.is_string() ? f.get<std::string>() : "";
    if (s == "Heat") c.flow = FlowKind::Heat;
    else if (s == "FokkerPlanck") c.flow = FlowKind::FokkerPlanck;
    else if (s == "OrnsteinUhlenbeck" && c.experiment != ExperimentKind::Monotonicity &&
             c.experiment != ExperimentKind::SantaloCurve)
      c.flow = FlowKind::OrnsteinUhlenbeck;
    else config_error(text, "flow", "unknown flow '" + f.dump() + "'");
  }

  if (j.contains("centering")) {
    const Json& v = j["centering"];
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "CenterF") c.centering = Centering::CenterF;
    else if (s == "CenterLp") c.centering = Centering::CenterLp;
    else if (s != "None") config_error(text, "centering", "centering must be None, CenterF or CenterLp");
  }

  if (j.contains("grid")) {
    const Json& g = j["grid"];
    if (!g.is_object()) config_error(text, "grid", "'grid' must be an object with lo, hi, n");
    for (const auto& [key, value] : g.items()) {
      if (key == "lo") c.grid.lo = detail::get_number(text, value, "lo");
      else if (key == "hi") c.grid.hi = detail::get_number(text, value, "hi");
      else if (key == "n") {
        if (!value.is_number_integer() || value.get<long long>() < 2) config_error(text, "n", "grid n must be an integer >= 2");
        c.grid.n = value.get<std::size_t>();
      } else config_error(text, key, "unknown key '" + key + "' in grid");
    }
  }

  if (j.contains("tolerances")) {
    const Json& t = j["tolerances"];
    if (!t.is_object()) config_error(text, "tolerances", "'tolerances' must be an object");
    const std::map<std::string, double*> slots = {
        {"ratio", &c.tol.ratio},         {"slack", &c.tol.slack},         {"margin", &c.tol.margin},
        {"hypercontract", &c.tol.hypercontract}, {"centering", &c.tol.centering}, {"extrapolation", &c.tol.extrapolation}};
    for (const auto& [key, value] : t.items()) {
      const auto it = slots.find(key);
      if (it == slots.end()) config_error(text, key, "unknown tolerance '" + key + "'");
      const double v = detail::get_number(text, value, key);
      if (!(v >= 0.0)) config_error(text, key, "tolerance '" + key + "' must be nonnegative");
      *it->second = v;
    }
  }

  if (j.contains("z_samples")) {
    const Json& z = j["z_samples"];
    if (!z.is_array() || z.empty()) config_error(text, "z_samples", "'z_samples' must be a non-empty list");
    for (const Json& e : z) c.z_samples.push_back(detail::get_numbers(text, e, "z_samples"));
  }
  if (j.contains("ode_step")) {
    c.ode_step = detail::get_number(text, j["ode_step"], "ode_step");
    if (!(c.ode_step > 0.0)) config_error(text, "ode_step", "ode_step must be positive");
  }
  if (j.contains("dt")) c.dt = detail::get_number(text, j["dt"], "dt");
  if (j.contains("dz")) {
    c.dz = detail::get_number(text, j["dz"], "dz");
    if (!(c.dz > 0.0)) config_error(text, "dz", "dz must be positive");
  }
  if (j.contains("p1")) c.p1 = detail::get_number(text, j["p1"], "p1");
  if (j.contains("p2")) c.p2 = detail::get_number(text, j["p2"], "p2");
  if (j.contains("test_grid")) {
    const Json& g = j["test_grid"];
    if (!g.is_object()) config_error(text, "test_grid", "'test_grid' must be an object with lo, hi, n");
    for (const auto& [key, value] : g.items()) {
      if (key == "lo") c.test_lo = detail::get_number(text, value, "lo");
      else if (key == "hi") c.test_hi = detail::get_number(text, value, "hi");
      else if (key == "n" && value.is_number_integer() && value.get<long long>() >= 2) c.test_n = value.get<std::size_t>();
      else config_error(text, key, "bad key '" + key + "' in test_grid");
    }
  }
  if (j.contains("out")) {
    if (!j["out"].is_string() || j["out"].get<std::string>().empty()) config_error(text, "out", "'out' must be a path");
    c.out = j["out"].get<std::string>();
  }
  if (j.contains("csv")) {
    if (!j["csv"].is_string() || j["csv"].get<std::string>().empty()) config_error(text, "csv", "'csv' must be a path");
    c.csv = j["csv"].get<std::string>();
  }
  return c;
}

inline Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
    throw ConfigurationError("config line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
}

inline ExperimentConfig parse_config(const std::string& text) { return config_from_json(parse_json_text(text), {text, {}}); }

// Fixture samples for a config: zoo name or gridfn file, with grid overrides.
inline GridFunction load_fixture(const ExperimentConfig& c) {
  if (detail::is_zoo_name(c.fixture)) {
    if (!c.grid.any()) return make_fixture(c.fixture).f;
    const GridSpec def = default_fixture_grid(c.fixture);
    const Axis& a = def.axis(0);
    const double lo = c.grid.lo.value_or(a.lo), hi = c.grid.hi.value_or(a.hi);
    if (!(hi > lo)) throw ConfigurationError("config: grid hi must exceed lo");
    return make_fixture(c.fixture, GridSpec::cube(def.dim(), lo, hi, c.grid.n.value_or(a.n))).f;
  }
  GridFunction f = from_text(detail::read_file(c.fixture));
  if (!c.grid.any()) return f;
  const Axis& a = f.spec.axis(0);
  const double lo = c.grid.lo.value_or(a.lo), hi = c.grid.hi.value_or(a.hi);
  if (!(hi > lo)) throw ConfigurationError("config: grid hi must exceed lo");
  return resample_log(f, GridSpec::cube(f.dim(), lo, hi, c.grid.n.value_or(a.n)));
}

enum class Verdict { Pass, Fail, Flagged };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Flagged: return "FLAGGED";
  }
  return "?";
}

struct CheckLine {
  Verdict verdict;
  std::string text;
};

struct CurveCsv {
  std::string path;
  std::string content;
  std::size_t rows = 0;
};

struct RunOutput {
  Json report = Json::array();
  std::vector<CheckLine> checks;
  std::vector<CurveCsv> curves;
  bool failed() const {
    for (const CheckLine& c : checks)
      if (c.verdict == Verdict::Fail) return true;
    return false;
  }
};

namespace detail {

inline Json jnum(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline Json jvec(const Vector& v) {
  if (v.size() == 0) return nullptr;
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(jnum(v[i]));
  return a;
}

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// One report object with the fixed field set.
inline Json entry(const ExperimentConfig& c, double p, double t) {
  Json e;
  e["experiment"] = to_string(c.experiment);
  e["fixture"] = c.fixture;
  e["p"] = jnum(p);
  e["t"] = jnum(t);
  e["kind"] = nullptr;
  e["s_point"] = nullptr;
  e["log_inf"] = nullptr;
  e["log_Mp"] = nullptr;
  e["log_bound"] = nullptr;
  e["ratio_log"] = nullptr;
  e["margins"] = Json::object();
  e["flags"] = Json::array();
  return e;
}

inline void fill_product(Json& e, const ProductReport& r) {
  e["kind"] = to_string(r.santalo.kind);
  e["s_point"] = jvec(r.santalo.point);
  e["log_inf"] = jnum(r.santalo.log_inf);
  e["log_Mp"] = jnum(r.log_Mp);
  e["log_bound"] = jnum(r.log_gaussian_bound);
  e["ratio_log"] = jnum(r.ratio_log);
  e["margins"]["bound_gap"] = jnum(-r.ratio_log);
  e["margins"]["bary_residual"] = jnum(r.santalo.bary_residual);
  e["margins"]["iterations"] = r.santalo.iterations;
  for (const std::string& s : r.tail_flags) e["flags"].push_back(s);
  for (const std::string& s : r.santalo.flags) e["flags"].push_back(s);
}

inline std::string label(const ExperimentConfig& c, double p) {
  return std::string(to_string(c.experiment)) + " " + c.fixture + " p=" + fmt_short(p);
}

inline std::string csv_path(const ExperimentConfig& c, std::size_t index, std::size_t count, double p) {
  std::string base = c.csv;
  if (base.empty()) {
    std::filesystem::path o(c.out);
    o.replace_extension(".csv");
    base = o.string();
  }
  if (count <= 1) return base;
  std::filesystem::path b(base);
  const std::string stem = b.stem().string() + "_p" + fmt_short(p);
  (void)index;
  return (b.parent_path() / (stem + b.extension().string())).string();
}

inline std::string csv_header(std::size_t dim) {
  std::string h = "t,alpha_log,mp_log";
  for (std::size_t a = 0; a < dim; ++a) h += ",s_" + std::to_string(a + 1);
  return h + "\n";
}

inline std::string csv_row(double t, double alpha, double mp, const Vector& s, std::size_t dim) {
  std::string row = fmt17(t) + "," + fmt17(alpha) + "," + fmt17(mp);
  for (std::size_t a = 0; a < dim; ++a) row += "," + (s.size() == static_cast<Eigen::Index>(dim) ? fmt17(s[a]) : std::string("nan"));
  return row + "\n";
}

inline std::vector<Vector> z_samples(const ExperimentConfig& c, std::size_t dim) {
  std::vector<Vector> zs;
  if (!c.z_samples.empty()) {
    for (const auto& z : c.z_samples) {
      if (z.size() != dim) throw ConfigurationError("config: z_samples entries must have the fixture dimension");
      zs.push_back(Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(dim)));
    }
    return zs;
  }
  if (dim == 1) {
    for (double z : {-0.5, -0.25, 0.0, 0.25, 0.5}) zs.push_back(Vector::Constant(1, z));
    return zs;
  }
  for (int k = 0; k < 5; ++k) {
    Vector z = Vector::Zero(static_cast<Eigen::Index>(dim));
    if (k > 0) z[(k - 1) % static_cast<int>(dim)] = (k <= 2 ? 0.5 : -0.5);
    zs.push_back(z);
  }
  return zs;
}

}  // namespace detail

// Runs one experiment. Numerical errors become FAIL lines; I/O errors
// propagate as std::ios_base::failure.
inline RunOutput run_experiment(const ExperimentConfig& c) {
  using namespace detail;
  RunOutput out;
  auto check = [&](Verdict v, const std::string& s) { out.checks.push_back({v, s}); };
  const GridFunction f0 = load_fixture(c);
  const std::size_t n = f0.dim();

  auto evolved = [&](double t) {
    return t == 0.0 ? f0 : flow(f0, {c.flow, t}, default_flow_cap(n));
  };

  switch (c.experiment) {
    case ExperimentKind::MpProduct:
    case ExperimentKind::VolumeProduct: {
      for (double p : c.p_list) {
        for (double t : c.times) {
          Json e = entry(c, p, t);
          const std::string lbl = label(c, p) + " t=" + fmt_short(t);
          try {
            const GridFunction ft = evolved(t);
            const ExponentPair pq = ExponentPair::from_p(p);
            const ProductReport r = c.centering ? mp_centered(ft, pq, *c.centering) : mp_product(ft, pq);
            fill_product(e, r);
            if (c.centering) e["margins"]["centering"] = to_string(*c.centering);
            if (r.ratio_log > c.tol.ratio)
              check(Verdict::Fail, lbl + ": ratio_log=" + fmt_short(r.ratio_log) + " exceeds " + fmt_short(c.tol.ratio));
            else if (!r.tail_flags.empty())
              check(Verdict::Flagged, lbl + ": " + r.tail_flags.front());
            else
              check(Verdict::Pass, lbl + ": " + to_string(r.santalo.kind) + ", ratio_log=" + fmt_short(r.ratio_log));
          } catch (const Error& err) {
            e["flags"].push_back(err.what());
            check(Verdict::Fail, lbl + ": " + err.what());
          }
          out.report.push_back(e);
        }
      }
      break;
    }

    case ExperimentKind::LaplaceBound: {
      for (double p : c.p_list) {
        for (double t : c.times) {
          Json e = entry(c, p, t);
          const std::string lbl = label(c, p) + " t=" + fmt_short(t);
          try {
            const ExponentPair pq = ExponentPair::from_p(p);
            const LaplaceBoundResult r = laplace_lp_bound_check(evolved(t), pq);
            e["kind"] = to_string(r.santalo.kind);
            e["s_point"] = jvec(r.santalo.point);
            e["log_inf"] = jnum(r.santalo.log_inf);
            e["log_bound"] = jnum(gaussian_constants(p, n).log_Cp);
            e["margins"]["lhs_log"] = jnum(r.lhs_log);
            e["margins"]["rhs_log"] = jnum(r.rhs_log);
            e["margins"]["margin"] = jnum(r.margin);
            for (const std::string& s : r.flags) e["flags"].push_back(s);
            if (r.margin < -c.tol.margin)
              check(Verdict::Fail, lbl + ": margin=" + fmt_short(r.margin) + " below -" + fmt_short(c.tol.margin));
            else if (!r.flags.empty())
              check(Verdict::Flagged, lbl + ": margin=" + fmt_short(r.margin) + " (" + r.flags.front() + ")");
            else
              check(Verdict::Pass, lbl + ": margin=" + fmt_short(r.margin));
          } catch (const Error& err) {
            e["flags"].push_back(err.what());
            check(Verdict::Fail, lbl + ": " + err.what());
          }
          out.report.push_back(e);
        }
      }
      break;
    }

    case ExperimentKind::Monotonicity: {
      for (std::size_t i = 0; i < c.p_list.size(); ++i) {
        const double p = c.p_list[i];
        const ExponentPair pq = ExponentPair::from_p(p);
        const std::string lbl = label(c, p) + " " + to_string(c.flow);
        const MonotonicityCurve curve = monotonicity_sweep(f0, pq, c.flow, c.times);
        CurveCsv csv{csv_path(c, i, c.p_list.size(), p), csv_header(n), 0};
        double worst = 0.0, top = kNegInf;
        bool flagged = false;
        for (std::size_t k = 0; k < curve.times.size(); ++k) {
          Json e = entry(c, p, curve.times[k]);
          fill_product(e, curve.reports[k]);
          e["margins"]["alpha_log"] = jnum(curve.alpha_log[k]);
          flagged = flagged || !curve.reports[k].tail_flags.empty();
          out.report.push_back(e);
          csv.content += csv_row(curve.times[k], curve.alpha_log[k], curve.mp_log[k], curve.santalo_points[k], n);
          ++csv.rows;
          if (k > 0 && std::isfinite(curve.mp_log[k - 1])) worst = std::max(worst, curve.mp_log[k - 1] - curve.mp_log[k]);
          top = std::max(top, curve.mp_log[k] - curve.reports[k].log_gaussian_bound);
        }
        out.curves.push_back(csv);
        if (!curve.error.empty()) {
          Json e = entry(c, p, kNegInf);
          e["flags"].push_back(curve.error);
          out.report.push_back(e);
          check(Verdict::Fail, lbl + ": sweep aborted at " + curve.error);
        } else if (worst > c.tol.slack) {
          check(Verdict::Fail, lbl + ": mp_log decreases by " + fmt_short(worst));
        } else if (top > c.tol.ratio) {
          check(Verdict::Fail, lbl + ": mp_log exceeds the Gaussian bound by " + fmt_short(top));
        } else if (flagged) {
          check(Verdict::Flagged, lbl + ": non-decreasing, with tail flags");
        } else {
          check(Verdict::Pass, lbl + ": non-decreasing over " + std::to_string(curve.times.size()) + " times, max decrease " +
                                   fmt_short(worst));
        }
      }
      break;
    }

    case ExperimentKind::PLimit: {
      const GridSpec test = GridSpec::cube(n, c.test_lo, c.test_hi, c.test_n);
      try {
        const PLimitTable table = p_limit_sweep(f0, c.p_list, test);
        for (const PLimitRow& row : table.rows) {
          Json e = entry(c, row.p, 0.0);
          e["log_Mp"] = jnum(row.log_Mp);
          e["log_bound"] = jnum(log_gaussian_bound(ExponentPair::from_p(row.p), n));
          e["ratio_log"] = jnum(row.log_Mp - log_gaussian_bound(ExponentPair::from_p(row.p), n));
          e["margins"]["gap"] = jnum(row.gap);
          e["margins"]["mp_gap"] = jnum(row.mp_gap);
          out.report.push_back(e);
        }
        Json e = entry(c, 0.0, 0.0);
        e["kind"] = "Attained";
        e["log_Mp"] = jnum(table.log_M);
        e["log_bound"] = jnum(log_gaussian_bound(ExponentPair::from_p(0.0), n));
        e["ratio_log"] = jnum(table.log_M - log_gaussian_bound(ExponentPair::from_p(0.0), n));
        e["margins"]["log_M_extrapolated"] = jnum(table.log_M_extrapolated);
        e["margins"]["extrapolation_error"] = jnum(table.log_M_extrapolated - table.log_M);
        if (!table.mp_gap_decreasing) e["flags"].push_back("product gap column is not monotone");
        out.report.push_back(e);
        const std::string lbl = std::string("PLimit ") + c.fixture;
        check(table.gap_decreasing ? Verdict::Pass : Verdict::Fail,
              lbl + ": pointwise gap " + (table.gap_decreasing ? "decreases" : "does not decrease") + " over p");
        const double err = std::abs(table.log_M_extrapolated - table.log_M);
        check(err <= c.tol.extrapolation ? Verdict::Pass : Verdict::Fail,
              lbl + ": extrapolated log M off by " + fmt_short(err));
      } catch (const Error& err) {
        Json e = entry(c, c.p_list.front(), 0.0);
        e["flags"].push_back(err.what());
        out.report.push_back(e);
        check(Verdict::Fail, std::string("PLimit ") + c.fixture + ": " + err.what());
      }
      break;
    }

    case ExperimentKind::Hjb: {
      const std::vector<Vector> zs = z_samples(c, n);
      for (double p : c.p_list) {
        const ExponentPair pq = ExponentPair::from_p(p);
        for (double t : c.times) {
          const std::string lbl = label(c, p) + " t=" + fmt_short(t);
          try {
            const HjbResult h = hjb_residual(f0, pq, t, zs, c.dt, c.dz);
            for (std::size_t k = 0; k < zs.size(); ++k) {
              Json e = entry(c, p, t);
              e["s_point"] = jvec(zs[k]);
              e["margins"]["residual"] = jnum(h.residual[k]);
              e["margins"]["dtQ"] = jnum(h.dtQ[k]);
              e["margins"]["grad_norm"] = jnum(h.grad_norm[k]);
              e["margins"]["budget"] = jnum(h.budget[k]);
              out.report.push_back(e);
              const std::string zl = lbl + " z=" + fmt_short(zs[k][0]) + (n > 1 ? "," + fmt_short(zs[k][1]) : "");
              if (h.residual[k] < -h.budget[k])
                check(Verdict::Fail, zl + ": residual=" + fmt_short(h.residual[k]) + " below -budget " + fmt_short(h.budget[k]));
              else
                check(Verdict::Pass, zl + ": residual=" + fmt_short(h.residual[k]) + ", budget " + fmt_short(h.budget[k]));
            }
          } catch (const Error& err) {
            Json e = entry(c, p, t);
            e["flags"].push_back(err.what());
            out.report.push_back(e);
            check(Verdict::Fail, lbl + ": " + err.what());
          }
        }
      }
      break;
    }

    case ExperimentKind::Hypercontract: {
      for (double p : c.p_list) {
        const ExponentPair pq = ExponentPair::from_p(p);
        const double p1 = c.p1.value_or(p), p2 = c.p2.value_or(pq.q);
        Json e = entry(c, p, -0.5 * std::log1p(-p));
        const std::string lbl = label(c, p) + " p1=" + fmt_short(p1) + " p2=" + fmt_short(p2);
        try {
          const HypercontractResult r = hypercontract_check(f0, p, p1, p2, c.tol.centering);
          e["margins"]["lhs_log"] = jnum(r.lhs_log);
          e["margins"]["rhs_log"] = jnum(r.rhs_log);
          e["margins"]["margin"] = jnum(r.margin);
          e["margins"]["centering_f"] = jnum(r.centering_f);
          e["margins"]["centering_u"] = jnum(r.centering_u);
          for (const std::string& s : r.flags) e["flags"].push_back(s);
          if (r.margin < -c.tol.hypercontract)
            check(Verdict::Fail, lbl + ": margin=" + fmt_short(r.margin));
          else if (!r.flags.empty())
            check(Verdict::Flagged, lbl + ": margin=" + fmt_short(r.margin) + " (" + r.flags.front() + ")");
          else
            check(Verdict::Pass, lbl + ": margin=" + fmt_short(r.margin));
        } catch (const Error& err) {
          e["flags"].push_back(err.what());
          check(Verdict::Fail, lbl + ": " + err.what());
        }
        out.report.push_back(e);
      }
      break;
    }

    case ExperimentKind::SantaloCurve: {
      for (std::size_t i = 0; i < c.p_list.size(); ++i) {
        const double p = c.p_list[i];
        const ExponentPair pq = ExponentPair::from_p(p);
        const std::string lbl = label(c, p) + " " + to_string(c.flow);
        try {
          const SantaloCurveResult r = santalo_curve(f0, pq, c.times, c.ode_step, c.flow);
          const double log_int = integrate_log(f0).value;  // both clocks preserve mass
          CurveCsv csv{csv_path(c, i, c.p_list.size(), p), csv_header(n), 0};
          for (std::size_t k = 0; k < r.times.size(); ++k) {
            Json e = entry(c, p, r.times[k]);
            const double mp = log_mp_from(pq, n, log_int, r.objective_log[k]);
            e["kind"] = "Attained";
            e["s_point"] = jvec(r.points[k]);
            e["log_inf"] = jnum(r.objective_log[k]);
            e["log_Mp"] = jnum(mp);
            e["log_bound"] = jnum(log_gaussian_bound(pq, n));
            e["ratio_log"] = jnum(mp - log_gaussian_bound(pq, n));
            out.report.push_back(e);
            csv.content += csv_row(r.times[k], r.objective_log[k], mp, r.points[k], n);
            ++csv.rows;
          }
          out.curves.push_back(csv);
          check(Verdict::Pass, lbl + ": curve integrated over " + std::to_string(r.times.size()) + " times");
          if (r.max_decrease > c.tol.slack)
            check(Verdict::Flagged, lbl + ": objective not monotone along the curve (max decrease " +
                                        fmt_short(r.max_decrease) + "), reported only");
        } catch (const Error& err) {
          Json e = entry(c, p, 0.0);
          e["flags"].push_back(err.what());
          out.report.push_back(e);
          check(Verdict::Fail, lbl + ": " + err.what());
        }
      }
      break;
    }
  }
  return out;
}

// Writes the report, curves and the timestamp sidecar, prints verdicts and
// returns the exit status (0 ok, 1 FAIL).
inline int run_and_write(const ExperimentConfig& c, std::ostream& log) {
  const RunOutput r = run_experiment(c);
  detail::write_file(c.out, r.report.dump(2) + "\n");
  for (const CurveCsv& csv : r.curves) detail::write_file(csv.path, csv.content);
  Json meta;
  meta["report"] = c.out;
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  meta["timestamp"] = buf;
  meta["threads"] = worker_count();
  detail::write_file(c.out + ".meta.json", meta.dump(2) + "\n");
  for (const CheckLine& line : r.checks) log << to_string(line.verdict) << " " << line.text << "\n";
  return r.failed() ? 1 : 0;
}

}  // namespace lsvp

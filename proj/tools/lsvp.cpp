// lsvp command line: run experiments from JSON configs, list and export the fixture zoo.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lsvp/cli.hpp"

namespace {

struct RunArgs {
  std::string config;
  std::optional<std::string> experiment, fixture, out;
  std::vector<double> p, t;
  std::optional<double> grid_lo, grid_hi;
  std::optional<std::size_t> grid_n;
};

// Flags overwrite the matching config keys before validation.
lsvp::Json apply_overrides(lsvp::Json j, const RunArgs& a) {
  if (!j.is_object()) return j;
  if (a.experiment) j["experiment"] = *a.experiment;
  if (a.fixture) j["fixture"] = *a.fixture;
  if (a.out) j["out"] = *a.out;
  if (!a.p.empty()) j["p_list"] = a.p;
  if (!a.t.empty()) j["times"] = a.t;
  if (a.grid_lo || a.grid_hi || a.grid_n) {
    if (!j.contains("grid") || !j["grid"].is_object()) j["grid"] = lsvp::Json::object();
    if (a.grid_lo) j["grid"]["lo"] = *a.grid_lo;
    if (a.grid_hi) j["grid"]["hi"] = *a.grid_hi;
    if (a.grid_n) j["grid"]["n"] = *a.grid_n;
  }
  return j;
}

int do_run(const RunArgs& a) {
  try {
    const std::string text = lsvp::detail::read_file(a.config);
    const lsvp::Json j = apply_overrides(lsvp::parse_json_text(text), a);
    lsvp::ConfigSource src{text, {}};
    if (a.experiment) src.flags["experiment"] = "--experiment";
    if (a.fixture) src.flags["fixture"] = "--fixture";
    if (a.out) src.flags["out"] = "--out";
    if (!a.p.empty()) src.flags["p_list"] = "--p";
    if (!a.t.empty()) src.flags["times"] = "--t";
    if (a.grid_lo) src.flags["lo"] = "--grid-lo";
    if (a.grid_hi) src.flags["hi"] = "--grid-hi";
    if (a.grid_n) src.flags["n"] = "--grid-n";
    const lsvp::ExperimentConfig c = lsvp::config_from_json(j, src);
    return lsvp::run_and_write(c, std::cout);
  } catch (const lsvp::ConfigurationError& e) {
    std::cerr << "lsvp: " << e.what() << "\n";
    return 2;
  } catch (const lsvp::ParseError& e) {
    std::cerr << "lsvp: " << e.what() << "\n";
    return 2;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "lsvp: " << e.what() << "\n";
    return 2;
  } catch (const lsvp::Error& e) {
    std::cout << "FAIL " << e.what() << "\n";
    return 1;
  }
}

int do_zoo_list() {
  for (const lsvp::FixtureInfo& info : lsvp::zoo_list()) {
    const lsvp::GridSpec g = lsvp::default_fixture_grid(info.name);
    const lsvp::Axis& a = g.axis(0);
    std::cout << info.name << "\t" << info.dim << "D\t[" << lsvp::detail::format_double(a.lo) << ","
              << lsvp::detail::format_double(a.hi) << "]x" << a.n << "\t" << info.description << "\n";
  }
  return 0;
}

int do_export(const std::string& name, const std::string& path) {
  try {
    const lsvp::Fixture fx = lsvp::make_fixture(name);
    lsvp::detail::write_file(path, lsvp::to_text(fx.f));
    return 0;
  } catch (const lsvp::Error& e) {
    std::cerr << "lsvp: " << e.what() << "\n";
    return 2;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "lsvp: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lsvp: p-Laplace transforms, Santalo points and volume products on grids"};
  app.require_subcommand(1);

  RunArgs ra;
  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", ra.config, "JSON experiment config")->required();
  run->add_option("--experiment", ra.experiment, "override 'experiment'");
  run->add_option("--fixture", ra.fixture, "override 'fixture' (zoo name or gridfn file)");
  run->add_option("--p", ra.p, "override 'p_list'")->delimiter(',');
  run->add_option("--t", ra.t, "override 'times'")->delimiter(',');
  run->add_option("--grid-lo", ra.grid_lo, "override grid lower edge");
  run->add_option("--grid-hi", ra.grid_hi, "override grid upper edge");
  run->add_option("--grid-n", ra.grid_n, "override nodes per axis");
  run->add_option("--out", ra.out, "override report path");

  CLI::App* zoo = app.add_subcommand("zoo", "fixture zoo");
  zoo->require_subcommand(1);
  CLI::App* list = zoo->add_subcommand("list", "list fixtures with their default grids");

  CLI::App* fixture = app.add_subcommand("fixture", "fixture tools");
  fixture->require_subcommand(1);
  std::string ex_name, ex_path;
  CLI::App* exp = fixture->add_subcommand("export", "write a fixture in the gridfn v1 text format");
  exp->add_option("name", ex_name, "zoo name")->required();
  exp->add_option("path", ex_path, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run) return do_run(ra);
  if (*list) return do_zoo_list();
  if (*exp) return do_export(ex_name, ex_path);
  return 2;
}

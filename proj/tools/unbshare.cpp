// Command-line front end: analytic, simulate, capacity, sweep, reproduce, validate.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "unbshare/analytic.hpp"
#include "unbshare/config.hpp"
#include "unbshare/experiments.hpp"
#include "unbshare/simulator.hpp"
#include "unbshare/validation.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;
constexpr int kExitUsage = 64;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  bool dump = false;
  std::string protocol = "benchmark";
  std::string scheme = "random";
  std::string assoc = "none";
  std::vector<double> band_probs;
  std::optional<double> tau_db;
};

struct SimFlags {
  std::uint64_t seed = 1;
  std::uint64_t realizations = 10000;
  unsigned jobs = 1;
  double torus_km = 100.0;
  std::string mode = "thinned";
  bool noise = false;
};

std::string default_out_dir() {
  const char* env = std::getenv("UNBSHARE_OUT_DIR");
  return env && *env ? env : ".";
}

void add_common(CLI::App* app, Common& c, bool with_protocol = true) {
  app->add_option("--config", c.config_path, "config file (key = value, densities per km^2)");
  app->add_option("--override", c.overrides, "key=value, repeatable");
  app->add_flag("--dump-config", c.dump, "print the effective config and exit");
  if (!with_protocol) return;
  app->add_option("--protocol", c.protocol, "existing | benchmark | slotted-mb | unslotted-mb");
  app->add_option("--scheme", c.scheme, "random | pn");
  app->add_option("--assoc", c.assoc, "none | nearest");
  app->add_option("--band-probs", c.band_probs, "BS listening probability per band (default uniform)")
      ->delimiter(',');
  app->add_option("--tau-db", c.tau_db, "SINR threshold in dB");
}

void add_sim(CLI::App* app, SimFlags& s) {
  app->add_option("--seed", s.seed, "master seed");
  app->add_option("--realizations", s.realizations, "Monte-Carlo realizations");
  app->add_option("--jobs", s.jobs, "worker threads (0 = all cores); results do not depend on it");
  app->add_option("--torus-side", s.torus_km, "simulation torus side in km");
  app->add_option("--mode", s.mode, "thinned | explicit");
  app->add_flag("--noise", s.noise, "include thermal noise");
}

unb::NetworkConfig build_config(const Common& c) {
  unb::NetworkConfig cfg = c.config_path.empty() ? unb::NetworkConfig{} : unb::load_config(c.config_path);
  for (const auto& o : c.overrides) unb::apply_override(cfg, o);
  if (c.tau_db) cfg.tau = unb::db_to_linear(*c.tau_db);
  return cfg;
}

unb::ProtocolSpec build_spec(const Common& c, unb::NetworkConfig& cfg) {
  unb::ProtocolSpec spec;
  spec.kind = unb::parse_protocol_kind(c.protocol);
  spec.scheme = unb::parse_scheme(c.scheme);
  spec.association = unb::parse_association(c.assoc);
  if (spec.kind == unb::ProtocolKind::Existing) cfg.M = 1;  // single band by definition
  if (c.band_probs.empty())
    spec.band_probs.assign(static_cast<std::size_t>(std::max(cfg.M, 1)), 1.0 / std::max(cfg.M, 1));
  else
    spec.band_probs = c.band_probs;
  return spec;
}

unb::SimOptions build_sim(const SimFlags& s) {
  unb::SimOptions o;
  o.master_seed = s.seed;
  o.realizations = s.realizations;
  o.workers = s.jobs;
  o.torus_side_m = s.torus_km * 1e3;
  o.include_noise = s.noise;
  if (s.mode == "thinned")
    o.mode = unb::Fidelity::Thinned;
  else if (s.mode == "explicit")
    o.mode = unb::Fidelity::ExplicitSlots;
  else
    throw unb::ConfigError("unknown mode '" + s.mode + "'");
  return o;
}

/// "a:b:step" or a comma list.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> g;
  if (text.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(text);
    if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0) || hi < lo)
      throw unb::ConfigError("grid must look like lo:hi:step");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= n; ++k) g.push_back(lo + static_cast<double>(k) * step);
    return g;
  }
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    try {
      g.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw unb::ConfigError("bad grid value '" + item + "'");
    }
  }
  return g;
}

/// "kind/scheme/assoc" with the last two optional.
unb::SweepProtocol parse_curve(const std::string& text) {
  std::vector<std::string> parts;
  std::istringstream is(text);
  std::string p;
  while (std::getline(is, p, '/')) parts.push_back(p);
  if (parts.empty() || parts.size() > 3) throw unb::ConfigError("bad protocol '" + text + "'");
  const auto kind = unb::parse_protocol_kind(parts[0]);
  const auto scheme = parts.size() > 1 ? unb::parse_scheme(parts[1]) : unb::RepetitionScheme::Random;
  const auto assoc = parts.size() > 2 ? unb::parse_association(parts[2]) : unb::Association::NoAssociation;
  auto spec = unb::ProtocolSpec::uniform(kind, scheme, assoc, 1);
  return {unb::label(spec), spec, {}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ultra-narrowband IoT spectrum sharing: closed forms, simulation and figures"};
  app.require_subcommand(1);

  Common common;
  SimFlags sim;

  auto* analytic = app.add_subcommand("analytic", "print the closed-form success probability");
  add_common(analytic, common);

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo success probability with 95% CI");
  add_common(simulate, common);
  add_sim(simulate, sim);

  auto* capacity = app.add_subcommand("capacity", "supported devices for a success constraint");
  add_common(capacity, common);
  double gamma = 0.9;
  double area_km2 = 625.0;
  capacity->add_option("--gamma", gamma, "success probability constraint in (0,1)");
  capacity->add_option("--area-km2", area_km2, "deployment area");

  auto* sweep = app.add_subcommand("sweep", "sweep one parameter and write a CSV");
  add_common(sweep, common, false);
  add_sim(sweep, sim);
  std::string param = "tau_db", grid_text = "-10:20:1", engine = "analytic", sweep_out;
  std::vector<std::string> curves = {"benchmark"};
  sweep->add_option("--param", param, "config key or tau_db");
  sweep->add_option("--grid", grid_text, "lo:hi:step or comma list");
  sweep->add_option("--curves", curves, "kind[/scheme[/assoc]], repeatable")->delimiter(',');
  sweep->add_option("--engine", engine, "analytic | mc | both");
  sweep->add_option("--out", sweep_out, "CSV path (default <out dir>/sweep.csv)");

  auto* reproduce = app.add_subcommand("reproduce", "write <fig>.csv and <fig>.svg");
  std::string figure;
  std::string out_dir = default_out_dir();
  bool no_mc = false;
  SimFlags rsim;
  rsim.realizations = 2000;
  reproduce->add_option("figure", figure, "fig3 | fig4 | fig5 | fig6a | fig6b | fig7")->required();
  reproduce->add_option("--out", out_dir, "output directory (default $UNBSHARE_OUT_DIR or .)");
  reproduce->add_flag("--no-mc", no_mc, "analytic curves only");
  add_sim(reproduce, rsim);

  auto* validate = app.add_subcommand("validate", "run the built-in property suite");
  unb::ValidationOptions vopt;
  validate->add_flag("--quick", vopt.quick, "smaller sample sizes");
  validate->add_option("--corrupt-xi", vopt.xi_scale, "scale xi on the analytic side (mutation check)");
  validate->add_option("--seed", vopt.seed, "master seed");
  validate->add_option("--jobs", vopt.workers, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (common.dump) {
      std::cout << unb::dump_config(build_config(common));
      return 0;
    }

    if (analytic->parsed()) {
      auto cfg = build_config(common);
      const auto spec = build_spec(common, cfg);
      std::printf("%.9g\n", unb::success_probability(cfg, spec));
      return 0;
    }

    if (simulate->parsed()) {
      auto cfg = build_config(common);
      const auto spec = build_spec(common, cfg);
      const auto so = build_sim(sim);
      if (unb::torus_too_small(cfg, so))
        std::cerr << "warning: torus side is small relative to the base-station spacing\n";
      const auto e = unb::estimate_success_probability(cfg, spec, so);
      std::printf("%.9g +- %.9g (%llu realizations)\n", e.value, e.ci_half,
                  static_cast<unsigned long long>(e.realizations));
      return 0;
    }

    if (capacity->parsed()) {
      auto cfg = build_config(common);
      const auto spec = build_spec(common, cfg);
      const unb::CapacityQuery q{gamma, spec};
      double density = 0.0;
      if (unb::has_capacity_closed_form(cfg, spec)) {
        density = unb::capacity_closed_form(cfg, q);
      } else {
        const auto r = unb::capacity_numeric(cfg, q);
        if (!r.reachable) {
          std::printf("unreachable\n");
          return 0;
        }
        density = r.capacity;
      }
      std::printf("%.9g\n", density * area_km2 * 1e6);
      return 0;
    }

    if (sweep->parsed()) {
      unb::SweepSpec s;
      s.base = build_config(common);
      s.param = param;
      s.grid = parse_grid(grid_text);
      for (const auto& c : curves) s.protocols.push_back(parse_curve(c));
      s.engine = unb::parse_engine(engine);
      s.sim = build_sim(sim);
      s.output_path = sweep_out.empty() ? (std::filesystem::path(default_out_dir()) / "sweep.csv").string()
                                        : sweep_out;
      unb::run_sweep(s);
      std::printf("%s\n", s.output_path.c_str());
      return 0;
    }

    if (reproduce->parsed()) {
      unb::ReproduceOptions o;
      o.sim = build_sim(rsim);
      o.monte_carlo = !no_mc;
      const auto out = unb::reproduce_figure(unb::parse_figure(figure), out_dir, o);
      std::printf("%s\n%s\n", out.csv_path.c_str(), out.svg_path.c_str());
      return 0;
    }

    if (validate->parsed()) {
      const auto report = unb::run_validation(vopt);
      for (const auto& c : report.checks)
        std::printf("%s %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
      return report.all_passed() ? 0 : kExitValidation;
    }
  } catch (const unb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}

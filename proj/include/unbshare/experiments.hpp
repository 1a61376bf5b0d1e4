#pragma once

// Parameter sweeps, curve statistics and figure presets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "config.hpp"
#include "report.hpp"
#include "simulator.hpp"

namespace unb {

enum class Engine { Analytic, MonteCarlo, Both };

inline Engine parse_engine(std::string_view s) {
  if (s == "analytic") return Engine::Analytic;
  if (s == "mc" || s == "montecarlo") return Engine::MonteCarlo;
  if (s == "both") return Engine::Both;
  throw std::invalid_argument("unknown engine '" + std::string(s) + "'");
}

/// A curve in a sweep: a protocol plus per-curve config overrides.
struct SweepProtocol {
  std::string label;
  ProtocolSpec spec;
  std::vector<std::string> overrides;  // key=value, file units
};

/// Swept names: any config key, or `tau_db` (sets tau from dB).
struct SweepSpec {
  NetworkConfig base;
  std::string param;
  std::vector<double> grid;  // file units
  std::vector<SweepProtocol> protocols;
  Engine engine = Engine::Analytic;
  SimOptions sim;
  std::string output_path;  // CSV destination; empty for none
};

struct SweepRow {
  double param = 0.0;
  std::string protocol;
  ProtocolSpec spec;
  std::optional<double> analytic;
  std::optional<Estimate> mc;
  std::string analytic_error;
  std::string mc_error;
  std::uint64_t seed = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;

  std::vector<CsvRow> csv_rows() const;
  /// (param, value) of one protocol and engine, in grid order.
  std::vector<std::pair<double, double>> curve(const std::string& protocol, bool mc = false) const;
};

inline bool is_sweep_param(std::string_view name) { return name == "tau_db" || is_config_key(name); }

inline void validate_sweep(const SweepSpec& s) {
  if (!is_sweep_param(s.param))
    throw ConfigError("unknown sweep parameter '" + s.param + "'");
  if (s.grid.empty()) throw ConfigError("sweep grid is empty");
  if (!std::is_sorted(s.grid.begin(), s.grid.end())) throw ConfigError("sweep grid must be sorted");
  if (s.protocols.empty()) throw ConfigError("sweep needs at least one protocol");
  for (const auto& p : s.protocols)
    if (p.label.find(',') != std::string::npos) throw ConfigError("protocol labels may not contain ','");
}

namespace detail {

inline void apply_param(NetworkConfig& cfg, const std::string& name, double v) {
  if (name == "tau_db")
    cfg.tau = db_to_linear(v);
  else
    set_config_value(cfg, name, format_real(v));
}

/// Config and spec for one curve at one grid point. Existing is pinned to
/// one band; uniform band probabilities follow M.
inline std::pair<NetworkConfig, ProtocolSpec> point_setup(const SweepSpec& s, const SweepProtocol& p,
                                                          double v) {
  NetworkConfig cfg = s.base;
  for (const auto& o : p.overrides) apply_override(cfg, o);
  apply_param(cfg, s.param, v);
  ProtocolSpec spec = p.spec;
  if (spec.kind == ProtocolKind::Existing) cfg.M = 1;
  if ((spec.band_probs.empty() || spec.has_uniform_probs()) && cfg.M >= 1)
    spec.band_probs.assign(static_cast<std::size_t>(cfg.M), 1.0 / cfg.M);
  return {cfg, spec};
}

}  // namespace detail

/// Fills every row; engine failures are recorded per row.
inline SweepResult run_sweep(const SweepSpec& s) {
  validate_sweep(s);
  SweepResult result;
  const bool want_analytic = s.engine != Engine::MonteCarlo;
  const bool want_mc = s.engine != Engine::Analytic;

  for (const auto& proto : s.protocols) {
    const std::size_t first = result.rows.size();
    for (double v : s.grid) {
      SweepRow row;
      row.param = v;
      row.protocol = proto.label;
      row.seed = s.sim.master_seed;
      try {
        auto [cfg, spec] = detail::point_setup(s, proto, v);
        row.spec = spec;
        ensure_valid(cfg, spec);
        if (want_analytic) {
          try {
            row.analytic = success_probability(cfg, spec);
          } catch (const std::exception& e) {
            row.analytic_error = e.what();
          }
        }
      } catch (const std::exception& e) {
        row.analytic_error = e.what();
        if (want_mc) row.mc_error = e.what();
      }
      result.rows.push_back(std::move(row));
    }
    if (!want_mc) continue;

    if (s.param == "tau" || s.param == "tau_db") {
      // one set of realizations thresholded across the whole grid
      try {
        auto [cfg, spec] = detail::point_setup(s, proto, s.grid.front());
        std::vector<double> taus;
        for (double v : s.grid) taus.push_back(s.param == "tau" ? v : db_to_linear(v));
        ensure_valid(cfg, spec);
        const auto est = sinr_cdf(cfg, spec, s.sim, taus);
        for (std::size_t k = 0; k < est.size(); ++k)
          if (result.rows[first + k].mc_error.empty()) result.rows[first + k].mc = est[k];
      } catch (const std::exception& e) {
        for (std::size_t k = first; k < result.rows.size(); ++k) result.rows[k].mc_error = e.what();
      }
    } else {
      for (std::size_t k = first; k < result.rows.size(); ++k) {
        auto& row = result.rows[k];
        if (!row.mc_error.empty()) continue;
        try {
          auto [cfg, spec] = detail::point_setup(s, proto, row.param);
          row.mc = estimate_success_probability(cfg, spec, s.sim);
        } catch (const std::exception& e) {
          row.mc_error = e.what();
        }
      }
    }
  }

  if (!s.output_path.empty()) write_text(s.output_path, to_csv(result.csv_rows()));
  return result;
}

inline std::vector<CsvRow> SweepResult::csv_rows() const {
  std::vector<CsvRow> out;
  for (const auto& r : rows) {
    CsvRow base;
    base.param = r.param;
    base.protocol = r.protocol;
    base.scheme = std::string(to_string(r.spec.scheme));
    base.association = std::string(to_string(r.spec.association));
    if (r.analytic || !r.analytic_error.empty()) {
      CsvRow a = base;
      a.engine = r.analytic ? "analytic" : "analytic-error";
      a.value = r.analytic.value_or(std::nan(""));
      out.push_back(a);
    }
    if (r.mc || !r.mc_error.empty()) {
      CsvRow m = base;
      m.engine = r.mc ? "mc" : "mc-error";
      m.value = r.mc ? r.mc->value : std::nan("");
      m.ci_half = r.mc ? r.mc->ci_half : 0.0;
      m.realizations = r.mc ? r.mc->realizations : 0;
      m.seed = r.seed;
      out.push_back(m);
    }
  }
  return out;
}

inline std::vector<std::pair<double, double>> SweepResult::curve(const std::string& protocol,
                                                                 bool mc) const {
  std::vector<std::pair<double, double>> out;
  for (const auto& r : rows) {
    if (r.protocol != protocol) continue;
    if (mc && r.mc) out.emplace_back(r.param, r.mc->value);
    if (!mc && r.analytic) out.emplace_back(r.param, *r.analytic);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Curve statistics

class NotBracketed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// tau (dB) where a non-increasing success curve crosses `level`, by linear
/// interpolation between the bracketing grid points.
inline double median_sinr(const std::vector<std::pair<double, double>>& curve, double level = 0.5) {
  for (std::size_t k = 0; k < curve.size(); ++k) {
    if (curve[k].second == level) return curve[k].first;
    if (k + 1 == curve.size()) break;
    const auto [x0, y0] = curve[k];
    const auto [x1, y1] = curve[k + 1];
    if (y0 > level && y1 < level) return x0 + (y0 - level) / (y0 - y1) * (x1 - x0);
  }
  throw NotBracketed("curve never crosses " + format_real(level));
}

/// tau (dB) at 95% success: the 5th percentile of the max-SINR distribution.
inline double cell_edge_sinr(const std::vector<std::pair<double, double>>& curve) {
  return median_sinr(curve, 0.95);
}

// ---------------------------------------------------------------------------
// Capacity curves

struct CapacityRow {
  std::string protocol;
  ProtocolSpec spec;
  double gamma = 0.0;
  double density = 0.0;  // devices per m^2
  double devices = 0.0;  // density * area
  bool reachable = true;
  bool closed_form = false;
  std::string error;
};

/// Supported devices over `area_m2` for each protocol and gamma. Closed
/// forms are used where they exist; other combinations are inverted
/// numerically.
inline std::vector<CapacityRow> capacity_curve(const NetworkConfig& cfg,
                                               const std::vector<SweepProtocol>& protocols,
                                               const std::vector<double>& gammas, double area_m2) {
  std::vector<CapacityRow> out;
  for (const auto& p : protocols) {
    SweepSpec shim;
    shim.base = cfg;
    shim.param = "tau";
    for (double g : gammas) {
      CapacityRow row;
      row.protocol = p.label;
      row.gamma = g;
      try {
        auto [c, spec] = detail::point_setup(shim, p, cfg.tau);
        row.spec = spec;
        const CapacityQuery q{g, spec};
        const CapacityResult num = capacity_numeric(c, q);
        row.reachable = num.reachable;
        if (has_capacity_closed_form(c, spec)) {
          row.closed_form = true;
          row.density = capacity_closed_form(c, q);
        } else {
          row.density = num.capacity;
        }
        row.devices = row.density * area_m2;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

inline std::vector<CsvRow> capacity_csv_rows(const std::vector<CapacityRow>& rows) {
  std::vector<CsvRow> out;
  for (const auto& r : rows) {
    CsvRow c;
    c.param = r.gamma;
    c.protocol = r.protocol;
    c.scheme = std::string(to_string(r.spec.scheme));
    c.association = std::string(to_string(r.spec.association));
    c.engine = !r.error.empty() ? "analytic-error" : r.reachable ? "analytic" : "analytic-unreachable";
    c.value = r.error.empty() ? r.devices : std::nan("");
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Figure presets

enum class FigureId { Fig3, Fig4, Fig5, Fig6a, Fig6b, Fig7 };

inline std::string_view to_string(FigureId id) {
  switch (id) {
    case FigureId::Fig3: return "fig3";
    case FigureId::Fig4: return "fig4";
    case FigureId::Fig5: return "fig5";
    case FigureId::Fig6a: return "fig6a";
    case FigureId::Fig6b: return "fig6b";
    case FigureId::Fig7: return "fig7";
  }
  return "?";
}

inline FigureId parse_figure(std::string_view s) {
  for (auto id : {FigureId::Fig3, FigureId::Fig4, FigureId::Fig5, FigureId::Fig6a, FigureId::Fig6b,
                  FigureId::Fig7})
    if (s == to_string(id)) return id;
  throw std::invalid_argument("unknown figure '" + std::string(s) + "'");
}

/// Deployment shared by every preset: 25 BSs over 25x25 km^2 with the
/// per-BS densities of the Sigfox-US parameter set.
namespace preset {

inline constexpr double kAreaM2 = 625e6;
inline constexpr double kBsPerArea = 25.0;
inline constexpr double kDevicesPerBs = 50e3;
inline constexpr double kLambdaT = 2.8e-3;

inline NetworkConfig base() {
  NetworkConfig c;
  c.lambda_bs = kBsPerArea / kAreaM2;
  c.lambda_iot = kDevicesPerBs * c.lambda_bs;
  c.lambda_inc = 1e3 * kLambdaT * c.lambda_bs;
  c.t_s = 0.347;
  c.T_s = c.t_s / kLambdaT;
  c.tau = db_to_linear(5.0);
  return c;
}

/// Incumbents as numerous as IoT devices (per BS), times the activity factor.
inline double high_incumbent_density() { return kDevicesPerBs * kLambdaT * base().lambda_bs; }
inline double low_incumbent_density() { return 1e3 * kLambdaT * base().lambda_bs; }

inline std::vector<double> tau_db_grid() {
  std::vector<double> g;
  for (int d = -40; d <= 20; ++d) g.push_back(d);
  return g;
}

inline SweepProtocol curve(std::string label, ProtocolKind k, RepetitionScheme s, Association a,
                           std::vector<std::string> overrides = {}) {
  return {std::move(label), ProtocolSpec::uniform(k, s, a, 1), std::move(overrides)};
}

}  // namespace preset

struct ReproduceOptions {
  SimOptions sim;           // realizations, seed, workers, torus
  bool monte_carlo = true;  // add MC rows next to the analytic ones
};

struct FigureOutput {
  FigureId id;
  std::vector<CsvRow> rows;
  SweepResult sweep;                 // empty for fig7
  std::vector<CapacityRow> capacity; // fig7 only
  std::string csv_path;
  std::string svg_path;
};

/// Sweep definition behind a success-probability figure.
inline SweepSpec figure_sweep(FigureId id, const ReproduceOptions& opts) {
  using enum ProtocolKind;
  using enum RepetitionScheme;
  using enum Association;
  SweepSpec s;
  s.base = preset::base();
  s.engine = opts.monte_carlo ? Engine::Both : Engine::Analytic;
  s.sim = opts.sim;
  switch (id) {
    case FigureId::Fig3:
      s.param = "tau_db";
      s.grid = preset::tau_db_grid();
      s.protocols = {
          preset::curve("existing[slotted-tf]", Existing, Random, NoAssociation, {"beta_t=1", "beta_f=1"}),
          preset::curve("existing[slotted-t]", Existing, Random, NoAssociation, {"beta_t=1", "beta_f=2"}),
          preset::curve("existing[slotted-f]", Existing, Random, NoAssociation, {"beta_t=2", "beta_f=1"}),
          preset::curve("existing[unslotted-tf]", Existing, Random, NoAssociation, {"beta_t=2", "beta_f=2"}),
      };
      break;
    case FigureId::Fig4:
      s.param = "tau_db";
      s.grid = preset::tau_db_grid();
      s.protocols = {
          preset::curve("existing", Existing, Random, NoAssociation),
          preset::curve("benchmark", Benchmark, Random, NoAssociation),
          preset::curve("slotted-mb", SlottedMultiband, Random, NoAssociation),
          preset::curve("unslotted-mb", UnslottedMultiband, Random, NoAssociation),
          preset::curve("unslotted-mb-pn", UnslottedMultiband, PN, NoAssociation),
          preset::curve("mb-nearest", SlottedMultiband, Random, NearestBS),
          preset::curve("mb-nearest-pn", SlottedMultiband, PN, NearestBS),
          preset::curve("existing-nearest", Existing, Random, NearestBS),
      };
      break;
    case FigureId::Fig5: {
      s.param = "M";
      for (int m = 1; m <= 9; ++m) s.grid.push_back(m);
      const std::string low = "lambda_inc=" + format_real(preset::low_incumbent_density() * 1e6);
      const std::string high = "lambda_inc=" + format_real(preset::high_incumbent_density() * 1e6);
      for (const auto& [tag, ov] : {std::pair{"low", low}, std::pair{"high", high}}) {
        const std::string t(tag);
        s.protocols.push_back(preset::curve("existing@" + t, Existing, Random, NoAssociation, {ov}));
        s.protocols.push_back(preset::curve("benchmark@" + t, Benchmark, Random, NoAssociation, {ov}));
        s.protocols.push_back(preset::curve("slotted-mb@" + t, SlottedMultiband, Random, NoAssociation, {ov}));
        s.protocols.push_back(preset::curve("unslotted-mb@" + t, UnslottedMultiband, Random, NoAssociation, {ov}));
      }
      break;
    }
    case FigureId::Fig6a:
    case FigureId::Fig6b: {
      s.param = "N";
      for (int n = 1; n <= 8; ++n) s.grid.push_back(n);
      const double inc = id == FigureId::Fig6a ? preset::low_incumbent_density()
                                               : preset::high_incumbent_density();
      s.base.lambda_inc = inc;
      s.protocols = {
          preset::curve("existing", Existing, Random, NoAssociation),
          preset::curve("benchmark", Benchmark, Random, NoAssociation),
          preset::curve("slotted-mb", SlottedMultiband, Random, NoAssociation),
          preset::curve("unslotted-mb", UnslottedMultiband, Random, NoAssociation),
      };
      break;
    }
    case FigureId::Fig7:
      throw std::invalid_argument("fig7 is a capacity figure");
  }
  return s;
}

inline std::vector<double> fig7_gamma_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 19; ++k) g.push_back(0.05 * k);
  g.push_back(0.98);
  g.push_back(0.99);
  return g;
}

inline std::vector<SweepProtocol> fig7_protocols() {
  using enum ProtocolKind;
  using enum RepetitionScheme;
  using enum Association;
  return {
      preset::curve("existing", Existing, Random, NoAssociation),
      preset::curve("slotted-mb", SlottedMultiband, Random, NoAssociation),
      preset::curve("unslotted-mb", UnslottedMultiband, Random, NoAssociation),
      preset::curve("mb-nearest", SlottedMultiband, Random, NearestBS),
  };
}

/// Builds a figure's rows and writes <id>.csv and <id>.svg into out_dir.
inline FigureOutput reproduce_figure(FigureId id, const std::string& out_dir,
                                     const ReproduceOptions& opts = {}) {
  FigureOutput out;
  out.id = id;
  ChartSpec chart;
  chart.y_label = "success probability";
  switch (id) {
    case FigureId::Fig3: chart.title = "Existing protocol under different access cases"; break;
    case FigureId::Fig4: chart.title = "Success probability of the access protocols"; break;
    case FigureId::Fig5: chart.title = "Success probability vs number of bands M"; break;
    case FigureId::Fig6a: chart.title = "Success probability vs N (low incumbent density)"; break;
    case FigureId::Fig6b: chart.title = "Success probability vs N (high incumbent density)"; break;
    case FigureId::Fig7: chart.title = "Transmission capacity (devices over 625 km^2)"; break;
  }

  if (id == FigureId::Fig7) {
    out.capacity = capacity_curve(preset::base(), fig7_protocols(), fig7_gamma_grid(), preset::kAreaM2);
    out.rows = capacity_csv_rows(out.capacity);
    chart.x_label = "success probability constraint gamma";
    chart.y_label = "supported devices";
    chart.log_y = true;
  } else {
    const SweepSpec s = figure_sweep(id, opts);
    out.sweep = run_sweep(s);
    out.rows = out.sweep.csv_rows();
    chart.x_label = s.param == "tau_db" ? "SINR threshold (dB)" : s.param;
  }

  std::filesystem::create_directories(out_dir);
  const std::string stem = (std::filesystem::path(out_dir) / std::string(to_string(id))).string();
  out.csv_path = stem + ".csv";
  out.svg_path = stem + ".svg";
  write_text(out.csv_path, to_csv(out.rows));
  write_text(out.svg_path, render_svg(chart, series_from_rows(out.rows)));
  return out;
}

}  // namespace unb

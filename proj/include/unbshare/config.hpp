#pragma once

// Network and protocol parameters, their validation, and the derived
// quantities (power ratios, thinned interferer densities) shared by the
// analytic and Monte-Carlo engines.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace unb {

enum class ProtocolKind { Existing, Benchmark, SlottedMultiband, UnslottedMultiband };
enum class RepetitionScheme { Random, PN };
enum class Association { NoAssociation, NearestBS };

/// Physical and protocol parameters. Densities are per m^2; powers in dBm;
/// bandwidths in Hz; durations in seconds; tau is linear.
///
/// Defaults are the Sigfox-US deployment: 25 BSs over 625 km^2, 50e3
/// devices and 1e3*lambda_T effective incumbents per BS.
struct NetworkConfig {
  double lambda_bs = 4.0e-8;
  double lambda_iot = 2.0e-3;
  double lambda_inc = 1.12e-7;
  double p_iot_dbm = 14.0;
  double p_inc_dbm = 14.0;
  double p_noise_dbm = -146.0;
  double b_hz = 600.0;
  double B_hz = 200e3;
  double B_inc_hz = 125e3;
  int M = 5;
  int N = 3;
  double t_s = 0.347;
  double T_s = 0.347 / 2.8e-3;
  double alpha = 3.5;
  double beta_t = 2.0;
  double beta_f = 2.0;
  double tau = 3.1622776601683795;  // 5 dB

  double lambda_t() const { return t_s / T_s; }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct ProtocolSpec {
  ProtocolKind kind = ProtocolKind::Benchmark;
  RepetitionScheme scheme = RepetitionScheme::Random;
  Association association = Association::NoAssociation;
  std::vector<double> band_probs;  // p_m, one per band

  /// Spec with uniform band probabilities over `bands` bands.
  static ProtocolSpec uniform(ProtocolKind kind, RepetitionScheme scheme, Association assoc,
                              int bands) {
    ProtocolSpec s;
    s.kind = kind;
    s.scheme = scheme;
    s.association = assoc;
    s.band_probs.assign(static_cast<std::size_t>(std::max(bands, 1)),
                        1.0 / static_cast<double>(std::max(bands, 1)));
    return s;
  }

  bool has_uniform_probs() const {
    if (band_probs.empty()) return false;
    const double u = 1.0 / static_cast<double>(band_probs.size());
    return std::all_of(band_probs.begin(), band_probs.end(),
                       [u](double p) { return std::abs(p - u) <= 1e-12; });
  }

  friend bool operator==(const ProtocolSpec&, const ProtocolSpec&) = default;
};

struct DerivedParams {
  double delta = 0.0;
  double xi = 0.0;
  double p_hat_inc = 0.0;
  double p_hat_noise = 0.0;
  double lambda_iot_thinned = 0.0;
  double lambda_inc_thinned = 0.0;

  /// lambda~_IoT + P^_I^delta * lambda~_I, the effective interferer density.
  double effective_interference_density() const {
    return lambda_iot_thinned + std::pow(p_hat_inc, delta) * lambda_inc_thinned;
  }
};

// ---------------------------------------------------------------------------
// Names

inline std::string_view to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::Existing: return "existing";
    case ProtocolKind::Benchmark: return "benchmark";
    case ProtocolKind::SlottedMultiband: return "slotted-mb";
    case ProtocolKind::UnslottedMultiband: return "unslotted-mb";
  }
  return "?";
}

inline std::string_view to_string(RepetitionScheme s) {
  return s == RepetitionScheme::Random ? "random" : "pn";
}

inline std::string_view to_string(Association a) {
  return a == Association::NoAssociation ? "none" : "nearest";
}

inline ProtocolKind parse_protocol_kind(std::string_view s) {
  if (s == "existing" || s == "single-band") return ProtocolKind::Existing;
  if (s == "benchmark") return ProtocolKind::Benchmark;
  if (s == "slotted-mb" || s == "slotted" || s == "slotted-multiband")
    return ProtocolKind::SlottedMultiband;
  if (s == "unslotted-mb" || s == "unslotted" || s == "unslotted-multiband")
    return ProtocolKind::UnslottedMultiband;
  throw std::invalid_argument("unknown protocol '" + std::string(s) + "'");
}

inline RepetitionScheme parse_scheme(std::string_view s) {
  if (s == "random") return RepetitionScheme::Random;
  if (s == "pn") return RepetitionScheme::PN;
  throw std::invalid_argument("unknown repetition scheme '" + std::string(s) + "'");
}

inline Association parse_association(std::string_view s) {
  if (s == "none" || s == "no-association") return Association::NoAssociation;
  if (s == "nearest" || s == "nearest-bs") return Association::NearestBS;
  throw std::invalid_argument("unknown association '" + std::string(s) + "'");
}

inline std::string label(const ProtocolSpec& s) {
  std::string out(to_string(s.kind));
  out += '/';
  out += to_string(s.scheme);
  out += '/';
  out += to_string(s.association);
  return out;
}

// ---------------------------------------------------------------------------
// Units

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// ---------------------------------------------------------------------------
// Validation

enum class ViolationCode {
  AlphaTooSmall,
  BandProbNotSimplex,
  BandProbLength,
  ExistingWithMultipleBands,
  NonPositive,
  NegativeDensity,
  BandwidthOrder,
  DurationOrder,
  BetaOutOfRange,
  CountTooSmall,
  NotFinite,
};

inline std::string_view to_string(ViolationCode c) {
  switch (c) {
    case ViolationCode::AlphaTooSmall: return "AlphaTooSmall";
    case ViolationCode::BandProbNotSimplex: return "BandProbNotSimplex";
    case ViolationCode::BandProbLength: return "BandProbLength";
    case ViolationCode::ExistingWithMultipleBands: return "ExistingWithMultipleBands";
    case ViolationCode::NonPositive: return "NonPositive";
    case ViolationCode::NegativeDensity: return "NegativeDensity";
    case ViolationCode::BandwidthOrder: return "BandwidthOrder";
    case ViolationCode::DurationOrder: return "DurationOrder";
    case ViolationCode::BetaOutOfRange: return "BetaOutOfRange";
    case ViolationCode::CountTooSmall: return "CountTooSmall";
    case ViolationCode::NotFinite: return "NotFinite";
  }
  return "?";
}

struct Violation {
  ViolationCode code;
  std::string detail;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<Violation> violations)
      : std::runtime_error(summarize(violations)), violations_(std::move(violations)) {}
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}

  const std::vector<Violation>& violations() const { return violations_; }

  bool has(ViolationCode code) const {
    return std::any_of(violations_.begin(), violations_.end(),
                       [code](const Violation& v) { return v.code == code; });
  }

 private:
  static std::string summarize(const std::vector<Violation>& vs) {
    std::string out = "invalid configuration:";
    for (const auto& v : vs) {
      out += "\n  ";
      out += to_string(v.code);
      out += ": ";
      out += v.detail;
    }
    return out;
  }

  std::vector<Violation> violations_;
};

/// Every violated invariant of the pair; empty when valid.
inline std::vector<Violation> validate_config(const NetworkConfig& cfg, const ProtocolSpec& spec) {
  std::vector<Violation> out;
  auto add = [&](ViolationCode c, std::string d) { out.push_back({c, std::move(d)}); };

  const std::pair<const char*, double> reals[] = {
      {"lambda_bs", cfg.lambda_bs}, {"lambda_iot", cfg.lambda_iot},
      {"lambda_inc", cfg.lambda_inc}, {"p_iot_dbm", cfg.p_iot_dbm},
      {"p_inc_dbm", cfg.p_inc_dbm}, {"p_noise_dbm", cfg.p_noise_dbm},
      {"b_hz", cfg.b_hz}, {"B_hz", cfg.B_hz}, {"B_inc_hz", cfg.B_inc_hz},
      {"t_s", cfg.t_s}, {"T_s", cfg.T_s}, {"alpha", cfg.alpha},
      {"beta_t", cfg.beta_t}, {"beta_f", cfg.beta_f}, {"tau", cfg.tau}};
  for (const auto& [name, v] : reals)
    if (!std::isfinite(v)) add(ViolationCode::NotFinite, std::string(name) + " is not finite");
  if (!out.empty()) return out;

  if (cfg.alpha <= 2.0)
    add(ViolationCode::AlphaTooSmall, "alpha must exceed 2 (got " + std::to_string(cfg.alpha) + ")");
  if (cfg.lambda_bs <= 0.0) add(ViolationCode::NonPositive, "lambda_bs must be > 0");
  if (cfg.lambda_iot < 0.0) add(ViolationCode::NegativeDensity, "lambda_iot must be >= 0");
  if (cfg.lambda_inc < 0.0) add(ViolationCode::NegativeDensity, "lambda_inc must be >= 0");
  if (cfg.b_hz <= 0.0) add(ViolationCode::NonPositive, "b_hz must be > 0");
  if (cfg.B_hz <= 0.0) add(ViolationCode::NonPositive, "B_hz must be > 0");
  if (cfg.B_inc_hz <= 0.0) add(ViolationCode::NonPositive, "B_inc_hz must be > 0");
  if (cfg.t_s <= 0.0) add(ViolationCode::NonPositive, "t_s must be > 0");
  if (cfg.T_s <= 0.0) add(ViolationCode::NonPositive, "T_s must be > 0");
  if (cfg.tau <= 0.0) add(ViolationCode::NonPositive, "tau must be > 0");
  if (cfg.b_hz > cfg.B_hz) add(ViolationCode::BandwidthOrder, "b_hz must not exceed B_hz");
  if (cfg.t_s > cfg.T_s) add(ViolationCode::DurationOrder, "t_s must not exceed T_s");
  if (cfg.beta_t < 1.0 || cfg.beta_t > 2.0)
    add(ViolationCode::BetaOutOfRange, "beta_t must lie in [1,2]");
  if (cfg.beta_f < 1.0 || cfg.beta_f > 2.0)
    add(ViolationCode::BetaOutOfRange, "beta_f must lie in [1,2]");
  if (cfg.M < 1) add(ViolationCode::CountTooSmall, "M must be >= 1");
  if (cfg.N < 1) add(ViolationCode::CountTooSmall, "N must be >= 1");

  if (spec.kind == ProtocolKind::Existing && cfg.M != 1)
    add(ViolationCode::ExistingWithMultipleBands,
        "the existing protocol uses a single band (M=" + std::to_string(cfg.M) + ")");

  if (cfg.M >= 1 && spec.band_probs.size() != static_cast<std::size_t>(cfg.M)) {
    add(ViolationCode::BandProbLength, "band_probs has " + std::to_string(spec.band_probs.size()) +
                                           " entries for M=" + std::to_string(cfg.M));
  }
  const bool nonneg = std::all_of(spec.band_probs.begin(), spec.band_probs.end(),
                                  [](double p) { return p >= 0.0 && std::isfinite(p); });
  const double total = std::accumulate(spec.band_probs.begin(), spec.band_probs.end(), 0.0);
  if (!spec.band_probs.empty() && (!nonneg || std::abs(total - 1.0) > 1e-9))
    add(ViolationCode::BandProbNotSimplex, "band_probs must be non-negative and sum to 1");
  return out;
}

inline void ensure_valid(const NetworkConfig& cfg, const ProtocolSpec& spec) {
  auto v = validate_config(cfg, spec);
  if (!v.empty()) throw ConfigError(std::move(v));
}

/// Derived quantities; cfg is assumed valid.
inline DerivedParams derive_params(const NetworkConfig& cfg) {
  DerivedParams d;
  d.delta = 2.0 / cfg.alpha;
  d.xi = std::sin(std::numbers::pi * d.delta) / (d.delta * std::numbers::pi);
  const double p_iot_w = dbm_to_watts(cfg.p_iot_dbm);
  d.p_hat_inc = (dbm_to_watts(cfg.p_inc_dbm) * cfg.b_hz / cfg.B_inc_hz) / p_iot_w;
  d.p_hat_noise = dbm_to_watts(cfg.p_noise_dbm) / p_iot_w;
  const double M = static_cast<double>(cfg.M);
  d.lambda_iot_thinned = cfg.N * cfg.beta_t * (cfg.t_s / cfg.T_s) *
                         (cfg.beta_f * cfg.b_hz / (M * cfg.B_hz)) * cfg.lambda_iot;
  d.lambda_inc_thinned = std::min(1.0, cfg.B_inc_hz / (M * cfg.B_hz)) * cfg.lambda_inc;
  return d;
}

// ---------------------------------------------------------------------------
// Flat key/value config files. Densities are written per km^2.

namespace detail {

struct ConfigKey {
  const char* name;
  std::variant<double NetworkConfig::*, int NetworkConfig::*> field;
  double file_scale;  // file value = field * file_scale
};

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"lambda_bs", &NetworkConfig::lambda_bs, 1e6},
      {"lambda_iot", &NetworkConfig::lambda_iot, 1e6},
      {"lambda_inc", &NetworkConfig::lambda_inc, 1e6},
      {"p_iot_dbm", &NetworkConfig::p_iot_dbm, 1.0},
      {"p_inc_dbm", &NetworkConfig::p_inc_dbm, 1.0},
      {"p_noise_dbm", &NetworkConfig::p_noise_dbm, 1.0},
      {"b_hz", &NetworkConfig::b_hz, 1.0},
      {"B_hz", &NetworkConfig::B_hz, 1.0},
      {"B_inc_hz", &NetworkConfig::B_inc_hz, 1.0},
      {"M", &NetworkConfig::M, 1.0},
      {"N", &NetworkConfig::N, 1.0},
      {"t_s", &NetworkConfig::t_s, 1.0},
      {"T_s", &NetworkConfig::T_s, 1.0},
      {"alpha", &NetworkConfig::alpha, 1.0},
      {"beta_t", &NetworkConfig::beta_t, 1.0},
      {"beta_f", &NetworkConfig::beta_f, 1.0},
      {"tau", &NetworkConfig::tau, 1.0},
  };
  return keys;
}

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("value for '" + key + "' is not a number: '" + text + "'");
  }
  if (used != text.size()) throw ConfigError("trailing characters in value for '" + key + "'");
  return v;
}

}  // namespace detail

inline bool is_config_key(std::string_view name) {
  const auto& keys = detail::config_keys();
  return std::any_of(keys.begin(), keys.end(), [&](const auto& k) { return name == k.name; });
}

/// Sets one field from its file representation (per-km^2 densities).
inline void set_config_value(NetworkConfig& cfg, std::string_view key, const std::string& text) {
  for (const auto& k : detail::config_keys()) {
    if (key != k.name) continue;
    const double v = detail::parse_number(k.name, text);
    if (auto* dp = std::get_if<double NetworkConfig::*>(&k.field)) {
      cfg.*(*dp) = v / k.file_scale;
    } else {
      const auto ip = std::get<int NetworkConfig::*>(k.field);
      if (v != std::floor(v) || std::abs(v) > 1e9)
        throw ConfigError("value for '" + std::string(key) + "' must be an integer");
      cfg.*ip = static_cast<int>(v);
    }
    return;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

/// Value of one field in file units.
inline double get_config_value(const NetworkConfig& cfg, std::string_view key) {
  for (const auto& k : detail::config_keys()) {
    if (key != k.name) continue;
    if (auto* dp = std::get_if<double NetworkConfig::*>(&k.field)) return cfg.*(*dp) * k.file_scale;
    return static_cast<double>(cfg.*std::get<int NetworkConfig::*>(k.field));
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

/// Applies a `key=value` override.
inline void apply_override(NetworkConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override must look like key=value: '" + std::string(assignment) + "'");
  set_config_value(cfg, detail::trim(assignment.substr(0, eq)),
                   detail::trim(assignment.substr(eq + 1)));
}

/// Parses `key = value` lines; `#` starts a comment. Keys not present keep
/// their defaults.
inline NetworkConfig parse_config(std::istream& in, NetworkConfig base = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(base, detail::trim(std::string_view(body).substr(0, eq)),
                     detail::trim(std::string_view(body).substr(eq + 1)));
  }
  return base;
}

inline NetworkConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

inline std::string dump_config(const NetworkConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (const auto& k : detail::config_keys()) os << k.name << " = " << get_config_value(cfg, k.name) << '\n';
  return os.str();
}

}  // namespace unb

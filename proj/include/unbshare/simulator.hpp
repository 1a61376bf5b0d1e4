#pragma once

// Monte-Carlo engine: draws BSs, interfering devices and incumbents on a
// torus around a typical device at the origin, evaluates per-message SINRs
// and reduces success indicators across realizations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "config.hpp"
#include "geometry.hpp"
#include "rng.hpp"

namespace unb {

enum class Fidelity { Thinned, ExplicitSlots };

struct SimOptions {
  Fidelity mode = Fidelity::Thinned;
  double torus_side_m = 100e3;
  std::uint64_t realizations = 10'000;
  std::uint64_t master_seed = 1;
  bool include_noise = false;
  unsigned workers = 1;  // 0 = hardware concurrency; never changes results
  /// Links whose SINR is certainly below the floor stop accumulating
  /// interference and report 0. Only thresholds >= floor stay exact.
  double sinr_floor = 0.0;
  /// Once any counted link reaches the ceiling the realization stops;
  /// max_sinr is then only known to be >= ceiling.
  double sinr_ceiling = std::numeric_limits<double>::infinity();
  bool keep_links = false;  // record every evaluated link (disables floor/ceiling)
};

class UnsupportedFidelity : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Expected BS count below which the torus is considered too small.
inline constexpr double kMinExpectedBs = 20.0;

inline bool torus_too_small(const NetworkConfig& cfg, const SimOptions& opts) {
  return cfg.lambda_bs * opts.torus_side_m * opts.torus_side_m < kMinExpectedBs;
}

// ---------------------------------------------------------------------------
// Explicit time/frequency overlap

/// One message of one device in explicit mode.
struct Transmission {
  double start = 0.0;  // seconds in [0, T)
  int slot = 0;        // time slot index (slotted time)
  int band = 0;        // multiplexing band
  double freq = 0.0;   // centre within the band, Hz (unslotted frequency)
  int channel = 0;     // channel index within the band (slotted frequency)
};

struct OverlapRule {
  bool slotted_time = false;
  bool slotted_freq = false;
  double t = 0.0;           // message duration
  double period = 0.0;      // T
  int time_slots = 1;       // round(T/t)
  double b = 0.0;           // signal bandwidth
  double band_width = 0.0;  // width of one band as seen by the device
  int channels = 1;         // floor(band_width / b)

  /// Overlap rule for a config; beta values must be exactly 1 or 2.
  static OverlapRule from(const NetworkConfig& cfg, const ProtocolSpec& spec) {
    auto endpoint = [](double beta, const char* name) {
      if (beta != 1.0 && beta != 2.0)
        throw UnsupportedFidelity(std::string("explicit slots need ") + name + " in {1,2}");
      return beta == 1.0;
    };
    OverlapRule r;
    r.slotted_time = endpoint(cfg.beta_t, "beta_t");
    r.slotted_freq = endpoint(cfg.beta_f, "beta_f");
    r.t = cfg.t_s;
    r.period = cfg.T_s;
    r.time_slots = std::max(1, static_cast<int>(std::lround(cfg.T_s / cfg.t_s)));
    r.b = cfg.b_hz;
    const bool whole = spec.kind == ProtocolKind::Existing || spec.kind == ProtocolKind::Benchmark;
    r.band_width = whole ? cfg.M * cfg.B_hz : cfg.B_hz;
    r.channels = std::max(1, static_cast<int>(std::floor(r.band_width / cfg.b_hz)));
    return r;
  }

  static double circular(double d, double period) {
    d = std::fmod(std::abs(d), period);
    return std::min(d, period - d);
  }
};

/// True when both time and frequency overlap.
inline bool explicit_overlap(const Transmission& a, const Transmission& b, const OverlapRule& rule) {
  const bool time = rule.slotted_time
                        ? a.slot == b.slot
                        : OverlapRule::circular(a.start - b.start, rule.period) < rule.t;
  if (!time || a.band != b.band) return false;
  return rule.slotted_freq ? a.channel == b.channel
                           : OverlapRule::circular(a.freq - b.freq, rule.band_width) < rule.b;
}

// ---------------------------------------------------------------------------
// Realizations

/// Spatial draw and marks for one realization.
struct Realization {
  std::vector<Point> bs;
  std::vector<int> bs_band;           // empty when every BS hears every band
  std::vector<int> message_band;      // band used by the typical device, per message
  std::vector<Point> iot;             // interfering IoT devices (any message)
  std::vector<std::uint64_t> iot_mask;  // bit i set: interferes with message i
  std::vector<std::vector<Point>> inc;  // interfering incumbents, per message
  std::vector<Transmission> typical;    // explicit mode only
  std::uint64_t explicit_candidates = 0;

  std::size_t iot_count(int message) const {
    std::size_t n = 0;
    for (auto m : iot_mask) n += (m >> message) & 1u;
    return n;
  }
};

struct LinkSinr {
  int message;
  std::size_t bs;
  double sinr;
};

struct SinrSample {
  std::vector<LinkSinr> links;  // filled when SimOptions::keep_links
  std::vector<double> message_max;  // best counted SINR per message
  double max_sinr = 0.0;
  bool success = false;  // max_sinr >= tau
};

namespace detail {

enum class Sub : std::uint64_t {
  BsLayout = 1,
  BsBand = 2,
  DeviceBand = 3,
  IotProcess = 4,
  IncProcess = 5,
  ServingFade = 6,
  IotFade = 7,
  IncFade = 8,
  Candidates = 9,
};

constexpr std::uint64_t substream(Sub kind, std::uint64_t message = 0, std::uint64_t bs = 0) {
  return (static_cast<std::uint64_t>(kind) << 60) | ((message & 0xFFFu) << 48) | (bs & 0xFFFFFFFFu);
}

inline int sample_band(Stream& rng, const std::vector<double>& probs) {
  double u = rng.uniform();
  for (std::size_t m = 0; m + 1 < probs.size(); ++m) {
    if (u < probs[m]) return static_cast<int>(m);
    u -= probs[m];
  }
  return static_cast<int>(probs.size()) - 1;
}

inline bool bands_split(const ProtocolSpec& spec) {
  return spec.kind == ProtocolKind::SlottedMultiband || spec.kind == ProtocolKind::UnslottedMultiband;
}

/// Union of N independent thinnings of Phi_IoT at retention p, sampled
/// without materialising Phi_IoT.
inline void sample_thinned_random(const NetworkConfig& cfg, double p, const Torus& torus,
                                  Stream& rng, Realization& r) {
  const int n = cfg.N;
  const double any = -std::expm1(n * std::log1p(-p));  // 1 - (1-p)^N
  const auto count = rng.poisson(cfg.lambda_iot * any * torus.area());
  r.iot.reserve(count);
  r.iot_mask.reserve(count);
  for (std::uint64_t u = 0; u < count; ++u) {
    r.iot.push_back(torus.uniform_point(rng));
    // first retained message i has probability (1-p)^i p / any
    const double target = rng.uniform() * any;
    int first = 0;
    while (first < n - 1 && -std::expm1((first + 1) * std::log1p(-p)) <= target) ++first;
    std::uint64_t mask = std::uint64_t{1} << first;
    for (int i = first + 1; i < n; ++i)
      if (rng.uniform() < p) mask |= std::uint64_t{1} << i;
    r.iot_mask.push_back(mask);
  }
}

inline Transmission device_message(const OverlapRule& rule, double start, int slot, int band,
                                   double base_freq, int base_channel, int message, bool pn,
                                   Stream& rng) {
  Transmission tx;
  tx.start = std::fmod(start + message * rule.t, rule.period);
  tx.slot = (slot + message) % rule.time_slots;
  tx.band = band;
  if (pn) {
    // common hop pattern: only the base offset differs between devices
    constexpr double kHop = 0.6180339887498949;
    tx.freq = std::fmod(base_freq + message * kHop * rule.band_width, rule.band_width);
    tx.channel = static_cast<int>(
        (base_channel + static_cast<long long>(message) *
                            static_cast<long long>(kHop * rule.channels)) %
        rule.channels);
  } else {
    tx.freq = rng.uniform() * rule.band_width;
    tx.channel = static_cast<int>(rng.below(static_cast<std::uint32_t>(rule.channels)));
  }
  return tx;
}

/// Device bands for one device: one band for slotted multiband, one per
/// message for unslotted multiband, band 0 otherwise.
inline std::vector<int> device_bands(const ProtocolSpec& spec, int n, int bands, Stream& rng) {
  std::vector<int> out(static_cast<std::size_t>(n), 0);
  if (spec.kind == ProtocolKind::SlottedMultiband) {
    std::fill(out.begin(), out.end(), static_cast<int>(rng.below(static_cast<std::uint32_t>(bands))));
  } else if (spec.kind == ProtocolKind::UnslottedMultiband) {
    for (auto& b : out) b = static_cast<int>(rng.below(static_cast<std::uint32_t>(bands)));
  }
  return out;
}

inline void sample_explicit(const NetworkConfig& cfg, const ProtocolSpec& spec,
                            const OverlapRule& rule, const Torus& torus, Stream& rng,
                            Realization& r) {
  const int n = cfg.N;
  const bool pn = spec.scheme == RepetitionScheme::PN;

  // typical device: train starting at time 0 / slot 0
  {
    const double base_freq = rng.uniform() * rule.band_width;
    const int base_channel = static_cast<int>(rng.below(static_cast<std::uint32_t>(rule.channels)));
    r.typical.clear();
    for (int i = 0; i < n; ++i)
      r.typical.push_back(device_message(rule, 0.0, 0, r.message_band[static_cast<std::size_t>(i)],
                                         base_freq, base_channel, i, pn, rng));
  }

  // Only trains starting within N messages of the typical one can overlap
  // it; devices are sampled in that start window (an exact restriction of
  // the marked process, not a probability shortcut).
  double window_fraction = 0.0;
  if (rule.slotted_time) {
    const int slots = std::min(rule.time_slots, 2 * n - 1);
    window_fraction = static_cast<double>(slots) / rule.time_slots;
  } else {
    window_fraction = std::min(1.0, 2.0 * n * rule.t / rule.period);
  }
  const auto count = rng.poisson(cfg.lambda_iot * window_fraction * torus.area());
  r.explicit_candidates = count;
  for (std::uint64_t u = 0; u < count; ++u) {
    const Point pos = torus.uniform_point(rng);
    double start = 0.0;
    int slot = 0;
    if (rule.slotted_time) {
      const int slots = std::min(rule.time_slots, 2 * n - 1);
      const int offset = static_cast<int>(rng.below(static_cast<std::uint32_t>(slots))) - (slots == rule.time_slots ? 0 : n - 1);
      slot = ((offset % rule.time_slots) + rule.time_slots) % rule.time_slots;
      start = slot * rule.t;
    } else if (window_fraction >= 1.0) {
      start = rng.uniform() * rule.period;
    } else {
      start = std::fmod(rng.uniform(-n * rule.t, n * rule.t) + rule.period, rule.period);
    }
    const auto bands = device_bands(spec, n, cfg.M, rng);
    const double base_freq = rng.uniform() * rule.band_width;
    const int base_channel = static_cast<int>(rng.below(static_cast<std::uint32_t>(rule.channels)));
    std::uint64_t mask = 0;
    for (int j = 0; j < n; ++j) {
      const Transmission tx = device_message(rule, start, slot, bands[static_cast<std::size_t>(j)],
                                             base_freq, base_channel, j, pn, rng);
      for (int i = 0; i < n; ++i)
        if (explicit_overlap(r.typical[static_cast<std::size_t>(i)], tx, rule))
          mask |= std::uint64_t{1} << i;
    }
    if (mask != 0) {
      r.iot.push_back(pos);
      r.iot_mask.push_back(mask);
    }
  }
}

}  // namespace detail

/// Draws the point processes and marks of realization `index`.
inline Realization draw_realization(const NetworkConfig& cfg, const ProtocolSpec& spec,
                                    const SimOptions& opts, std::uint64_t index) {
  using detail::Sub;
  using detail::substream;
  if (cfg.N > 64) throw std::invalid_argument("simulation supports N <= 64");
  const Torus torus(opts.torus_side_m);
  const DerivedParams dp = derive_params(cfg);
  Realization r;

  {
    Stream rng(opts.master_seed, index, substream(Sub::BsLayout));
    r.bs = sample_hppp(cfg.lambda_bs, torus, rng);
  }
  if (detail::bands_split(spec)) {
    Stream rng(opts.master_seed, index, substream(Sub::BsBand));
    r.bs_band.reserve(r.bs.size());
    for (std::size_t j = 0; j < r.bs.size(); ++j) r.bs_band.push_back(detail::sample_band(rng, spec.band_probs));
  }
  {
    Stream rng(opts.master_seed, index, substream(Sub::DeviceBand));
    r.message_band = detail::device_bands(spec, cfg.N, cfg.M, rng);
  }

  if (opts.mode == Fidelity::ExplicitSlots) {
    const OverlapRule rule = OverlapRule::from(cfg, spec);
    Stream rng(opts.master_seed, index, substream(Sub::Candidates));
    detail::sample_explicit(cfg, spec, rule, torus, rng, r);
  } else if (cfg.lambda_iot > 0.0) {
    const double p = dp.lambda_iot_thinned / cfg.lambda_iot;
    if (p > 1.0) throw std::invalid_argument("IoT retention probability exceeds 1");
    Stream rng(opts.master_seed, index, substream(Sub::IotProcess));
    if (spec.scheme == RepetitionScheme::PN) {
      r.iot = sample_hppp(dp.lambda_iot_thinned, torus, rng);
      const std::uint64_t all = cfg.N == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << cfg.N) - 1;
      r.iot_mask.assign(r.iot.size(), all);
    } else if (p > 0.0) {
      detail::sample_thinned_random(cfg, p, torus, rng, r);
    }
  }

  r.inc.resize(static_cast<std::size_t>(cfg.N));
  for (int i = 0; i < cfg.N; ++i) {
    Stream rng(opts.master_seed, index, substream(Sub::IncProcess, static_cast<std::uint64_t>(i)));
    r.inc[static_cast<std::size_t>(i)] = sample_hppp(dp.lambda_inc_thinned, torus, rng);
  }
  return r;
}

namespace detail {

struct LinkContext {
  const Torus& torus;
  const Realization& r;
  double half_alpha;
  double p_hat_inc;
  double noise;
  std::uint64_t seed;
  std::uint64_t index;
  bool pn_shared_fades;
};

/// SINR of message i at BS j; returns 0 once it is certainly below floor.
inline double link_sinr(const LinkContext& c, int i, std::size_t j, double floor) {
  const Point origin{};
  const Point bs = c.r.bs[j];
  const double x2 = c.torus.distance_sq(origin, bs);
  Stream serving(c.seed, c.index, substream(Sub::ServingFade, static_cast<std::uint64_t>(i), j));
  const double signal = serving.exponential() * std::pow(x2, -c.half_alpha);
  const double limit = floor > 0.0 ? signal / floor : std::numeric_limits<double>::infinity();

  double interference = c.noise;
  if (interference > limit) return 0.0;

  const std::uint64_t fade_message = c.pn_shared_fades ? 0 : static_cast<std::uint64_t>(i);
  Stream iot_fade(c.seed, c.index, substream(Sub::IotFade, fade_message, j));
  const std::uint64_t bit = std::uint64_t{1} << i;
  for (std::size_t u = 0; u < c.r.iot.size(); ++u) {
    if (!(c.r.iot_mask[u] & bit)) continue;
    const double y2 = c.torus.distance_sq(c.r.iot[u], bs);
    interference += iot_fade.exponential() * std::pow(y2, -c.half_alpha);
    if (interference > limit) return 0.0;
  }
  Stream inc_fade(c.seed, c.index, substream(Sub::IncFade, static_cast<std::uint64_t>(i), j));
  for (const Point& k : c.r.inc[static_cast<std::size_t>(i)]) {
    const double y2 = c.torus.distance_sq(k, bs);
    interference += c.p_hat_inc * inc_fade.exponential() * std::pow(y2, -c.half_alpha);
    if (interference > limit) return 0.0;
  }
  if (interference <= 0.0) return std::numeric_limits<double>::infinity();
  return signal / interference;
}

}  // namespace detail

/// Evaluates the SINRs of an already drawn realization.
inline SinrSample evaluate_realization(const Realization& r, const NetworkConfig& cfg,
                                       const ProtocolSpec& spec, const SimOptions& opts,
                                       std::uint64_t index) {
  const Torus torus(opts.torus_side_m);
  const DerivedParams dp = derive_params(cfg);
  const double floor = opts.keep_links ? 0.0 : opts.sinr_floor;
  const double ceiling = opts.keep_links ? std::numeric_limits<double>::infinity() : opts.sinr_ceiling;
  const detail::LinkContext ctx{torus,
                                r,
                                cfg.alpha / 2.0,
                                dp.p_hat_inc,
                                opts.include_noise ? dp.p_hat_noise : 0.0,
                                opts.master_seed,
                                index,
                                spec.scheme == RepetitionScheme::PN && opts.mode == Fidelity::Thinned};

  SinrSample s;
  s.message_max.assign(static_cast<std::size_t>(cfg.N), 0.0);
  const bool split = detail::bands_split(spec);
  const std::span<const int> assignment(r.bs_band);

  for (int i = 0; i < cfg.N && s.max_sinr < ceiling; ++i) {
    const int band = r.message_band[static_cast<std::size_t>(i)];
    auto consider = [&](std::size_t j) {
      const double v = detail::link_sinr(ctx, i, j, floor);
      if (opts.keep_links) s.links.push_back({i, j, v});
      auto& mm = s.message_max[static_cast<std::size_t>(i)];
      mm = std::max(mm, v);
      s.max_sinr = std::max(s.max_sinr, v);
    };
    if (spec.association == Association::NearestBS) {
      const auto j = nearest_listening_bs(Point{}, r.bs, assignment,
                                          split ? std::optional<int>(band) : std::nullopt, torus);
      if (j) consider(*j);
    } else {
      for (std::size_t j = 0; j < r.bs.size() && s.max_sinr < ceiling; ++j) {
        if (split && r.bs_band[j] != band) continue;
        consider(j);
      }
    }
  }
  s.success = s.max_sinr >= cfg.tau;
  return s;
}

/// One full realization: draw, then evaluate.
inline SinrSample simulate_realization(const NetworkConfig& cfg, const ProtocolSpec& spec,
                                       const SimOptions& opts, std::uint64_t index) {
  return evaluate_realization(draw_realization(cfg, spec, opts, index), cfg, spec, opts, index);
}

// ---------------------------------------------------------------------------
// Reduction

/// Runs fn(index) for every realization and returns the results in index
/// order. Work is split into contiguous blocks across workers.
template <class Fn>
auto map_realizations(std::uint64_t count, unsigned workers, Fn&& fn) {
  using Result = decltype(fn(std::uint64_t{0}));
  std::vector<Result> out(count);
  unsigned w = workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : workers;
  w = static_cast<unsigned>(std::min<std::uint64_t>(w, std::max<std::uint64_t>(count, 1)));
  if (w <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::uint64_t block = (count + w - 1) / w;
  for (unsigned t = 0; t < w; ++t) {
    const std::uint64_t lo = t * block;
    const std::uint64_t hi = std::min(count, lo + block);
    pool.emplace_back([&, lo, hi] {
      for (std::uint64_t i = lo; i < hi; ++i) out[i] = fn(i);
    });
  }
  pool.clear();  // joins
  return out;
}

struct Estimate {
  double value = 0.0;    // sample mean
  double ci_half = 0.0;  // Wilson score half-width
  std::uint64_t successes = 0;
  std::uint64_t realizations = 0;
};

/// Wilson score interval half-width for k successes out of n.
inline double wilson_half_width(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054) {
  if (n == 0) return 1.0;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  return z / (1.0 + z2 / nn) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
}

inline Estimate make_estimate(std::uint64_t k, std::uint64_t n) {
  Estimate e;
  e.successes = k;
  e.realizations = n;
  e.value = n ? static_cast<double>(k) / static_cast<double>(n) : 0.0;
  e.ci_half = wilson_half_width(k, n);
  return e;
}

/// Max-SINR per realization, exact inside [floor, ceiling).
inline std::vector<double> sample_max_sinr(const NetworkConfig& cfg, const ProtocolSpec& spec,
                                           SimOptions opts, double floor, double ceiling) {
  ensure_valid(cfg, spec);
  opts.sinr_floor = floor;
  opts.sinr_ceiling = ceiling;
  opts.keep_links = false;
  return map_realizations(opts.realizations, opts.workers, [&](std::uint64_t i) {
    return simulate_realization(cfg, spec, opts, i).max_sinr;
  });
}

inline Estimate estimate_success_probability(const NetworkConfig& cfg, const ProtocolSpec& spec,
                                             const SimOptions& opts) {
  const auto mx = sample_max_sinr(cfg, spec, opts, cfg.tau, cfg.tau);
  const auto k = static_cast<std::uint64_t>(
      std::count_if(mx.begin(), mx.end(), [&](double v) { return v >= cfg.tau; }));
  return make_estimate(k, mx.size());
}

/// Success probability at every tau of an ascending grid from one shared
/// set of realizations; non-increasing in tau by construction.
inline std::vector<Estimate> sinr_cdf(const NetworkConfig& cfg, const ProtocolSpec& spec,
                                      const SimOptions& opts, const std::vector<double>& tau_grid) {
  if (tau_grid.empty()) return {};
  if (!std::is_sorted(tau_grid.begin(), tau_grid.end()))
    throw std::invalid_argument("tau grid must be ascending");
  const auto mx = sample_max_sinr(cfg, spec, opts, tau_grid.front(), tau_grid.back());
  std::vector<Estimate> out;
  out.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    const auto k = static_cast<std::uint64_t>(
        std::count_if(mx.begin(), mx.end(), [&](double v) { return v >= tau; }));
    out.push_back(make_estimate(k, mx.size()));
  }
  return out;
}

}  // namespace unb

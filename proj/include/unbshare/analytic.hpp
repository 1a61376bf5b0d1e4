#pragma once

// Closed-form success probabilities and transmission capacities for the
// four access protocols in the interference-limited regime.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"

namespace unb {

enum class AnalyticErrorCode {
  UnsupportedCombination,
  AllocationMismatch,
  InvalidArgument,
  Overflow,
};

class AnalyticError : public std::runtime_error {
 public:
  AnalyticError(AnalyticErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  AnalyticErrorCode code() const { return code_; }

 private:
  AnalyticErrorCode code_;
};

/// Largest repetition count the alternating binomial sums accept.
inline constexpr int kMaxRepetitions = 64;

/// Compositions enumerated for the unslotted-multiband average are capped
/// at this many.
inline constexpr std::uint64_t kMaxCompositions = 1'000'000;

namespace detail {

using WideFloat = boost::multiprecision::cpp_bin_float_50;

/// Neumaier-compensated accumulator.
template <class Real>
class CompensatedSum {
 public:
  void add(const Real& v) {
    const Real t = sum_ + v;
    if (abs_(sum_) >= abs_(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  Real value() const { return sum_ + comp_; }

 private:
  static Real abs_(const Real& x) { return x < 0 ? Real(-x) : x; }
  Real sum_ = 0;
  Real comp_ = 0;
};

/// sum_{k=k0}^{n} C(n,k) (-1)^k term(k), with term evaluated in Real.
template <class Real, class Term>
Real alternating_binomial_sum(int n, int k0, Term&& term) {
  CompensatedSum<Real> acc;
  Real binom = 1;
  for (int k = 0; k <= n; ++k) {
    if (k >= k0) {
      const Real v = binom * term(Real(k));
      acc.add(k % 2 == 0 ? v : Real(-v));
    }
    binom = binom * Real(n - k) / Real(k + 1);
  }
  return acc.value();
}

/// Chooses long double for small n and 50-digit floats beyond, where the
/// binomials are large enough for cancellation to eat long double.
template <class Term>
double alternating_sum(int n, int k0, Term&& term) {
  if (n > kMaxRepetitions)
    throw AnalyticError(AnalyticErrorCode::InvalidArgument,
                        "repetition count above " + std::to_string(kMaxRepetitions));
  if (n <= 24) return static_cast<double>(alternating_binomial_sum<long double>(n, k0, term));
  return static_cast<double>(alternating_binomial_sum<WideFloat>(n, k0, term));
}

template <class Real>
Real real_pow(const Real& x, double e) {
  using std::pow;
  using boost::multiprecision::pow;
  return pow(x, Real(e));
}

inline double clamp_probability(double p) { return std::min(1.0, std::max(0.0, p)); }

/// H_n with H_0 = 0.
inline double harmonic0(int n) {
  long double s = 0.0L;
  for (int k = n; k >= 1; --k) s += 1.0L / k;
  return static_cast<double>(s);
}

}  // namespace detail

/// H_n = 1 + 1/2 + ... + 1/n.
inline double harmonic_number(int n) {
  if (n < 1) throw AnalyticError(AnalyticErrorCode::InvalidArgument, "harmonic_number needs n >= 1");
  return detail::harmonic0(n);
}

/// H_n through -sum_k C(n,k)(-1)^k / k; agrees with harmonic_number.
inline double harmonic_number_alternating(int n) {
  if (n < 1) throw AnalyticError(AnalyticErrorCode::InvalidArgument, "harmonic_number needs n >= 1");
  return -detail::alternating_sum(n, 1, [](const auto& k) { return 1 / k; });
}

// ---------------------------------------------------------------------------
// Single-band building blocks. `lambda_listen` is the density of BSs that
// listen to the band carrying the messages.

namespace detail {

struct InterferenceTerms {
  double iot;  // lambda~_IoT
  double inc;  // P^_I^delta lambda~_I
  double total() const { return iot + inc; }
};

inline InterferenceTerms interference_terms(const DerivedParams& dp) {
  return {dp.lambda_iot_thinned, std::pow(dp.p_hat_inc, dp.delta) * dp.lambda_inc_thinned};
}

inline double band_success_no_assoc_random(const DerivedParams& dp, double tau, int n,
                                           double lambda_listen) {
  if (lambda_listen <= 0.0) return 0.0;
  const double dens = interference_terms(dp).total();
  if (dens <= 0.0) return 1.0;
  const double expo = dp.xi * std::pow(tau, -dp.delta) * harmonic0(n) * lambda_listen / dens;
  return clamp_probability(-std::expm1(-expo));
}

inline double band_success_no_assoc_pn(const DerivedParams& dp, double tau, int n,
                                       double lambda_listen) {
  if (lambda_listen <= 0.0) return 0.0;
  const auto it = interference_terms(dp);
  if (it.total() <= 0.0) return 1.0;
  const double delta = dp.delta;
  const double sum = alternating_sum(n, 1, [&](const auto& k) {
    using R = std::decay_t<decltype(k)>;
    return R(lambda_listen) / (real_pow(k, delta) * R(it.iot) + k * R(it.inc));
  });
  const double expo = dp.xi * std::pow(tau, -delta) * sum;
  return clamp_probability(-std::expm1(expo));
}

inline double band_success_nearest_random(const DerivedParams& dp, double tau, int n,
                                          double lambda_listen) {
  if (lambda_listen <= 0.0) return 0.0;
  const double a = std::pow(tau, dp.delta) * interference_terms(dp).total() / (dp.xi * lambda_listen);
  const double q = alternating_sum(n, 0, [&](const auto& k) {
    using R = std::decay_t<decltype(k)>;
    return 1 / (1 + k * R(a));
  });
  return clamp_probability(1.0 - q);
}

inline double band_success_nearest_pn(const DerivedParams& dp, double tau, int n,
                                      double lambda_listen) {
  if (lambda_listen <= 0.0) return 0.0;
  const auto it = interference_terms(dp);
  const double scale = std::pow(tau, dp.delta) / (dp.xi * lambda_listen);
  const double delta = dp.delta;
  const double q = alternating_sum(n, 0, [&](const auto& k) {
    using R = std::decay_t<decltype(k)>;
    return 1 / (1 + R(scale) * (real_pow(k, delta) * R(it.iot) + k * R(it.inc)));
  });
  return clamp_probability(1.0 - q);
}

inline double band_success(const DerivedParams& dp, double tau, int n, double lambda_listen,
                           RepetitionScheme scheme, Association assoc) {
  if (assoc == Association::NoAssociation) {
    return scheme == RepetitionScheme::Random
               ? band_success_no_assoc_random(dp, tau, n, lambda_listen)
               : band_success_no_assoc_pn(dp, tau, n, lambda_listen);
  }
  return scheme == RepetitionScheme::Random ? band_success_nearest_random(dp, tau, n, lambda_listen)
                                            : band_success_nearest_pn(dp, tau, n, lambda_listen);
}

}  // namespace detail

/// Whether success_probability has a closed form for this combination.
inline bool has_closed_form(const ProtocolSpec& spec) {
  if (spec.kind != ProtocolKind::UnslottedMultiband) return true;
  return spec.scheme == RepetitionScheme::Random &&
         spec.association == Association::NoAssociation;
}

// ---------------------------------------------------------------------------
// Unslotted multiband: allocations of N messages over M bands.

struct Allocation {
  std::vector<int> counts;  // n_m, one per band
};

struct WeightedAllocation {
  Allocation allocation;
  double weight;  // multinomial probability N!/(n_1!...n_M!) / M^N
};

/// C(n, k) as a double; exact up to 2^53.
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<double>(std::round(r));
}

/// Number of compositions of n into m ordered non-negative parts.
inline double composition_count(int n, int m) { return binomial(n + m - 1, m - 1); }

/// Calls visit(counts, weight) once for every composition of N into M parts,
/// in lexicographic order of counts.
template <class Visitor>
void for_each_composition(int N, int M, Visitor&& visit) {
  if (N < 1 || M < 1)
    throw AnalyticError(AnalyticErrorCode::InvalidArgument, "compositions need N >= 1 and M >= 1");
  if (composition_count(N, M) > static_cast<double>(kMaxCompositions))
    throw AnalyticError(AnalyticErrorCode::Overflow,
                        "C(N+M-1, M-1) exceeds " + std::to_string(kMaxCompositions));
  const long double inv_total = std::pow(static_cast<long double>(M), -N);
  std::vector<int> counts(static_cast<std::size_t>(M), 0);

  // weight so far = prod_j C(remaining_j, n_j)
  std::function<void(int, int, long double)> rec = [&](int band, int remaining, long double ways) {
    if (band == M - 1) {
      counts[static_cast<std::size_t>(band)] = remaining;
      visit(static_cast<const std::vector<int>&>(counts), static_cast<double>(ways * inv_total));
      return;
    }
    long double c = 1.0L;  // C(remaining, n)
    for (int n = 0; n <= remaining; ++n) {
      counts[static_cast<std::size_t>(band)] = n;
      rec(band + 1, remaining - n, ways * c);
      c = c * (remaining - n) / (n + 1);
    }
  };
  rec(0, N, 1.0L);
}

inline std::vector<WeightedAllocation> enumerate_compositions(int N, int M) {
  std::vector<WeightedAllocation> out;
  for_each_composition(N, M, [&](const std::vector<int>& c, double w) {
    out.push_back({Allocation{c}, w});
  });
  return out;
}

namespace detail {

inline double allocation_success(const NetworkConfig& cfg, const ProtocolSpec& spec,
                                 const DerivedParams& dp, const std::vector<int>& counts) {
  double listened = 0.0;  // sum_m H_{n_m} p_m
  for (std::size_t m = 0; m < counts.size(); ++m)
    listened += harmonic0(counts[m]) * spec.band_probs[m];
  if (listened <= 0.0 || cfg.lambda_bs <= 0.0) return 0.0;
  const double dens = interference_terms(dp).total();
  if (dens <= 0.0) return 1.0;
  const double expo = dp.xi * std::pow(cfg.tau, -dp.delta) * listened * cfg.lambda_bs / dens;
  return clamp_probability(-std::expm1(-expo));
}

}  // namespace detail

/// Success probability of the unslotted multiband protocol given that n_m of
/// the N messages go to band m.
inline double success_given_allocation(const NetworkConfig& cfg, const ProtocolSpec& spec,
                                       const Allocation& alloc) {
  ensure_valid(cfg, spec);
  if (spec.kind != ProtocolKind::UnslottedMultiband || !has_closed_form(spec))
    throw AnalyticError(AnalyticErrorCode::UnsupportedCombination,
                        "allocation success is defined for unslotted-mb/random/none only");
  if (alloc.counts.size() != static_cast<std::size_t>(cfg.M))
    throw AnalyticError(AnalyticErrorCode::AllocationMismatch, "allocation length differs from M");
  int total = 0;
  for (int n : alloc.counts) {
    if (n < 0) throw AnalyticError(AnalyticErrorCode::AllocationMismatch, "negative allocation count");
    total += n;
  }
  if (total != cfg.N)
    throw AnalyticError(AnalyticErrorCode::AllocationMismatch, "allocation does not sum to N");
  return detail::allocation_success(cfg, spec, derive_params(cfg), alloc.counts);
}

// ---------------------------------------------------------------------------

/// Closed-form success probability with explicitly supplied derived
/// parameters. The config must be valid.
inline double success_probability(const NetworkConfig& cfg, const ProtocolSpec& spec,
                                  const DerivedParams& dp) {
  if (!has_closed_form(spec))
    throw AnalyticError(AnalyticErrorCode::UnsupportedCombination,
                        "no closed form for " + label(spec));
  if (cfg.lambda_bs <= 0.0) return 0.0;

  switch (spec.kind) {
    case ProtocolKind::Existing:
    case ProtocolKind::Benchmark:
      return detail::band_success(dp, cfg.tau, cfg.N, cfg.lambda_bs, spec.scheme, spec.association);

    case ProtocolKind::SlottedMultiband: {
      // Device picks its band uniformly; BSs listen to band m with p_m.
      long double acc = 0.0L;
      for (double p : spec.band_probs)
        acc += detail::band_success(dp, cfg.tau, cfg.N, p * cfg.lambda_bs, spec.scheme,
                                    spec.association);
      return detail::clamp_probability(static_cast<double>(acc / spec.band_probs.size()));
    }

    case ProtocolKind::UnslottedMultiband: {
      detail::CompensatedSum<long double> acc;
      for_each_composition(cfg.N, cfg.M, [&](const std::vector<int>& counts, double w) {
        acc.add(static_cast<long double>(w) * detail::allocation_success(cfg, spec, dp, counts));
      });
      return detail::clamp_probability(static_cast<double>(acc.value()));
    }
  }
  return 0.0;
}

/// Closed-form success probability (interference-limited, noise ignored).
inline double success_probability(const NetworkConfig& cfg, const ProtocolSpec& spec) {
  ensure_valid(cfg, spec);
  return success_probability(cfg, spec, derive_params(cfg));
}

// ---------------------------------------------------------------------------
// Transmission capacity C(gamma) = gamma * F^{-1}(gamma), in devices per m^2.

struct CapacityQuery {
  double gamma = 0.9;
  ProtocolSpec protocol;
};

inline bool has_capacity_closed_form(const NetworkConfig& cfg, const ProtocolSpec& spec) {
  if (spec.scheme != RepetitionScheme::Random) return false;
  switch (spec.kind) {
    case ProtocolKind::Existing:
    case ProtocolKind::Benchmark:
      return spec.association == Association::NoAssociation || cfg.N == 1;
    case ProtocolKind::SlottedMultiband:
      return spec.has_uniform_probs() &&
             (spec.association == Association::NoAssociation || cfg.N == 1);
    case ProtocolKind::UnslottedMultiband:
      return false;
  }
  return false;
}

namespace detail {

inline void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw AnalyticError(AnalyticErrorCode::InvalidArgument, "gamma must lie in (0,1)");
}

}  // namespace detail

/// Closed-form capacity for benchmark/existing and uniform slotted multiband
/// under random repetition. Nearest-BS association requires N = 1.
/// Negative values (incumbent-dominated) clamp to zero.
inline double capacity_closed_form(const NetworkConfig& cfg, const CapacityQuery& q) {
  ensure_valid(cfg, q.protocol);
  detail::check_gamma(q.gamma);
  const ProtocolSpec& spec = q.protocol;
  if (!has_capacity_closed_form(cfg, spec))
    throw AnalyticError(AnalyticErrorCode::UnsupportedCombination,
                        "no closed-form capacity for " + label(spec) +
                            (spec.association == Association::NearestBS ? " with N != 1" : ""));

  const DerivedParams dp = derive_params(cfg);
  const double gamma = q.gamma;
  const double M = static_cast<double>(cfg.M);
  const double N = static_cast<double>(cfg.N);
  const double spread = cfg.beta_t * cfg.beta_f * cfg.b_hz * cfg.lambda_t();
  const double unb = dp.xi * std::pow(cfg.tau, -dp.delta) * harmonic_number(cfg.N) * cfg.lambda_bs;
  const double inc = std::pow(dp.p_hat_inc, dp.delta) *
                     std::min(1.0, cfg.B_inc_hz / (M * cfg.B_hz)) * cfg.lambda_inc;
  const double log_term = std::log(1.0 / (1.0 - gamma));
  const double odds = gamma / (1.0 - gamma);

  double c = 0.0;
  const bool single = spec.kind == ProtocolKind::Existing || spec.kind == ProtocolKind::Benchmark;
  if (single && spec.association == Association::NoAssociation) {
    c = gamma * M * cfg.B_hz / spread * (unb / (N * log_term) - inc / N);
  } else if (single) {
    c = gamma * M * cfg.B_hz / spread * (unb / odds - inc);
  } else if (spec.association == Association::NoAssociation) {
    c = gamma * cfg.B_hz / spread * (unb / (N * log_term) - M * inc / N);
  } else {
    c = gamma * M * cfg.B_hz / spread * ((unb / M) / odds - inc);
  }
  return std::max(0.0, c);
}

struct CapacityResult {
  double capacity = 0.0;     // gamma * lambda*, devices per m^2
  double lambda_star = 0.0;  // F(lambda_star) = gamma
  bool reachable = true;     // false when F(0) < gamma
  double residual = 0.0;     // |F(lambda_star) - gamma|
};

/// Capacity by bisection on lambda_iot; F is strictly decreasing in it.
inline CapacityResult capacity_numeric(const NetworkConfig& cfg, const CapacityQuery& q) {
  ensure_valid(cfg, q.protocol);
  detail::check_gamma(q.gamma);
  if (!has_closed_form(q.protocol))
    throw AnalyticError(AnalyticErrorCode::UnsupportedCombination,
                        "no closed form to invert for " + label(q.protocol));

  NetworkConfig work = cfg;
  auto F = [&](double lam) {
    work.lambda_iot = lam;
    return success_probability(work, q.protocol, derive_params(work));
  };

  CapacityResult r;
  const double f0 = F(0.0);
  if (f0 < q.gamma) {
    r.reachable = false;
    r.residual = q.gamma - f0;
    return r;
  }
  if (f0 == q.gamma) return r;

  constexpr double kCap = 1e18;
  double lo = 0.0;
  double hi = 1e-6;
  while (F(hi) >= q.gamma) {
    lo = hi;
    hi *= 2.0;
    if (hi > kCap) {
      r.lambda_star = std::numeric_limits<double>::infinity();
      r.capacity = std::numeric_limits<double>::infinity();
      return r;
    }
  }
  double mid = 0.5 * (lo + hi);
  double fm = F(mid);
  for (int iter = 0; iter < 400; ++iter) {
    if (std::abs(fm - q.gamma) <= 1e-12 || hi - lo <= 1e-16 * hi) break;
    if (fm > q.gamma)
      lo = mid;
    else
      hi = mid;
    mid = 0.5 * (lo + hi);
    fm = F(mid);
  }
  r.lambda_star = mid;
  r.capacity = q.gamma * mid;
  r.residual = std::abs(fm - q.gamma);
  return r;
}

// ---------------------------------------------------------------------------
// Pieces of the derivation, exposed for the quadrature cross-checks.

/// E[exp(-tau x^alpha I_inc)] for the thinned incumbent field:
/// exp(-pi xi^{-1} (tau P^_I)^delta lambda~_I x^2).
inline double incumbent_laplace(const DerivedParams& dp, double tau, double x) {
  return std::exp(-std::numbers::pi / dp.xi * std::pow(tau * dp.p_hat_inc, dp.delta) *
                  dp.lambda_inc_thinned * x * x);
}

/// Per-BS failure probability under random repetition at serving distance x:
/// (1 - exp(-pi xi^{-1} tau^delta (lambda~_IoT + P^_I^delta lambda~_I) x^2))^N.
inline double failure_random(const DerivedParams& dp, double tau, int n, double x) {
  const double c = std::numbers::pi / dp.xi * std::pow(tau, dp.delta) *
                   detail::interference_terms(dp).total();
  return std::pow(-std::expm1(-c * x * x), n);
}

}  // namespace unb

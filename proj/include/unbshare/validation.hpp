#pragma once

// Built-in property suite: cross-checks of the closed forms against
// independent computations (quadrature, sampling, brute force).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "analytic.hpp"
#include "config.hpp"
#include "geometry.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "simulator.hpp"

namespace unb {

struct ValidationOptions {
  bool quick = false;
  double xi_scale = 1.0;  // != 1 corrupts xi in the analytic side (mutation testing)
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

/// One-sample KS statistic of `xs` against a continuous CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic p-value with Stephens' small-sample correction.
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lam = (sn + 0.12 + 0.11 / sn) * d;
  if (lam < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    sum += term;
    if (std::abs(term) < 1e-15) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

namespace detail {

inline DerivedParams corrupted_params(const NetworkConfig& cfg, const ValidationOptions& o) {
  DerivedParams dp = derive_params(cfg);
  dp.xi *= o.xi_scale;
  return dp;
}

inline double analytic_under_test(const NetworkConfig& cfg, const ProtocolSpec& spec,
                                  const ValidationOptions& o) {
  ensure_valid(cfg, spec);
  return success_probability(cfg, spec, corrupted_params(cfg, o));
}

/// A random but valid configuration around the default deployment.
inline NetworkConfig random_config(Stream& rng) {
  NetworkConfig c;
  c.alpha = rng.uniform(2.5, 5.0);
  c.N = 1 + static_cast<int>(rng.below(8));
  c.M = 1 + static_cast<int>(rng.below(6));
  c.tau = db_to_linear(rng.uniform(-10.0, 20.0));
  c.lambda_bs *= std::pow(10.0, rng.uniform(-1.0, 1.0));
  c.lambda_iot *= std::pow(10.0, rng.uniform(-1.0, 1.0));
  c.lambda_inc *= std::pow(10.0, rng.uniform(-2.0, 2.0));
  c.p_inc_dbm = rng.uniform(0.0, 30.0);
  return c;
}

inline ProtocolKind random_single_or_slotted(Stream& rng) {
  static constexpr ProtocolKind kinds[] = {ProtocolKind::Existing, ProtocolKind::Benchmark,
                                           ProtocolKind::SlottedMultiband};
  return kinds[rng.below(3)];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Individual checks

/// Random repetition never loses to PN repetition (Jensen) on random configs.
inline CheckResult check_jensen(const ValidationOptions& o, int configs = 100) {
  Stream rng(o.seed, 0, 0x4A45);
  int bad = 0;
  double worst = 0.0;
  for (int k = 0; k < configs; ++k) {
    NetworkConfig c = detail::random_config(rng);
    const ProtocolKind kind = detail::random_single_or_slotted(rng);
    const Association assoc = rng.below(2) ? Association::NearestBS : Association::NoAssociation;
    if (kind == ProtocolKind::Existing) c.M = 1;
    const auto r = success_probability(c, ProtocolSpec::uniform(kind, RepetitionScheme::Random, assoc, c.M));
    const auto p = success_probability(c, ProtocolSpec::uniform(kind, RepetitionScheme::PN, assoc, c.M));
    worst = std::min(worst, r - p);
    if (r < p - 1e-12) ++bad;
  }
  return {"jensen-random-vs-pn", bad == 0,
          std::to_string(configs) + " configs, violations " + std::to_string(bad) +
              ", min(random-pn) " + format_real(worst)};
}

/// H_N / N strictly decreasing for N = 1..64.
inline CheckResult check_harmonic_ratio() {
  int bad = 0;
  double prev = harmonic_number(1);
  for (int n = 2; n <= kMaxRepetitions; ++n) {
    const double cur = harmonic_number(n) / n;
    if (!(cur < prev)) ++bad;
    prev = cur;
  }
  return {"harmonic-ratio-decreasing", bad == 0, "N=1..64, violations " + std::to_string(bad)};
}

/// Uniform band probabilities maximize slotted multiband success.
inline CheckResult check_uniform_optimality(const ValidationOptions& o, int perturbations = 50) {
  Stream rng(o.seed, 0, 0x554E);
  NetworkConfig c;
  const auto uni = ProtocolSpec::uniform(ProtocolKind::SlottedMultiband, RepetitionScheme::Random,
                                         Association::NoAssociation, c.M);
  const double best = success_probability(c, uni);
  int bad = 0;
  double gap = INFINITY;
  for (int k = 0; k < perturbations; ++k) {
    ProtocolSpec s = uni;
    double total = 0.0;
    const double eps = rng.uniform(0.01, 0.9);
    for (auto& p : s.band_probs) {
      p *= 1.0 + eps * (2.0 * rng.uniform() - 1.0);
      total += p;
    }
    for (auto& p : s.band_probs) p /= total;
    const double v = success_probability(c, s);
    gap = std::min(gap, best - v);
    if (v > best + 1e-12) ++bad;
  }
  return {"uniform-band-probabilities-optimal", bad == 0,
          std::to_string(perturbations) + " perturbations, min gap " + format_real(gap)};
}

/// Incumbent Laplace transform against direct quadrature of the PPP PGFL.
inline CheckResult check_pgfl(const ValidationOptions& o, int tuples = 20) {
  Stream rng(o.seed, 0, 0x5047);
  boost::math::quadrature::exp_sinh<double> integrator;
  double worst = 0.0;
  for (int k = 0; k < tuples; ++k) {
    NetworkConfig c = detail::random_config(rng);
    const DerivedParams dp = detail::corrupted_params(c, o);
    const double x = rng.uniform(100.0, 20e3);
    // s = tau x^alpha; each incumbent contributes E_h exp(-s P h r^-alpha) = 1/(1 + s P r^-alpha)
    const double sp = c.tau * std::pow(x, c.alpha) * dp.p_hat_inc;
    auto f = [&](double r) { return r == 0.0 ? 0.0 : r / (1.0 + std::pow(r, c.alpha) / sp); };
    const double integral = integrator.integrate(f, 1e-14);
    const double quad = std::exp(-2.0 * std::numbers::pi * dp.lambda_inc_thinned * integral);
    const double closed = incumbent_laplace(dp, c.tau, x);
    const double rel = std::abs(closed - quad) / std::max(quad, 1e-300);
    worst = std::max(worst, rel);
  }
  return {"pgfl-quadrature", worst <= 1e-6,
          std::to_string(tuples) + " tuples, max relative error " + format_real(worst)};
}

/// Nearest-association success against the integral over the serving distance.
inline CheckResult check_nearest_integral(const ValidationOptions& o, int tuples = 20) {
  Stream rng(o.seed, 0, 0x4E45);
  boost::math::quadrature::exp_sinh<double> integrator;
  double worst = 0.0;
  for (int k = 0; k < tuples; ++k) {
    NetworkConfig c = detail::random_config(rng);
    const DerivedParams dp = derive_params(c);
    const double lb = c.lambda_bs;
    // u = pi lambda x^2 turns the serving-distance density into exp(-u)
    auto f = [&](double u) {
      return std::exp(-u) * failure_random(dp, c.tau, c.N, std::sqrt(u / (std::numbers::pi * lb)));
    };
    const double quad = 1.0 - integrator.integrate(f, 1e-14);
    const double closed = detail::band_success_nearest_random(detail::corrupted_params(c, o), c.tau, c.N, lb);
    worst = std::max(worst, std::abs(quad - closed));
  }
  return {"nearest-distance-integral", worst <= 1e-8,
          std::to_string(tuples) + " tuples, max abs error " + format_real(worst)};
}

/// Simulated nearest-BS distances follow 1 - exp(-pi lambda x^2).
inline CheckResult check_nearest_distance_ks(const ValidationOptions& o) {
  const std::size_t n = o.quick ? 1000 : 4000;
  const NetworkConfig c;
  const Torus torus(100e3);
  std::vector<double> d;
  d.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Stream rng(o.seed, i, 0x4B53);
    const auto bs = sample_hppp(c.lambda_bs, torus, rng);
    double best = INFINITY;
    for (const auto& p : bs) best = std::min(best, torus.distance(Point{}, p));
    if (std::isfinite(best)) d.push_back(best);
  }
  const double lb = c.lambda_bs;
  const double stat = ks_statistic(d, [&](double x) { return -std::expm1(-std::numbers::pi * lb * x * x); });
  const double p = ks_pvalue(stat, d.size());
  return {"nearest-distance-ks", p >= 0.01,
          std::to_string(d.size()) + " samples, D=" + format_real(stat) + ", p=" + format_real(p)};
}

/// Numeric inversion agrees with every closed-form capacity.
inline CheckResult check_capacity(const ValidationOptions&) {
  int compared = 0;
  int bad = 0;
  double worst = 0.0;
  for (auto kind : {ProtocolKind::Existing, ProtocolKind::Benchmark, ProtocolKind::SlottedMultiband})
    for (auto assoc : {Association::NoAssociation, Association::NearestBS})
      for (int n : {1, 2, 3, 5, 8})
        for (double inc_scale : {0.0, 1.0, 10.0})
          for (double gamma : {0.1, 0.3, 0.5, 0.8, 0.9, 0.98}) {
            NetworkConfig c;
            c.N = n;
            c.lambda_inc *= inc_scale;
            if (kind == ProtocolKind::Existing) c.M = 1;
            const auto spec = ProtocolSpec::uniform(kind, RepetitionScheme::Random, assoc, c.M);
            if (!has_capacity_closed_form(c, spec)) continue;
            const CapacityQuery q{gamma, spec};
            const double closed = capacity_closed_form(c, q);
            const CapacityResult num = capacity_numeric(c, q);
            ++compared;
            const double numeric = num.reachable ? num.capacity : 0.0;
            const double rel = closed == 0.0 ? numeric : std::abs(numeric - closed) / closed;
            worst = std::max(worst, rel);
            if (closed == 0.0 ? (num.reachable && numeric > 0.0) : rel > 1e-6) ++bad;
          }
  return {"capacity-numeric-vs-closed", bad == 0 && compared > 0,
          std::to_string(compared) + " cases, max relative error " + format_real(worst)};
}

/// Composition enumeration matches C(N+M-1, M-1) and brute-force weights.
inline CheckResult check_compositions() {
  int bad = 0;
  int cases = 0;
  for (int N = 1; N <= 10; ++N)
    for (int M = 1; M <= 8; ++M) {
      ++cases;
      const auto all = enumerate_compositions(N, M);
      long double sum = 0.0L;
      for (const auto& a : all) sum += a.weight;
      if (static_cast<double>(all.size()) != binomial(N + M - 1, M - 1)) ++bad;
      if (std::abs(static_cast<double>(sum) - 1.0) > 1e-12) ++bad;

      if (std::pow(M, N) > 2e5) continue;
      // brute force over all M^N band sequences
      std::map<std::vector<int>, std::uint64_t> hits;
      std::vector<int> seq(static_cast<std::size_t>(N), 0);
      const auto total = static_cast<std::uint64_t>(std::llround(std::pow(M, N)));
      for (std::uint64_t s = 0; s < total; ++s) {
        std::vector<int> counts(static_cast<std::size_t>(M), 0);
        std::uint64_t v = s;
        for (int i = 0; i < N; ++i) {
          ++counts[v % static_cast<std::uint64_t>(M)];
          v /= static_cast<std::uint64_t>(M);
        }
        ++hits[counts];
      }
      if (hits.size() != all.size()) ++bad;
      for (const auto& a : all) {
        const double expect = static_cast<double>(hits[a.allocation.counts]) / static_cast<double>(total);
        if (std::abs(expect - a.weight) > 1e-12) ++bad;
      }
    }
  return {"composition-enumeration", bad == 0,
          std::to_string(cases) + " (N,M) pairs, violations " + std::to_string(bad)};
}

/// Explicit-slot and thinned simulations of the existing protocol agree.
inline CheckResult check_explicit_vs_thinned(const ValidationOptions& o) {
  // sparser devices keep the explicit candidate population small
  NetworkConfig c;
  c.M = 1;
  c.lambda_iot /= 5.0;
  const auto spec = ProtocolSpec::uniform(ProtocolKind::Existing, RepetitionScheme::Random,
                                          Association::NoAssociation, 1);
  SimOptions so;
  so.realizations = o.quick ? 600 : 3000;
  so.master_seed = o.seed;
  so.workers = o.workers;
  so.torus_side_m = 40e3;
  std::string detail;
  bool ok = true;
  for (auto [bt, bf] : {std::pair{1.0, 1.0}, std::pair{2.0, 2.0}}) {
    c.beta_t = bt;
    c.beta_f = bf;
    so.mode = Fidelity::Thinned;
    const auto thin = estimate_success_probability(c, spec, so);
    so.mode = Fidelity::ExplicitSlots;
    const auto expl = estimate_success_probability(c, spec, so);
    const bool pass = std::abs(thin.value - expl.value) <= thin.ci_half + expl.ci_half;
    ok = ok && pass;
    detail += "beta=(" + format_real(bt) + "," + format_real(bf) + ") thinned " + format_real(thin.value) +
              " explicit " + format_real(expl.value) + "; ";
  }
  return {"explicit-vs-thinned", ok, detail};
}

/// Closed forms against Monte Carlo at the default deployment.
inline CheckResult check_analytic_vs_mc(const ValidationOptions& o) {
  SimOptions so;
  so.realizations = o.quick ? 1000 : 10000;
  so.master_seed = o.seed;
  so.workers = o.workers;
  const double tol = 0.015;
  double worst = 0.0;
  int bad = 0;
  int cases = 0;
  for (auto kind : {ProtocolKind::Existing, ProtocolKind::Benchmark, ProtocolKind::SlottedMultiband,
                    ProtocolKind::UnslottedMultiband})
    for (auto assoc : {Association::NoAssociation, Association::NearestBS}) {
      NetworkConfig c;
      if (kind == ProtocolKind::Existing) c.M = 1;
      const auto spec = ProtocolSpec::uniform(kind, RepetitionScheme::Random, assoc, c.M);
      if (!has_closed_form(spec)) continue;
      ++cases;
      const double a = detail::analytic_under_test(c, spec, o);
      const auto e = estimate_success_probability(c, spec, so);
      const double diff = std::abs(a - e.value);
      worst = std::max(worst, diff);
      // quick runs allow for their wider intervals
      if (diff > std::max(tol, o.quick ? 2.0 * e.ci_half : 0.0)) ++bad;
    }
  return {"analytic-vs-mc", bad == 0,
          std::to_string(cases) + " protocols at tau=5 dB, " + std::to_string(so.realizations) +
              " realizations, max |diff| " + format_real(worst)};
}

/// The whole suite, in a fixed order.
inline ValidationReport run_validation(const ValidationOptions& o) {
  ValidationReport r;
  auto guarded = [&](const char* name, auto&& fn) {
    try {
      r.checks.push_back(fn());
    } catch (const std::exception& e) {
      r.checks.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  guarded("jensen-random-vs-pn", [&] { return check_jensen(o); });
  guarded("harmonic-ratio-decreasing", [&] { return check_harmonic_ratio(); });
  guarded("uniform-band-probabilities-optimal", [&] { return check_uniform_optimality(o); });
  guarded("pgfl-quadrature", [&] { return check_pgfl(o); });
  guarded("nearest-distance-integral", [&] { return check_nearest_integral(o); });
  guarded("nearest-distance-ks", [&] { return check_nearest_distance_ks(o); });
  guarded("capacity-numeric-vs-closed", [&] { return check_capacity(o); });
  guarded("composition-enumeration", [&] { return check_compositions(); });
  guarded("explicit-vs-thinned", [&] { return check_explicit_vs_thinned(o); });
  guarded("analytic-vs-mc", [&] { return check_analytic_vs_mc(o); });
  return r;
}

}  // namespace unb

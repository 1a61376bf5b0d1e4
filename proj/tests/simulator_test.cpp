#include <gtest/gtest.h>

#include <cmath>

#include "unbshare/analytic.hpp"
#include "unbshare/simulator.hpp"

using namespace unb;

namespace {

ProtocolSpec spec_of(ProtocolKind k, RepetitionScheme s = RepetitionScheme::Random,
                     Association a = Association::NoAssociation, int bands = 5) {
  return ProtocolSpec::uniform(k, s, a, bands);
}

SimOptions quick(std::uint64_t realizations, std::uint64_t seed = 1) {
  SimOptions o;
  o.realizations = realizations;
  o.master_seed = seed;
  return o;
}

}  // namespace

TEST(Realization, NoInterferersAlwaysDecoded) {
  NetworkConfig c;
  c.lambda_iot = 0.0;
  c.lambda_inc = 0.0;
  const auto s = spec_of(ProtocolKind::Benchmark);
  SimOptions o = quick(1);
  o.torus_side_m = 20e3;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto r = draw_realization(c, s, o, i);
    const auto sample = evaluate_realization(r, c, s, o, i);
    EXPECT_EQ(sample.success, !r.bs.empty());
  }
}

TEST(Realization, NoBaseStationsNeverDecoded) {
  NetworkConfig c;
  c.lambda_bs = 1e-20;
  const auto s = spec_of(ProtocolKind::Benchmark);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto sample = simulate_realization(c, s, quick(1), i);
    EXPECT_FALSE(sample.success);
    EXPECT_EQ(sample.max_sinr, 0.0);
  }
}

TEST(Realization, ThinnedCountsMatchDensities) {
  const NetworkConfig c;
  const auto s = spec_of(ProtocolKind::Benchmark);
  const SimOptions o = quick(1);
  const auto dp = derive_params(c);
  const double area = o.torus_side_m * o.torus_side_m;
  const int draws = 400;
  std::vector<double> per_message(c.N, 0.0);
  double inc = 0.0;
  for (std::uint64_t i = 0; i < draws; ++i) {
    const auto r = draw_realization(c, s, o, i);
    for (int m = 0; m < c.N; ++m) per_message[m] += static_cast<double>(r.iot_count(m));
    inc += static_cast<double>(r.inc[0].size());
  }
  // each message sees a Poisson(lambda~ * area) count
  const double mean = dp.lambda_iot_thinned * area;
  for (int m = 0; m < c.N; ++m)
    EXPECT_NEAR(per_message[m] / draws, mean, 5 * std::sqrt(mean / draws)) << "message " << m;
  const double inc_mean = dp.lambda_inc_thinned * area;
  EXPECT_NEAR(inc / draws, inc_mean, 5 * std::sqrt(inc_mean / draws));
}

TEST(Realization, RandomThinningIndependentAcrossMessages) {
  // P(device hits messages 0 and 1 | hits 0) = p
  const NetworkConfig c;
  const auto s = spec_of(ProtocolKind::Benchmark);
  const auto dp = derive_params(c);
  const double p = dp.lambda_iot_thinned / c.lambda_iot;
  double first = 0, both = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto r = draw_realization(c, s, quick(1), i);
    for (auto m : r.iot_mask) {
      first += (m & 1u) ? 1 : 0;
      both += (m & 3u) == 3u ? 1 : 0;
    }
  }
  EXPECT_NEAR(both / first, p, 5 * std::sqrt(p / first));
}

TEST(Realization, PnSharesOneInterfererSet) {
  const NetworkConfig c;
  const auto r = draw_realization(c, spec_of(ProtocolKind::Benchmark, RepetitionScheme::PN), quick(1), 0);
  ASSERT_FALSE(r.iot.empty());
  for (auto m : r.iot_mask) EXPECT_EQ(m, 7u);
}

TEST(Overlap, Rules) {
  NetworkConfig c;
  c.M = 1;
  const auto s = spec_of(ProtocolKind::Existing, RepetitionScheme::Random, Association::NoAssociation, 1);
  const auto rule = OverlapRule::from(c, s);
  Transmission a{1.0, 0, 0, 1000.0, 3};
  EXPECT_TRUE(explicit_overlap(a, a, rule));
  Transmission b = a;
  b.start = a.start + c.t_s;
  EXPECT_FALSE(explicit_overlap(a, b, rule));
  b.start = a.start + 0.999 * c.t_s;
  EXPECT_TRUE(explicit_overlap(a, b, rule));
  b.freq = a.freq + c.b_hz;
  EXPECT_FALSE(explicit_overlap(a, b, rule));
  b.freq = a.freq;
  b.band = 1;
  EXPECT_FALSE(explicit_overlap(a, b, rule));
  // wrap-around in time
  Transmission late = a;
  late.start = c.T_s - 0.5 * c.t_s;
  Transmission early = a;
  early.start = 0.1 * c.t_s;
  EXPECT_TRUE(explicit_overlap(late, early, rule));
}

TEST(Overlap, SlottedUsesIndices) {
  NetworkConfig c;
  c.M = 1;
  c.beta_t = c.beta_f = 1.0;
  const auto rule = OverlapRule::from(c, spec_of(ProtocolKind::Existing, RepetitionScheme::Random,
                                                 Association::NoAssociation, 1));
  EXPECT_EQ(rule.time_slots, 357);
  EXPECT_EQ(rule.channels, 333);
  const Transmission a{0.0, 4, 0, 0.0, 9};
  Transmission b{0.3, 4, 0, 500.0, 9};
  EXPECT_TRUE(explicit_overlap(a, b, rule));
  b.slot = 5;
  EXPECT_FALSE(explicit_overlap(a, b, rule));
}

TEST(Overlap, UnslottedTimeProbability) {
  NetworkConfig c;
  c.M = 1;
  Stream rng(5, 0, 0);
  const int pairs = 100000;
  int hits = 0;
  for (int i = 0; i < pairs; ++i) {
    const double s1 = rng.uniform() * c.T_s;
    const double s2 = rng.uniform() * c.T_s;
    hits += OverlapRule::circular(s1 - s2, c.T_s) < c.t_s;
  }
  const double p = 2.0 * c.t_s / c.T_s;
  EXPECT_NEAR(static_cast<double>(hits) / pairs, p, 3 * std::sqrt(p * (1 - p) / pairs));
}

TEST(Overlap, FractionalBetaUnsupported) {
  NetworkConfig c;
  c.M = 1;
  c.beta_t = 1.5;
  const auto s = spec_of(ProtocolKind::Existing, RepetitionScheme::Random, Association::NoAssociation, 1);
  SimOptions o = quick(10);
  o.mode = Fidelity::ExplicitSlots;
  EXPECT_THROW(estimate_success_probability(c, s, o), UnsupportedFidelity);
}

TEST(Estimate, WilsonDegenerate) {
  const auto e = make_estimate(500, 500);
  EXPECT_EQ(e.value, 1.0);
  // at p = 1 the Wilson half-width is z^2 / (2n) / (1 + z^2/n)
  const double z = 1.959963984540054;
  EXPECT_NEAR(e.ci_half, z * z / 1000.0 / (1 + z * z / 500.0), 1e-15);
  EXPECT_NEAR(wilson_half_width(50, 100), 0.09617, 5e-5);
}

TEST(Estimate, BenchmarkMatchesClosedForm) {
  const NetworkConfig c;
  const auto s = spec_of(ProtocolKind::Benchmark);
  const auto e = estimate_success_probability(c, s, quick(10000, 2));
  EXPECT_NEAR(e.value, success_probability(c, s), 0.015);
}

TEST(Estimate, BenchmarkLargeRunOracle) {
  // closed form inside the 99% interval of a 5e4-realization run
  const NetworkConfig c;
  const auto s = spec_of(ProtocolKind::Benchmark);
  SimOptions o = quick(50000, 99);
  o.workers = 0;
  const auto e = estimate_success_probability(c, s, o);
  const double half99 = wilson_half_width(e.successes, e.realizations, 2.5758293035489004);
  EXPECT_NEAR(e.value, success_probability(c, s), half99) << "mc " << e.value;
}

TEST(Estimate, RandomAtLeastPn) {
  const NetworkConfig c;
  for (auto a : {Association::NoAssociation, Association::NearestBS}) {
    const auto r = estimate_success_probability(c, spec_of(ProtocolKind::Benchmark, RepetitionScheme::Random, a), quick(4000));
    const auto p = estimate_success_probability(c, spec_of(ProtocolKind::Benchmark, RepetitionScheme::PN, a), quick(4000));
    EXPECT_GE(r.value, p.value - r.ci_half - p.ci_half);
  }
}

TEST(Estimate, ExplicitSlotsAgreeWithThinning) {
  // sparser devices keep the explicit candidate population small
  NetworkConfig c;
  c.M = 1;
  c.lambda_iot /= 5.0;
  const auto s = spec_of(ProtocolKind::Existing, RepetitionScheme::Random, Association::NoAssociation, 1);
  for (auto [bt, bf] : {std::pair{1.0, 1.0}, std::pair{1.0, 2.0}, std::pair{2.0, 2.0}}) {
    c.beta_t = bt;
    c.beta_f = bf;
    SimOptions o = quick(1000, 3);
    o.torus_side_m = 40e3;
    const auto thin = estimate_success_probability(c, s, o);
    o.mode = Fidelity::ExplicitSlots;
    const auto expl = estimate_success_probability(c, s, o);
    EXPECT_NEAR(thin.value, expl.value, thin.ci_half + expl.ci_half) << bt << "," << bf;
  }
}

TEST(Estimate, ExplicitPnRunsAndStaysBelowRandom) {
  NetworkConfig c;
  c.M = 1;
  c.lambda_iot /= 5.0;
  SimOptions o = quick(1000, 4);
  o.torus_side_m = 40e3;
  o.mode = Fidelity::ExplicitSlots;
  const auto r = estimate_success_probability(
      c, spec_of(ProtocolKind::Existing, RepetitionScheme::Random, Association::NoAssociation, 1), o);
  const auto p = estimate_success_probability(
      c, spec_of(ProtocolKind::Existing, RepetitionScheme::PN, Association::NoAssociation, 1), o);
  EXPECT_GE(r.value, p.value - r.ci_half - p.ci_half);
}

TEST(Estimate, IndependentOfWorkerCount) {
  const NetworkConfig c;
  const auto s = spec_of(ProtocolKind::UnslottedMultiband);
  SimOptions o = quick(600, 17);
  const auto one = sample_max_sinr(c, s, o, 0.1, 100.0);
  o.workers = 3;
  const auto three = sample_max_sinr(c, s, o, 0.1, 100.0);
  EXPECT_EQ(one, three);
}

TEST(Estimate, SeedChangesSample) {
  const NetworkConfig c;
  const auto s = spec_of(ProtocolKind::Benchmark);
  EXPECT_NE(sample_max_sinr(c, s, quick(50, 1), 0.0, INFINITY), sample_max_sinr(c, s, quick(50, 2), 0.0, INFINITY));
}

TEST(Estimate, NoiseIsNegligible) {
  const NetworkConfig c;
  const auto s = spec_of(ProtocolKind::Benchmark);
  SimOptions o = quick(3000, 8);
  const auto quiet = estimate_success_probability(c, s, o);
  o.include_noise = true;
  const auto noisy = estimate_success_probability(c, s, o);
  EXPECT_LE(noisy.value, quiet.value);
  EXPECT_NEAR(noisy.value, quiet.value, 0.01);
}

TEST(Estimate, TorusLargeEnough) {
  NetworkConfig c;
  c.M = 1;
  const auto s = spec_of(ProtocolKind::Existing, RepetitionScheme::Random, Association::NoAssociation, 1);
  SimOptions o = quick(3000, 12);
  o.torus_side_m = 50e3;
  const auto small = estimate_success_probability(c, s, o);
  o.torus_side_m = 100e3;
  const auto large = estimate_success_probability(c, s, o);
  EXPECT_NEAR(small.value, large.value, small.ci_half + large.ci_half);
  EXPECT_FALSE(torus_too_small(c, o));
  o.torus_side_m = 10e3;
  EXPECT_TRUE(torus_too_small(c, o));
}

TEST(SinrCdf, MonotoneAndReachesOne) {
  const NetworkConfig c;
  const auto s = spec_of(ProtocolKind::SlottedMultiband, RepetitionScheme::Random, Association::NearestBS);
  std::vector<double> taus{1e-9, 1e-3, 0.1, 1.0, 10.0};
  const auto est = sinr_cdf(c, s, quick(1000), taus);
  ASSERT_EQ(est.size(), taus.size());
  EXPECT_GT(est[0].value, 0.99);
  for (std::size_t k = 1; k < est.size(); ++k) EXPECT_LE(est[k].value, est[k - 1].value);
  EXPECT_THROW(sinr_cdf(c, s, quick(10), {1.0, 0.5}), std::invalid_argument);
}

TEST(SinrCdf, ExistingCurveMatchesClosedForm) {
  NetworkConfig c;
  c.M = 1;
  const auto s = spec_of(ProtocolKind::Existing, RepetitionScheme::Random, Association::NoAssociation, 1);
  std::vector<double> taus;
  for (int d = -10; d <= 20; ++d) taus.push_back(db_to_linear(d));
  const auto est = sinr_cdf(c, s, quick(4000, 5), taus);
  for (std::size_t k = 0; k < taus.size(); ++k) {
    NetworkConfig at = c;
    at.tau = taus[k];
    EXPECT_NEAR(est[k].value, success_probability(at, s), 1.5 * est[k].ci_half) << "tau_db " << linear_to_db(taus[k]);
  }
}

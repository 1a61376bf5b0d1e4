#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "unbshare/experiments.hpp"

using namespace unb;

namespace {

SweepProtocol proto(std::string label, ProtocolKind k, RepetitionScheme s = RepetitionScheme::Random,
                    Association a = Association::NoAssociation) {
  return preset::curve(std::move(label), k, s, a);
}

SweepSpec tau_sweep(std::vector<double> grid, std::vector<SweepProtocol> protocols) {
  SweepSpec s;
  s.param = "tau_db";
  s.grid = std::move(grid);
  s.protocols = std::move(protocols);
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const SweepResult& analytic_figure(FigureId id) {
  static std::map<FigureId, SweepResult> cache;
  auto it = cache.find(id);
  if (it == cache.end()) {
    ReproduceOptions o;
    o.monte_carlo = false;
    it = cache.emplace(id, run_sweep(figure_sweep(id, o))).first;
  }
  return it->second;
}

}  // namespace

TEST(Sweep, AnalyticPointMatchesDirectCall) {
  const auto r = run_sweep(tau_sweep({0.0, 5.0}, {proto("b", ProtocolKind::Benchmark)}));
  ASSERT_EQ(r.rows.size(), 2u);
  NetworkConfig c;
  const auto spec = ProtocolSpec::uniform(ProtocolKind::Benchmark, RepetitionScheme::Random,
                                          Association::NoAssociation, c.M);
  EXPECT_EQ(*r.rows[1].analytic, success_probability(c, spec));
  c.tau = 1.0;
  EXPECT_EQ(*r.rows[0].analytic, success_probability(c, spec));
  EXPECT_FALSE(r.rows[0].mc);
}

TEST(Sweep, RejectsBadSpecs) {
  auto s = tau_sweep({0.0}, {proto("b", ProtocolKind::Benchmark)});
  s.param = "gamma";
  EXPECT_THROW(run_sweep(s), ConfigError);
  s.param = "tau_db";
  s.grid = {3.0, 1.0};
  EXPECT_THROW(run_sweep(s), ConfigError);
  s.grid = {};
  EXPECT_THROW(run_sweep(s), ConfigError);
  s.grid = {1.0};
  s.protocols = {proto("a,b", ProtocolKind::Benchmark)};
  EXPECT_THROW(run_sweep(s), ConfigError);
}

TEST(Sweep, ExistingPinnedToOneBand) {
  // the base keeps M = 5; the existing curve still runs
  SweepSpec s = tau_sweep({5.0}, {proto("e", ProtocolKind::Existing)});
  s.param = "M";
  s.grid = {5.0};
  const auto r = run_sweep(s);
  ASSERT_TRUE(r.rows[0].analytic) << r.rows[0].analytic_error;
  NetworkConfig c;
  c.M = 1;
  EXPECT_EQ(*r.rows[0].analytic,
            success_probability(c, ProtocolSpec::uniform(ProtocolKind::Existing, RepetitionScheme::Random,
                                                         Association::NoAssociation, 1)));
}

TEST(Sweep, InvalidPointBecomesErrorRow) {
  SweepSpec s = tau_sweep({}, {proto("b", ProtocolKind::Benchmark)});
  s.param = "alpha";
  s.grid = {2.0, 4.0};
  const auto r = run_sweep(s);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_FALSE(r.rows[0].analytic);
  EXPECT_FALSE(r.rows[0].analytic_error.empty());
  EXPECT_TRUE(r.rows[1].analytic);
  const auto rows = r.csv_rows();
  EXPECT_EQ(rows[0].engine, "analytic-error");
  EXPECT_TRUE(std::isnan(rows[0].value));
  EXPECT_EQ(rows[1].engine, "analytic");
}

TEST(Sweep, TauGridSharesRealizations) {
  SweepSpec s = tau_sweep({0.0, 5.0, 10.0}, {proto("b", ProtocolKind::Benchmark)});
  s.engine = Engine::Both;
  s.sim.realizations = 500;
  s.sim.master_seed = 4;
  const auto r = run_sweep(s);
  ASSERT_EQ(r.rows.size(), 3u);
  for (const auto& row : r.rows) ASSERT_TRUE(row.mc);
  EXPECT_GE(r.rows[0].mc->successes, r.rows[1].mc->successes);
  EXPECT_GE(r.rows[1].mc->successes, r.rows[2].mc->successes);
  // same draws as a standalone estimate at the middle threshold
  NetworkConfig c;
  const auto direct = estimate_success_probability(
      c, ProtocolSpec::uniform(ProtocolKind::Benchmark, RepetitionScheme::Random, Association::NoAssociation, 5),
      s.sim);
  EXPECT_EQ(direct.successes, r.rows[1].mc->successes);
  EXPECT_EQ(r.csv_rows().size(), 6u);
}

TEST(Sweep, CsvIsDeterministic) {
  SweepSpec s = tau_sweep({-5.0, 5.0}, {proto("u", ProtocolKind::UnslottedMultiband)});
  s.engine = Engine::Both;
  s.sim.realizations = 200;
  const auto a = to_csv(run_sweep(s).csv_rows());
  const auto b = to_csv(run_sweep(s).csv_rows());
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')), kCsvHeader);
}

TEST(CurveStats, MedianInterpolates) {
  EXPECT_DOUBLE_EQ(median_sinr({{0.0, 0.6}, {10.0, 0.4}}), 5.0);
  EXPECT_DOUBLE_EQ(median_sinr({{0.0, 0.9}, {1.0, 0.5}, {2.0, 0.1}}), 1.0);
  EXPECT_NEAR(cell_edge_sinr({{-10.0, 1.0}, {0.0, 0.9}}), -5.0, 1e-12);
  EXPECT_THROW(median_sinr({{0.0, 0.9}, {10.0, 0.7}}), NotBracketed);
  EXPECT_THROW(median_sinr({}), NotBracketed);
}

TEST(Capacity, CurveFlagsUnreachableTargets) {
  const auto rows = capacity_curve(preset::base(), {proto("e", ProtocolKind::Existing)}, {0.5, 0.999999},
                                   preset::kAreaM2);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].reachable);
  EXPECT_TRUE(rows[0].closed_form);
  EXPECT_GT(rows[0].devices, 0.0);
  EXPECT_FALSE(rows[1].reachable);
  EXPECT_EQ(capacity_csv_rows(rows)[1].engine, "analytic-unreachable");
}

TEST(Capacity, DevicesScaleWithArea) {
  const auto p = {proto("u", ProtocolKind::UnslottedMultiband)};
  const auto a = capacity_curve(preset::base(), p, {0.3}, 1e6);
  const auto b = capacity_curve(preset::base(), p, {0.3}, 2e6);
  EXPECT_DOUBLE_EQ(2.0 * a[0].devices, b[0].devices);
  EXPECT_EQ(a[0].density, b[0].density);
}

TEST(Capacity, SlottedEqualsExistingWhenIncumbentFitsOneBand) {
  const auto base = preset::base();
  ASSERT_LE(base.B_inc_hz, base.B_hz);
  const auto rows = capacity_curve(base, {proto("e", ProtocolKind::Existing), proto("s", ProtocolKind::SlottedMultiband)},
                                   {0.2, 0.5}, preset::kAreaM2);
  EXPECT_NEAR(rows[0].devices, rows[2].devices, 1e-9 * rows[0].devices);
  EXPECT_NEAR(rows[1].devices, rows[3].devices, 1e-9 * rows[1].devices);
}

TEST(Presets, FigureNamesRoundTrip) {
  for (auto id : {FigureId::Fig3, FigureId::Fig4, FigureId::Fig5, FigureId::Fig6a, FigureId::Fig6b, FigureId::Fig7})
    EXPECT_EQ(parse_figure(to_string(id)), id);
  EXPECT_THROW(parse_figure("fig9"), std::invalid_argument);
}

TEST(Presets, RowCounts) {
  EXPECT_EQ(analytic_figure(FigureId::Fig3).rows.size(), 4 * preset::tau_db_grid().size());
  EXPECT_EQ(analytic_figure(FigureId::Fig4).rows.size(), 8 * preset::tau_db_grid().size());
  EXPECT_EQ(analytic_figure(FigureId::Fig5).rows.size(), 8u * 9u);
  EXPECT_EQ(analytic_figure(FigureId::Fig6a).rows.size(), 4u * 8u);
  // unslotted PN has no closed form and is left to the simulator
  for (const auto& r : analytic_figure(FigureId::Fig4).rows)
    EXPECT_EQ(r.analytic.has_value(), r.protocol != "unslotted-mb-pn") << r.protocol << ": " << r.analytic_error;
}

TEST(Presets, TimeAndFrequencySlottingCoincide) {
  const auto& r = analytic_figure(FigureId::Fig3);
  const auto t = r.curve("existing[slotted-t]");
  const auto f = r.curve("existing[slotted-f]");
  ASSERT_EQ(t.size(), f.size());
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_DOUBLE_EQ(t[k].second, f[k].second);
}

TEST(Presets, FullSlottingBeatsUnslotted) {
  const auto& r = analytic_figure(FigureId::Fig3);
  EXPECT_GT(median_sinr(r.curve("existing[slotted-tf]")) - median_sinr(r.curve("existing[unslotted-tf]")), 8.0);
}

TEST(Presets, SuccessFallsWithRepetitionsAtLowIncumbentDensity) {
  const auto& r = analytic_figure(FigureId::Fig6a);
  for (const char* p : {"existing", "benchmark", "slotted-mb", "unslotted-mb"}) {
    const auto c = r.curve(p);
    for (std::size_t k = 1; k < c.size(); ++k) EXPECT_LT(c[k].second, c[k - 1].second) << p << " N=" << c[k].first;
  }
}

TEST(Presets, InteriorOptimumAtHighIncumbentDensity) {
  const auto& r = analytic_figure(FigureId::Fig6b);
  for (const char* p : {"slotted-mb", "unslotted-mb"}) {
    const auto c = r.curve(p);
    const auto best = std::max_element(c.begin(), c.end(), [](auto& a, auto& b) { return a.second < b.second; });
    EXPECT_NE(best, c.begin()) << p;
    EXPECT_NE(best, c.end() - 1) << p;
  }
}

TEST(Reproduce, Fig7WritesCsvAndSvg) {
  const auto dir = std::filesystem::temp_directory_path() / "unbshare-experiments-test";
  std::filesystem::remove_all(dir);
  const auto out = reproduce_figure(FigureId::Fig7, dir.string());
  EXPECT_EQ(out.rows.size(), 4 * fig7_gamma_grid().size());
  const auto csv = slurp(out.csv_path);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(out.rows.size() + 1));
  const auto svg = slurp(out.svg_path);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  // rerunning gives identical bytes
  reproduce_figure(FigureId::Fig7, dir.string());
  EXPECT_EQ(slurp(out.csv_path), csv);
  std::filesystem::remove_all(dir);
}

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Run cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" UNBSHARE_CLI "' " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("unbshare-cli-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, AnalyticPrintsProbability) {
  const auto r = cli("analytic --protocol benchmark --tau-db 5");
  ASSERT_EQ(r.code, 0) << r.out;
  const double p = std::stod(r.out);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
}

TEST(Cli, ExistingNeedsNoBandCount) {
  const auto r = cli("analytic --protocol existing --assoc nearest");
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST(Cli, ConfigFileAndOverrides) {
  const auto a = cli("analytic --config '" UNBSHARE_CONFIGS "/table2.cfg' --protocol unslotted-mb");
  const auto b = cli("analytic --protocol unslotted-mb");
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  const auto c = cli("analytic --protocol unslotted-mb --override lambda_inc=0");
  ASSERT_EQ(c.code, 0) << c.out;
  EXPECT_GT(std::stod(c.out), std::stod(b.out));
}

TEST(Cli, DumpConfigRoundTrips) {
  const auto dir = scratch("dump");
  const auto first = cli("analytic --override N=4 --override alpha=3.5 --dump-config");
  ASSERT_EQ(first.code, 0) << first.out;
  std::ofstream(dir / "c.cfg") << first.out;
  const auto second = cli("analytic --config '" + (dir / "c.cfg").string() + "' --dump-config");
  EXPECT_EQ(first.out, second.out);
  fs::remove_all(dir);
}

TEST(Cli, SimulateReportsInterval) {
  const auto r = cli("simulate --protocol benchmark --realizations 200 --seed 3");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("+-"), std::string::npos);
  EXPECT_NE(r.out.find("200 realizations"), std::string::npos);
  EXPECT_EQ(r.out, cli("simulate --protocol benchmark --realizations 200 --seed 3").out);
}

TEST(Cli, SmallTorusWarns) {
  const auto r = cli("simulate --protocol benchmark --realizations 20 --torus-side 2");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("warning"), std::string::npos);
}

TEST(Cli, CapacityPrintsDevicesOrUnreachable) {
  const auto r = cli("capacity --protocol unslotted-mb --gamma 0.5");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_GT(std::stod(r.out), 0.0);
  const auto u = cli("capacity --protocol slotted-mb --assoc nearest --gamma 0.999999");
  ASSERT_EQ(u.code, 0) << u.out;
  EXPECT_EQ(u.out, "unreachable\n");
}

TEST(Cli, SweepWritesCsvToEnvDirectory) {
  const auto dir = scratch("sweep");
  const auto r = cli("sweep --grid 0:10:5 --curves benchmark,existing/pn", "UNBSHARE_OUT_DIR='" + dir.string() + "'");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto csv = slurp(dir / "sweep.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "param,protocol,scheme,association,engine,value,ci_half,realizations,seed");
  // header + 2 curves x 3 points
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  fs::remove_all(dir);
}

TEST(Cli, ReproduceFig7) {
  const auto dir = scratch("fig7");
  const auto r = cli("reproduce fig7 --out '" + dir.string() + "'");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir / "fig7.csv"));
  EXPECT_TRUE(fs::exists(dir / "fig7.svg"));
  fs::remove_all(dir);
}

TEST(Cli, ValidateDetectsCorruption) {
  const auto good = cli("validate --quick");
  EXPECT_EQ(good.code, 0) << good.out;
  const auto bad = cli("validate --quick --corrupt-xi 1.1");
  EXPECT_EQ(bad.code, 3) << bad.out;
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("").code, 64);
  EXPECT_EQ(cli("frobnicate").code, 64);
  EXPECT_EQ(cli("analytic --no-such-flag").code, 64);
  EXPECT_EQ(cli("analytic --override alpha=2").code, 2);
  EXPECT_EQ(cli("analytic --override bogus=1").code, 2);
  EXPECT_EQ(cli("analytic --config /nonexistent.cfg").code, 2);
  EXPECT_EQ(cli("reproduce fig9 --no-mc").code, 2);
  EXPECT_EQ(cli("sweep --param gamma --grid 1").code, 2);
  EXPECT_EQ(cli("--help").code, 0);
}

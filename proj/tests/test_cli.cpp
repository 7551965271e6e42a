#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/app.hpp"
#include "cli/options.hpp"
#include "cli/verify.hpp"
#include "stogeo/errors.hpp"
#include "stogeo/exact.hpp"

namespace fs = std::filesystem;
using namespace stogeo;
using namespace stogeo::cli;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "stogeo");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      row.push_back(end == cell.c_str() ? std::nan("") : x);
    }
    rows.push_back(row);
  }
  return rows;
}

// Byte comparison of every regular file under two directories.
void expect_same_tree(const fs::path& a, const fs::path& b) {
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    if (rel == "run.cfg" || rel == "run.json") continue;  // contain --out
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 0u);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("stogeo_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string at(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST(Options, Parsers) {
  EXPECT_EQ(parse_vec3("0,1,0"), (Vec3{0, 1, 0}));
  EXPECT_EQ(parse_vec3(" 1.5, -2,3e-1 "), (Vec3{1.5, -2, 0.3}));
  EXPECT_THROW(parse_vec3("1,2"), UsageError);
  EXPECT_THROW(parse_vec3("a,b,c"), UsageError);
  const SphereGrid g = parse_grid("36x72");
  EXPECT_EQ(g.n_lat, 36);
  EXPECT_EQ(g.n_lon, 72);
  EXPECT_THROW(parse_grid("36"), UsageError);
  EXPECT_THROW(parse_grid("0x4"), UsageError);
  EXPECT_EQ(parse_schedule("0:T:0.5", 2.0), (std::vector<double>{0, 0.5, 1, 1.5, 2}));
  EXPECT_EQ(parse_schedule("0,1,1.5,2.1,4.3,5.5,10,60", 60.0).size(), 8u);
  EXPECT_THROW(parse_schedule("0:1", 1.0), UsageError);
  EXPECT_EQ(parse_list("0.01,0.1,1,10,100").size(), 5u);
  EXPECT_EQ(parse_scheme("em"), Scheme::euler_maruyama);
  EXPECT_THROW(parse_scheme("rk4"), UsageError);
}

TEST_F(CliTest, SimulateDefaultsEndToEnd) {
  const CliRun r = run({"simulate", "--out", at("sim")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(dir_ / "sim" / "trajectory.csv");
  ASSERT_EQ(rows.size(), 60001u);
  EXPECT_EQ(rows.back()[0], 60.0);
  for (const auto& row : rows) {
    ASSERT_EQ(row.size(), 11u);
    EXPECT_LE(std::fabs(row[7]), 1e-10);
    EXPECT_LE(std::fabs(row[8]), 1e-10);
  }
  const std::string inv = slurp(dir_ / "sim" / "invariants.json");
  EXPECT_NE(inv.find("max_constraint_violation"), std::string::npos);
}

TEST_F(CliTest, SimulateEulerMaruyama) {
  const CliRun r = run({"simulate", "--scheme", "em", "--T", "5", "--out", at("em")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(dir_ / "em" / "trajectory.csv");
  EXPECT_GT(std::fabs(rows.back()[7]), 1e-6);
  EXPECT_EQ(rows.back()[10], 0.0);
}

TEST_F(CliTest, ZeroNoiseReproducesGeodesic) {
  const CliRun r = run({"simulate", "--dW", "zero", "--T", "10", "--every", "100", "--out", at("g")});
  ASSERT_EQ(r.code, 0) << r.err;
  const BundleState z0{{0, 1, 0}, {1, 0, 0}};
  const auto rows = read_csv(dir_ / "g" / "trajectory.csv");
  ASSERT_EQ(rows.size(), 101u);
  for (const auto& row : rows) {
    const BundleState ex = constant_control_state(z0, 0.0, row[0]);
    EXPECT_LT(max_abs(Vec3{row[1], row[2], row[3]} - ex.u), 1e-6);
    EXPECT_LT(max_abs(Vec3{row[4], row[5], row[6]} - ex.v), 1e-6);
    EXPECT_EQ(row[8] == 0.0 || std::fabs(row[8]) < 1e-12, true);
  }
}

TEST_F(CliTest, ConfigRoundTrip) {
  ASSERT_EQ(run({"simulate", "--T", "2", "--D", "3", "--seed", "9", "--out", at("a")}).code, 0);
  ASSERT_EQ(run({"simulate", "--config", at("a/run.cfg"), "--out", at("b")}).code, 0);
  ASSERT_EQ(run({"simulate", "--config", at("a/run.json"), "--out", at("c")}).code, 0);
  expect_same_tree(dir_ / "a", dir_ / "b");
  expect_same_tree(dir_ / "a", dir_ / "c");
}

TEST_F(CliTest, FlagsWinOverConfig) {
  {
    std::ofstream cfg(dir_ / "x.cfg");
    cfg << "# comment\nT = 3\nseed = 5\n";
  }
  ASSERT_EQ(run({"simulate", "--config", at("x.cfg"), "--T", "1", "--out", at("o")}).code, 0);
  const auto rows = read_csv(dir_ / "o" / "trajectory.csv");
  EXPECT_EQ(rows.back()[0], 1.0);
  EXPECT_NE(slurp(dir_ / "o" / "run.cfg").find("seed = 5"), std::string::npos);
}

TEST_F(CliTest, ErrorsGiveNonzeroExit) {
  {
    std::ofstream cfg(dir_ / "bad.cfg");
    cfg << "nonsense = 1\n";
  }
  EXPECT_EQ(run({"simulate", "--config", at("bad.cfg"), "--out", at("o")}).code, 2);
  EXPECT_EQ(run({"simulate", "--u0", "1,1,0", "--out", at("o")}).code, 2);
  EXPECT_EQ(run({"simulate", "--k", "-1", "--out", at("o")}).code, 2);
  EXPECT_EQ(run({"simulate", "--scheme", "rk4", "--out", at("o")}).code, 2);
  const CliRun nc = run({"simulate", "--fp-max-iter", "1", "--T", "1", "--out", at("o")});
  EXPECT_EQ(nc.code, 4);
  EXPECT_NE(nc.err.find("converge"), std::string::npos) << nc.err;
  EXPECT_NE(run({"nosuchcommand"}).code, 0);
}

TEST_F(CliTest, EnsembleDSweep) {
  const CliRun r = run({"ensemble", "--N", "24", "--T", "1", "--D", "0.01,0.1,1,10,100",
                     "--snapshots", "0,0.5,1", "--workers", "2", "--out", at("e")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* d : {"D_0.01", "D_0.1", "D_1", "D_10", "D_100"}) {
    const auto rows = read_csv(dir_ / "e" / d / "emax.csv");
    EXPECT_EQ(rows.size(), 3u) << d;
    EXPECT_TRUE(fs::exists(dir_ / "e" / d / "hist_0002.csv"));
    EXPECT_EQ(read_csv(dir_ / "e" / d / "bundle_counts.csv").size(), 48u);
    EXPECT_EQ(read_csv(dir_ / "e" / d / "mean_trajectory.csv").size(), 3u);
    EXPECT_EQ(read_csv(dir_ / "e" / d / "hist_0000.csv").size(), 36u * 72u);
  }
  EXPECT_NE(slurp(dir_ / "e" / "summary.json").find("\"rate\""), std::string::npos);
}

TEST_F(CliTest, EnsembleSinglePathFlagged) {
  const CliRun r = run({"ensemble", "--N", "1", "--T", "1", "--out", at("e")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string s = slurp(dir_ / "e" / "D_1" / "summary.json");
  EXPECT_NE(s.find("\"emax_meaningful\": false"), std::string::npos);
  EXPECT_NE(r.err.find("meaningless"), std::string::npos);
}

TEST_F(CliTest, EnsembleFigureSnapshots) {
  const CliRun r = run({"ensemble", "--N", "8", "--T", "60", "--k", "0.01", "--snapshots",
                     "0,1,1.5,2.1,4.3,5.5,10,60", "--out", at("e")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(dir_ / "e" / "D_1" / "snapshots.csv");
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_NEAR(rows[3][1], 2.1, 1e-12);
}

TEST_F(CliTest, EnsembleOutputsIndependentOfWorkers) {
  for (const char* w : {"1", "4", "8"}) {
    const CliRun r = run({"ensemble", "--N", "50", "--T", "1", "--D", "1,10", "--snapshots",
                       "0:T:0.25", "--workers", w, "--out", at(std::string("w") + w)});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  expect_same_tree(dir_ / "w1", dir_ / "w4");
  expect_same_tree(dir_ / "w1", dir_ / "w8");
}

TEST_F(CliTest, PlanRandomQuery) {
  const CliRun r = run({"plan", "--u0", "0,1,0", "--v0", "1,0,0", "--u1", "0.6,0,0.8", "--v1",
                     "0,1,0", "--out", at("p")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string j = slurp(dir_ / "p" / "plan.json");
  const auto pos = j.find("\"endpoint_error\": ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LE(std::stod(j.substr(pos + 18)), 1e-8);
  const auto traj = read_csv(dir_ / "p" / "trajectory.csv");
  EXPECT_NEAR(traj.back()[0], 2 * std::numbers::pi + 0.5, 1e-12);
  EXPECT_NEAR(traj.back()[1], 0.6, 1e-8);
  EXPECT_NEAR(traj.back()[3], 0.8, 1e-8);
}

TEST_F(CliTest, PlanIdentityAndErrors) {
  ASSERT_EQ(run({"plan", "--u1", "0,1,0", "--v1", "1,0,0", "--out", at("p")}).code, 0);
  const std::string j = slurp(dir_ / "p" / "plan.json");
  EXPECT_EQ(j.find("\"duration\""), j.rfind("\"duration\""));  // one segment

  const CliRun inf = run({"plan", "--T", "3", "--out", at("q")});
  EXPECT_EQ(inf.code, 3);
  EXPECT_NE(inf.err.find("6.283185307179586"), std::string::npos) << inf.err;

  const CliRun zero = run({"plan", "--v0", "0,0,0", "--v1", "0,0,0", "--out", at("q")});
  EXPECT_EQ(zero.code, 2);
  EXPECT_NE(zero.err.find("unsupported"), std::string::npos);
}

TEST_F(CliTest, VerifyCleanBuildPasses) {
  const CliRun r = run({"verify", "--partition-samples", "200000", "--out", at("v")});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("\"pass\": true"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "v" / "verify.json"));
}

TEST_F(CliTest, VerifyTightenedToleranceFails) {
  const CliRun r = run({"verify", "--partition-samples", "200000", "--tolerance-scale", "1e-4"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("FAILED bracket_f_gf"), std::string::npos);
}

TEST(Verify, SignErrorInDiffusionFailsBrackets) {
  VerifyFields fields;
  const auto value = fields.g.value;
  const auto jac = fields.g.jacobian;
  fields.g.value = [value](const BundleState& z) { return -1.0 * value(z); };
  fields.g.jacobian = [jac](const BundleState& z) {
    Jacobian6 j = jac(z);
    for (auto& row : j) {
      for (auto& x : row) x = -x;
    }
    return j;
  };
  VerifyOptions opt;
  opt.partition_samples = 48000;
  const VerifyReport rep = run_verification(opt, fields);
  EXPECT_FALSE(rep.pass());
  const auto failed = rep.failures();
  for (const char* name : {"bracket_gf_closed_form", "bracket_g_gf"}) {
    EXPECT_NE(std::find(failed.begin(), failed.end(), name), failed.end()) << name;
  }
  // Tangency is sign-blind, so only the bracket checks catch this mutation.
  EXPECT_EQ(std::find(failed.begin(), failed.end(), "tangency_g"), failed.end());
}

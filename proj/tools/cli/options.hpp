#pragma once

// Run configuration for the stogeo subcommands and the parsers for the
// compact textual forms used on the command line and in config files:
//   vectors    "x,y,z"
//   grids      "36x72"
//   schedules  "0,1,1.5,60" or "start:stop:step"

#include <cstdint>
#include <string>
#include <vector>

#include "stogeo/ergodic.hpp"
#include "stogeo/integrator.hpp"

namespace stogeo::cli {

Vec3 parse_vec3(const std::string& text);
SphereGrid parse_grid(const std::string& text);
std::vector<double> parse_schedule(const std::string& text, double T);
std::vector<double> parse_list(const std::string& text);
Scheme parse_scheme(const std::string& text);

std::string format_vec3(const Vec3& v);

// Options shared by every simulation subcommand. Stored as the user wrote
// them so run.cfg can reproduce a run verbatim.
struct CommonOptions {
  double k = 1e-3;
  double T = 60.0;
  std::uint64_t seed = 1;
  std::string u0 = "0,1,0";
  std::string v0 = "1,0,0";
  std::string out = "out";
  double fp_tol = 1e-13;
  int fp_max_iter = 100;
};

struct SimulateOptions {
  CommonOptions common;
  double D = 1.0;
  std::string scheme = "implicit";
  std::string dW = "normal";  // normal | zero
  std::uint64_t path_id = 0;
  std::int64_t every = 1;     // write every n-th step
  std::string snapshots;      // empty: every `every`-th step
};

struct EnsembleOptions {
  CommonOptions common;
  std::string D = "1";        // one value or a comma list (D-sweep)
  std::int64_t N = 2000;
  std::string grid = "36x72";
  bool equal_area = false;
  std::string snapshots = "0:T:0.5";
  std::string scheme = "implicit";
  unsigned workers = 0;
  double floor_factor = 2.0;
  std::int64_t floor_samples = 0;  // 0: same as N
};

struct PlanOptions {
  std::string u0 = "0,1,0";
  std::string v0 = "1,0,0";
  std::string u1 = "1,0,0";
  std::string v1 = "0,0,1";
  double T = 0.0;             // 0: 2 pi / r + 0.5
  std::int64_t samples = 200;
  std::string out = "out";
};

struct VerifyOptions {
  std::int64_t points = 1000;
  std::int64_t partition_samples = 1000000;
  std::uint64_t seed = 2024;
  double tolerance_scale = 1.0;
  std::string out;            // empty: report on stdout only
};

}  // namespace stogeo::cli

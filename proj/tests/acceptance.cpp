// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
//
//   stogeo_acceptance            all criteria, full scale
//   stogeo_acceptance --reduced  criteria 6 and 8 at N = 2000 (rescaled bands)
//   stogeo_acceptance --only 1,3 a subset

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stogeo/control.hpp"
#include "stogeo/ergodic.hpp"
#include "stogeo/errors.hpp"
#include "stogeo/exact.hpp"
#include "stogeo/format.hpp"
#include "stogeo/integrator.hpp"
#include "test_support.hpp"

#ifdef STOGEO_HAVE_CLI
#include "cli/app.hpp"
#endif

namespace fs = std::filesystem;
using namespace stogeo;
using stogeo::testing::random_states;

namespace {

constexpr double kPi = std::numbers::pi;
const BundleState kReferenceStart{{0, 1, 0}, {1, 0, 0}};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Constraint and energy conservation

Outcome conservation() {
  StepConfig cfg;  // k = 1e-3, D = 1, fp_tol = 1e-13
  const auto h = simulate_history(kReferenceStart, 60.0, cfg, NoiseStream(1, 0));
  double con = 0.0, energy = 0.0;
  for (const auto& rec : h) {
    con = std::fmax(con, std::fabs(norm(rec.u) - 1.0));
    energy = std::fmax(energy, std::fabs(norm2(rec.v) - 1.0));
  }
  const auto inv = check_step_invariants(h);
  return {con <= 1e-10 && energy <= 1e-10,
          "max||U|-1| = " + fmt(con) + ", max||V|^2-1| = " + fmt(energy) +
              " over " + std::to_string(h.size() - 1) + " steps (fp sweeps <= " +
              std::to_string(inv.max_iterations) + ")"};
}

// ---------------------------------------------------------------------------
// 2. Deterministic order against the great circle

double geodesic_error(double k, Scheme scheme) {
  StepConfig cfg;
  cfg.k = k;
  cfg.D = 0.0;
  const auto h = simulate_history(kReferenceStart, 1.0, cfg, NoiseStream::zero(), scheme);
  return norm(h.back().u - constant_control_state(kReferenceStart, 0.0, h.back().t).u);
}

Outcome deterministic_order() {
  bool ok = true;
  std::string imp, em;
  for (double k : {1e-2, 5e-3, 2.5e-3}) {
    const double ri = geodesic_error(k, Scheme::implicit) / geodesic_error(k / 2, Scheme::implicit);
    const double re = geodesic_error(k, Scheme::euler_maruyama) /
                      geodesic_error(k / 2, Scheme::euler_maruyama);
    ok = ok && ri >= 3.5 && ri <= 4.5 && re >= 1.7 && re <= 2.3;
    imp += (imp.empty() ? "" : ", ") + fmt(ri);
    em += (em.empty() ? "" : ", ") + fmt(re);
  }
  return {ok, "implicit ratios {" + imp + "}, Euler-Maruyama ratios {" + em + "}"};
}

// ---------------------------------------------------------------------------
// 3. Bracket identities

Outcome brackets() {
  double gf = 0, fgf = 0, ggf = 0;
  std::uint64_t seed = 1;
  for (double r : {0.5, 1.0, 2.0}) {
    for (const auto& z : random_states(1000, r, seed++)) {
      gf = std::fmax(gf, max_abs(jacobi_bracket(FieldId::g, FieldId::f, z) - bracket_gf(z)));
      fgf = std::fmax(fgf, max_abs(jacobi_bracket(FieldId::f, FieldId::gf, z) -
                                   (r * r) * diffusion_g(z)));
      ggf = std::fmax(ggf, max_abs(jacobi_bracket(FieldId::g, FieldId::gf, z) + drift_f(z)));
    }
  }
  return {gf <= 1e-12 && fgf <= 1e-12 && ggf <= 1e-12,
          "[g,f] " + fmt(gf) + ", [f,[g,f]]-r^2 g " + fmt(fgf) + ", [g,[g,f]]+f " + fmt(ggf) +
              " (3000 points)"};
}

// ---------------------------------------------------------------------------
// 4. Closed-form constant-control orbits

Outcome orbits() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ua(-3.0, 3.0), ur(0.2, 3.0);
  double ode = 0, period = 0, diameter = 0;
  for (const auto& b : random_states(100, 1.0, 40)) {
    const BundleState x{b.u, ur(rng) * b.v};
    const double a = ua(rng);
    const double r = norm(x.v);
    const auto orbit = make_orbit(x, a);
    const double P = orbit_period(r, a);
    for (int i = 0; i < 100; ++i) {
      const double t = 2.0 * P * i / 100.0;
      const BundleState z = constant_control_state(orbit, t);
      const Vec3 rhs = -norm2(z.v) * z.u + a * cross(z.u, z.v);
      ode = std::fmax(ode, max_abs(constant_control_acceleration(orbit, t) - rhs));
    }
    const double Pb = 2 * kPi / std::sqrt(r * r + a * a);
    period = std::fmax(period, stogeo::testing::state_distance(constant_control_state(orbit, Pb), x));
    const Vec3 opposite = constant_control_state(orbit, 0.5 * Pb).u;
    diameter = std::fmax(diameter, std::fabs(norm(opposite - x.u) - 2 * r / std::sqrt(r * r + a * a)));
  }
  return {ode <= 1e-10 && period <= 1e-12 && diameter <= 1e-12,
          "ODE residual " + fmt(ode) + ", period return " + fmt(period) + ", diameter " +
              fmt(diameter)};
}

// ---------------------------------------------------------------------------
// 5. Controllability

Outcome controllability() {
  double worst = 0.0, time_err = 0.0;
  int failures = 0, queries = 0;
  std::string first;
  std::uint64_t seed = 500;
  for (double r : {0.5, 1.0, 2.0}) {
    const auto a = random_states(100, r, seed++);
    const auto b = random_states(100, r, seed++);
    const double T = minimum_horizon(r) + 0.5;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ++queries;
      try {
        const ControlPlan plan = plan_control({a[i], b[i], T});
        double sum = 0.0;
        for (const auto& s : plan.segments) sum += s.duration;
        if (plan.total_time != T) ++failures;
        time_err = std::fmax(time_err, std::fabs(sum - T));
        worst = std::fmax(worst, stogeo::testing::state_distance(plan_endpoint(a[i], plan), b[i]));
      } catch (const Error& e) {
        ++failures;
        if (first.empty()) first = e.what();
      }
    }
  }
  const bool ok = failures == 0 && worst <= 1e-8 && time_err <= 1e-12;
  return {ok, std::to_string(queries) + " queries, endpoint error <= " + fmt(worst) +
                  ", |sum durations - T| <= " + fmt(time_err) +
                  (failures ? ", failures " + std::to_string(failures) + " (" + first + ")" : "")};
}

// ---------------------------------------------------------------------------
// 6 and 8. Uniform limit on M_1 and mean damping

struct LargeRun {
  std::int64_t N = 0;
  std::uint64_t seed = 0;
  BundleCounts counts;
  Vec3 mean_u, mean_v;
};

LargeRun large_run(std::int64_t N, std::uint64_t seed) {
  EnsembleConfig cfg;
  cfg.N = N;
  cfg.T = 60.0;
  cfg.seed = seed;
  cfg.snapshot_times = {60.0};
  const EnsembleResult ens = simulate_ensemble(cfg, kReferenceStart);
  const auto mean = mean_trajectory(ens);
  return {N, seed, bundle_counts(ens.at(0)), mean.back().mean_u, mean.back().mean_v};
}

Outcome uniform_cells(const LargeRun& run) {
  const double n = static_cast<double>(run.counts.counted());
  const double cell_mean = n / 48.0;
  const double cell_sig = std::sqrt(n * (1.0 / 48.0) * (47.0 / 48.0));
  const double seg_mean = n / 6.0;
  const double seg_sig = std::sqrt(n * (1.0 / 6.0) * (5.0 / 6.0));
  std::int64_t lo = INT64_MAX, hi = 0, slo = INT64_MAX, shi = 0;
  bool ok = run.counts.counted() == run.N;
  for (const auto& row : run.counts.counts) {
    for (auto c : row) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
      ok = ok && std::fabs(c - cell_mean) <= 4.0 * cell_sig;
    }
  }
  for (auto c : run.counts.segment_totals()) {
    slo = std::min(slo, c);
    shi = std::max(shi, c);
    ok = ok && std::fabs(c - seg_mean) <= 4.0 * seg_sig;
  }
  return {ok, "N=" + std::to_string(run.N) + " seed " + std::to_string(run.seed) +
                  ": cells in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                  "] vs band [" + fmt(cell_mean - 4 * cell_sig) + ", " +
                  fmt(cell_mean + 4 * cell_sig) + "], segments in [" + std::to_string(slo) +
                  ", " + std::to_string(shi) + "] vs band [" + fmt(seg_mean - 4 * seg_sig) +
                  ", " + fmt(seg_mean + 4 * seg_sig) + "]"};
}

Outcome mean_damping(const LargeRun& run) {
  const double eu = norm(run.mean_u), ev = norm(run.mean_v);
  return {eu <= 0.05 && ev <= 0.05, "N=" + std::to_string(run.N) + ": |E[u](60)| = " + fmt(eu) +
                                        ", |E[v](60)| = " + fmt(ev)};
}

// ---------------------------------------------------------------------------
// 7. Exponential decay proxy

RateFit decay_rate(double D) {
  EnsembleConfig cfg;
  cfg.N = 2000;
  cfg.T = 60.0;
  cfg.seed = 1;
  cfg.step.D = D;
  cfg.grid = SphereGrid{8, 16, true};
  cfg.snapshot_times.clear();
  for (int i = 0; i <= 240; ++i) cfg.snapshot_times.push_back(0.25 * i);
  const EnsembleResult ens = simulate_ensemble(cfg, kReferenceStart);
  std::vector<SphereHistogram> hs;
  for (std::size_t s = 0; s < ens.times.size(); ++s) hs.push_back(sphere_histogram(ens.at(s), cfg.grid));
  const ErrorSeries series = emax_series(hs, ens.times);
  const double floor = uniform_floor(cfg.N, cfg.grid, cfg.seed + 0x5EEDull);
  return fit_exponential_rate(series, floor, 2.0);
}

Outcome exponential_decay() {
  const RateFit d1 = decay_rate(1.0);
  const RateFit d01 = decay_rate(0.1);
  const RateFit d100 = decay_rate(100.0);
  const bool ok = d1.alpha > 0.0 && d1.quality >= 0.8 && d1.alpha > d100.alpha &&
                  d1.alpha > d01.alpha;
  return {ok, "alpha(1) = " + fmt(d1.alpha) + " (R^2 " + fmt(d1.quality) + ", " +
                  std::to_string(d1.points) + " pts), alpha(0.1) = " + fmt(d01.alpha) +
                  ", alpha(100) = " + fmt(d100.alpha)};
}

// ---------------------------------------------------------------------------
// 9. Determinism across worker counts

#ifdef STOGEO_HAVE_CLI
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "stogeo_acceptance_determinism";
  fs::remove_all(root);
  const fs::path cwd = fs::current_path();
  std::vector<fs::path> outs;
  for (const char* w : {"1", "4", "8"}) {
    const fs::path dir = root / (std::string("workers_") + w);
    fs::create_directories(dir);
    fs::current_path(dir);  // identical relative --out, so run.json matches too
    const char* argv[] = {"stogeo", "ensemble", "--N", "2000", "--T", "60", "--D", "1",
                          "--grid", "8x16", "--equal-area", "--snapshots", "0:T:0.25",
                          "--seed", "1", "--workers", w, "--out", "ens"};
    std::ostringstream out, err;
    const int code = stogeo::cli::run_cli(static_cast<int>(std::size(argv)), argv, out, err);
    fs::current_path(cwd);
    if (code != 0) return {false, "ensemble run failed: " + err.str()};
    outs.push_back(dir / "ens");
  }
  std::size_t files = 0, bytes = 0;
  for (const auto& e : fs::recursive_directory_iterator(outs[0])) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), outs[0]);
    const std::string ref = slurp(e.path());
    for (std::size_t i = 1; i < outs.size(); ++i) {
      if (!fs::exists(outs[i] / rel) || slurp(outs[i] / rel) != ref) {
        return {false, "output differs: " + rel.string()};
      }
    }
    ++files;
    bytes += ref.size();
  }
  for (std::size_t i = 1; i < outs.size(); ++i) {
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(outs[i])) n += e.is_regular_file();
    if (n != files) return {false, "file sets differ"};
  }
  fs::remove_all(root);
  return {files > 0, std::to_string(files) + " files (" + std::to_string(bytes) +
                         " bytes) byte-identical for 1, 4, 8 workers, N=2000"};
}
#endif

}  // namespace

int main(int argc, char** argv) {
  bool reduced = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--reduced") {
      reduced = true;
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else {
      std::fprintf(stderr, "usage: %s [--reduced] [--only 1,2,...]\n", argv[0]);
      return 2;
    }
  }
  const auto wanted = [&](int id) { return only.empty() || only.count(id) > 0; };

  int failed = 0;
  // shared_secs: time spent on shared work before the criterion's own check.
  const auto report = [&](int id, const char* title, const std::function<Outcome()>& body,
                          double shared_secs = 0.0) {
    if (!wanted(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        shared_secs + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::printf("%s  criterion %d  %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "constraint and energy conservation", conservation);
  report(2, "deterministic order", deterministic_order);
  report(3, "bracket identities", brackets);
  report(4, "closed-form orbits", orbits);
  report(5, "controllability", controllability);

  if (wanted(6) || wanted(8)) {
    const std::int64_t N = reduced ? 2000 : 20000;
    const auto t0 = std::chrono::steady_clock::now();
    LargeRun run = large_run(N, 1);
    Outcome cells = uniform_cells(run);
    // Statistical criterion: one rerun with a fresh seed before declaring failure.
    if (!cells.pass) {
      std::printf("note  criterion 6 first attempt failed (%s); rerunning with seed 2\n",
                  cells.detail.c_str());
      run = large_run(N, 2);
      cells = uniform_cells(run);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(6, "uniform limit on M_1", [&] { return cells; }, secs);
    report(8, "mean damping", [&] { return mean_damping(run); }, secs);
  }

  report(7, "exponential decay proxy", exponential_decay);
#ifdef STOGEO_HAVE_CLI
  report(9, "determinism across workers", determinism);
#else
  report(9, "determinism across workers", [] { return Outcome{false, "built without the CLI"}; });
#endif

  std::printf("%s\n", failed == 0 ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED");
  return failed == 0 ? 0 : 1;
}

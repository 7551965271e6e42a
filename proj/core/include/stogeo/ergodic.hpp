#pragma once

// Parallel Monte-Carlo ensembles and the diagnostics used to watch the law of
// u(t) (and of (u, v) on M_1) relax to the uniform measure.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "stogeo/integrator.hpp"

namespace stogeo {

// Latitude-longitude binning of S^2 with exact cell solid angles
// dlon (sin lat2 - sin lat1). With equal_area the latitude edges are uniform
// in sin(lat) so every cell has area 4 pi / (n_lat n_lon).
struct SphereGrid {
  int n_lat = 36;
  int n_lon = 72;
  bool equal_area = false;

  void validate() const;
  int cells() const { return n_lat * n_lon; }
  int cell_of(const Vec3& u) const;  // row-major lat_index * n_lon + lon_index
  double area(int lat_index) const;  // same for every longitude in the band
  double lat_edge(int i) const;      // i = 0..n_lat, radians
};

struct EnsembleConfig {
  std::int64_t N = 2000;
  StepConfig step;
  double T = 60.0;
  std::uint64_t seed = 1;
  std::vector<double> snapshot_times{0.0, 60.0};
  SphereGrid grid;
  unsigned workers = 0;  // 0: std::thread::hardware_concurrency()
  Scheme scheme = Scheme::implicit;

  void validate() const;
};

// Snapshot-major storage: state of path p at snapshot s is states[s * N + p].
struct EnsembleResult {
  std::int64_t N = 0;
  std::vector<double> times;        // mesh-aligned snapshot times
  std::vector<std::int64_t> steps;  // mesh indices
  std::vector<BundleState> states;

  std::span<const BundleState> at(std::size_t snapshot) const {
    return {states.data() + snapshot * static_cast<std::size_t>(N),
            static_cast<std::size_t>(N)};
  }
};

// Path p is driven by NoiseStream(seed, p). Output is independent of the
// number of workers. A nonconvergent path aborts the run with a
// NonConvergenceError tagged with the lowest failing path id.
EnsembleResult simulate_ensemble(const EnsembleConfig& cfg, const BundleState& z0);

unsigned resolve_workers(unsigned requested);

struct SphereHistogram {
  SphereGrid grid;
  std::int64_t total = 0;
  std::vector<std::int64_t> counts;  // per cell, row-major
  std::vector<double> areas;         // per cell

  double density(int cell) const {
    return static_cast<double>(counts[cell]) /
           (static_cast<double>(total) * areas[cell]);
  }
  // sum over cells of density * area
  double mass() const;
};

inline constexpr double kUniformDensity = 0.25 / 3.14159265358979323846;  // 1 / (4 pi)

SphereHistogram sphere_histogram(std::span<const BundleState> states,
                                 const SphereGrid& grid);
SphereHistogram sphere_histogram(std::span<const Vec3> points, const SphereGrid& grid);

// max over cells |density - 1/(4 pi)|.
double emax(const SphereHistogram& h);
// max over cells |density / (1/(4 pi)) - 1|, the convention-free ratio.
double emax_ratio(const SphereHistogram& h);

struct ErrorSeries {
  std::vector<double> times;
  std::vector<double> emax;        // density units (uniform = 1/(4 pi))
  std::vector<double> emax_ratio;  // relative to the uniform density
};

// Throws UsageError when the histograms use different grids or the lengths differ.
ErrorSeries emax_series(std::span<const SphereHistogram> histograms,
                        std::span<const double> times);

// Mean of per-snapshot densities (per cell).
std::vector<double> time_averaged_density(std::span<const SphereHistogram> histograms);

struct BundleCounts {
  std::array<std::array<std::int64_t, 8>, 6> counts{};  // [i-1][j-1]
  std::int64_t degenerate = 0;  // velocity projected to ~0
  std::int64_t off_class = 0;   // | |v| - 1 | beyond tolerance (not counted)
  std::int64_t counted() const;
  std::array<std::int64_t, 6> segment_totals() const;
};

BundleCounts bundle_counts(std::span<const BundleState> states,
                           double speed_tol = 1e-6);

struct MeanPoint {
  double t = 0.0;
  Vec3 mean_u;
  Vec3 mean_v;
};

std::vector<MeanPoint> mean_trajectory(const EnsembleResult& ensemble);

// Raw scheme iterates of every path at steps n and n + 1.
struct RawStepSample {
  std::int64_t n = 0;
  std::vector<Vec3> u_n, v_n, u_next, v_next;
};

// Runs the ensemble only as far as the largest requested step and records the
// raw (chord-velocity) iterates needed by damping_check.
std::vector<RawStepSample> sample_raw_steps(const EnsembleConfig& cfg,
                                            const BundleState& z0,
                                            std::span<const std::int64_t> steps);

struct DampingRow {
  std::int64_t n = 0;
  Vec3 residual;        // mean of V^{n+1} - V^n + k(|V^n|^2 U^{n+1} + (D/2) V^{n+1})
  Vec3 standard_error;  // per component
  double band = 0.0;    // C k^2 (statistical part added per component)
  bool pass = false;
};

struct DampingReport {
  std::vector<DampingRow> rows;
  double constant = 10.0;
  bool all_pass = true;
};

// Checks the mean velocity recursion
//   E V^{n+1} - E V^n = -k (E[|V^n|^2] E U^{n+1} + (D/2) E V^{n+1}) + O(k^2)
// per component against C k^2 + 4 standard errors.
DampingReport damping_check(std::span<const RawStepSample> samples,
                            const StepConfig& cfg, double constant = 10.0);

struct RateFit {
  double alpha = 0.0;    // E_max - floor ~ c exp(-alpha t)
  double quality = 0.0;  // R^2 of the log-linear fit
  std::size_t points = 0;
  double window_end = 0.0;
};

// Least-squares slope of log(E - floor) against t over the leading run of
// points with E > floor_factor * floor (the pre-floor window). Throws
// InsufficientDataError when that window has fewer than 10 points.
RateFit fit_exponential_rate(const ErrorSeries& series, double floor,
                             double floor_factor = 2.0, double t_min = 0.0);

// Reference samplers (mt19937_64): uniform points on S^2 and uniform states on M_1.
std::vector<Vec3> sample_uniform_sphere(std::int64_t n, std::uint64_t seed);
std::vector<BundleState> sample_uniform_m1(std::int64_t n, std::uint64_t seed);

// E_max of an n-point uniform sample: the Monte-Carlo floor for rate fitting.
double uniform_floor(std::int64_t n, const SphereGrid& grid, std::uint64_t seed);

}  // namespace stogeo

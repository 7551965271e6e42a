#include "stogeo/ergodic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <thread>

#include "stogeo/errors.hpp"

namespace stogeo {

namespace {

constexpr double kPi = std::numbers::pi;

// Runs body(p) for p in [0, n) on `workers` threads. Work is handed out in
// fixed-size chunks; callers write results into per-path slots only.
template <class Body>
void parallel_paths(std::int64_t n, unsigned workers, Body&& body) {
  constexpr std::int64_t kChunk = 16;
  std::atomic<std::int64_t> next{0};
  std::mutex error_mutex;
  std::optional<NonConvergenceError> first_error;
  std::exception_ptr other_error;

  const auto work = [&] {
    for (;;) {
      const std::int64_t begin = next.fetch_add(kChunk);
      if (begin >= n) return;
      const std::int64_t end = std::min(n, begin + kChunk);
      for (std::int64_t p = begin; p < end; ++p) {
        try {
          body(p);
        } catch (const NonConvergenceError& e) {
          std::lock_guard lock(error_mutex);
          if (!first_error || p < first_error->path_id()) {
            first_error = e.with_path(p);
          }
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!other_error) other_error = std::current_exception();
        }
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (other_error) std::rethrow_exception(other_error);
  if (first_error) throw *first_error;
}

}  // namespace

void SphereGrid::validate() const {
  if (n_lat < 1 || n_lon < 1) throw UsageError("grid resolution must be positive");
}

double SphereGrid::lat_edge(int i) const {
  if (equal_area) return std::asin(std::clamp(-1.0 + 2.0 * i / n_lat, -1.0, 1.0));
  return -0.5 * kPi + kPi * i / n_lat;
}

double SphereGrid::area(int lat_index) const {
  const double dlon = 2.0 * kPi / n_lon;
  if (equal_area) return dlon * (2.0 / n_lat);
  return dlon * (std::sin(lat_edge(lat_index + 1)) - std::sin(lat_edge(lat_index)));
}

int SphereGrid::cell_of(const Vec3& u) const {
  const double len = norm(u);
  const double sz = std::clamp(u.z / len, -1.0, 1.0);
  int i = 0;
  if (equal_area) {
    i = static_cast<int>(std::floor((sz + 1.0) * 0.5 * n_lat));
  } else {
    i = static_cast<int>(std::floor((std::asin(sz) + 0.5 * kPi) / kPi * n_lat));
  }
  i = std::clamp(i, 0, n_lat - 1);
  const double lon = std::atan2(u.y, u.x);
  int j = static_cast<int>(std::floor((lon + kPi) / (2.0 * kPi) * n_lon));
  j = std::clamp(j, 0, n_lon - 1);
  return i * n_lon + j;
}

void EnsembleConfig::validate() const {
  step.validate();
  grid.validate();
  if (N < 1) throw UsageError("N must be >= 1");
  if (!(T > 0.0)) throw UsageError("T must be positive");
  if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end())) {
    throw UsageError("snapshot times must be sorted");
  }
  for (double t : snapshot_times) {
    if (t < 0.0 || t > T * (1.0 + 1e-12)) {
      throw UsageError("snapshot time outside [0, T]");
    }
  }
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

EnsembleResult simulate_ensemble(const EnsembleConfig& cfg, const BundleState& z0) {
  cfg.validate();
  const std::int64_t total = step_count(cfg.T, cfg.step.k);
  EnsembleResult result;
  result.N = cfg.N;
  for (double t : cfg.snapshot_times) {
    const std::int64_t n = std::min(mesh_index(t, cfg.step.k), total);
    result.steps.push_back(n);
    result.times.push_back(static_cast<double>(n) * cfg.step.k);
  }
  const std::size_t snaps = result.steps.size();
  result.states.resize(snaps * static_cast<std::size_t>(cfg.N));

  // Validates z0 and the step-size guard once, before any thread starts.
  if (cfg.scheme == Scheme::implicit) (void)start_state(z0, cfg.step);

  parallel_paths(cfg.N, resolve_workers(cfg.workers), [&](std::int64_t p) {
    std::vector<BundleState> local(snaps);
    run_path(z0, total, cfg.step, NoiseStream(cfg.seed, static_cast<std::uint64_t>(p)),
             result.steps, local, cfg.scheme);
    for (std::size_t s = 0; s < snaps; ++s) {
      result.states[s * static_cast<std::size_t>(cfg.N) + static_cast<std::size_t>(p)] =
          local[s];
    }
  });
  return result;
}

double SphereHistogram::mass() const {
  double m = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    m += density(static_cast<int>(c)) * areas[c];
  }
  return m;
}

SphereHistogram sphere_histogram(std::span<const Vec3> points, const SphereGrid& grid) {
  grid.validate();
  if (points.empty()) throw UsageError("histogram of an empty sample");
  SphereHistogram h;
  h.grid = grid;
  h.total = static_cast<std::int64_t>(points.size());
  h.counts.assign(grid.cells(), 0);
  h.areas.resize(grid.cells());
  for (int i = 0; i < grid.n_lat; ++i) {
    const double a = grid.area(i);
    for (int j = 0; j < grid.n_lon; ++j) h.areas[i * grid.n_lon + j] = a;
  }
  for (const Vec3& u : points) ++h.counts[grid.cell_of(u)];
  return h;
}

SphereHistogram sphere_histogram(std::span<const BundleState> states,
                                 const SphereGrid& grid) {
  std::vector<Vec3> points;
  points.reserve(states.size());
  for (const BundleState& z : states) points.push_back(z.u);
  return sphere_histogram(points, grid);
}

double emax(const SphereHistogram& h) {
  double e = 0.0;
  for (int c = 0; c < h.grid.cells(); ++c) {
    e = std::max(e, std::fabs(h.density(c) - kUniformDensity));
  }
  return e;
}

double emax_ratio(const SphereHistogram& h) { return emax(h) / kUniformDensity; }

ErrorSeries emax_series(std::span<const SphereHistogram> histograms,
                        std::span<const double> times) {
  if (histograms.size() != times.size()) {
    throw UsageError("one time per histogram required");
  }
  ErrorSeries series;
  for (std::size_t s = 0; s < histograms.size(); ++s) {
    const SphereGrid& g = histograms[s].grid;
    const SphereGrid& g0 = histograms.front().grid;
    if (g.n_lat != g0.n_lat || g.n_lon != g0.n_lon || g.equal_area != g0.equal_area) {
      throw UsageError("histograms use different grids");
    }
    series.times.push_back(times[s]);
    series.emax.push_back(emax(histograms[s]));
    series.emax_ratio.push_back(emax_ratio(histograms[s]));
  }
  return series;
}

std::vector<double> time_averaged_density(std::span<const SphereHistogram> histograms) {
  if (histograms.empty()) return {};
  std::vector<double> mean(histograms.front().counts.size(), 0.0);
  for (const SphereHistogram& h : histograms) {
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += h.density(static_cast<int>(c));
  }
  for (double& m : mean) m /= static_cast<double>(histograms.size());
  return mean;
}

std::int64_t BundleCounts::counted() const {
  std::int64_t n = 0;
  for (const auto& row : counts) {
    for (std::int64_t c : row) n += c;
  }
  return n;
}

std::array<std::int64_t, 6> BundleCounts::segment_totals() const {
  std::array<std::int64_t, 6> totals{};
  for (int i = 0; i < 6; ++i) {
    for (std::int64_t c : counts[i]) totals[i] += c;
  }
  return totals;
}

BundleCounts bundle_counts(std::span<const BundleState> states, double speed_tol) {
  BundleCounts out;
  for (const BundleState& z : states) {
    if (std::fabs(norm(z.v) - 1.0) > speed_tol) {
      ++out.off_class;
      continue;
    }
    try {
      const BundleCellIndex cell = partition_index(z);
      ++out.counts[cell.i - 1][cell.j - 1];
    } catch (const DegenerateInputError&) {
      ++out.degenerate;
    }
  }
  return out;
}

std::vector<MeanPoint> mean_trajectory(const EnsembleResult& ensemble) {
  std::vector<MeanPoint> out;
  for (std::size_t s = 0; s < ensemble.times.size(); ++s) {
    Vec3 su, sv;
    for (const BundleState& z : ensemble.at(s)) {
      su += z.u;
      sv += z.v;
    }
    const double inv = 1.0 / static_cast<double>(ensemble.N);
    out.push_back({ensemble.times[s], inv * su, inv * sv});
  }
  return out;
}

std::vector<RawStepSample> sample_raw_steps(const EnsembleConfig& cfg,
                                            const BundleState& z0,
                                            std::span<const std::int64_t> steps) {
  cfg.validate();
  if (!std::is_sorted(steps.begin(), steps.end())) {
    throw UsageError("raw step indices must be sorted");
  }
  std::vector<RawStepSample> samples(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    samples[i].n = steps[i];
    samples[i].u_n.resize(cfg.N);
    samples[i].v_n.resize(cfg.N);
    samples[i].u_next.resize(cfg.N);
    samples[i].v_next.resize(cfg.N);
  }
  if (steps.empty()) return samples;
  const std::int64_t last = steps.back() + 1;

  parallel_paths(cfg.N, resolve_workers(cfg.workers), [&](std::int64_t p) {
    const NoiseStream noise(cfg.seed, static_cast<std::uint64_t>(p));
    StepState s = start_state(z0, cfg.step);
    std::size_t idx = 0;
    for (std::int64_t n = 0; n < last; ++n) {
      const StepResult r = implicit_step(s, noise.increment(n, cfg.step.k), cfg.step);
      while (idx < steps.size() && steps[idx] == n) {
        samples[idx].u_n[p] = s.u_cur;
        samples[idx].v_n[p] = s.v_cur;
        samples[idx].u_next[p] = r.u_next;
        samples[idx].v_next[p] = r.v_next;
        ++idx;
      }
      s = advance(s, r);
    }
  });
  return samples;
}

DampingReport damping_check(std::span<const RawStepSample> samples,
                            const StepConfig& cfg, double constant) {
  DampingReport report;
  report.constant = constant;
  const double k = cfg.k;
  for (const RawStepSample& s : samples) {
    const std::size_t n = s.u_n.size();
    if (n == 0) throw UsageError("empty raw step sample");
    std::vector<Vec3> res(n);
    Vec3 mean;
    for (std::size_t l = 0; l < n; ++l) {
      res[l] = s.v_next[l] - s.v_n[l] +
               k * (norm2(s.v_n[l]) * s.u_next[l] + (0.5 * cfg.D) * s.v_next[l]);
      mean += res[l];
    }
    mean = mean / static_cast<double>(n);
    Vec3 var;
    for (const Vec3& x : res) {
      const Vec3 d = x - mean;
      var += Vec3{d.x * d.x, d.y * d.y, d.z * d.z};
    }
    const double denom = n > 1 ? static_cast<double>(n - 1) * static_cast<double>(n) : 1.0;
    const Vec3 se{std::sqrt(var.x / denom), std::sqrt(var.y / denom),
                  std::sqrt(var.z / denom)};
    DampingRow row{s.n, mean, se, constant * k * k, true};
    row.pass = std::fabs(mean.x) <= row.band + 4.0 * se.x &&
               std::fabs(mean.y) <= row.band + 4.0 * se.y &&
               std::fabs(mean.z) <= row.band + 4.0 * se.z;
    report.all_pass = report.all_pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

RateFit fit_exponential_rate(const ErrorSeries& series, double floor,
                             double floor_factor, double t_min) {
  std::vector<double> ts, ys;
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    if (series.times[i] < t_min) continue;
    const double e = series.emax[i];
    if (!(e > floor_factor * floor)) break;
    ts.push_back(series.times[i]);
    ys.push_back(std::log(e - floor));
  }
  if (ts.size() < 10) {
    throw InsufficientDataError("fewer than 10 pre-floor points for the rate fit");
  }
  const double m = static_cast<double>(ts.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    my += ys[i];
  }
  mt /= m;
  my /= m;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    sty += (ts[i] - mt) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sty / stt;
  RateFit fit;
  fit.alpha = -slope;
  fit.quality = syy > 0.0 ? (sty * sty) / (stt * syy) : 1.0;
  fit.points = ts.size();
  fit.window_end = ts.back();
  return fit;
}

std::vector<Vec3> sample_uniform_sphere(std::int64_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<std::int64_t>(out.size()) < n) {
    const Vec3 g{normal(rng), normal(rng), normal(rng)};
    const double len = norm(g);
    if (len > 1e-12) out.push_back(g / len);
  }
  return out;
}

std::vector<BundleState> sample_uniform_m1(std::int64_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<BundleState> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<std::int64_t>(out.size()) < n) {
    const Vec3 g{normal(rng), normal(rng), normal(rng)};
    const Vec3 h{normal(rng), normal(rng), normal(rng)};
    if (norm(g) < 1e-12) continue;
    const Vec3 u = g / norm(g);
    const Vec3 t = h - dot(h, u) * u;
    if (norm(t) < 1e-12) continue;
    out.push_back({u, t / norm(t)});
  }
  return out;
}

double uniform_floor(std::int64_t n, const SphereGrid& grid, std::uint64_t seed) {
  const auto pts = sample_uniform_sphere(n, seed);
  return emax(sphere_histogram(pts, grid));
}

}  // namespace stogeo

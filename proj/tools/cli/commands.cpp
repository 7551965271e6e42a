#include "cli/commands.hpp"

#include <cmath>
#include <numbers>

#include "stogeo/control.hpp"
#include "stogeo/ergodic.hpp"
#include "stogeo/errors.hpp"
#include "stogeo/integrator.hpp"

namespace stogeo::cli {

namespace {

namespace fs = std::filesystem;

BundleState initial_state(const std::string& u, const std::string& v) {
  const BundleState z{parse_vec3(u), parse_vec3(v)};
  if (!on_bundle(z)) {
    throw UsageError("initial state is not on the tangent bundle (need |u| = 1, <u,v> = 0)");
  }
  return z;
}

StepConfig step_config(const CommonOptions& c, double D) {
  StepConfig cfg;
  cfg.k = c.k;
  cfg.D = D;
  cfg.fp_tol = c.fp_tol;
  cfg.fp_max_iter = c.fp_max_iter;
  cfg.validate();
  return cfg;
}

void common_json(Json& j, const CommonOptions& c) {
  j["k"] = c.k;
  j["T"] = c.T;
  j["seed"] = c.seed;
  j["u0"] = c.u0;
  j["v0"] = c.v0;
  j["out"] = c.out;
  j["fp-tol"] = c.fp_tol;
  j["fp-max-iter"] = c.fp_max_iter;
}

std::string config_value(const Json& v) {
  if (v.is_string()) return "\"" + v.get<std::string>() + "\"";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

std::string snapshot_name(std::size_t i) {
  std::string s = std::to_string(i);
  return "hist_" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s + ".csv";
}

void write_histogram(const fs::path& path, const SphereHistogram& h) {
  CsvWriter csv(path, {"lat_index", "lon_index", "count", "area", "density", "ratio"});
  for (int i = 0; i < h.grid.n_lat; ++i) {
    for (int j = 0; j < h.grid.n_lon; ++j) {
      const int c = i * h.grid.n_lon + j;
      const double d = h.density(c);
      csv << i << j << h.counts[c] << h.areas[c] << d << d / kUniformDensity;
      csv.end_row();
    }
  }
}

Json run_one_ensemble(const EnsembleOptions& opt, double D, const fs::path& dir,
                      std::ostream& log) {
  const double T = opt.common.T;
  EnsembleConfig cfg;
  cfg.N = opt.N;
  cfg.step = step_config(opt.common, D);
  cfg.T = T;
  cfg.seed = opt.common.seed;
  cfg.snapshot_times = parse_schedule(opt.snapshots, T);
  cfg.grid = parse_grid(opt.grid);
  cfg.grid.equal_area = opt.equal_area;
  cfg.workers = opt.workers;
  cfg.scheme = parse_scheme(opt.scheme);
  cfg.validate();
  const BundleState z0 = initial_state(opt.common.u0, opt.common.v0);

  const EnsembleResult ens = simulate_ensemble(cfg, z0);
  ensure_dir(dir);

  std::vector<SphereHistogram> hists;
  hists.reserve(ens.times.size());
  {
    CsvWriter index(dir / "snapshots.csv", {"index", "t", "step", "file"});
    for (std::size_t s = 0; s < ens.times.size(); ++s) {
      hists.push_back(sphere_histogram(ens.at(s), cfg.grid));
      write_histogram(dir / snapshot_name(s), hists.back());
      index << static_cast<std::int64_t>(s) << ens.times[s] << ens.steps[s]
            << snapshot_name(s);
      index.end_row();
    }
  }

  const ErrorSeries series = emax_series(hists, ens.times);
  {
    CsvWriter csv(dir / "emax.csv", {"t", "emax", "emax_ratio"});
    for (std::size_t s = 0; s < series.times.size(); ++s) {
      csv << series.times[s] << series.emax[s] << series.emax_ratio[s];
      csv.end_row();
    }
  }

  {
    const auto avg = time_averaged_density(hists);
    CsvWriter csv(dir / "time_averaged_density.csv",
                  {"lat_index", "lon_index", "density", "ratio"});
    for (int i = 0; i < cfg.grid.n_lat; ++i) {
      for (int j = 0; j < cfg.grid.n_lon; ++j) {
        const double d = avg[static_cast<std::size_t>(i * cfg.grid.n_lon + j)];
        csv << i << j << d << d / kUniformDensity;
        csv.end_row();
      }
    }
  }

  const BundleCounts bc = bundle_counts(ens.at(ens.times.size() - 1));
  {
    CsvWriter csv(dir / "bundle_counts.csv", {"segment", "sector", "count"});
    for (int i = 0; i < kSegments; ++i) {
      for (int j = 0; j < kSectors; ++j) {
        csv << i + 1 << j + 1 << bc.counts[i][j];
        csv.end_row();
      }
    }
  }

  {
    CsvWriter csv(dir / "mean_trajectory.csv",
                  {"t", "Eu_x", "Eu_y", "Eu_z", "Ev_x", "Ev_y", "Ev_z", "Eu_norm", "Ev_norm"});
    for (const auto& m : mean_trajectory(ens)) {
      csv << m.t << m.mean_u << m.mean_v << norm(m.mean_u) << norm(m.mean_v);
      csv.end_row();
    }
  }

  Json summary;
  summary["D"] = D;
  summary["N"] = cfg.N;
  summary["k"] = cfg.step.k;
  summary["T"] = T;
  summary["seed"] = cfg.seed;
  summary["scheme"] = opt.scheme;
  summary["grid"] = {{"n_lat", cfg.grid.n_lat}, {"n_lon", cfg.grid.n_lon},
                     {"equal_area", cfg.grid.equal_area}};
  summary["snapshots"] = ens.times.size();
  summary["emax_meaningful"] = cfg.N > 1;

  Json rate;
  if (cfg.N <= 1) {
    summary["warning"] = "N = 1: a single path has no density; E_max and the rate are meaningless";
    log << "warning: D=" << format_double(D) << ": N = 1, E_max is meaningless\n";
    rate = nullptr;
  } else {
    const std::int64_t floor_n = opt.floor_samples > 0 ? opt.floor_samples : cfg.N;
    const double floor = uniform_floor(floor_n, cfg.grid, cfg.seed + 0x5EEDull);
    rate["floor"] = floor;
    rate["floor_samples"] = floor_n;
    rate["floor_factor"] = opt.floor_factor;
    try {
      const RateFit fit = fit_exponential_rate(series, floor, opt.floor_factor);
      rate["alpha"] = fit.alpha;
      rate["quality"] = fit.quality;
      rate["points"] = fit.points;
      rate["window_end"] = fit.window_end;
    } catch (const InsufficientDataError& e) {
      rate["alpha"] = nullptr;
      rate["error"] = e.what();
    }
  }
  summary["rate"] = rate;

  Json counts;
  counts["t"] = ens.times.back();
  counts["partition"] = partition_description();
  counts["counted"] = bc.counted();
  counts["degenerate"] = bc.degenerate;
  counts["off_class"] = bc.off_class;
  const double n = static_cast<double>(bc.counted());
  counts["cell_mean"] = n / 48.0;
  counts["cell_sigma"] = std::sqrt(n * (1.0 / 48.0) * (47.0 / 48.0));
  counts["segment_mean"] = n / 6.0;
  counts["segment_sigma"] = std::sqrt(n * (1.0 / 6.0) * (5.0 / 6.0));
  Json seg = Json::array();
  for (auto s : bc.segment_totals()) seg.push_back(s);
  counts["segment_totals"] = seg;
  summary["bundle_counts"] = counts;

  const auto mean = mean_trajectory(ens);
  summary["final_mean_u"] = to_json(mean.back().mean_u);
  summary["final_mean_v"] = to_json(mean.back().mean_v);

  write_json(dir / "summary.json", summary);
  return summary;
}

}  // namespace

Json config_json(const SimulateOptions& opt) {
  Json j;
  common_json(j, opt.common);
  j["D"] = opt.D;
  j["scheme"] = opt.scheme;
  j["dW"] = opt.dW;
  j["path-id"] = opt.path_id;
  j["every"] = opt.every;
  j["snapshots"] = opt.snapshots;
  return j;
}

Json config_json(const EnsembleOptions& opt) {
  Json j;
  common_json(j, opt.common);
  j["D"] = opt.D;
  j["N"] = opt.N;
  j["grid"] = opt.grid;
  j["equal-area"] = opt.equal_area;
  j["snapshots"] = opt.snapshots;
  j["scheme"] = opt.scheme;
  j["floor-factor"] = opt.floor_factor;
  j["floor-samples"] = opt.floor_samples;
  // workers omitted: outputs do not depend on it.
  return j;
}

Json config_json(const PlanOptions& opt) {
  Json j;
  j["u0"] = opt.u0;
  j["v0"] = opt.v0;
  j["u1"] = opt.u1;
  j["v1"] = opt.v1;
  j["T"] = opt.T;
  j["samples"] = opt.samples;
  j["out"] = opt.out;
  return j;
}

void write_run_config(const fs::path& dir, std::string_view command, const Json& flat) {
  {
    std::ofstream cfg(dir / "run.cfg", std::ios::binary);
    if (!cfg) throw Error("cannot write " + (dir / "run.cfg").string());
    cfg << "# stogeo " << command << " --config run.cfg\n";
    for (const auto& [key, value] : flat.items()) {
      cfg << key << " = " << config_value(value) << '\n';
    }
  }
  Json meta;
  meta["command"] = command;
  meta["config"] = flat;
  write_json(dir / "run.json", meta);
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& log) {
  const auto& c = opt.common;
  const StepConfig cfg = step_config(c, opt.D);
  const BundleState z0 = initial_state(c.u0, c.v0);
  const Scheme scheme = parse_scheme(opt.scheme);
  if (!(c.T > 0.0)) throw UsageError("T must be positive");
  if (opt.every < 1) throw UsageError("every must be >= 1");
  if (opt.dW != "normal" && opt.dW != "zero") {
    throw UsageError("dW must be 'normal' or 'zero'");
  }
  const NoiseStream noise =
      opt.dW == "zero" ? NoiseStream::zero() : NoiseStream(c.seed, opt.path_id);

  const auto history = simulate_history(z0, c.T, cfg, noise, scheme);

  std::vector<bool> keep(history.size(), false);
  if (opt.snapshots.empty()) {
    for (std::size_t n = 0; n < history.size(); n += static_cast<std::size_t>(opt.every)) {
      keep[n] = true;
    }
    keep.back() = true;
  } else {
    for (double t : parse_schedule(opt.snapshots, c.T)) {
      if (t < 0.0 || t > c.T * (1.0 + 1e-12)) throw UsageError("snapshot outside [0, T]");
      const auto n = static_cast<std::size_t>(mesh_index(t, cfg.k));
      keep[std::min(n, history.size() - 1)] = true;
    }
  }

  const fs::path dir = ensure_dir(c.out);
  const double e0 = norm2(z0.v);
  double max_tangency = 0.0;
  {
    CsvWriter csv(dir / "trajectory.csv",
                  {"t", "u_x", "u_y", "u_z", "v_x", "v_y", "v_z", "u_norm_err",
                   "energy_err", "lambda", "fp_iterations"});
    for (std::size_t i = 0; i < history.size(); ++i) {
      if (!keep[i]) continue;
      const auto& rec = history[i];
      BundleState z{rec.u, rec.v};
      if (rec.n == 0) {
        z = z0;
      } else if (scheme == Scheme::implicit) {
        z = tangent_state(rec.u, rec.v);
      }
      max_tangency = std::fmax(max_tangency, std::fabs(dot(z.u, z.v)));
      csv << rec.t << z.u << z.v << norm(rec.u) - 1.0 << norm2(rec.v) - e0 << rec.lambda
          << rec.iterations;
      csv.end_row();
    }
  }

  const InvariantReport inv = check_step_invariants(history);
  Json report;
  report["scheme"] = opt.scheme;
  report["dW"] = opt.dW;
  report["steps"] = inv.steps;
  report["max_constraint_violation"] = inv.max_constraint_violation;
  report["max_energy_drift"] = inv.max_energy_drift;
  report["max_reported_tangency"] = max_tangency;
  report["max_fp_iterations"] = inv.max_iterations;
  report["mean_fp_iterations"] = inv.mean_iterations;
  const auto& last = history.back();
  const BundleState zT =
      scheme == Scheme::implicit ? tangent_state(last.u, last.v) : BundleState{last.u, last.v};
  report["final_t"] = last.t;
  report["final_u"] = to_json(zT.u);
  report["final_v"] = to_json(zT.v);
  write_json(dir / "invariants.json", report);
  write_run_config(dir, "simulate", config_json(opt));

  log << "simulate: " << inv.steps << " steps, max | |U|-1 | = "
      << format_double(inv.max_constraint_violation) << ", max | |V|^2-|V0|^2 | = "
      << format_double(inv.max_energy_drift) << "\n";
  return 0;
}

int cmd_ensemble(const EnsembleOptions& opt, std::ostream& log) {
  const auto Ds = parse_list(opt.D);
  for (double D : Ds) {
    if (!(D >= 0.0)) throw UsageError("D must be nonnegative");
  }
  const fs::path dir = ensure_dir(opt.common.out);
  Json runs = Json::array();
  for (double D : Ds) {
    const std::string sub = "D_" + format_double(D);
    log << "ensemble: D=" << format_double(D) << " N=" << opt.N << " -> " << sub << "\n";
    Json s = run_one_ensemble(opt, D, dir / sub, log);
    Json row;
    row["D"] = D;
    row["dir"] = sub;
    row["rate"] = s["rate"];
    row["final_mean_u"] = s["final_mean_u"];
    row["final_mean_v"] = s["final_mean_v"];
    runs.push_back(row);
  }
  Json summary;
  summary["runs"] = runs;
  write_json(dir / "summary.json", summary);
  write_run_config(dir, "ensemble", config_json(opt));
  return 0;
}

int cmd_plan(const PlanOptions& opt, std::ostream& log) {
  const BundleState start{parse_vec3(opt.u0), parse_vec3(opt.v0)};
  const BundleState target{parse_vec3(opt.u1), parse_vec3(opt.v1)};
  const double r = norm(start.v);
  if (r == 0.0 || norm(target.v) == 0.0) {
    throw UsageError("unsupported: states with zero speed (r = 0) are not controllable");
  }
  if (opt.samples < 2) throw UsageError("samples must be >= 2");
  const double T = opt.T > 0.0 ? opt.T : minimum_horizon(r) + 0.5;

  const ControlPlan plan = plan_control({start, target, T});

  std::vector<double> times;
  for (std::int64_t i = 0; i < opt.samples; ++i) {
    times.push_back(T * static_cast<double>(i) / static_cast<double>(opt.samples - 1));
  }
  const auto traj = execute_plan(start, plan, times);
  const BundleState end = plan_endpoint(start, plan);
  const double err = std::fmax(max_abs(end.u - target.u), max_abs(end.v - target.v));

  const fs::path dir = ensure_dir(opt.out);
  Json j;
  j["r"] = r;
  j["T"] = T;
  j["start"] = {{"u", to_json(start.u)}, {"v", to_json(start.v)}};
  j["target"] = {{"u", to_json(target.u)}, {"v", to_json(target.v)}};
  Json segs = Json::array();
  double t0 = 0.0;
  for (const auto& s : plan.segments) {
    segs.push_back({{"a", s.a}, {"duration", s.duration}, {"start", t0}});
    t0 += s.duration;
  }
  j["segments"] = segs;
  j["total_time"] = plan.total_time;
  j["endpoint"] = {{"u", to_json(end.u)}, {"v", to_json(end.v)}};
  j["endpoint_error"] = err;
  write_json(dir / "plan.json", j);
  {
    CsvWriter csv(dir / "trajectory.csv", {"t", "u_x", "u_y", "u_z", "v_x", "v_y", "v_z"});
    for (const auto& p : traj) {
      csv << p.t << p.state.u << p.state.v;
      csv.end_row();
    }
  }
  write_run_config(dir, "plan", config_json(opt));
  log << "plan: " << plan.segments.size() << " segments, T = " << format_double(T)
      << ", endpoint error = " << format_double(err) << "\n";
  return 0;
}

}  // namespace stogeo::cli

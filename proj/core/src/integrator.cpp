#include "stogeo/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stogeo/errors.hpp"

namespace stogeo {

NonConvergenceError::NonConvergenceError(std::int64_t step, double residual,
                                         int iterations, std::int64_t path_id)
    : Error("fixed-point iteration did not converge at step " +
            std::to_string(step) +
            (path_id >= 0 ? " of path " + std::to_string(path_id) : "") +
            " (last update " + std::to_string(residual) + " after " +
            std::to_string(iterations) + " sweeps)"),
      step_(step),
      residual_(residual),
      iterations_(iterations),
      path_id_(path_id) {}

void StepConfig::validate() const {
  if (!(k > 0.0) || !std::isfinite(k)) throw UsageError("k must be positive");
  if (!(D >= 0.0) || !std::isfinite(D)) throw UsageError("D must be >= 0");
  if (!(fp_tol > 0.0)) throw UsageError("fp_tol must be positive");
  if (fp_max_iter < 1) throw UsageError("fp_max_iter must be >= 1");
}

void check_smallness_guard(const StepConfig& cfg, double speed) {
  if (cfg.k * speed > 0.25) {
    throw UsageError("time step too large: k |v0| = " +
                     std::to_string(cfg.k * speed) + " exceeds 1/4");
  }
}

StepState start_state(const BundleState& z0, const StepConfig& cfg,
                      StartMode mode) {
  cfg.validate();
  if (!on_bundle(z0)) {
    throw UsageError("initial state is not on TS^2");
  }
  const double r = norm(z0.v);
  check_smallness_guard(cfg, r);
  if (mode == StartMode::literal || r == 0.0) {
    return {z0.u - cfg.k * z0.v, z0.u, z0.v, 0};
  }
  // Chord of length c = k r on the great circle through u0 with direction v0.
  const double c = cfg.k * r;
  const Vec3 dir = z0.v / r;
  const Vec3 u_prev =
      (1.0 - 0.5 * c * c) * z0.u - (c * std::sqrt(1.0 - 0.25 * c * c)) * dir;
  return {u_prev, z0.u, (z0.u - u_prev) / cfg.k, 0};
}

double lagrange_multiplier(const Vec3& w_mid, const StepState& s,
                           const StepConfig& cfg) {
  const double w2 = norm2(w_mid);
  if (std::sqrt(w2) <= 1e-12) return 0.0;
  const double numerator = -2.0 * dot(s.v_cur, w_mid) +
                           (1.0 - norm2(s.u_prev)) / (2.0 * cfg.k);
  return numerator / (cfg.k * w2);
}

double multiplier_closed_form(const Vec3& w_mid, const Vec3& v_cur,
                              const Vec3& v_next) {
  const double w2 = norm2(w_mid);
  if (std::sqrt(w2) <= 1e-12) return 0.0;
  return -dot(v_cur, v_next) / w2;
}

double multiplier_lagged_form(const Vec3& w_mid, const Vec3& v_cur,
                              const Vec3& v_prev) {
  const double w2 = norm2(w_mid);
  if (std::sqrt(w2) <= 1e-12) return 0.0;
  return -dot(v_cur, v_prev) / w2;
}

StepResult implicit_step(const StepState& s, double dw, const StepConfig& cfg) {
  const double k = cfg.k;
  const double c = 0.5 * std::sqrt(cfg.D) * dw;
  Vec3 v = s.v_cur;
  double lambda = 0.0;
  double update = 0.0;
  for (int it = 1; it <= cfg.fp_max_iter; ++it) {
    const Vec3 w = 0.5 * (s.u_cur + k * v + s.u_prev);
    lambda = lagrange_multiplier(w, s, cfg);
    const Vec3 a = c * w;
    const Vec3 rhs = s.v_cur + (k * lambda) * w + cross(a, s.v_cur);
    // (I - [a]x)^{-1} = (I + [a]x + a a^T) / (1 + |a|^2)
    const Vec3 v_new = (rhs + cross(a, rhs) + dot(a, rhs) * a) / (1.0 + norm2(a));
    update = max_abs(v_new - v);
    v = v_new;
    if (!(update >= 0.0)) break;  // NaN
    if (update < cfg.fp_tol) {
      return {s.u_cur + k * v, v, lambda, it};
    }
  }
  throw NonConvergenceError(s.n, update, cfg.fp_max_iter);
}

StepState advance(const StepState& s, const StepResult& r) {
  return {s.u_cur, r.u_next, r.v_next, s.n + 1};
}

StepResidual step_residual(const StepState& s, double dw, const StepConfig& cfg,
                           const StepResult& r) {
  const double c = 0.5 * std::sqrt(cfg.D) * dw;
  const Vec3 w = 0.5 * (r.u_next + s.u_prev);
  const double lambda = lagrange_multiplier(w, s, cfg);
  const Vec3 lhs = r.v_next - s.v_cur;
  const Vec3 rhs = (cfg.k * lambda) * w + c * cross(w, r.v_next + s.v_cur);
  return {max_abs(lhs - rhs), max_abs(r.u_next - s.u_cur - cfg.k * r.v_next)};
}

BundleState tangent_state(const Vec3& u, const Vec3& v) {
  const Vec3 unit = u / norm(u);
  const Vec3 tangential = v - dot(v, unit) * unit;
  const double len = norm(tangential);
  if (len == 0.0) return {unit, Vec3{}};
  return {unit, (norm(v) / len) * tangential};
}

BundleState euler_maruyama_step(const BundleState& z, double dw,
                                const StepConfig& cfg) {
  const double k = cfg.k;
  const Vec3 drift = -norm2(z.v) * z.u - (0.5 * cfg.D) * z.v;
  return {z.u + k * z.v,
          z.v + k * drift + (std::sqrt(cfg.D) * dw) * cross(z.u, z.v)};
}

std::int64_t step_count(double T, double k) {
  if (!(T >= 0.0)) throw UsageError("T must be >= 0");
  return std::llround(T / k);
}

std::int64_t mesh_index(double t, double k) { return std::llround(t / k); }

std::vector<StepRecord> simulate_history(const BundleState& z0, double T,
                                         const StepConfig& cfg,
                                         const NoiseStream& noise, Scheme scheme,
                                         StartMode mode) {
  cfg.validate();
  const std::int64_t steps = step_count(T, cfg.k);
  std::vector<StepRecord> history;
  history.reserve(static_cast<std::size_t>(steps) + 1);
  if (scheme == Scheme::euler_maruyama) {
    BundleState z = z0;
    history.push_back({0, 0.0, z.u, z.v, 0.0, 0});
    for (std::int64_t n = 0; n < steps; ++n) {
      z = euler_maruyama_step(z, noise.increment(n, cfg.k), cfg);
      history.push_back({n + 1, (n + 1) * cfg.k, z.u, z.v, 0.0, 0});
    }
    return history;
  }
  StepState s = start_state(z0, cfg, mode);
  history.push_back({0, 0.0, s.u_cur, s.v_cur, 0.0, 0});
  for (std::int64_t n = 0; n < steps; ++n) {
    const StepResult r = implicit_step(s, noise.increment(n, cfg.k), cfg);
    s = advance(s, r);
    history.push_back({n + 1, (n + 1) * cfg.k, r.u_next, r.v_next, r.lambda,
                       r.iterations});
  }
  return history;
}

void run_path(const BundleState& z0, std::int64_t total_steps,
              const StepConfig& cfg, const NoiseStream& noise,
              std::span<const std::int64_t> snapshot_steps,
              std::span<BundleState> out, Scheme scheme) {
  if (out.size() != snapshot_steps.size()) {
    throw UsageError("snapshot output span has the wrong length");
  }
  std::size_t next = 0;
  const auto emit = [&](std::int64_t n, const BundleState& z) {
    while (next < snapshot_steps.size() && snapshot_steps[next] == n) {
      out[next++] = z;
    }
  };
  if (scheme == Scheme::euler_maruyama) {
    BundleState z = z0;
    emit(0, z);
    for (std::int64_t n = 0; n < total_steps && next < snapshot_steps.size(); ++n) {
      z = euler_maruyama_step(z, noise.increment(n, cfg.k), cfg);
      emit(n + 1, z);
    }
  } else {
    StepState s = start_state(z0, cfg);
    emit(0, z0);
    for (std::int64_t n = 0; n < total_steps && next < snapshot_steps.size(); ++n) {
      s = advance(s, implicit_step(s, noise.increment(n, cfg.k), cfg));
      if (next < snapshot_steps.size() && snapshot_steps[next] == n + 1) {
        emit(n + 1, tangent_state(s.u_cur, s.v_cur));
      }
    }
  }
  if (next != snapshot_steps.size()) {
    throw UsageError("snapshot step beyond the end of the path");
  }
}

std::vector<TimedState> simulate_path(const BundleState& z0, double T,
                                      const StepConfig& cfg,
                                      const NoiseStream& noise,
                                      std::span<const double> snapshot_times,
                                      Scheme scheme) {
  cfg.validate();
  if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end())) {
    throw UsageError("snapshot times must be sorted");
  }
  const std::int64_t steps = step_count(T, cfg.k);
  std::vector<std::int64_t> indices;
  indices.reserve(snapshot_times.size());
  for (double t : snapshot_times) {
    if (t < 0.0 || t > T * (1.0 + 1e-12)) {
      throw UsageError("snapshot time outside [0, T]");
    }
    indices.push_back(std::min(mesh_index(t, cfg.k), steps));
  }
  std::vector<BundleState> states(indices.size());
  run_path(z0, steps, cfg, noise, indices, states, scheme);
  std::vector<TimedState> out;
  out.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    out.push_back({static_cast<double>(indices[i]) * cfg.k, states[i]});
  }
  return out;
}

InvariantReport check_step_invariants(std::span<const StepRecord> history) {
  if (history.empty()) throw UsageError("empty step history");
  InvariantReport report;
  report.steps = history.size();
  const double e0 = norm2(history.front().v);
  long long iteration_sum = 0;
  for (const StepRecord& rec : history) {
    report.max_constraint_violation =
        std::max(report.max_constraint_violation, std::fabs(norm(rec.u) - 1.0));
    report.max_energy_drift =
        std::max(report.max_energy_drift, std::fabs(norm2(rec.v) - e0));
    report.max_iterations = std::max(report.max_iterations, rec.iterations);
    iteration_sum += rec.iterations;
  }
  if (history.size() > 1) {
    report.mean_iterations =
        static_cast<double>(iteration_sum) / static_cast<double>(history.size() - 1);
  }
  return report;
}

}  // namespace stogeo

#pragma once

// Implicit, constraint- and energy-preserving stepper for
//
//   d u' = -|u'|^2 u dt + sqrt(D) (u x u') o dW,   |u| = 1,  u(0) ⟂ u'(0),
//
// plus an explicit Ito Euler-Maruyama reference stepper.
//
// The implicit scheme advances (U^n, V^n) with
//
//   V^{n+1} - V^n = k lambda W + (sqrt(D) dW / 2) W x (V^{n+1} + V^n),
//   U^{n+1}       = U^n + k V^{n+1},
//   W             = (U^{n+1} + U^{n-1}) / 2,
//
// where lambda is chosen so that |U^{n+1}| = 1. V^n is the chord velocity
// (U^n - U^{n-1}) / k, so <U^n, V^n> = k |V^n|^2 / 2 rather than 0; use
// tangent_state() to obtain a point of TS^2.

#include <cstdint>
#include <span>
#include <vector>

#include "stogeo/geometry.hpp"
#include "stogeo/noise.hpp"

namespace stogeo {

struct StepConfig {
  double k = 1e-3;       // time step
  double D = 1.0;        // noise intensity
  double fp_tol = 1e-13; // stop when successive V iterates differ by less (max norm)
  int fp_max_iter = 100;

  // Throws UsageError for non-positive k, negative D, etc.
  void validate() const;
};

// How U^{-1} is formed from the initial state (u0, v0).
enum class StartMode {
  // U^{-1} on the unit sphere at chord distance k|v0| behind u0 along the
  // geodesic; V^0 = (U^0 - U^{-1}) / k has length |v0|. Conserves |V|^2 from
  // the first step on.
  chord,
  // U^{-1} = u0 - k v0, V^0 = v0. |U^{-1}| = sqrt(1 + k^2 |v0|^2), which
  // changes |V|^2 once, in the first step, by -lambda k^2 |v0|^2 / 2.
  literal,
};

struct StepState {
  Vec3 u_prev;  // U^{n-1}
  Vec3 u_cur;   // U^n
  Vec3 v_cur;   // V^n
  std::int64_t n = 0;
};

struct StepResult {
  Vec3 u_next;
  Vec3 v_next;
  double lambda = 0.0;
  int iterations = 0;
};

// k |v0| <= 1/4; throws UsageError otherwise.
void check_smallness_guard(const StepConfig& cfg, double speed);

// Builds the n = 0 step state from a point of TS^2 (validated to 1e-9).
StepState start_state(const BundleState& z0, const StepConfig& cfg,
                      StartMode mode = StartMode::chord);

// Multiplier enforcing |U^{n+1}| = 1:
//   lambda = [-(V^n, 2 W) + (1 - |U^{n-1}|^2) / (2k)] / (k |W|^2),
// and 0 when |W| <= 1e-12.
double lagrange_multiplier(const Vec3& w_mid, const StepState& s,
                           const StepConfig& cfg);

// Equivalent closed form -(V^n, V^{n+1}) / |W|^2, valid when |U^n| = |U^{n-1}| = 1.
double multiplier_closed_form(const Vec3& w_mid, const Vec3& v_cur,
                              const Vec3& v_next);

// -(V^n, V^{n-1}) / |W|^2. Differs from the constraint-enforcing value by O(k).
double multiplier_lagged_form(const Vec3& w_mid, const Vec3& v_cur,
                              const Vec3& v_prev);

// Solves one implicit step by fixed-point iteration on V^{n+1}. Each sweep
// forms U^{n+1}, W and lambda from the current guess and then solves the
// linear system in V^{n+1} (the rotation term is skew, so its inverse is
// closed form). Throws NonConvergenceError after fp_max_iter sweeps.
StepResult implicit_step(const StepState& s, double dw, const StepConfig& cfg);

StepState advance(const StepState& s, const StepResult& r);

// Residuals of the two step equations at a computed result (max norm).
struct StepResidual {
  double velocity = 0.0;
  double position = 0.0;
};
StepResidual step_residual(const StepState& s, double dw, const StepConfig& cfg,
                           const StepResult& r);

// Point of TS^2 represented by the scheme iterate (U, V): u = U / |U|, v is
// the tangential part of V rescaled to |V|.
BundleState tangent_state(const Vec3& u, const Vec3& v);

// Explicit Ito step: u += k v, v += k(-|v|^2 u - (D/2) v) + sqrt(D) (u x v) dW.
// No projection, so the iterates leave TS^2.
BundleState euler_maruyama_step(const BundleState& z, double dw,
                                const StepConfig& cfg);

enum class Scheme { implicit, euler_maruyama };

// One recorded step of a path.
struct StepRecord {
  std::int64_t n = 0;
  double t = 0.0;
  Vec3 u;             // U^n
  Vec3 v;             // V^n (scheme iterate)
  double lambda = 0;  // lambda^n (0 at n = 0 and for Euler-Maruyama)
  int iterations = 0; // fixed-point sweeps spent on this step
};

struct TimedState {
  double t = 0.0;
  BundleState state;
};

// Number of mesh steps covering [0, T]: round(T / k).
std::int64_t step_count(double T, double k);

// Mesh index nearest to t.
std::int64_t mesh_index(double t, double k);

// Full step history (n = 0..N). Mainly for single-path diagnostics.
std::vector<StepRecord> simulate_history(const BundleState& z0, double T,
                                         const StepConfig& cfg,
                                         const NoiseStream& noise,
                                         Scheme scheme = Scheme::implicit,
                                         StartMode mode = StartMode::chord);

// States at the mesh points nearest to the given (sorted) snapshot times.
std::vector<TimedState> simulate_path(const BundleState& z0, double T,
                                      const StepConfig& cfg,
                                      const NoiseStream& noise,
                                      std::span<const double> snapshot_times,
                                      Scheme scheme = Scheme::implicit);

// Allocation-free core of simulate_path used by the ensemble runner:
// writes the state at each snapshot step index into out (same length).
void run_path(const BundleState& z0, std::int64_t total_steps,
              const StepConfig& cfg, const NoiseStream& noise,
              std::span<const std::int64_t> snapshot_steps,
              std::span<BundleState> out, Scheme scheme = Scheme::implicit);

struct InvariantReport {
  double max_constraint_violation = 0.0;  // max_n | |U^n| - 1 |
  double max_energy_drift = 0.0;          // max_n | |V^n|^2 - |V^0|^2 |
  int max_iterations = 0;
  double mean_iterations = 0.0;           // over steps n >= 1
  std::size_t steps = 0;
};

// Throws UsageError on an empty history.
InvariantReport check_step_invariants(std::span<const StepRecord> history);

}  // namespace stogeo

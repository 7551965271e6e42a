#include "cli/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "stogeo/control.hpp"
#include "stogeo/ergodic.hpp"
#include "stogeo/errors.hpp"
#include "stogeo/exact.hpp"
#include "stogeo/integrator.hpp"

namespace stogeo::cli {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::array<double, 3> kSpeeds{0.5, 1.0, 2.0};

class Suite {
 public:
  explicit Suite(double scale) : scale_(scale) {}

  void check(std::string name, double value, double tol, std::string detail = {}) {
    const double t = tol * scale_;
    checks_.push_back({std::move(name), value, t, std::isfinite(value) && value <= t,
                       std::move(detail)});
  }

  std::vector<CheckResult> take() { return std::move(checks_); }

 private:
  double scale_;
  std::vector<CheckResult> checks_;
};

std::vector<BundleState> points_on(double r, std::int64_t n, std::uint64_t seed) {
  auto pts = sample_uniform_m1(n, seed);
  for (auto& z : pts) z.v = r * z.v;
  return pts;
}

// Rates of change of |u|^2, <u,v>, |v|^2 along X; all vanish iff X is
// tangent to the speed class.
double tangency_residual(const VectorField& x, const BundleState& z) {
  const BundleVector w = x.value(z);
  const double du = 2.0 * dot(z.u, w.u);
  const double duv = dot(w.u, z.v) + dot(z.u, w.v);
  const double dv = 2.0 * dot(z.v, w.v);
  return std::fmax(std::fabs(du), std::fmax(std::fabs(duv), std::fabs(dv)));
}

double deterministic_error(double k, Scheme scheme) {
  const BundleState z0{{0, 1, 0}, {1, 0, 0}};
  StepConfig cfg;
  cfg.k = k;
  cfg.D = 0.0;
  const auto h = simulate_history(z0, 1.0, cfg, NoiseStream::zero(), scheme);
  const BundleState exact = constant_control_state(z0, 0.0, h.back().t);
  return norm(h.back().u - exact.u);
}

void check_fields(Suite& s, const VerifyOptions& opt, const VerifyFields& fld) {
  double tan_f = 0, tan_g = 0, br_gf = 0, br_f = 0, br_g = 0, div = 0, ito = 0;
  const VectorField& gf = field(FieldId::gf);
  // Nested identities use the closed-form [g,f]; bracket_gf_closed_form ties
  // it to the supplied fields.
  for (std::size_t ri = 0; ri < kSpeeds.size(); ++ri) {
    const double r = kSpeeds[ri];
    for (const auto& z : points_on(r, opt.points, opt.seed + ri)) {
      tan_f = std::fmax(tan_f, tangency_residual(fld.f, z));
      tan_g = std::fmax(tan_g, tangency_residual(fld.g, z));
      br_gf = std::fmax(br_gf, max_abs(jacobi_bracket(fld.g, fld.f, z) - bracket_gf(z)));
      br_f = std::fmax(br_f, max_abs(jacobi_bracket(fld.f, gf, z) - (r * r) * diffusion_g(z)));
      br_g = std::fmax(br_g, max_abs(jacobi_bracket(fld.g, gf, z) + drift_f(z)));
      for (const VectorField* x : {&fld.f, &fld.g, &gf}) {
        div = std::fmax(div, std::fabs(divergence_on_speed_class(*x, z)));
      }
      const BundleVector corr = 0.5 * jacobian_apply(fld.g.jacobian(z), fld.g.value(z));
      ito = std::fmax(ito, max_abs(corr - ito_correction(z, 1.0)));
    }
  }
  const std::string pts = std::to_string(opt.points) + " points x r in {0.5,1,2}";
  s.check("tangency_f", tan_f, 1e-12, pts);
  s.check("tangency_g", tan_g, 1e-12, pts);
  s.check("bracket_gf_closed_form", br_gf, 1e-12, "[g,f] - (u x v, 0)");
  s.check("bracket_f_gf", br_f, 1e-12, "[f,[g,f]] - r^2 g");
  s.check("bracket_g_gf", br_g, 1e-12, "[g,[g,f]] + f");
  s.check("divergence_free", div, 1e-12, "div of f, g, [g,f] on the speed class");
  s.check("ito_correction", ito, 1e-12, "(1/2) Dg g vs closed form (D = 1)");
}

void check_orders(Suite& s) {
  const std::array<double, 4> ks{1e-2, 5e-3, 2.5e-3, 1.25e-3};
  double dev_imp = 0.0, dev_em = 0.0;
  std::string detail_imp, detail_em;
  for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
    const double ri = deterministic_error(ks[i], Scheme::implicit) /
                      deterministic_error(ks[i + 1], Scheme::implicit);
    const double re = deterministic_error(ks[i], Scheme::euler_maruyama) /
                      deterministic_error(ks[i + 1], Scheme::euler_maruyama);
    dev_imp = std::fmax(dev_imp, std::fabs(ri - 4.0));
    dev_em = std::fmax(dev_em, std::fabs(re - 2.0));
    detail_imp += (i ? "," : "") + format_double(ri);
    detail_em += (i ? "," : "") + format_double(re);
  }
  s.check("order_implicit", dev_imp, 0.5, "Richardson ratios " + detail_imp + " (target 4)");
  s.check("order_euler_maruyama", dev_em, 0.3, "Richardson ratios " + detail_em + " (target 2)");
}

void check_scheme(Suite& s, const VerifyOptions& opt) {
  const BundleState z0{{0, 1, 0}, {1, 0, 0}};
  StepConfig cfg;
  const NoiseStream noise(opt.seed, 0);

  // Multiplier equivalence along a stochastic path, step by step.
  StepState st = start_state(z0, cfg);
  double mult = 0.0;
  for (std::int64_t n = 0; n < 2000; ++n) {
    const StepResult res = implicit_step(st, noise.increment(static_cast<std::uint64_t>(n), cfg.k), cfg);
    const Vec3 w = 0.5 * (res.u_next + st.u_prev);
    mult = std::fmax(mult, std::fabs(res.lambda - multiplier_closed_form(w, st.v_cur, res.v_next)));
    st = advance(st, res);
  }
  // (1 - |U^{n-1}|^2) / (2k) is divided by k |W|^2, so rounding in |U^{n-1}|^2
  // alone shifts lambda by ~eps / k^2.
  const double floor = std::numeric_limits<double>::epsilon() / (cfg.k * cfg.k);
  s.check("multiplier_equivalence", mult, 50.0 * floor,
          "2000 steps, k = 1e-3, D = 1; tolerance 50 eps / k^2");

  const auto h = simulate_history(z0, 5.0, cfg, noise);
  const InvariantReport inv = check_step_invariants(h);
  s.check("constraint_conservation", inv.max_constraint_violation, 1e-10, "T = 5, D = 1");
  s.check("energy_conservation", inv.max_energy_drift, 1e-10, "T = 5, D = 1");
}

void check_orbits(Suite& s, const VerifyOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> ua(-3.0, 3.0);
  std::uniform_real_distribution<double> ur(0.2, 3.0);
  double ode = 0.0, period = 0.0, diameter = 0.0;
  const auto base = sample_uniform_m1(100, opt.seed + 17);
  for (const auto& b : base) {
    const BundleState x{b.u, ur(rng) * b.v};
    const double a = ua(rng);
    const double r = norm(x.v);
    const ConstantControlOrbit orbit = make_orbit(x, a);
    const double P = orbit_period(r, a);
    for (int i = 0; i < 100; ++i) {
      const double t = P * 3.0 * i / 100.0;
      const BundleState z = constant_control_state(orbit, t);
      const Vec3 acc = constant_control_acceleration(orbit, t);
      const Vec3 rhs = -norm2(z.v) * z.u + a * cross(z.u, z.v);
      ode = std::fmax(ode, max_abs(acc - rhs));
    }
    const BundleState back = constant_control_state(orbit, P);
    period = std::fmax(period, std::fmax(max_abs(back.u - x.u), max_abs(back.v - x.v)));
    const Vec3 opposite = constant_control_state(orbit, 0.5 * P).u;
    diameter = std::fmax(diameter, std::fabs(norm(opposite - x.u) - orbit_diameter(r, a)));
  }
  s.check("orbit_ode_residual", ode, 1e-10, "100 orbits x 100 times");
  s.check("orbit_period", period, 1e-12, "return at 2 pi / sqrt(r^2 + a^2)");
  s.check("orbit_diameter", diameter, 1e-12, "2 r / sqrt(r^2 + a^2)");
}

void check_partition(Suite& s, const VerifyOptions& opt) {
  const std::int64_t n = opt.partition_samples;
  const auto pts = sample_uniform_m1(n, opt.seed + 99);
  const BundleCounts bc = bundle_counts(pts);
  const double N = static_cast<double>(bc.counted());
  const double cell_sigma = std::sqrt(N * (1.0 / 48.0) * (47.0 / 48.0));
  const double seg_sigma = std::sqrt(N * (1.0 / 6.0) * (5.0 / 6.0));
  double cell_z = 0.0, seg_z = 0.0;
  for (const auto& row : bc.counts) {
    for (auto c : row) cell_z = std::fmax(cell_z, std::fabs(c - N / 48.0) / cell_sigma);
  }
  for (auto c : bc.segment_totals()) seg_z = std::fmax(seg_z, std::fabs(c - N / 6.0) / seg_sigma);
  s.check("partition_cell_volumes", cell_z, 5.0,
          "max |count - n/48| in sigma units, n = " + std::to_string(n));
  s.check("partition_segment_volumes", seg_z, 5.0, "max |count - n/6| in sigma units");
}

void check_planner(Suite& s, const VerifyOptions& opt) {
  double worst = 0.0, time_err = 0.0;
  std::size_t failures = 0;
  std::string first_error;
  for (std::size_t ri = 0; ri < kSpeeds.size(); ++ri) {
    const double r = kSpeeds[ri];
    const auto a = points_on(r, 10, opt.seed + 300 + ri);
    const auto b = points_on(r, 10, opt.seed + 400 + ri);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double T = minimum_horizon(r) + 0.5;
      try {
        const ControlPlan plan = plan_control({a[i], b[i], T});
        const BundleState end = plan_endpoint(a[i], plan);
        worst = std::fmax(worst, std::fmax(max_abs(end.u - b[i].u), max_abs(end.v - b[i].v)));
        double sum = 0.0;
        for (const auto& seg : plan.segments) sum += seg.duration;
        time_err = std::fmax(time_err, std::fabs(sum - T));
      } catch (const Error& e) {
        ++failures;
        if (first_error.empty()) first_error = e.what();
      }
    }
  }
  s.check("planner_endpoint", failures ? INFINITY : worst, 1e-8,
          failures ? "planner failed: " + first_error : "10 queries per r in {0.5,1,2}");
  s.check("planner_total_time", failures ? INFINITY : time_err, 1e-12, "sum of durations - T");
}

}  // namespace

bool VerifyReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

std::vector<std::string> VerifyReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.pass) out.push_back(c.name);
  }
  return out;
}

Json VerifyReport::to_json() const {
  Json j;
  j["pass"] = pass();
  Json arr = Json::array();
  for (const auto& c : checks) {
    Json x;
    x["name"] = c.name;
    x["pass"] = c.pass;
    x["value"] = std::isfinite(c.value) ? Json(c.value) : Json(nullptr);
    x["tolerance"] = c.tolerance;
    x["detail"] = c.detail;
    arr.push_back(x);
  }
  j["checks"] = arr;
  j["failures"] = failures();
  return j;
}

VerifyReport run_verification(const VerifyOptions& opt, const VerifyFields& fields) {
  if (opt.points < 1 || opt.partition_samples < 48) {
    throw UsageError("verify needs points >= 1 and partition-samples >= 48");
  }
  if (!(opt.tolerance_scale > 0.0)) throw UsageError("tolerance-scale must be positive");
  Suite s(opt.tolerance_scale);
  check_fields(s, opt, fields);
  check_orders(s);
  check_scheme(s, opt);
  check_orbits(s, opt);
  check_partition(s, opt);
  check_planner(s, opt);
  return {s.take()};
}

int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& log,
               const VerifyFields& fields) {
  const VerifyReport report = run_verification(opt, fields);
  const Json j = report.to_json();
  out << j.dump(2) << '\n';
  if (!opt.out.empty()) {
    const auto dir = ensure_dir(opt.out);
    write_json(dir / "verify.json", j);
  }
  for (const auto& name : report.failures()) log << "verify: FAILED " << name << "\n";
  return report.pass() ? 0 : 1;
}

}  // namespace stogeo::cli

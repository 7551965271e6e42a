#include "stogeo/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "stogeo/errors.hpp"

namespace stogeo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kScanSamples = 360;
constexpr double kAngleTol = 1e-12;
constexpr double kSeparation = 2e-3;     // phase 1 runs when |p1 - p3| is below this
constexpr double kPhaseOneArc = 5e-3;    // arc length travelled in phase 1
constexpr double kEndpointTol = 1e-8;

// Signed angle from l to xi about the normal p.
double mismatch(const Vec3& l, const Vec3& xi, const Vec3& p) {
  return std::atan2(dot(cross(l, xi), p), dot(l, xi));
}

double endpoint_error(const BundleState& a, const BundleState& b) {
  return std::fmax(max_abs(a.u - b.u), max_abs(a.v - b.v));
}

// Number of full periods and the control that makes them last exactly `wait`.
double waiting_control(double r, double wait) {
  const double m = std::fmax(1.0, std::ceil(wait * r / kTwoPi - 1e-12));
  const double b = kTwoPi * m / wait;
  return std::sqrt(std::fmax(0.0, b * b - r * r));
}

}  // namespace

double minimum_horizon(double r) { return kTwoPi / r; }

double distance_to_circle(const OrientedCircle& K, const Vec3& p) {
  const Vec3 n = K.normal();
  const Vec3 q = p - K.center;
  const Vec3 in_plane = q - dot(q, n) * n;
  const double len = norm(in_plane);
  const Vec3 dir = len > 1e-300 ? in_plane / len : K.basis[0];
  return norm(p - (K.center + K.radius() * dir));
}

Vec3 connecting_field_at(const OrientedCircle& K, const Vec3& z, const Vec3& p) {
  const double r = K.speed;
  const Vec3 yz = circle_field(K, z);
  const Vec3 d = p - z;
  const Vec3 rz = (r * r) * d - dot(d, yz) * yz;
  const Vec3 vz = rz / norm(rz);
  const Vec3 q = dot(p, vz) * vz + (dot(p, yz) / (r * r)) * yz;
  const double theta = std::sqrt(std::fmax(0.0, 1.0 - norm2(p - q)));
  return (1.0 / theta) * (dot(p, yz) * vz - dot(p, vz) * yz);
}

CircleConnection connect_circles(const OrientedCircle& K, const Vec3& p,
                                 const Vec3& xi) {
  const double r = K.speed;
  if (distance_to_circle(K, p) < 1e-6) {
    throw UsageError("connect_circles: point lies on (or within 1e-6 of) K");
  }
  if (std::fabs(norm(xi) - r) > 1e-9 || std::fabs(dot(xi, p)) > 1e-9) {
    throw UsageError("connect_circles: xi must be tangent at p with length r");
  }
  const auto angle_at = [&](double phi) {
    return mismatch(connecting_field_at(K, K.point(phi), p), xi, p);
  };

  std::optional<double> root;
  double lo = 0.0;
  double m_lo = angle_at(lo);
  if (std::fabs(m_lo) <= kAngleTol) root = lo;
  for (int i = 1; i <= kScanSamples && !root; ++i) {
    const double hi = kTwoPi * i / kScanSamples;
    const double m_hi = angle_at(hi);
    if (std::fabs(m_hi) <= kAngleTol) {
      root = hi;
    } else if ((m_lo < 0.0) != (m_hi < 0.0) &&
               std::fabs(m_lo) + std::fabs(m_hi) < std::numbers::pi) {
      // Genuine zero crossing (not the +-pi branch cut): bisect.
      double a = lo;
      double b = hi;
      double ma = m_lo;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        const double mm = angle_at(mid);
        if (std::fabs(mm) <= kAngleTol || b - a <= 1e-15) {
          root = mid;
          break;
        }
        if ((mm < 0.0) == (ma < 0.0)) {
          a = mid;
          ma = mm;
        } else {
          b = mid;
        }
      }
      if (!root) root = 0.5 * (a + b);
    }
    lo = hi;
    m_lo = m_hi;
  }
  if (!root) {
    throw NumericalError("connect_circles: no sign change of the field mismatch");
  }

  const Vec3 z = K.point(*root);
  const Vec3 yz = circle_field(K, z);
  const Vec3 d = p - z;
  const Vec3 rz = (r * r) * d - dot(d, yz) * yz;
  const Vec3 vz = rz / norm(rz);
  const Vec3 q = dot(p, vz) * vz + (dot(p, yz) / (r * r)) * yz;
  CircleConnection out{z, OrientedCircle{p - q, {vz, yz / r}, r, 1}};

  const double miss_z = max_abs(circle_field(out.circle, z) - yz);
  const double miss_p = max_abs(circle_field(out.circle, p) - xi);
  if (miss_z > 1e-9 || miss_p > 1e-9) {
    std::ostringstream os;
    os << "connect_circles: endpoint conditions missed (at z " << miss_z
       << ", at p " << miss_p << ")";
    throw NumericalError(os.str());
  }
  return out;
}

double recover_control(const BundleState& z, const OrientedCircle& circle) {
  const double r = norm(z.v);
  if (!on_circle(circle, z.u) ||
      max_abs(circle_field(circle, z.u) - z.v) > 1e-9) {
    throw NumericalError("recover_control: circle does not carry the state");
  }
  const double offset = norm(circle.center);
  const double theta = norm(z.u - circle.center);
  double a = 0.0;
  if (offset > 0.0) {
    a = r * offset / theta;
    if (dot(circle.center, cross(z.u, z.v)) < 0.0) a = -a;
  }
  const OrientedCircle check = orbit_circle(z, a);
  if (max_abs(check.center - circle.center) > 1e-10) {
    throw NumericalError("recover_control: orbit axis mismatch");
  }
  return a;
}

namespace {

// One attempt at the four-phase construction with a given a2 magnitude/sign.
std::optional<ControlPlan> build_plan(const ReachabilityQuery& q, double r,
                                      double a2_scale, double a2_sign) {
  std::vector<ControlSegment> segments;
  double elapsed = 0.0;

  BundleState x2 = q.start;
  if (norm(q.start.u - q.target.u) < kSeparation) {
    const double tau1 = kPhaseOneArc / r;
    x2 = constant_control_state(q.start, 0.0, tau1);
    segments.push_back({0.0, tau1});
    elapsed += tau1;
  }

  const Vec3 p3 = q.target.u;
  const double sep = norm(x2.u - p3);
  const double b2 = a2_scale * 4.0 * r / sep;  // diameter 2r/b2 <= sep/2
  const double a2 = a2_sign * std::sqrt(std::fmax(0.0, b2 * b2 - r * r));
  const OrientedCircle k2 = orbit_circle(x2, a2);
  if (distance_to_circle(k2, p3) < 1e-3) return std::nullopt;

  const CircleConnection link = connect_circles(k2, p3, q.target.v);
  const double t2 = k2.travel_time(x2.u, link.z);
  const BundleState handoff = constant_control_state(x2, a2, t2);
  if (t2 > 0.0) {
    segments.push_back({a2, t2});
    elapsed += t2;
  }

  const double a3 = recover_control(handoff, link.circle);
  const double t3 = link.circle.travel_time(link.z, p3);
  segments.push_back({a3, t3});
  elapsed += t3;

  if (elapsed > q.T) return std::nullopt;
  const double wait = q.T - elapsed;
  if (wait > 1e-12) {
    segments.push_back({waiting_control(r, wait), wait});
  } else {
    segments.back().duration += wait;
  }

  // Last duration absorbs the rounding of the running sum.
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) head += segments[i].duration;
  segments.back().duration = q.T - head;
  return ControlPlan{std::move(segments), q.T};
}

}  // namespace

ControlPlan plan_control(const ReachabilityQuery& q) {
  const double r = norm(q.start.v);
  if (!on_bundle(q.start) || !on_bundle(q.target)) {
    throw UsageError("plan_control: start and target must lie on TS^2");
  }
  if (std::fabs(r - norm(q.target.v)) > kDefaultConstraintTol) {
    throw UsageError("plan_control: start and target have different speeds");
  }
  if (!(r > 0.0)) {
    throw DegenerateInputError(
        "plan_control: r = 0 is unsupported (states of M_0 are fixed points)");
  }
  const double t_min = minimum_horizon(r);
  if (!(q.T >= t_min * (1.0 - 1e-12))) {
    std::ostringstream os;
    os << "plan_control: horizon T = " << q.T << " is below 2 pi / r = " << t_min;
    throw InfeasibleTimeError(os.str(), t_min);
  }

  if (endpoint_error(q.start, q.target) <= 1e-12) {
    return ControlPlan{{{waiting_control(r, q.T), q.T}}, q.T};
  }

  for (double scale = 1.0; scale <= 1024.0; scale *= 2.0) {
    for (double sign : {1.0, -1.0}) {
      auto plan = build_plan(q, r, scale, sign);
      if (plan && endpoint_error(plan_endpoint(q.start, *plan), q.target) <=
                      kEndpointTol) {
        return *plan;
      }
    }
  }
  throw NumericalError("plan_control: no construction fits into the horizon");
}

BundleState plan_endpoint(const BundleState& x0, const ControlPlan& plan) {
  BundleState x = x0;
  for (const ControlSegment& s : plan.segments) {
    x = constant_control_state(x, s.a, s.duration);
  }
  return x;
}

std::vector<TimedState> execute_plan(const BundleState& x0, const ControlPlan& plan,
                                     std::span<const double> sample_times) {
  std::vector<TimedState> out{{0.0, x0}};
  std::vector<double> samples(sample_times.begin(), sample_times.end());
  std::sort(samples.begin(), samples.end());
  auto next_sample = samples.begin();

  BundleState x = x0;
  double start = 0.0;
  for (const ControlSegment& s : plan.segments) {
    const double end = start + s.duration;
    const ConstantControlOrbit orbit = make_orbit(x, s.a);
    for (; next_sample != samples.end() && *next_sample < end; ++next_sample) {
      if (*next_sample > start) {
        out.push_back({*next_sample, constant_control_state(orbit, *next_sample - start)});
      }
    }
    x = constant_control_state(orbit, s.duration);
    out.push_back({end, x});
    start = end;
  }
  return out;
}

}  // namespace stogeo

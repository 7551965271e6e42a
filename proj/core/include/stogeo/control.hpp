#pragma once

// Reachability planning on M_r: steer any (p1, xi1) to any (p3, xi3) with the
// same speed r in any time T >= 2 pi / r using a piecewise-constant control
// a(t) in X' = f(X) + a(t) g(X). Execution uses the closed-form orbits.
//
// The plan has up to four constant pieces:
//   1. a = 0 for a short time if p1 is too close to p3;
//   2. a large control whose small orbit K2 stays away from p3;
//   3. from the hand-off point z on K2, the circle through z and p3 whose
//      field matches K2 at z and xi3 at p3 (see connect_circles);
//   4. a control whose period divides the remaining time, so the state
//      revolves back to (p3, xi3) exactly at T.

#include <span>
#include <vector>

#include "stogeo/exact.hpp"
#include "stogeo/integrator.hpp"

namespace stogeo {

struct ControlSegment {
  double a = 0.0;
  double duration = 0.0;
};

struct ControlPlan {
  std::vector<ControlSegment> segments;
  double total_time = 0.0;
};

struct ReachabilityQuery {
  BundleState start;
  BundleState target;
  double T = 0.0;
};

// 2 pi / r, the shortest horizon for which every query is feasible.
double minimum_horizon(double r);

// L(z) = B_z(p): value at p of the length-r field of the circle through z and
// p that agrees with K's field at z.
Vec3 connecting_field_at(const OrientedCircle& K, const Vec3& z, const Vec3& p);

struct CircleConnection {
  Vec3 z;                 // hand-off point on K
  OrientedCircle circle;  // passes through z and p; field = Y_z at z, xi at p
};

// Finds z on K with L(z) = xi by a 360-sample scan of the signed angle between
// L(z) and xi followed by bisection. Throws UsageError when p is within 1e-6
// of K and NumericalError if no root is bracketed or the result misses the
// endpoint conditions by more than 1e-9.
CircleConnection connect_circles(const OrientedCircle& K, const Vec3& p,
                                 const Vec3& xi);

// Distance from a point of S^2 to the circle.
double distance_to_circle(const OrientedCircle& K, const Vec3& p);

// Constant control whose orbit through z (with velocity z.v) is `circle`.
// Throws NumericalError if the circle does not carry z.v at z.u.
double recover_control(const BundleState& z, const OrientedCircle& circle);

// Throws InfeasibleTimeError for T < 2 pi / r, DegenerateInputError for r = 0,
// UsageError when start and target are not on a common M_r, and
// NumericalError if no candidate construction fits into T.
ControlPlan plan_control(const ReachabilityQuery& q);

// Exact piecewise propagation. Returns the state at t = 0, at every segment
// boundary and at each requested sample time, sorted by time.
std::vector<TimedState> execute_plan(const BundleState& x0, const ControlPlan& plan,
                                     std::span<const double> sample_times = {});

// State at the end of the plan.
BundleState plan_endpoint(const BundleState& x0, const ControlPlan& plan);

}  // namespace stogeo

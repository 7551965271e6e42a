#pragma once

// Closed-form solutions of the constant-control equation
//
//   w'' = -|w'|^2 w + a w x w',   w(0) = p, w'(0) = xi,  (p, xi) ∈ M_r,
//
// which are circles on S^2 traversed with angular frequency b = sqrt(r^2 + a^2).

#include <array>

#include "stogeo/geometry.hpp"

namespace stogeo {

// A non-degenerate circle K = (center + span{basis}) ∩ S^2 together with one
// of its two tangent fields of length `speed`:
//   Y_z = orientation * (speed / theta) [-<z, p1> p2 + <z, p2> p1],
// theta = sqrt(1 - |center|^2) being the circle's radius.
struct OrientedCircle {
  Vec3 center;
  std::array<Vec3, 2> basis;
  double speed = 1.0;
  int orientation = 1;  // +1 or -1

  double radius() const;
  Vec3 normal() const { return cross(basis[0], basis[1]); }
  // Point of the circle at polar angle phi in the (p1, p2) basis.
  Vec3 point(double phi) const;
  // Polar angle of a point of the circle.
  double angle_of(const Vec3& z) const;
  // Time the field needs to carry `from` to `to` (both on the circle), in [0, period).
  double travel_time(const Vec3& from, const Vec3& to) const;
  double period() const;
};

struct ConstantControlOrbit {
  Frame frame;
  double a = 0.0;
  double r = 0.0;
};

// b = sqrt(r^2 + a^2).
double angular_frequency(double r, double a);
// 2 pi / b.
double orbit_period(double r, double a);
// 2 r / b.
double orbit_diameter(double r, double a);

// E1 = (a/b) p + (1/b) p x xi,  E2 = (r/b) p - (a/(r b)) p x xi,  E3 = xi / r.
// Throws DegenerateInputError when |xi| = 0.
Frame control_frame(const BundleState& x, double a);
ConstantControlOrbit make_orbit(const BundleState& x, double a);

// w(t) = (a/b) E1 + (r/b) E2 cos(bt) + (r/b) E3 sin(bt) and its analytic derivative.
BundleState constant_control_state(const BundleState& x, double a, double t);
BundleState constant_control_state(const ConstantControlOrbit& orbit, double t);

// Analytic second derivative w''(t).
Vec3 constant_control_acceleration(const ConstantControlOrbit& orbit, double t);

// Orbit of the constant-control solution through x with its velocity field.
OrientedCircle orbit_circle(const BundleState& x, double a);

bool on_circle(const OrientedCircle& c, const Vec3& z, double tol = 1e-9);

// Throws UsageError when z is farther than 1e-9 from the circle.
Vec3 circle_field(const OrientedCircle& c, const Vec3& z);

}  // namespace stogeo

#include "stogeo/exact.hpp"

#include <cmath>
#include <numbers>

#include "stogeo/errors.hpp"

namespace stogeo {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double OrientedCircle::radius() const {
  return std::sqrt(std::fmax(0.0, 1.0 - norm2(center)));
}

Vec3 OrientedCircle::point(double phi) const {
  const double theta = radius();
  return center + (theta * std::cos(phi)) * basis[0] +
         (theta * std::sin(phi)) * basis[1];
}

double OrientedCircle::angle_of(const Vec3& z) const {
  return std::atan2(dot(z, basis[1]), dot(z, basis[0]));
}

double OrientedCircle::period() const { return kTwoPi * radius() / speed; }

double OrientedCircle::travel_time(const Vec3& from, const Vec3& to) const {
  // The field turns the polar angle at rate -orientation * speed / radius.
  double delta = angle_of(to) - angle_of(from);
  if (orientation > 0) delta = -delta;
  delta = std::fmod(delta, kTwoPi);
  if (delta < 0.0) delta += kTwoPi;
  return delta * radius() / speed;
}

double angular_frequency(double r, double a) { return std::hypot(r, a); }

double orbit_period(double r, double a) {
  return kTwoPi / angular_frequency(r, a);
}

double orbit_diameter(double r, double a) {
  return 2.0 * r / angular_frequency(r, a);
}

Frame control_frame(const BundleState& x, double a) {
  const double r = norm(x.v);
  if (!(r > 0.0)) {
    throw DegenerateInputError("constant-control orbit requires r > 0");
  }
  const double b = angular_frequency(r, a);
  const Vec3 pxi = cross(x.u, x.v);
  return {(a / b) * x.u + (1.0 / b) * pxi, (r / b) * x.u - (a / (r * b)) * pxi,
          x.v / r, b};
}

ConstantControlOrbit make_orbit(const BundleState& x, double a) {
  return {control_frame(x, a), a, norm(x.v)};
}

BundleState constant_control_state(const ConstantControlOrbit& orbit, double t) {
  const Frame& f = orbit.frame;
  const double c = std::cos(f.b * t);
  const double s = std::sin(f.b * t);
  const double rb = orbit.r / f.b;
  return {(orbit.a / f.b) * f.e1 + (rb * c) * f.e2 + (rb * s) * f.e3,
          (-orbit.r * s) * f.e2 + (orbit.r * c) * f.e3};
}

BundleState constant_control_state(const BundleState& x, double a, double t) {
  return constant_control_state(make_orbit(x, a), t);
}

Vec3 constant_control_acceleration(const ConstantControlOrbit& orbit, double t) {
  const Frame& f = orbit.frame;
  const double rb = orbit.r * f.b;
  return (-rb * std::cos(f.b * t)) * f.e2 + (-rb * std::sin(f.b * t)) * f.e3;
}

OrientedCircle orbit_circle(const BundleState& x, double a) {
  const Frame f = control_frame(x, a);
  // Basis (E3, E2) with orientation +1 reproduces the velocity field
  // Y(z) = -b <z, E3> E2 + b <z, E2> E3.
  return {(a / f.b) * f.e1, {f.e3, f.e2}, norm(x.v), 1};
}

bool on_circle(const OrientedCircle& c, const Vec3& z, double tol) {
  return std::fabs(norm(z) - 1.0) <= tol &&
         std::fabs(dot(z - c.center, c.normal())) <= tol;
}

Vec3 circle_field(const OrientedCircle& c, const Vec3& z) {
  if (!on_circle(c, z)) {
    throw UsageError("point is not on the circle");
  }
  const auto& [p1, p2] = c.basis;
  const double scale = c.orientation * c.speed / c.radius();
  return scale * (dot(z, p2) * p1 - dot(z, p1) * p2);
}

}  // namespace stogeo

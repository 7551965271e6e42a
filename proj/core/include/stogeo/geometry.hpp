#pragma once

// Tangent bundle TS^2 of the unit sphere embedded in R^6, the drift and
// diffusion fields of the stochastic geodesic equation, their Jacobi brackets,
// and the 6 x 8 partition of the unit-speed sub-bundle M_1.

#include <array>
#include <functional>
#include <string>
#include <string_view>

#include "stogeo/vec3.hpp"

namespace stogeo {

inline constexpr double kDefaultConstraintTol = 1e-9;

// A point z = (u, v) of R^6; on TS^2 when |u| = 1 and <u, v> = 0.
struct BundleState {
  Vec3 u;
  Vec3 v;

  double speed() const { return norm(v); }
  friend bool operator==(const BundleState&, const BundleState&) = default;
};

// A vector of R^6 attached to a bundle point, e.g. the value of a field.
struct BundleVector {
  Vec3 u;
  Vec3 v;

  friend bool operator==(const BundleVector&, const BundleVector&) = default;
};

inline BundleVector operator+(const BundleVector& a, const BundleVector& b) {
  return {a.u + b.u, a.v + b.v};
}
inline BundleVector operator-(const BundleVector& a, const BundleVector& b) {
  return {a.u - b.u, a.v - b.v};
}
inline BundleVector operator*(double s, const BundleVector& a) {
  return {s * a.u, s * a.v};
}
inline double max_abs(const BundleVector& a) {
  return std::fmax(max_abs(a.u), max_abs(a.v));
}

// True when |u| = 1 and u ⟂ v within tol.
bool on_bundle(const BundleState& z, double tol = kDefaultConstraintTol);

// True when z is on TS^2 and | |v| - r | <= tol, i.e. z ∈ M_r.
bool on_speed_class(const BundleState& z, double r,
                    double tol = kDefaultConstraintTol);

// Speed class r >= 0 of the sub-bundle M_r = {(u, v) ∈ TS^2 : |v| = r}.
class SpeedClass {
 public:
  explicit SpeedClass(double r);
  double r() const { return r_; }
  bool contains(const BundleState& z, double tol = kDefaultConstraintTol) const {
    return on_speed_class(z, r_, tol);
  }

 private:
  double r_;
};

// Positively oriented orthonormal frame (e1, e2, e3) and the angular
// frequency b = sqrt(r^2 + a^2) of a constant-control orbit.
struct Frame {
  Vec3 e1;
  Vec3 e2;
  Vec3 e3;
  double b = 0.0;
};

// f(z) = (v, -|v|^2 u).
BundleVector drift_f(const BundleState& z);

// g(z) = (0, u x v).
BundleVector diffusion_g(const BundleState& z);

// Stratonovich-to-Ito drift correction (D/2) g'(z) g(z) = (0, (D/2) u x (u x v)).
// On TS^2 this is (0, -(D/2) v).
BundleVector ito_correction(const BundleState& z, double noise_intensity);

// Closed form of the bracket [g, f](z) = (u x v, 0).
BundleVector bracket_gf(const BundleState& z);

// Row-major 6 x 6 Jacobian in the ordering (u_x, u_y, u_z, v_x, v_y, v_z).
using Jacobian6 = std::array<std::array<double, 6>, 6>;

BundleVector jacobian_apply(const Jacobian6& jac, const BundleVector& w);

// A polynomial ambient field together with its analytic Jacobian.
struct VectorField {
  std::string name;
  std::function<BundleVector(const BundleState&)> value;
  std::function<Jacobian6(const BundleState&)> jacobian;
};

enum class FieldId { f, g, gf };

// "f", "g" or "gf"; anything else throws UsageError.
FieldId parse_field_id(std::string_view name);
std::string_view to_string(FieldId id);

const VectorField& field(FieldId id);

// Jacobi bracket [X, Y](z) = dY(z) X(z) - dX(z) Y(z), with [g, f] = (u x v, 0).
BundleVector jacobi_bracket(const VectorField& x, const VectorField& y,
                            const BundleState& z);
BundleVector jacobi_bracket(FieldId x, FieldId y, const BundleState& z);

// Divergence on M_r computed in the orthonormal frame f/|f|, g/r, [g,f]/r.
// Requires z ∈ M_r with r > 0.
double divergence_on_speed_class(const VectorField& x, const BundleState& z);

// Normalizes u_raw and removes the normal part of v_raw.
// Throws DegenerateInputError for u_raw = 0.
BundleState project_to_bundle(const Vec3& u_raw, const Vec3& v_raw);

// --- 6 x 8 partition of M_1 ------------------------------------------------

// 1-based (segment, sector) cell of M_1.
struct BundleCellIndex {
  int i = 1;  // 1..6, nearest of (+-1,0,0), (0,+-1,0), (0,0,+-1) in that order
  int j = 1;  // 1..8, 45 degree sector of the projected velocity

  friend bool operator==(const BundleCellIndex&, const BundleCellIndex&) = default;
};

inline constexpr int kSegments = 6;
inline constexpr int kSectors = 8;

// Centre x_i^S of segment i (1-based).
Vec3 segment_center(int i);

// Index of the nearest segment centre; ties go to the lowest index.
int segment_index(const Vec3& u);

// In-plane basis (a1, a2) of the tangent plane at x_i^S. a1 is the lowest-index
// centre not parallel to x_i^S and a2 = x_i^S x a1, so that (a1, a2, x_i^S) is
// right handed. Sector j covers polar angles ((j-1) pi/4, j pi/4] measured
// from a1 towards a2; the angle 0 belongs to sector 1.
std::array<Vec3, 2> sector_basis(int i);

// Throws DegenerateInputError when the projected velocity is shorter than 1e-12.
BundleCellIndex partition_index(const BundleState& z);

// Human-readable statement of the sector enumeration (written into outputs).
std::string partition_description();

}  // namespace stogeo

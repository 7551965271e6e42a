#include "stogeo/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "stogeo/errors.hpp"

namespace stogeo {

namespace {

// Writes the 3 x 3 block m into jac at (row0, col0).
void put_block(Jacobian6& jac, int row0, int col0,
               const std::array<std::array<double, 3>, 3>& m) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) jac[row0 + r][col0 + c] = m[r][c];
  }
}

// Matrix of w |-> a x w.
std::array<std::array<double, 3>, 3> cross_matrix(const Vec3& a) {
  return {{{0.0, -a.z, a.y}, {a.z, 0.0, -a.x}, {-a.y, a.x, 0.0}}};
}

std::array<std::array<double, 3>, 3> scaled_identity(double s) {
  return {{{s, 0.0, 0.0}, {0.0, s, 0.0}, {0.0, 0.0, s}}};
}

Jacobian6 jacobian_f(const BundleState& z) {
  Jacobian6 jac{};
  put_block(jac, 0, 3, scaled_identity(1.0));
  put_block(jac, 3, 0, scaled_identity(-norm2(z.v)));
  const double u[3] = {z.u.x, z.u.y, z.u.z};
  const double v[3] = {z.v.x, z.v.y, z.v.z};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) jac[3 + r][3 + c] = -2.0 * u[r] * v[c];
  }
  return jac;
}

Jacobian6 jacobian_g(const BundleState& z) {
  Jacobian6 jac{};
  put_block(jac, 3, 0, cross_matrix(-z.v));
  put_block(jac, 3, 3, cross_matrix(z.u));
  return jac;
}

Jacobian6 jacobian_gf(const BundleState& z) {
  Jacobian6 jac{};
  put_block(jac, 0, 0, cross_matrix(-z.v));
  put_block(jac, 0, 3, cross_matrix(z.u));
  return jac;
}

std::array<double, 6> to_array(const BundleVector& w) {
  return {w.u.x, w.u.y, w.u.z, w.v.x, w.v.y, w.v.z};
}

double dot6(const BundleVector& a, const BundleVector& b) {
  return dot(a.u, b.u) + dot(a.v, b.v);
}

}  // namespace

bool on_bundle(const BundleState& z, double tol) {
  return std::fabs(norm(z.u) - 1.0) <= tol && std::fabs(dot(z.u, z.v)) <= tol;
}

bool on_speed_class(const BundleState& z, double r, double tol) {
  return on_bundle(z, tol) && std::fabs(norm(z.v) - r) <= tol;
}

SpeedClass::SpeedClass(double r) : r_(r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw UsageError("speed class requires a finite r >= 0");
  }
}

BundleVector drift_f(const BundleState& z) {
  return {z.v, -norm2(z.v) * z.u};
}

BundleVector diffusion_g(const BundleState& z) {
  return {Vec3{}, cross(z.u, z.v)};
}

BundleVector ito_correction(const BundleState& z, double noise_intensity) {
  return {Vec3{}, (0.5 * noise_intensity) * cross(z.u, cross(z.u, z.v))};
}

BundleVector bracket_gf(const BundleState& z) {
  return {cross(z.u, z.v), Vec3{}};
}

BundleVector jacobian_apply(const Jacobian6& jac, const BundleVector& w) {
  const auto x = to_array(w);
  std::array<double, 6> y{};
  for (int r = 0; r < 6; ++r) {
    double s = 0.0;
    for (int c = 0; c < 6; ++c) s += jac[r][c] * x[c];
    y[r] = s;
  }
  return {{y[0], y[1], y[2]}, {y[3], y[4], y[5]}};
}

FieldId parse_field_id(std::string_view name) {
  if (name == "f") return FieldId::f;
  if (name == "g") return FieldId::g;
  if (name == "gf") return FieldId::gf;
  throw UsageError("unknown field id '" + std::string(name) +
                   "' (expected f, g or gf)");
}

std::string_view to_string(FieldId id) {
  switch (id) {
    case FieldId::f:
      return "f";
    case FieldId::g:
      return "g";
    case FieldId::gf:
      return "gf";
  }
  return "?";
}

const VectorField& field(FieldId id) {
  static const VectorField kF{"f", drift_f, jacobian_f};
  static const VectorField kG{"g", diffusion_g, jacobian_g};
  static const VectorField kGf{"gf", bracket_gf, jacobian_gf};
  switch (id) {
    case FieldId::f:
      return kF;
    case FieldId::g:
      return kG;
    case FieldId::gf:
      return kGf;
  }
  throw UsageError("unknown field id");
}

BundleVector jacobi_bracket(const VectorField& x, const VectorField& y,
                            const BundleState& z) {
  return jacobian_apply(y.jacobian(z), x.value(z)) - jacobian_apply(x.jacobian(z), y.value(z));
}

BundleVector jacobi_bracket(FieldId x, FieldId y, const BundleState& z) {
  return jacobi_bracket(field(x), field(y), z);
}

double divergence_on_speed_class(const VectorField& x, const BundleState& z) {
  const double r = norm(z.v);
  if (r <= 0.0) throw DegenerateInputError("divergence on M_r needs r > 0");
  const BundleVector fz = drift_f(z);
  const std::array<BundleVector, 3> frame = {
      (1.0 / std::sqrt(r * r + r * r * r * r)) * fz,
      (1.0 / r) * diffusion_g(z), (1.0 / r) * bracket_gf(z)};
  const Jacobian6 jac = x.jacobian(z);
  double div = 0.0;
  for (const auto& e : frame) div += dot6(jacobian_apply(jac, e), e);
  return div;
}

BundleState project_to_bundle(const Vec3& u_raw, const Vec3& v_raw) {
  const double len = norm(u_raw);
  if (!(len > 0.0)) {
    throw DegenerateInputError("cannot project: |u| = 0");
  }
  const Vec3 u = u_raw / len;
  return {u, v_raw - dot(v_raw, u) * u};
}

Vec3 segment_center(int i) {
  switch (i) {
    case 1:
      return {1.0, 0.0, 0.0};
    case 2:
      return {-1.0, 0.0, 0.0};
    case 3:
      return {0.0, 1.0, 0.0};
    case 4:
      return {0.0, -1.0, 0.0};
    case 5:
      return {0.0, 0.0, 1.0};
    case 6:
      return {0.0, 0.0, -1.0};
    default:
      throw UsageError("segment index out of range 1..6");
  }
}

int segment_index(const Vec3& u) {
  // |u - x|^2 = |u|^2 + 1 - 2 <u, x>, so the nearest centre maximizes <u, x>.
  int best = 1;
  double best_dot = dot(u, segment_center(1));
  for (int k = 2; k <= kSegments; ++k) {
    const double d = dot(u, segment_center(k));
    if (d > best_dot) {
      best_dot = d;
      best = k;
    }
  }
  return best;
}

std::array<Vec3, 2> sector_basis(int i) {
  const Vec3 normal = segment_center(i);
  for (int k = 1; k <= kSegments; ++k) {
    const Vec3 a1 = segment_center(k);
    if (norm2(cross(a1, normal)) > 0.5) {
      return {a1, cross(normal, a1)};
    }
  }
  throw NumericalError("no sector basis");  // unreachable
}

BundleCellIndex partition_index(const BundleState& z) {
  const int i = segment_index(z.u);
  const Vec3 normal = segment_center(i);
  const Vec3 w = z.v - dot(z.v, normal) * normal;
  if (norm(w) < 1e-12) {
    throw DegenerateInputError(
        "velocity projects to zero on the segment tangent plane");
  }
  const auto [a1, a2] = sector_basis(i);
  double angle = std::atan2(dot(w, a2), dot(w, a1));
  if (angle < 0.0) angle += 2.0 * std::numbers::pi;
  const double width = std::numbers::pi / 4.0;
  int j = static_cast<int>(std::ceil(angle / width));
  if (j < 1) j = 1;
  if (j > kSectors) j = kSectors;
  return {i, j};
}

std::string partition_description() {
  std::ostringstream os;
  os << "segments i=1..6 centred at (+1,0,0),(-1,0,0),(0,+1,0),(0,-1,0),"
        "(0,0,+1),(0,0,-1), nearest centre, ties to lowest i; "
        "sectors j=1..8 of 45 degrees in the tangent plane at the centre, "
        "angle measured from a1 (lowest-index centre not parallel to x_i) "
        "towards a2 = x_i x a1, sector j = ((j-1)pi/4, j pi/4], angle 0 in j=1";
  return os.str();
}

}  // namespace stogeo

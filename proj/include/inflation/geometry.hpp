#pragma once

// Cylindrical (theta, r, z) and shifted polar (rho, phi) charts.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>

namespace inflation {

using Vec3 = std::array<double, 3>;

/// Cylindrical coordinates.  theta in [0, 2pi), r >= 0.  On the axis theta
/// is 0 by convention.
struct CylCoords {
  double theta = 0.0;
  double r = 0.0;
  double z = 0.0;
};

/// (theta, r, z) components of a vector value at one point.
template <class T = double>
struct CylVec {
  T theta{};
  T r{};
  T z{};
};

/// Polar chart of the (r, z) half plane centred on the ring core (r0, 0).
/// The partials of rho are only meaningful for rho > 0; `drho` is empty at
/// the centre.
struct ShiftedPolar {
  double rho = 0.0;
  double phi = 0.0;
  struct Partials {
    double dr;  // d rho / dr = cos phi
    double dz;  // d rho / dz = sin phi
  };
  std::optional<Partials> drho;
};

inline CylCoords to_cylindrical(const Vec3& x) {
  CylCoords c;
  c.r = std::hypot(x[0], x[1]);
  c.z = x[2];
  if (c.r > 0.0) {
    double th = std::atan2(x[1], x[0]);
    if (th < 0.0) th += 2.0 * std::numbers::pi;
    if (th >= 2.0 * std::numbers::pi) th = 0.0;
    c.theta = th;
  }
  return c;
}

inline Vec3 to_cartesian(const CylCoords& c) {
  return {c.r * std::cos(c.theta), c.r * std::sin(c.theta), c.z};
}

/// `center_r` is the radius of the ring core (nu^-1 scaled by the ring factor).
inline ShiftedPolar shifted_polar(double r, double z, double center_r) {
  ShiftedPolar p;
  const double dr = r - center_r;
  p.rho = std::hypot(dr, z);
  p.phi = std::atan2(z, dr);
  if (p.rho > 0.0) p.drho = ShiftedPolar::Partials{dr / p.rho, z / p.rho};
  return p;
}

inline Vec3 e_theta(double theta) { return {-std::sin(theta), std::cos(theta), 0.0}; }
inline Vec3 e_r(double theta) { return {std::cos(theta), std::sin(theta), 0.0}; }
inline Vec3 e_z() { return {0.0, 0.0, 1.0}; }

inline Vec3 cyl_vector_to_cartesian(const CylVec<double>& v, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {v.r * c - v.theta * s, v.r * s + v.theta * c, v.z};
}

}  // namespace inflation

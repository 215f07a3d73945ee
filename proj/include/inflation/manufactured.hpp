#pragma once

/// Manufactured solution for the swirl-vorticity-stream system:
///
///   psi_e   = cos(t) Psi(r, z),      Gamma_e = (1 + sin(t) / 2) G(r, z),
///   omega_e = cos(t) Omega,          Omega = -(Psi_rr - Psi_r / r + Psi_zz) / r,
///
/// with Psi, G built from smooth bumps supported away from the box walls, so
/// the Dirichlet data stay compatible with the forcing.  The forcing is the
/// continuous residual of the equations, so a consistent scheme converges to
/// (Gamma_e, omega_e) at its formal order.

#include <cmath>
#include <numbers>

#include "inflation/jet.hpp"
#include "inflation/solver.hpp"

namespace inflation {

class ManufacturedSolution {
 public:
  /// Box r in [1, 2], z in [-1/2, 1/2].
  static Grid2D grid(int n) { return Grid2D{n, n, 1.0, 2.0, -0.5, 0.5}; }

  ManufacturedSolution(const Grid2D& g, Mode mode) : g_(g), visc_(mode == Mode::viscous ? 1.0 : 0.0) {
    const std::size_t n = g.size();
    G_.assign(n, 0.0);
    Om_.assign(n, 0.0);
    jpg_.assign(n, 0.0);
    jpo_.assign(n, 0.0);
    jgg_.assign(n, 0.0);
    lg_.assign(n, 0.0);
    lro_.assign(n, 0.0);
    for (int i = 0; i <= g.nr; ++i)
      for (int j = 0; j <= g.nz; ++j) fill(i, j);
  }

  SolverState initial_state() const {
    return init_state(g_, visc_ > 0 ? Mode::viscous : Mode::inviscid,
                      [&](double r, double z) -> std::array<double, 2> {
                        const auto v = exact_at(0.0, r, z);
                        return {v[0], v[1]};
                      });
  }

  /// (Gamma_e, omega_e) at a point.
  std::array<double, 2> exact_at(double t, double r, double z) const {
    using J = Jet<2, 2>;
    const J R = J::variable(0, r), Z = J::variable(1, z);
    const J psi = Psi(R, Z);
    const double om =
        -(psi.derivative({2, 0}) - psi.derivative({1, 0}) / r + psi.derivative({0, 2})) / r;
    return {(1.0 + 0.5 * std::sin(t)) * Gfun(R, Z).value(), std::cos(t) * om};
  }

  Forcing forcing() const {
    return [this](double t, Field2D& dG, Field2D& dW) {
      const double c = std::cos(t), s = std::sin(t), a = 1.0 + 0.5 * s;
      for (std::size_t k = 0; k < dG.size(); ++k) {
        dG[k] += 0.5 * c * G_[k] + c * a * jpg_[k] - visc_ * a * lg_[k];
        dW[k] += -s * Om_[k] + c * c * jpo_[k] - a * a * jgg_[k] - visc_ * c * lro_[k];
      }
    };
  }

  /// Max nodal errors of (Gamma, omega) against the exact solution.
  std::array<double, 2> max_error(const SolverState& st) const {
    double eg = 0.0, ew = 0.0;
    for (int i = 0; i <= g_.nr; ++i)
      for (int j = 0; j <= g_.nz; ++j) {
        const auto e = exact_at(st.time, g_.r(i), g_.z(j));
        const std::size_t k = g_.index(i, j);
        eg = std::max(eg, std::abs(st.Gamma[k] - e[0]));
        ew = std::max(ew, std::abs(st.omega[k] - e[1]));
      }
    return {eg, ew};
  }

 private:
  /// (1 - y^2)^8 on the middle 80% of [a, b], zero elsewhere.  C^7 across the
  /// support edge, which covers the six derivatives the viscous forcing and
  /// the second-order truncation error need.
  template <class T>
  static T bump(const T& x, double a, double b) {
    const T y = (x - 0.5 * (a + b)) / (0.4 * (b - a));
    const double yv = value_of(y);
    if (yv * yv >= 1.0) return T(0.0);
    const T w = 1.0 - y * y;
    const T w2 = w * w, w4 = w2 * w2;
    return w4 * w4;
  }
  template <class T>
  static T Psi(const T& r, const T& z) {
    return 0.02 * bump(r, 1.0, 2.0) * bump(z, -0.5, 0.5);
  }
  template <class T>
  static T Gfun(const T& r, const T& z) {
    return 0.5 * bump(r, 1.0, 2.0) * bump(z, -0.5, 0.5) * (1.0 + 0.5 * (r - 1.0));
  }

  void fill(int i, int j) {
    using J4 = Jet<2, 4>;
    using J2 = Jet<2, 2>;
    const double r = g_.r(i), z = g_.z(j);
    const J4 R = J4::variable(0, r), Z = J4::variable(1, z);
    const J4 psi = Psi(R, Z);
    const auto psi_r = partial(psi, 0), psi_z = partial(psi, 1);
    const J2 R2 = truncate<2>(R);
    const J2 om = -(truncate<2>(partial(psi_r, 0)) - truncate<2>(psi_r) / R2 +
                    truncate<2>(partial(psi_z, 1))) /
                  R2;
    const Jet<2, 3> G = truncate<3>(Gfun(R, Z));
    const auto G_r = partial(G, 0), G_z = partial(G, 1);
    const auto om_r = partial(om, 0);
    const auto omr_over_r = partial(om / R2, 0), omz_over_r = partial(om / R2, 1);
    const std::size_t k = g_.index(i, j);
    G_[k] = G.value();
    Om_[k] = om.value();
    jpg_[k] = (psi_r.value() * G_z.value() - psi_z.value() * G_r.value()) / r;
    jpo_[k] = psi_r.value() * omz_over_r.value() - psi_z.value() * omr_over_r.value();
    jgg_[k] = 2.0 * G.value() * G_z.value() / (r * r * r);
    lg_[k] = G.derivative({2, 0}) - G_r.value() / r + G.derivative({0, 2});
    lro_[k] = om.derivative({2, 0}) + om_r.value() / r + om.derivative({0, 2}) -
              om.value() / (r * r);
  }

  Grid2D g_;
  double visc_;
  Field2D G_, Om_, jpg_, jpo_, jgg_, lg_, lro_;
};

}  // namespace inflation

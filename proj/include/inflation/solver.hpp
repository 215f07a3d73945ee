#pragma once

/// Axisymmetric Euler / Navier-Stokes with swirl in swirl-vorticity-stream form
/// on a rectangle of the (r, z) half plane away from the axis.
///
/// Unknowns: Gamma = r u_theta, omega = d_z u_r - d_r u_z, and psi with
/// u_r = -psi_z / r, u_z = psi_r / r, related by
///
///   L psi := psi_rr - psi_r / r + psi_zz = -r omega.
///
/// Evolution, with the Arakawa Jacobian J(a, b) = a_r b_z - a_z b_r:
///
///   d_t Gamma = -J(psi, Gamma) / r              [+ L Gamma]
///   d_t omega = -J(psi, omega / r) + J(Gamma, Gamma / r^2)
///                                              [+ (1/r) L (r omega)]
///
/// The stretching term J(Gamma, Gamma / r^2) equals d_z(Gamma^2) / r^3; in
/// this form the semi-discrete energy sum (Gamma^2 / r + psi omega) and the
/// swirl sum r Gamma^2 are conserved exactly.  Diffusion (bracketed, viscous
/// mode only) is the same operator L on Gamma and on r omega, applied by
/// Crank-Nicolson half steps around the explicit RK4 advection step.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "inflation/construction.hpp"
#include "inflation/norms.hpp"

namespace inflation {

/// Node-centred grid: nodes (i, j), i = 0..nr, j = 0..nz, boundary nodes
/// carry homogeneous Dirichlet data.
struct Grid2D {
  int nr = 0;
  int nz = 0;
  double r_min = 0.0, r_max = 0.0, z_min = 0.0, z_max = 0.0;

  double dr() const { return (r_max - r_min) / nr; }
  double dz() const { return (z_max - z_min) / nz; }
  double r(int i) const { return r_min + i * dr(); }
  double z(int j) const { return z_min + j * dz(); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * (nz + 1) + j; }
  std::size_t size() const { return static_cast<std::size_t>(nr + 1) * (nz + 1); }
};

using Field2D = std::vector<double>;

struct SolverState {
  Grid2D grid;
  Field2D Gamma;
  Field2D omega;
  Field2D psi;
  double time = 0.0;
  int visc = 0;
};

struct CflViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Solves (alpha + beta L) X = rhs with X = 0 on the boundary: sine transform
/// in z, tridiagonal solves in r.
class StreamOperator {
 public:
  explicit StreamOperator(const Grid2D& g) : g_(g) {
    if (g.nr < 2 || g.nz < 2) throw std::invalid_argument("grid needs at least 2 cells per axis");
    if (!(g.r_min > 0.0) || !(g.r_max > g.r_min) || !(g.z_max > g.z_min))
      throw std::invalid_argument("grid must be a rectangle with r_min > 0");
    mr_ = g.nr - 1;
    mz_ = g.nz - 1;
    buf_ = fftw_alloc_real(static_cast<std::size_t>(mr_) * mz_);
    const int n[1] = {mz_};
    const fftw_r2r_kind kind[1] = {FFTW_RODFT00};
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      plan_ = fftw_plan_many_r2r(1, n, mr_, buf_, nullptr, 1, mz_, buf_, nullptr, 1, mz_, kind,
                                 FFTW_ESTIMATE);
    }
    const double dr = g.dr(), dz = g.dz();
    lambda_.resize(mz_);
    for (int m = 1; m <= mz_; ++m) {
      const double s = std::sin(std::numbers::pi * m / (2.0 * g.nz));
      lambda_[m - 1] = -4.0 / (dz * dz) * s * s;
    }
    lo_.resize(mr_);
    up_.resize(mr_);
    for (int i = 1; i <= g.nr - 1; ++i) {
      const double ri = g.r(i);
      lo_[i - 1] = ri / ((ri - 0.5 * dr) * dr * dr);
      up_[i - 1] = ri / ((ri + 0.5 * dr) * dr * dr);
    }
  }
  ~StreamOperator() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(buf_);
  }
  StreamOperator(const StreamOperator&) = delete;
  StreamOperator& operator=(const StreamOperator&) = delete;

  const Grid2D& grid() const { return g_; }

  /// (L X) at interior nodes; boundary entries are 0.
  void apply(const Field2D& x, Field2D& out) const {
    out.assign(g_.size(), 0.0);
    const double idz2 = 1.0 / (g_.dz() * g_.dz());
    for (int i = 1; i < g_.nr; ++i)
      for (int j = 1; j < g_.nz; ++j) {
        const double c = x[g_.index(i, j)];
        out[g_.index(i, j)] = up_[i - 1] * (x[g_.index(i + 1, j)] - c) -
                              lo_[i - 1] * (c - x[g_.index(i - 1, j)]) +
                              (x[g_.index(i, j + 1)] - 2.0 * c + x[g_.index(i, j - 1)]) * idz2;
      }
  }

  void solve(double alpha, double beta, const Field2D& rhs, Field2D& x) {
    for (int i = 1; i < g_.nr; ++i)
      std::memcpy(buf_ + static_cast<std::size_t>(i - 1) * mz_, &rhs[g_.index(i, 1)],
                  sizeof(double) * mz_);
    fftw_execute(plan_);
    std::vector<double> cp(mr_), dp(mr_);
    for (int m = 0; m < mz_; ++m) {
      // Thomas algorithm down the column m.
      for (int k = 0; k < mr_; ++k) {
        const double a = beta * lo_[k], c = beta * up_[k];
        const double b = alpha - a - c + beta * lambda_[m];
        const double d = buf_[static_cast<std::size_t>(k) * mz_ + m];
        if (k == 0) {
          cp[k] = c / b;
          dp[k] = d / b;
        } else {
          const double den = b - a * cp[k - 1];
          cp[k] = c / den;
          dp[k] = (d - a * dp[k - 1]) / den;
        }
      }
      for (int k = mr_ - 1; k >= 0; --k) {
        if (k < mr_ - 1) dp[k] -= cp[k] * dp[k + 1];
        buf_[static_cast<std::size_t>(k) * mz_ + m] = dp[k];
      }
    }
    fftw_execute(plan_);
    const double scale = 1.0 / (2.0 * g_.nz);
    x.assign(g_.size(), 0.0);
    for (int i = 1; i < g_.nr; ++i)
      for (int j = 1; j < g_.nz; ++j)
        x[g_.index(i, j)] = buf_[static_cast<std::size_t>(i - 1) * mz_ + (j - 1)] * scale;
  }

 private:
  Grid2D g_;
  int mr_ = 0, mz_ = 0;
  double* buf_ = nullptr;
  fftw_plan plan_ = nullptr;
  std::vector<double> lambda_, lo_, up_;
};

/// psi from omega: L psi = -r omega, psi = 0 on the boundary.
inline Field2D poisson_solve(const Field2D& omega, const Grid2D& g) {
  if (omega.size() != g.size()) throw std::invalid_argument("omega does not match the grid");
  StreamOperator op(g);
  Field2D rhs(g.size(), 0.0), psi;
  for (int i = 0; i <= g.nr; ++i)
    for (int j = 0; j <= g.nz; ++j) rhs[g.index(i, j)] = -g.r(i) * omega[g.index(i, j)];
  op.solve(0.0, 1.0, rhs, psi);
  return psi;
}

/// Arakawa's energy- and enstrophy-conserving Jacobian a_r b_z - a_z b_r at
/// interior nodes.
inline void arakawa(const Grid2D& g, const Field2D& a, const Field2D& b, double scale,
                    Field2D& out) {
  const double f = scale / (12.0 * g.dr() * g.dz());
  const int s = g.nz + 1;
  for (int i = 1; i < g.nr; ++i)
    for (int j = 1; j < g.nz; ++j) {
      const std::size_t c = g.index(i, j);
      const std::size_t E = c + s, W = c - s, N = c + 1, S = c - 1;
      const std::size_t NE = E + 1, SE = E - 1, NW = W + 1, SW = W - 1;
      const double j1 = (a[E] - a[W]) * (b[N] - b[S]) - (a[N] - a[S]) * (b[E] - b[W]);
      const double j2 = a[E] * (b[NE] - b[SE]) - a[W] * (b[NW] - b[SW]) -
                        a[N] * (b[NE] - b[NW]) + a[S] * (b[SE] - b[SW]);
      const double j3 = a[NE] * (b[N] - b[E]) - a[SW] * (b[W] - b[S]) -
                        a[NW] * (b[N] - b[W]) + a[SE] * (b[E] - b[S]);
      out[c] += f * (j1 + j2 + j3);
    }
}

/// Nodal velocity (u_theta, u_r, u_z) from the state; zero on the boundary.
struct NodalVelocity {
  Field2D ut, ur, uz;
};

inline NodalVelocity velocity_of(const SolverState& st) {
  const Grid2D& g = st.grid;
  NodalVelocity v{Field2D(g.size(), 0.0), Field2D(g.size(), 0.0), Field2D(g.size(), 0.0)};
  const double i2dr = 1.0 / (2.0 * g.dr()), i2dz = 1.0 / (2.0 * g.dz());
  for (int i = 1; i < g.nr; ++i) {
    const double r = g.r(i);
    for (int j = 1; j < g.nz; ++j) {
      const std::size_t c = g.index(i, j);
      v.ut[c] = st.Gamma[c] / r;
      v.ur[c] = -(st.psi[g.index(i, j + 1)] - st.psi[g.index(i, j - 1)]) * i2dz / r;
      v.uz[c] = (st.psi[g.index(i + 1, j)] - st.psi[g.index(i - 1, j)]) * i2dr / r;
    }
  }
  return v;
}

inline double max_speed(const SolverState& st) {
  const auto v = velocity_of(st);
  double m = 0.0;
  for (std::size_t k = 0; k < v.ur.size(); ++k)
    m = std::max(m, std::sqrt(v.ur[k] * v.ur[k] + v.uz[k] * v.uz[k] + v.ut[k] * v.ut[k]));
  return m;
}

/// Kinetic energy ||u||^2 = 2 pi sum (Gamma^2 / r + psi omega) dr dz.
inline double energy(const SolverState& st) {
  const Grid2D& g = st.grid;
  double e = 0.0;
  for (int i = 1; i < g.nr; ++i) {
    const double r = g.r(i);
    for (int j = 1; j < g.nz; ++j) {
      const std::size_t c = g.index(i, j);
      e += st.Gamma[c] * st.Gamma[c] / r + st.psi[c] * st.omega[c];
    }
  }
  return 2.0 * std::numbers::pi * e * g.dr() * g.dz();
}

/// 2 pi sum r Gamma^2 dr dz, conserved by inviscid transport.
inline double swirl_moment(const SolverState& st) {
  const Grid2D& g = st.grid;
  double e = 0.0;
  for (int i = 1; i < g.nr; ++i)
    for (int j = 1; j < g.nz; ++j) e += g.r(i) * st.Gamma[g.index(i, j)] * st.Gamma[g.index(i, j)];
  return 2.0 * std::numbers::pi * e * g.dr() * g.dz();
}

/// Adds sources to (d_t Gamma, d_t omega) at time t.
using Forcing = std::function<void(double t, Field2D& dGamma, Field2D& domega)>;

inline constexpr double kDefaultCfl = 0.5;

class Integrator {
 public:
  explicit Integrator(const Grid2D& g) : op_(std::make_unique<StreamOperator>(g)), g_(g) {
    inv_r_.assign(g.size(), 0.0);
    inv_r2_.assign(g.size(), 0.0);
    for (int i = 0; i <= g.nr; ++i)
      for (int j = 0; j <= g.nz; ++j) {
        inv_r_[g.index(i, j)] = 1.0 / g.r(i);
        inv_r2_[g.index(i, j)] = 1.0 / (g.r(i) * g.r(i));
      }
  }

  StreamOperator& op() { return *op_; }

  void update_psi(SolverState& st) {
    Field2D rhs(g_.size());
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = -st.omega[k] / inv_r_[k];
    op_->solve(0.0, 1.0, rhs, st.psi);
  }

  /// Largest stable step for the given CFL number.
  double cfl_step(const SolverState& st, double cfl = kDefaultCfl) const {
    const double u = max_speed(st);
    const double h = std::min(g_.dr(), g_.dz());
    return u > 0 ? cfl * h / u : INFINITY;
  }

  /// One step of length dt.  Throws CflViolation if dt exceeds the CFL bound
  /// and NumericalAbort on nonfinite values.
  void step(SolverState& st, double dt, double cfl = kDefaultCfl, const Forcing& forcing = {}) {
    if (dt > cfl_step(st, cfl) * (1.0 + 1e-12))
      throw CflViolation("time step exceeds the CFL bound");
    if (st.visc) diffuse(st, 0.5 * dt);
    advect(st, dt, forcing);
    if (st.visc) diffuse(st, 0.5 * dt);
    update_psi(st);
    st.time += dt;
    for (std::size_t k = 0; k < st.Gamma.size(); ++k)
      if (!std::isfinite(st.Gamma[k]) || !std::isfinite(st.omega[k]))
        throw NumericalAbort("nonfinite value in solver state");
  }

 private:
  void rhs(const Field2D& G, const Field2D& W, double t, const Forcing& forcing, Field2D& dG,
           Field2D& dW) {
    Field2D rhs_psi(g_.size());
    for (std::size_t k = 0; k < rhs_psi.size(); ++k) rhs_psi[k] = -W[k] / inv_r_[k];
    op_->solve(0.0, 1.0, rhs_psi, psi_);
    dG.assign(g_.size(), 0.0);
    dW.assign(g_.size(), 0.0);
    arakawa(g_, psi_, G, -1.0, dG);
    for (std::size_t k = 0; k < dG.size(); ++k) dG[k] *= inv_r_[k];
    tmp_a_.resize(g_.size());
    tmp_b_.resize(g_.size());
    for (std::size_t k = 0; k < W.size(); ++k) {
      tmp_a_[k] = W[k] * inv_r_[k];
      tmp_b_[k] = G[k] * inv_r2_[k];
    }
    arakawa(g_, psi_, tmp_a_, -1.0, dW);
    arakawa(g_, G, tmp_b_, 1.0, dW);
    if (forcing) {
      forcing(t, dG, dW);
      zero_boundary(dG);
      zero_boundary(dW);
    }
  }

  void zero_boundary(Field2D& f) const {
    for (int i = 0; i <= g_.nr; ++i) {
      f[g_.index(i, 0)] = 0.0;
      f[g_.index(i, g_.nz)] = 0.0;
    }
    for (int j = 0; j <= g_.nz; ++j) {
      f[g_.index(0, j)] = 0.0;
      f[g_.index(g_.nr, j)] = 0.0;
    }
  }

  void advect(SolverState& st, double dt, const Forcing& forcing) {
    const std::size_t n = g_.size();
    const double t = st.time;
    Field2D k1G, k1W, k2G, k2W, k3G, k3W, k4G, k4W, G(n), W(n);
    rhs(st.Gamma, st.omega, t, forcing, k1G, k1W);
    for (std::size_t k = 0; k < n; ++k) {
      G[k] = st.Gamma[k] + 0.5 * dt * k1G[k];
      W[k] = st.omega[k] + 0.5 * dt * k1W[k];
    }
    rhs(G, W, t + 0.5 * dt, forcing, k2G, k2W);
    for (std::size_t k = 0; k < n; ++k) {
      G[k] = st.Gamma[k] + 0.5 * dt * k2G[k];
      W[k] = st.omega[k] + 0.5 * dt * k2W[k];
    }
    rhs(G, W, t + 0.5 * dt, forcing, k3G, k3W);
    for (std::size_t k = 0; k < n; ++k) {
      G[k] = st.Gamma[k] + dt * k3G[k];
      W[k] = st.omega[k] + dt * k3W[k];
    }
    rhs(G, W, t + dt, forcing, k4G, k4W);
    for (std::size_t k = 0; k < n; ++k) {
      st.Gamma[k] += dt / 6.0 * (k1G[k] + 2.0 * k2G[k] + 2.0 * k3G[k] + k4G[k]);
      st.omega[k] += dt / 6.0 * (k1W[k] + 2.0 * k2W[k] + 2.0 * k3W[k] + k4W[k]);
    }
  }

  /// Crank-Nicolson for d_t X = L X on X = Gamma and X = r omega.
  void diffuse(SolverState& st, double tau) {
    Field2D LX, rhs_v, X(g_.size());
    op_->apply(st.Gamma, LX);
    rhs_v.resize(g_.size());
    for (std::size_t k = 0; k < rhs_v.size(); ++k) rhs_v[k] = st.Gamma[k] + 0.5 * tau * LX[k];
    op_->solve(1.0, -0.5 * tau, rhs_v, st.Gamma);
    for (std::size_t k = 0; k < X.size(); ++k) X[k] = st.omega[k] / inv_r_[k];
    op_->apply(X, LX);
    for (std::size_t k = 0; k < rhs_v.size(); ++k) rhs_v[k] = X[k] + 0.5 * tau * LX[k];
    op_->solve(1.0, -0.5 * tau, rhs_v, X);
    for (std::size_t k = 0; k < X.size(); ++k) st.omega[k] = X[k] * inv_r_[k];
  }

  std::unique_ptr<StreamOperator> op_;
  Grid2D g_;
  Field2D inv_r_, inv_r2_, psi_, tmp_a_, tmp_b_;
};

/// One step with a freshly planned integrator.
inline SolverState step(SolverState st, double dt, double cfl = kDefaultCfl) {
  Integrator integ(st.grid);
  integ.step(st, dt, cfl);
  return st;
}

/// Solver box around the ring: half width 2/mu + padding * (4/mu) in both r
/// and z, centred on (r0, 0).
inline Grid2D ring_grid(const Construction& c, int nr, int nz, double padding) {
  if (!(padding >= 0.0)) throw std::invalid_argument("padding must be nonnegative");
  const double mu = c.params().mu;
  const double H = 2.0 / mu + padding * 4.0 / mu;
  Grid2D g{nr, nz, c.ring_radius() - H, c.ring_radius() + H, -H, H};
  if (!(g.r_min > 0.0))
    throw std::invalid_argument("solver box reaches the axis; increase the ring scale");
  return g;
}

inline constexpr double kDefaultPadding = 0.25;
inline constexpr int kMinCellsPerLength = 16;

/// Initial state from nodal (Gamma, omega) values.
inline SolverState init_state(const Grid2D& g, Mode mode,
                              const std::function<std::array<double, 2>(double r, double z)>& gw) {
  SolverState st;
  st.grid = g;
  st.Gamma.assign(g.size(), 0.0);
  st.omega.assign(g.size(), 0.0);
  st.visc = mode == Mode::viscous ? 1 : 0;
  for (int i = 1; i < g.nr; ++i)
    for (int j = 1; j < g.nz; ++j) {
      const auto v = gw(g.r(i), g.z(j));
      st.Gamma[g.index(i, j)] = v[0];
      st.omega[g.index(i, j)] = v[1];
    }
  st.psi = poisson_solve(st.omega, g);
  return st;
}

inline SolverState init_state(const Construction& c, int nr, int nz,
                              double padding = kDefaultPadding) {
  const Grid2D g = ring_grid(c, nr, nz, padding);
  const double inv_mu = 1.0 / c.params().mu;
  if (inv_mu / std::max(g.dr(), g.dz()) < kMinCellsPerLength)
    throw std::invalid_argument("grid does not resolve the ring cross-section (need 16 cells per 1/mu)");
  return init_state(g, c.params().mode, [&](double r, double z) -> std::array<double, 2> {
    if (!c.in_support(r, z)) return {0.0, 0.0};
    const auto u = c.initial_velocity_jet<1>(r, z);
    const double omega = u.r.derivative({0, 1}) - u.z.derivative({1, 0});
    return {r * u.theta.value(), omega};
  });
}

// ---------------------------------------------------------------------------
// Diagnostics and driver.

struct Diagnostics {
  double t = 0.0;
  double err_l2 = 0.0;   // ||u - ubar||_{L^2}
  double err_h1 = 0.0;   // ||u - ubar||_{H^1}
  double ubar_l2 = 0.0;  // ||ubar||_{L^2}
  double grad_linf = 0.0;  // ||nabla u||_{L^inf}, Frobenius
  double energy = 0.0;
  double swirl = 0.0;   // 2 pi sum r Gamma^2
  double margin = 0.0;  // grad_linf / (2 M_eps mu^{2-s} nu^{1/2})
  double boundary_leak = 0.0;  // boundary-band max relative to interior max

  double rel_err_l2() const { return ubar_l2 > 0 ? err_l2 / ubar_l2 : 0.0; }
};

struct RunOptions {
  bool store_states = false;
  bool allow_past_tstar = false;
  double blowup_factor = 1e3;
  int m_eps_samples = 16;
  Forcing forcing;
};

struct Trajectory {
  std::vector<Diagnostics> diagnostics;
  std::vector<SolverState> states;
  double m_eps = 0.0;
  long steps = 0;
  bool aborted = false;
  std::string abort_reason;
};

namespace detail {

/// Frobenius |nabla v|^2 for an axisymmetric field from its (r, z) partials.
inline double grad_sq(const std::array<double, 3>& v, const std::array<double, 3>& vr,
                      const std::array<double, 3>& vz, double r) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += vr[c] * vr[c] + vz[c] * vz[c];
  return s + (v[0] * v[0] + v[1] * v[1]) / (r * r);
}

}  // namespace detail

/// sup over nodes of |nabla ubar(t)|, analytic.
inline double approx_grad_linf(const Construction& c, const Grid2D& g, double t) {
  double m = 0.0;
  for (int i = 1; i < g.nr; ++i)
    for (int j = 1; j < g.nz; ++j) {
      const double r = g.r(i), z = g.z(j);
      if (!c.in_support(r, z)) continue;
      const auto u = c.approx_velocity_jet<1>(t, r, z);
      const std::array<double, 3> v{u.theta.value(), u.r.value(), u.z.value()};
      const std::array<double, 3> vr{u.theta.derivative({1, 0}), u.r.derivative({1, 0}),
                                     u.z.derivative({1, 0})};
      const std::array<double, 3> vz{u.theta.derivative({0, 1}), u.r.derivative({0, 1}),
                                     u.z.derivative({0, 1})};
      m = std::max(m, detail::grad_sq(v, vr, vz, r));
    }
  return std::sqrt(m);
}

inline Diagnostics diagnose(const Construction& c, const SolverState& st, double m_eps) {
  const Grid2D& g = st.grid;
  const auto u = velocity_of(st);
  const std::size_t n = g.size();
  Field2D dt(n, 0.0), dr(n, 0.0), dz(n, 0.0);
  double ubar2 = 0.0;
  for (int i = 1; i < g.nr; ++i)
    for (int j = 1; j < g.nz; ++j) {
      const std::size_t k = g.index(i, j);
      const double r = g.r(i), z = g.z(j);
      CylVec<double> ub{};
      if (c.in_support(r, z)) ub = c.approx_velocity(st.time, r, z);
      dt[k] = u.ut[k] - ub.theta;
      dr[k] = u.ur[k] - ub.r;
      dz[k] = u.uz[k] - ub.z;
      ubar2 += (ub.theta * ub.theta + ub.r * ub.r + ub.z * ub.z) * r;
    }
  const double w = 2.0 * std::numbers::pi * g.dr() * g.dz();
  const double i2dr = 1.0 / (2.0 * g.dr()), i2dz = 1.0 / (2.0 * g.dz());
  double l2 = 0.0, h1 = 0.0, gmax = 0.0, band = 0.0, inner = 0.0;
  for (int i = 1; i < g.nr; ++i)
    for (int j = 1; j < g.nz; ++j) {
      const std::size_t k = g.index(i, j);
      const double r = g.r(i);
      const std::size_t E = g.index(i + 1, j), W = g.index(i - 1, j), N = g.index(i, j + 1),
                        S = g.index(i, j - 1);
      l2 += (dt[k] * dt[k] + dr[k] * dr[k] + dz[k] * dz[k]) * r;
      auto part = [&](const Field2D& f) {
        return std::array<double, 2>{(f[E] - f[W]) * i2dr, (f[N] - f[S]) * i2dz};
      };
      const auto et = part(dt), er = part(dr), ez = part(dz);
      h1 += detail::grad_sq({dt[k], dr[k], dz[k]}, {et[0], er[0], ez[0]}, {et[1], er[1], ez[1]}, r) * r;
      const auto ut = part(u.ut), ur = part(u.ur), uz = part(u.uz);
      gmax = std::max(gmax, detail::grad_sq({u.ut[k], u.ur[k], u.uz[k]}, {ut[0], ur[0], uz[0]},
                                            {ut[1], ur[1], uz[1]}, r));
      const double mag = std::max(std::abs(st.Gamma[k]), std::abs(st.omega[k]) * r);
      inner = std::max(inner, mag);
      if (i <= 2 || j <= 2 || i >= g.nr - 2 || j >= g.nz - 2) band = std::max(band, mag);
    }
  const Params& p = c.params();
  Diagnostics d;
  d.t = st.time;
  d.err_l2 = std::sqrt(w * l2);
  d.err_h1 = std::sqrt(w * (l2 + h1));
  d.ubar_l2 = std::sqrt(w * ubar2);
  d.grad_linf = std::sqrt(gmax);
  d.energy = energy(st);
  d.swirl = swirl_moment(st);
  d.margin = m_eps > 0 ? d.grad_linf / (2.0 * m_eps * p.gradient_scale()) : 0.0;
  d.boundary_leak = inner > 0 ? band / inner : 0.0;
  return d;
}

/// Integrates to t_end, recording diagnostics at t = 0, every snapshot time
/// and t_end.  Aborts (without throwing) on the blowup proxy or nonfinite
/// values.
inline Trajectory run(const Construction& c, SolverState st, double t_end,
                      double cfl = kDefaultCfl, std::vector<double> snapshot_times = {},
                      const RunOptions& opt = {}) {
  const Params& p = c.params();
  if (t_end < st.time) throw std::invalid_argument("t_end precedes the current time");
  if (!opt.allow_past_tstar && t_end > p.t_star * (1.0 + 1e-12))
    throw std::invalid_argument("t_end exceeds t*; pass allow_past_tstar to run longer");
  snapshot_times.push_back(t_end);
  std::sort(snapshot_times.begin(), snapshot_times.end());
  snapshot_times.erase(std::unique(snapshot_times.begin(), snapshot_times.end()),
                       snapshot_times.end());

  Trajectory tr;
  {
    double m = approx_grad_linf(c, st.grid, st.time);
    for (int k = 1; k <= opt.m_eps_samples; ++k)
      m = std::max(m, approx_grad_linf(c, st.grid, st.time + (t_end - st.time) * k / opt.m_eps_samples));
    tr.m_eps = m / p.gradient_scale();
  }
  auto record = [&](const SolverState& s) {
    tr.diagnostics.push_back(diagnose(c, s, tr.m_eps));
    if (opt.store_states) tr.states.push_back(s);
    return tr.diagnostics.back();
  };
  auto blowup = [&](const Diagnostics& d) {
    return d.grad_linf > opt.blowup_factor * 2.0 * tr.m_eps * p.gradient_scale();
  };
  record(st);
  Integrator integ(st.grid);
  std::size_t next = 0;
  while (next < snapshot_times.size() && snapshot_times[next] <= st.time) ++next;
  try {
    while (next < snapshot_times.size()) {
      const double target = snapshot_times[next];
      double dt = integ.cfl_step(st, cfl);
      if (!std::isfinite(dt)) dt = target - st.time;
      if (st.time + dt >= target * (1.0 - 1e-14)) dt = target - st.time;
      integ.step(st, dt, cfl, opt.forcing);
      ++tr.steps;
      if (std::abs(st.time - target) <= 1e-14 * std::max(1.0, std::abs(target))) {
        st.time = target;
        const auto d = record(st);
        ++next;
        if (blowup(d)) {
          tr.aborted = true;
          tr.abort_reason = "blowup proxy: gradient exceeds the bootstrap threshold";
          break;
        }
      }
    }
  } catch (const NumericalAbort& e) {
    tr.aborted = true;
    tr.abort_reason = e.what();
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Checkpoints.

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_checkpoint(const SolverState& st, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "checkpoints assume little-endian");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  const char magic[4] = {'I', 'N', 'F', 'L'};
  out.write(magic, 4);
  const std::uint32_t hdr[3] = {kCheckpointVersion, static_cast<std::uint32_t>(st.grid.nr),
                                static_cast<std::uint32_t>(st.grid.nz)};
  out.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  const double geo[5] = {st.grid.r_min, st.grid.r_max, st.grid.z_min, st.grid.z_max, st.time};
  out.write(reinterpret_cast<const char*>(geo), sizeof(geo));
  for (const Field2D* f : {&st.Gamma, &st.omega, &st.psi})
    out.write(reinterpret_cast<const char*>(f->data()),
              static_cast<std::streamsize>(f->size() * sizeof(double)));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

inline SolverState read_checkpoint(const std::string& path, Mode mode = Mode::inviscid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "INFL", 4) != 0) throw std::runtime_error("not a checkpoint file");
  std::uint32_t hdr[3];
  in.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (hdr[0] != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version");
  double geo[5];
  in.read(reinterpret_cast<char*>(geo), sizeof(geo));
  SolverState st;
  st.grid = Grid2D{static_cast<int>(hdr[1]), static_cast<int>(hdr[2]), geo[0], geo[1], geo[2], geo[3]};
  st.time = geo[4];
  st.visc = mode == Mode::viscous ? 1 : 0;
  for (Field2D* f : {&st.Gamma, &st.omega, &st.psi}) {
    f->resize(st.grid.size());
    in.read(reinterpret_cast<char*>(f->data()), static_cast<std::streamsize>(f->size() * sizeof(double)));
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return st;
}

}  // namespace inflation

#pragma once

/// Brute-force cross-checks, each written independently of the code path it
/// checks: centred finite differences instead of jets, a direct Fourier sum
/// instead of FFTW, finite-differenced quadrature pressure instead of its
/// Taylor expansion.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "inflation/construction.hpp"
#include "inflation/geometry.hpp"
#include "inflation/norms.hpp"

namespace inflation {

struct OracleReport {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  int samples = 0;
};

inline OracleReport make_report(std::string name, double err, double tol, int n) {
  return {std::move(name), err, tol, err <= tol, n};
}

/// Cartesian value of a constructed vector field at x.
inline Vec3 cartesian_field(const Construction& c, FieldId id, double t, const Vec3& x) {
  const auto cyl = to_cylindrical(x);
  if (!c.in_support(cyl.r, cyl.z)) return {0.0, 0.0, 0.0};
  const auto v = c.vector_field_jet<0>(id, t, cyl.r, cyl.z);
  return cyl_vector_to_cartesian({v.theta.value(), v.r.value(), v.z.value()}, cyl.theta);
}

/// Uniform random points in the ring support (rho in [1/(2mu), 2/mu]),
/// with random azimuth.  Fixed seed for reproducibility.
inline std::vector<Vec3> support_points(const Construction& c, int count, std::uint64_t seed = 20240611) {
  std::mt19937_64 rng(seed);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double mu = c.params().mu;
  std::vector<Vec3> pts;
  pts.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double rho = (0.5 + 1.5 * unit()) / mu;
    const double phi = 2.0 * std::numbers::pi * unit();
    const double th = 2.0 * std::numbers::pi * unit();
    pts.push_back(to_cartesian({th, c.ring_radius() + rho * std::cos(phi), rho * std::sin(phi)}));
  }
  return pts;
}

/// Centred-difference Cartesian divergence, max |div| / (A mu).
inline OracleReport fd_divergence(const Construction& c, FieldId id, double t,
                                  const std::vector<Vec3>& points, double h, double tol = INFINITY) {
  if (id == FieldId::pbar) throw std::invalid_argument("pbar has no divergence");
  double worst = 0.0;
  for (const auto& x : points) {
    if (std::hypot(x[0], x[1]) <= h) throw std::invalid_argument("points must satisfy r > h");
    double div = 0.0;
    for (int a = 0; a < 3; ++a) {
      Vec3 xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      div += (cartesian_field(c, id, t, xp)[a] - cartesian_field(c, id, t, xm)[a]) / (2.0 * h);
    }
    worst = std::max(worst, std::abs(div));
  }
  const double scale = c.amplitude() * c.params().mu;
  return make_report("fd_divergence:" + to_string(id), worst / scale, tol,
                     static_cast<int>(points.size()));
}

/// Divergence from exact (r, z) derivatives, max |div| / (A mu).
inline OracleReport analytic_divergence(const Construction& c, FieldId id, double t,
                                        const std::vector<Vec3>& points, double tol = 1e-12) {
  double worst = 0.0;
  for (const auto& x : points) {
    const auto cyl = to_cylindrical(x);
    const auto v = c.vector_field_jet<1>(id, t, cyl.r, cyl.z);
    const double div = v.r.derivative({1, 0}) + v.r.value() / cyl.r + v.z.derivative({0, 1});
    worst = std::max(worst, std::abs(div));
  }
  const double scale = c.amplitude() * c.params().mu;
  return make_report("analytic_divergence:" + to_string(id), worst / scale, tol,
                     static_cast<int>(points.size()));
}

/// Direct O(n^6) discrete Fourier sum with the normalisation of hs_norm.
inline NormReport direct_hs_norm(const Grid3D& g, double s) {
  if (g.n > 32) throw std::invalid_argument("direct sum limited to n <= 32");
  if (!(s > -1.5)) throw std::invalid_argument("Sobolev order must exceed -3/2");
  const int n = g.n;
  std::vector<std::complex<double>> tw(n);
  for (int k = 0; k < n; ++k) tw[k] = std::polar(1.0, -2.0 * std::numbers::pi * k / n);
  const double h = g.spacing();
  const double norm = h * h * h / (static_cast<double>(n) * n * n);
  const double unit = 2.0 * std::numbers::pi / g.L;
  auto wrap = [n](int i) { return i < n / 2 ? i : i - n; };
  double total = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int cidx = 0; cidx < n; ++cidx) {
        const int ma = wrap(a), mb = wrap(b), mc = wrap(cidx);
        const double m2 = static_cast<double>(ma * ma + mb * mb + mc * mc);
        double mult;
        if (m2 == 0.0)
          mult = s == 0.0 ? 1.0 : 0.0;
        else
          mult = std::pow(unit * unit * m2, s);
        if (mult == 0.0) continue;
        double power = 0.0;
        for (const auto& comp : g.components) {
          std::complex<double> F = 0.0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              for (int k = 0; k < n; ++k) {
                const double v = comp[g.index(i, j, k)];
                if (v == 0.0) continue;
                F += v * tw[(a * i + b * j + cidx * k) % n];
              }
          power += std::norm(F);
        }
        total += mult * norm * power;
      }
  NormReport r;
  r.value = std::sqrt(total);
  r.method = NormMethod::direct_oracle;
  r.resolution = n;
  return r;
}

/// A point of the (r, z) half plane.
struct RZ {
  double r;
  double z;
};

inline std::vector<RZ> support_points_rz(const Construction& c, int count, std::uint64_t seed = 7) {
  std::vector<RZ> out;
  for (const auto& x : support_points(c, count, seed)) {
    const auto cyl = to_cylindrical(x);
    out.push_back({cyl.r, cyl.z});
  }
  return out;
}

namespace detail {

/// d pbar / d rho by a sixth-order centred difference of the quadrature
/// pressure.
inline double pressure_slope(const Construction& c, double rho) {
  const double h = 1e-3 / c.params().mu;
  if (rho < 3.0 * h) return 0.0;
  auto P = [&](double x) { return c.pressure(x); };
  return (P(rho + 3 * h) - 9 * P(rho + 2 * h) + 45 * P(rho + h) - 45 * P(rho - h) +
          9 * P(rho - 2 * h) - P(rho - 3 * h)) /
         (60.0 * h);
}

}  // namespace detail

/// max over points of |d_t ubar_theta + u0 . grad ubar_theta| relative to the
/// largest magnitude of its two terms over the sample.
inline OracleReport transport_residual(const Construction& c, double t, const std::vector<RZ>& pts,
                                       double tol = 1e-10) {
  const double A = c.amplitude(), r0 = c.ring_radius(), mu = c.params().mu;
  double worst = 0.0, scale_max = 0.0;
  for (const auto& p : pts) {
    const auto R = c.ring<1>(t, p.r, p.z);
    if (!R.active) continue;
    const double rho = std::hypot(p.r - r0, p.z);
    const double phase = std::atan2(p.z, p.r - r0) - t * A / rho;
    const double dt_u = -A * c.g().eval(mu * rho) * std::cos(phase) * A / rho;
    const double adv = R.u0_r.value() * R.ubar_theta.derivative({1, 0}) +
                       R.u0_z.value() * R.ubar_theta.derivative({0, 1});
    worst = std::max(worst, std::abs(dt_u + adv));
    scale_max = std::max(scale_max, std::abs(dt_u) + std::abs(adv));
  }
  return make_report("transport_residual", scale_max > 0 ? worst / scale_max : worst, tol,
                     static_cast<int>(pts.size()));
}

/// Cylindrical momentum residual d_t ubar + ubar . grad ubar + grad pbar
/// [- Laplacian ubar] - E, relative to the largest sum of term magnitudes
/// over the sample.
inline OracleReport momentum_residual(const Construction& c, double t, const std::vector<RZ>& pts,
                                      double tol = 1e-8) {
  const double A = c.amplitude(), r0 = c.ring_radius(), mu = c.params().mu;
  const bool viscous = c.params().mode == Mode::viscous;
  double worst = 0.0, scale_max = 0.0;
  for (const auto& p : pts) {
    const double r = p.r, z = p.z;
    const double rho = std::hypot(r - r0, z);
    const double dp = detail::pressure_slope(c, rho);
    const double px = rho > 0 ? dp * (r - r0) / rho : 0.0, pz = rho > 0 ? dp * z / rho : 0.0;
    const auto R = c.ring<2>(t, r, z);
    const auto E = c.error_field(t, r, z);
    if (!R.active) {
      worst = std::max({worst, std::abs(px), std::abs(pz), std::abs(E.theta), std::abs(E.r),
                        std::abs(E.z)});
      continue;
    }
    const auto uz_j = R.u0_z + R.uc;
    auto d = [](const Jet<2, 2>& j, int a, int b) { return j.derivative({a, b}); };
    const double ut = R.ubar_theta.value(), ur = R.u0_r.value(), uz = uz_j.value();
    const double phase = std::atan2(z, r - r0) - t * A / rho;
    const double dt_ut = -A * c.g().eval(mu * rho) * std::cos(phase) * A / rho;

    std::array<double, 3> terms_t{dt_ut, ur * d(R.ubar_theta, 1, 0) + uz * d(R.ubar_theta, 0, 1),
                                  ur * ut / r};
    std::array<double, 3> terms_r{ur * d(R.u0_r, 1, 0) + uz * d(R.u0_r, 0, 1), -ut * ut / r, px};
    std::array<double, 3> terms_z{ur * d(uz_j, 1, 0) + uz * d(uz_j, 0, 1), pz, 0.0};
    double lap_t = 0, lap_r = 0, lap_z = 0;
    if (viscous) {
      auto lap = [&](const Jet<2, 2>& j) {
        return d(j, 2, 0) + d(j, 1, 0) / r + d(j, 0, 2);
      };
      lap_t = lap(R.ubar_theta) - ut / (r * r);
      lap_r = lap(R.u0_r) - ur / (r * r);
      lap_z = lap(uz_j);
    }
    auto resid = [&](const std::array<double, 3>& terms, double lap, double e) {
      double sum = -lap - e, mag = std::abs(lap) + std::abs(e);
      for (double x : terms) {
        sum += x;
        mag += std::abs(x);
      }
      scale_max = std::max(scale_max, mag);
      return std::abs(sum);
    };
    worst = std::max({worst, resid(terms_t, lap_t, E.theta), resid(terms_r, lap_r, E.r),
                      resid(terms_z, lap_z, E.z)});
  }
  return make_report(std::string("momentum_residual:") + to_string(c.params().mode),
                     scale_max > 0 ? worst / scale_max : worst, tol, static_cast<int>(pts.size()));
}

/// ||d_rho ubar_theta(t)||_{L^2} and the norm of its phase-growth part
/// A g(mu rho) cos(phase) t A / rho^2, by axisymmetric quadrature.
struct SwirlSlopeNorms {
  double full = 0.0;
  double growth = 0.0;
};

inline SwirlSlopeNorms swirl_radial_derivative_norms(const Construction& c, double t) {
  const double A = c.amplitude(), r0 = c.ring_radius(), mu = c.params().mu;
  auto full = [&](double r, double z) {
    const auto R = c.ring<1>(t, r, z);
    if (!R.active) return 0.0;
    const double rho = std::hypot(r - r0, z);
    const double v = (r - r0) / rho * R.ubar_theta.derivative({1, 0}) +
                     z / rho * R.ubar_theta.derivative({0, 1});
    return v * v;
  };
  auto growth = [&](double r, double z) {
    const double rho = std::hypot(r - r0, z);
    const double gv = c.g().eval(mu * rho);
    if (gv == 0.0) return 0.0;
    const double phase = std::atan2(z, r - r0) - t * A / rho;
    const double v = A * gv * std::cos(phase) * t * A / (rho * rho);
    return v * v;
  };
  QuadratureOptions opt;
  opt.rel_tol = 1e-9;
  return {std::sqrt(integrate_ring(c, full, false, opt).value),
          std::sqrt(integrate_ring(c, growth, false, opt).value)};
}

struct InflationBoundReport {
  OracleReport report;
  std::vector<double> mus;
  std::vector<double> norm0;        // ||d_rho ubar_theta(0)||
  std::vector<double> norm_tstar;   // ||d_rho ubar_theta(t*)||
  std::vector<double> constant;     // growth(t*) / bracket(t*)
  std::vector<double> constant0;    // norm0 / (eps^2 mu^{1-s})
  std::vector<double> t_slope;      // late-time d/dt ||d_rho ubar_theta|| / (eps^2 mu^-s)
  std::vector<double> linearity;    // (n(2T) - n(0)) / (n(T) - n(0)), T = late time
  double fitted_constant = 0.0;
  double constant_spread = 0.0;     // max |c_mu / c - 1|
};

/// Checks ||d_rho ubar_theta(t*)|| >= c eps^2 mu^-s (t* eps^2 mu^{3-s} nu^{1/2})
/// - ||d_rho ubar_theta(0)|| for one constant c across the mu sweep, the
/// constant being stable within `spread_tol`.  `late` sets the large-time
/// probes T = late * t* used for the slope and linearity data.
inline InflationBoundReport inflation_lower_bound_check(const Params& base,
                                                        std::vector<double> mus = {16, 32, 64},
                                                        double spread_tol = 0.2,
                                                        double late = 10.0) {
  InflationBoundReport out;
  out.mus = mus;
  for (double mu : mus) {
    Params p = make_params(base.s, base.eps, mu, base.mode, base.n_override, base.ring_scale);
    Construction c(p);
    const double ts = p.t_star;
    const auto n0 = swirl_radial_derivative_norms(c, 0.0);
    const auto n1 = swirl_radial_derivative_norms(c, ts);
    const double e2 = p.eps * p.eps;
    const double bracket = e2 * std::pow(mu, -p.s) * ts * e2 * std::pow(mu, 3.0 - p.s) * std::sqrt(p.nu);
    out.norm0.push_back(n0.full);
    out.norm_tstar.push_back(n1.full);
    out.constant.push_back(n1.growth / bracket);
    out.constant0.push_back(n0.full / (e2 * std::pow(mu, 1.0 - p.s)));
    const auto nT = swirl_radial_derivative_norms(c, late * ts);
    const auto n2T = swirl_radial_derivative_norms(c, 2.0 * late * ts);
    out.t_slope.push_back((n2T.full - nT.full) / (late * ts) / (e2 * std::pow(mu, -p.s)));
    out.linearity.push_back((n2T.full - n0.full) / (nT.full - n0.full));
  }
  double csum = 0.0;
  for (double v : out.constant) csum += v;
  out.fitted_constant = csum / out.constant.size();
  bool bound_holds = true;
  double cmin = *std::min_element(out.constant.begin(), out.constant.end());
  for (std::size_t k = 0; k < mus.size(); ++k) {
    out.constant_spread = std::max(out.constant_spread, std::abs(out.constant[k] / out.fitted_constant - 1.0));
    Params p = make_params(base.s, base.eps, mus[k], base.mode, base.n_override, base.ring_scale);
    const double e2 = p.eps * p.eps;
    const double bracket = e2 * std::pow(mus[k], -p.s) * p.t_star * e2 *
                           std::pow(mus[k], 3.0 - p.s) * std::sqrt(p.nu);
    if (out.norm_tstar[k] < cmin * bracket - out.norm0[k]) bound_holds = false;
  }
  out.report = make_report("inflation_lower_bound", bound_holds ? out.constant_spread : INFINITY,
                           spread_tol, static_cast<int>(mus.size()));
  return out;
}

}  // namespace inflation

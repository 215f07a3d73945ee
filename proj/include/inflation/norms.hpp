#pragma once

/// Sobolev-type norms of the constructed fields.
///
/// Spectral path: fields are sampled on a periodic cube and transformed with
/// FFTW.  Since every wavenumber is k = (2 pi / L) m with integer m, the power
/// spectrum is binned exactly by |m|^2, and any multiplier of |k| becomes a
/// one-dimensional sum over shells.
///
/// Quadrature path: axisymmetric integrals 2 pi int int F r dr dz are taken in
/// the polar chart of the ring cross-section, adaptive Gauss-Kronrod in rho and
/// periodic trapezoid in phi.  Full Cartesian derivative tensors come from
/// substituting (r, z) jets into Cartesian jets, so the frame-curvature terms
/// are included automatically.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "inflation/construction.hpp"
#include "inflation/geometry.hpp"
#include "inflation/jet.hpp"

namespace inflation {

enum class NormMethod { spectral, quadrature, direct_oracle };

inline std::string to_string(NormMethod m) {
  switch (m) {
    case NormMethod::spectral:
      return "spectral";
    case NormMethod::quadrature:
      return "quadrature";
    case NormMethod::direct_oracle:
      return "direct-oracle";
  }
  return "?";
}

struct NormReport {
  double value = 0.0;
  NormMethod method = NormMethod::spectral;
  int resolution = 0;  // points per axis, or quadrature nodes in phi
  double truncation_error = 0.0;  // estimate, relative to value
};

/// Samples of a field on the periodic cube [origin, origin + L)^3.
/// Component c, point (i, j, k) lives at components[c][(i * n + j) * n + k].
struct Grid3D {
  int n = 0;
  double L = 0.0;
  Vec3 origin{};
  std::vector<std::vector<double>> components;

  double spacing() const { return L / n; }
  std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n + j) * n + k;
  }
  Vec3 point(int i, int j, int k) const {
    const double h = spacing();
    return {origin[0] + i * h, origin[1] + j * h, origin[2] + k * h};
  }
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Largest boundary sample relative to the largest sample overall.
inline double boundary_ratio(const Grid3D& g) {
  double bmax = 0.0, imax = 0.0;
  const int n = g.n;
  for (const auto& comp : g.components) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double v = std::abs(comp[g.index(i, j, k)]);
          imax = std::max(imax, v);
          if (i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1)
            bmax = std::max(bmax, v);
        }
  }
  return imax > 0.0 ? bmax / imax : 0.0;
}

inline constexpr double kBoundaryDecayTol = 1e-12;

inline void require_boundary_decay(const Grid3D& g) {
  if (boundary_ratio(g) > kBoundaryDecayTol)
    throw std::runtime_error("field does not decay on the box boundary; enlarge box_factor");
}

/// Side of the sampling box: box_factor times the cross-section diameter 4/mu.
inline double box_side(const Params& p, double box_factor) { return box_factor * 4.0 / p.mu; }

/// Samples a constructed field on a cube centred on the ring.  Vector fields
/// give three Cartesian components, pbar gives one.
inline Grid3D sample_grid3(const Construction& c, FieldId id, double t, int n,
                           double box_factor = 4.0) {
  if (!is_power_of_two(n)) throw std::invalid_argument("grid size must be a power of two");
  if (!(box_factor >= 2.0)) throw std::invalid_argument("box_factor must be >= 2");
  const Params& p = c.params();
  Grid3D g;
  g.n = n;
  g.L = box_side(p, box_factor);
  g.origin = {-g.L / 2, -g.L / 2, -g.L / 2};
  const int ncomp = id == FieldId::pbar ? 1 : 3;
  g.components.assign(ncomp, std::vector<double>(g.size(), 0.0));

  // The torus must fit strictly inside the open box.
  const double reach = c.ring_radius() + c.support_radius();
  if (!(reach < g.L / 2) || !(c.support_radius() < g.L / 2))
    throw std::runtime_error("box too small for the ring support; enlarge box_factor");

  const double h = g.spacing();
  const double r0 = c.ring_radius();
  const double rs = c.support_radius();
  for (int i = 0; i < n; ++i) {
    const double x = g.origin[0] + i * h;
    for (int j = 0; j < n; ++j) {
      const double y = g.origin[1] + j * h;
      const double r = std::hypot(x, y);
      if (std::abs(r - r0) >= rs) continue;
      const double ct = r > 0 ? x / r : 1.0, st = r > 0 ? y / r : 0.0;
      for (int k = 0; k < n; ++k) {
        const double z = g.origin[2] + k * h;
        if (std::abs(z) >= rs) continue;
        const std::size_t idx = g.index(i, j, k);
        if (id == FieldId::pbar) {
          g.components[0][idx] = c.pressure(std::hypot(r - r0, z));
          continue;
        }
        const auto v = c.vector_field_jet<0>(id, t, r, z);
        const double vt = v.theta.value(), vr = v.r.value(), vz = v.z.value();
        g.components[0][idx] = vr * ct - vt * st;
        g.components[1][idx] = vr * st + vt * ct;
        g.components[2][idx] = vz;
      }
    }
  }
  require_boundary_decay(g);
  return g;
}

inline Grid3D sample_grid3(const Params& p, FieldId id, double t, int n, double box_factor = 4.0) {
  return sample_grid3(Construction(p), id, t, n, box_factor);
}

/// Unitary-normalised power |f^(k)|^2 (k-space cell volume included) summed
/// over components and binned by the integer |m|^2, k = 2 pi m / L.
struct ShellSpectrum {
  int n = 0;
  double L = 0.0;
  std::vector<double> power;  // power[m2]

  double wavenumber_unit() const { return 2.0 * std::numbers::pi / L; }
};

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

inline ShellSpectrum power_spectrum(const Grid3D& g) {
  const int n = g.n;
  const int nzc = n / 2 + 1;
  ShellSpectrum sp;
  sp.n = n;
  sp.L = g.L;
  sp.power.assign(3 * (n / 2) * (n / 2) + 1, 0.0);

  const std::size_t nreal = g.size();
  const std::size_t ncplx = static_cast<std::size_t>(n) * n * nzc;
  double* in = fftw_alloc_real(nreal);
  fftw_complex* out = fftw_alloc_complex(ncplx);
  fftw_plan plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_3d(n, n, n, in, out, FFTW_ESTIMATE);
  }
  const double h = g.spacing();
  // ||f||^2 = (h^3 / n^3) sum_m |F_m|^2 for the unnormalised DFT F.
  const double norm = h * h * h / (static_cast<double>(n) * n * n);
  auto wrap = [n](int i) { return i < n / 2 ? i : i - n; };
  for (const auto& comp : g.components) {
    std::copy(comp.begin(), comp.end(), in);
    fftw_execute(plan);
    for (int i = 0; i < n; ++i) {
      const int mi = wrap(i);
      for (int j = 0; j < n; ++j) {
        const int mj = wrap(j);
        const std::size_t row = (static_cast<std::size_t>(i) * n + j) * nzc;
        for (int k = 0; k < nzc; ++k) {
          const int mk = k == n / 2 ? -n / 2 : k;
          const double w = (k == 0 || k == n / 2) ? 1.0 : 2.0;
          const double re = out[row + k][0], im = out[row + k][1];
          sp.power[mi * mi + mj * mj + mk * mk] += w * norm * (re * re + im * im);
        }
      }
    }
  }
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return sp;
}

namespace detail {

template <class Multiplier>
NormReport shell_norm(const ShellSpectrum& sp, Multiplier mult) {
  double total = 0.0, tail = 0.0;
  const double unit = sp.wavenumber_unit();
  const int cut = (sp.n / 4) * (sp.n / 4);
  for (std::size_t m2 = 0; m2 < sp.power.size(); ++m2) {
    if (sp.power[m2] == 0.0) continue;
    const double term = mult(unit * unit * static_cast<double>(m2), m2) * sp.power[m2];
    total += term;
    if (static_cast<int>(m2) > cut) tail += term;
  }
  NormReport r;
  r.value = std::sqrt(total);
  r.method = NormMethod::spectral;
  r.resolution = sp.n;
  r.truncation_error = total > 0 ? std::sqrt(tail / total) : 0.0;
  return r;
}

inline void check_order(double s) {
  if (!(s > -1.5)) throw std::invalid_argument("Sobolev order must exceed -3/2");
}

}  // namespace detail

/// Homogeneous norm (sum |k|^{2s} |f^_k|^2)^{1/2}.  The k = 0 mode is dropped
/// for s < 0 and weighs 0 for s > 0.
inline NormReport hs_norm(const ShellSpectrum& sp, double s) {
  detail::check_order(s);
  return detail::shell_norm(sp, [s](double k2, std::size_t m2) {
    if (m2 == 0) return s == 0.0 ? 1.0 : 0.0;
    return std::pow(k2, s);
  });
}

/// Inhomogeneous norm (sum (1 + |k|^2)^s |f^_k|^2)^{1/2}.
inline NormReport sobolev_norm(const ShellSpectrum& sp, double s) {
  detail::check_order(s);
  return detail::shell_norm(sp, [s](double k2, std::size_t) { return std::pow(1.0 + k2, s); });
}

inline NormReport hs_norm(const Grid3D& g, double s) {
  detail::check_order(s);
  require_boundary_decay(g);
  return hs_norm(power_spectrum(g), s);
}

inline NormReport sobolev_norm(const Grid3D& g, double s) {
  detail::check_order(s);
  require_boundary_decay(g);
  return sobolev_norm(power_spectrum(g), s);
}

// ---------------------------------------------------------------------------
// Axisymmetric quadrature path.

/// Squared Frobenius norm of the k-th Cartesian derivative tensor of an
/// axisymmetric field at (r, 0, z), from its (r, z) jets of order K >= k.
template <int K>
double cartesian_derivative_sq(const std::vector<Jet<2, K>>& comps, bool vector_field, double r,
                               double z, int k) {
  using J3 = Jet<3, K>;
  const J3 X = J3::variable(0, r), Y = J3::variable(1, 0.0), Z = J3::variable(2, z);
  const J3 R = sqrt(X * X + Y * Y);
  std::vector<J3> cart;
  if (vector_field) {
    const J3 ut = substitute(comps[0], R, Z);
    const J3 ur = substitute(comps[1], R, Z);
    const J3 uz = substitute(comps[2], R, Z);
    const J3 c = X / R, s = Y / R;
    cart = {ur * c - ut * s, ur * s + ut * c, uz};
  } else {
    cart = {substitute(comps[0], R, Z)};
  }
  double sum = 0.0;
  for (const auto& u : cart) {
    for (int a = 0; a <= k; ++a)
      for (int b = 0; a + b <= k; ++b) {
        const int c3 = k - a - b;
        const double cf = u.coeff({a, b, c3});
        if (cf == 0.0) continue;
        const double alpha_fact =
            detail::factorial(a) * detail::factorial(b) * detail::factorial(c3);
        sum += detail::factorial(k) * alpha_fact * cf * cf;
      }
  }
  return sum;
}

/// |nabla^k F|^2 at (r, z) for a constructed field.
template <int K>
double field_derivative_sq(const Construction& c, FieldId id, double t, double r, double z, int k) {
  if (id == FieldId::pbar) {
    return cartesian_derivative_sq<K>({c.pressure_jet<K>(r, z)}, false, r, z, k);
  }
  const auto v = c.vector_field_jet<K>(id, t, r, z);
  return cartesian_derivative_sq<K>({v.theta, v.r, v.z}, true, r, z, k);
}

inline double field_derivative_sq(const Construction& c, FieldId id, double t, double r, double z,
                                  int k) {
  switch (k) {
    case 0:
      return field_derivative_sq<0>(c, id, t, r, z, 0);
    case 1:
      return field_derivative_sq<1>(c, id, t, r, z, 1);
    case 2:
      return field_derivative_sq<2>(c, id, t, r, z, 2);
    case 3:
      return field_derivative_sq<3>(c, id, t, r, z, 3);
  }
  throw std::invalid_argument("derivative order must be at most 3");
}

struct QuadratureOptions {
  double rel_tol = 1e-10;
  /// Absolute floor on the total error.  Lets integrals whose true value is
  /// zero (rounding noise only) terminate.
  double abs_tol = 0.0;
  int max_depth = 18;
  int phi_min = 64;
  int phi_max = 2048;
  double phi_rel_tol = 1e-11;
};

namespace detail {

/// Adaptive Gauss-Kronrod (7, 15) bisection.  A panel is accepted once its
/// error estimate is within rel_tol of its own value or within its share
/// `budget` of the global allowance.
template <class F>
double adaptive_gk15(F& f, double a, double b, double rel_tol, double budget, int depth, double& err) {
  double e = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &e);
  if (depth > 0 && e > rel_tol * std::abs(v) && e > budget) {
    const double mid = 0.5 * (a + b);
    return adaptive_gk15(f, a, mid, rel_tol, budget / 2, depth - 1, err) +
           adaptive_gk15(f, mid, b, rel_tol, budget / 2, depth - 1, err);
  }
  err += e;
  return v;
}

}  // namespace detail

/// 2 pi int int F(r, z) r dr dz over the ring support, in the polar chart
/// (rho, phi) around the core.  `include_core` integrates from rho = 0, for
/// fields not vanishing at the core (the pressure); otherwise the inner
/// support radius 1/(2 mu) is the lower limit.
template <class F>
NormReport integrate_ring(const Construction& c, F&& integrand, bool include_core,
                          const QuadratureOptions& opt = {}) {
  const double mu = c.params().mu;
  const double r0 = c.ring_radius();
  const double two_pi = 2.0 * std::numbers::pi;
  int phi_used = 0;
  double phi_err = 0.0;
  auto trapezoid = [&](double rho, int m) {
    double acc = 0.0;
    const double dphi = two_pi / m;
    for (int i = 0; i < m; ++i) {
      const double phi = i * dphi;
      const double r = r0 + rho * std::cos(phi), z = rho * std::sin(phi);
      acc += integrand(r, z) * r;
    }
    return acc * dphi;
  };
  // Per-slice share of the absolute floor: the slice is weighted by
  // 2 pi rho over a rho range of length 2 / mu.
  auto ring_slice = [&](double rho) {
    if (rho <= 0.0) return 0.0;
    const double slice_floor = opt.abs_tol / (two_pi * rho * (2.0 / mu));
    int m = opt.phi_min;
    double prev = trapezoid(rho, m);
    while (m < opt.phi_max) {
      m *= 2;
      const double next = trapezoid(rho, m);
      const double diff = std::abs(next - prev);
      prev = next;
      if (diff <= opt.phi_rel_tol * std::abs(next) || diff <= slice_floor || next == 0.0) {
        phi_err = std::max(phi_err, std::abs(next) > 0 ? diff / std::abs(next) : 0.0);
        break;
      }
    }
    phi_used = std::max(phi_used, m);
    return prev * rho;
  };
  const std::vector<double> breaks = include_core
                                         ? std::vector<double>{0.0, 0.5, 1.0, 1.25, 1.5, 2.0}
                                         : std::vector<double>{0.5, 1.0, 1.25, 1.5, 2.0};
  // Global allowance: rel_tol of a first coarse estimate, or the floor.
  double coarse = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    coarse += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        ring_slice, breaks[i] / mu, breaks[i + 1] / mu, 0, 0.0);
  const double allowance = std::max(opt.rel_tol * std::abs(coarse), opt.abs_tol / two_pi);
  const double panel_share = allowance / static_cast<double>(breaks.size() - 1);
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    total += detail::adaptive_gk15(ring_slice, breaks[i] / mu, breaks[i + 1] / mu, opt.rel_tol,
                                   panel_share, opt.max_depth, err);
  NormReport rep;
  rep.value = two_pi * total;
  rep.method = NormMethod::quadrature;
  rep.resolution = phi_used;
  rep.truncation_error =
      (rep.value != 0 ? two_pi * err / std::abs(rep.value) : 0.0) + phi_err;
  return rep;
}

enum class Integrability { one, two, four, infinity };

inline double exponent_of(Integrability q) {
  switch (q) {
    case Integrability::one:
      return 1.0;
    case Integrability::two:
      return 2.0;
    case Integrability::four:
      return 4.0;
    case Integrability::infinity:
      return INFINITY;
  }
  return 0.0;
}

inline Integrability integrability_from(double q) {
  if (q == 1.0) return Integrability::one;
  if (q == 2.0) return Integrability::two;
  if (q == 4.0) return Integrability::four;
  if (std::isinf(q) && q > 0) return Integrability::infinity;
  throw std::invalid_argument("integrability must be 1, 2, 4 or infinity");
}

/// sup over the ring support of |nabla^k F|, by dense (rho, phi) sampling
/// refined until two successive refinements agree within `rel_tol`.
inline NormReport sup_norm_axisym(const Construction& c, FieldId id, double t, int k,
                                  double rel_tol = 5e-3, int start = 64, int max_m = 1024) {
  const double mu = c.params().mu;
  const double r0 = c.ring_radius();
  const double lo = id == FieldId::pbar ? 0.0 : 0.5 / mu, hi = 2.0 / mu;
  auto sample = [&](int m) {
    double best = 0.0;
    for (int i = 0; i <= m; ++i) {
      const double rho = lo + (hi - lo) * i / m;
      for (int j = 0; j < m; ++j) {
        const double phi = 2.0 * std::numbers::pi * j / m;
        const double v = field_derivative_sq(c, id, t, r0 + rho * std::cos(phi),
                                             rho * std::sin(phi), k);
        best = std::max(best, v);
      }
    }
    return std::sqrt(best);
  };
  int m = start;
  double prev = sample(m);
  double next = prev;
  double change = 1.0;
  for (int pass = 0; m < max_m; ++pass) {
    m *= 2;
    next = sample(m);
    change = next > 0 ? std::abs(next - prev) / next : 0.0;
    prev = next;
    if (change <= rel_tol && pass >= 1) break;
  }
  NormReport rep;
  rep.value = next;
  rep.method = NormMethod::quadrature;
  rep.resolution = m;
  rep.truncation_error = change;
  return rep;
}

/// ||nabla^k F||_{L^q}, the top-order seminorm.
inline NormReport gradient_norm_axisym(const Construction& c, FieldId id, double t, int k,
                                       Integrability q, const QuadratureOptions& opt = {}) {
  if (k < 0 || k > 3) throw std::invalid_argument("derivative order must be in [0, 3]");
  if (q == Integrability::infinity) return sup_norm_axisym(c, id, t, k);
  const double qe = exponent_of(q);
  auto integrand = [&](double r, double z) {
    const double sq = field_derivative_sq(c, id, t, r, z, k);
    return qe == 2.0 ? sq : std::pow(sq, qe / 2.0);
  };
  NormReport rep = integrate_ring(c, integrand, id == FieldId::pbar && k == 0, opt);
  rep.value = std::pow(std::max(rep.value, 0.0), 1.0 / qe);
  rep.truncation_error /= qe;
  return rep;
}

/// W^{k,q} norm as the sum of the seminorms ||nabla^j F||_{L^q}, j = 0..k.
inline NormReport wkp_norm_axisym(const Construction& c, FieldId id, double t, int k,
                                  Integrability q, const QuadratureOptions& opt = {}) {
  if (k < 0 || k > 3) throw std::invalid_argument("derivative order must be in [0, 3]");
  NormReport total;
  total.method = NormMethod::quadrature;
  for (int j = 0; j <= k; ++j) {
    const auto part = gradient_norm_axisym(c, id, t, j, q, opt);
    total.value += part.value;
    total.resolution = std::max(total.resolution, part.resolution);
    total.truncation_error = std::max(total.truncation_error, part.truncation_error);
  }
  return total;
}

inline NormReport wkp_norm_axisym(const Params& p, FieldId id, double t, int k, double q) {
  return wkp_norm_axisym(Construction(p), id, t, k, integrability_from(q));
}

}  // namespace inflation

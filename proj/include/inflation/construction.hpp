#pragma once

/// Closed-form initial data, approximate solution, pressure and error field
/// of the vortex-ring norm-inflation construction.
///
/// All fields are axisymmetric and are evaluated as bivariate Taylor jets in
/// (r, z) so that every partial derivative up to the requested order is exact
/// up to rounding.  Conventions (A = eps^2 mu^(1-s) nu^(1/2), r0 = ring radius):
///
///   u0_theta = A g(mu rho) sin phi
///   u0_r     = -A f'(mu rho) sin phi
///   u0_z     =  A f'(mu rho) cos phi
///   u_c      = (A / mu) f(mu rho) / r
///   ubar_theta(t) = A g(mu rho) sin(phi - t A / rho)
///   pbar(rho) = -int_rho^inf A^2 f'(mu s)^2 / s ds
///
/// with (rho, phi) the polar chart centred on (r0, 0).

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "inflation/geometry.hpp"
#include "inflation/jet.hpp"
#include "inflation/profiles.hpp"

namespace inflation {

enum class Mode { inviscid, viscous };

inline std::string to_string(Mode m) { return m == Mode::inviscid ? "euler" : "ns"; }

/// Default ring-radius multiplier.  The core sits at r0 = ring_scale / nu so
/// that the support (radius 2/mu around the core) stays clear of the axis at
/// moderate mu, where nu^-1 alone is only about 1.1/mu.
inline constexpr double kDefaultRingScale = 4.0;

struct Params {
  double s = 0.5;
  double eps = 0.5;
  double mu = 64.0;
  double b = 0.02;
  double nu = 1.0;
  double N = 100.0;
  double t_star = 0.0;
  Mode mode = Mode::inviscid;
  std::optional<double> n_override;
  double ring_scale = kDefaultRingScale;
  bool swirl_free = false;

  double amplitude() const { return eps * eps * std::pow(mu, 1.0 - s) * std::sqrt(nu); }
  double ring_radius() const { return ring_scale / nu; }
  /// mu^(2-s) nu^(1/2): the gradient scale of the data.
  double gradient_scale() const { return std::pow(mu, 2.0 - s) * std::sqrt(nu); }
  /// mu^-1 nu: the anisotropy smallness factor.
  double smallness() const { return nu / mu; }
  /// Rotation rate A mu of the ring core; 1 / (A mu) is the natural time unit.
  double turnover_rate() const { return amplitude() * mu; }
};

inline Params make_params(double s, double eps, double mu, Mode mode,
                          std::optional<double> n_override = std::nullopt,
                          double ring_scale = kDefaultRingScale) {
  const double s_max = mode == Mode::inviscid ? 2.5 : 0.5;
  if (!(s > 0.0 && s < s_max))
    throw std::invalid_argument("s must lie in (0, " + std::to_string(s_max) + ") for mode " +
                                to_string(mode));
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!(mu >= 1.0)) throw std::invalid_argument("mu must be >= 1");
  if (n_override && !(*n_override > 0.0))
    throw std::invalid_argument("N override must be positive");
  if (!(ring_scale > 0.0)) throw std::invalid_argument("ring scale must be positive");

  Params p;
  p.s = s;
  p.eps = eps;
  p.mu = mu;
  p.mode = mode;
  p.n_override = n_override;
  p.ring_scale = ring_scale;
  p.b = (s_max - s) / 100.0;
  p.nu = std::pow(mu, 1.0 - p.b);
  p.N = n_override ? *n_override : std::max(10.0 / s, 100.0);
  p.t_star = std::pow(eps, -p.N - 2.0) * std::pow(mu, -2.0 + s) / std::sqrt(p.nu);
  return p;
}

enum class FieldId { u0, u_c, ubar, E, pbar };

inline std::string to_string(FieldId id) {
  switch (id) {
    case FieldId::u0:
      return "u0";
    case FieldId::u_c:
      return "u_c";
    case FieldId::ubar:
      return "ubar";
    case FieldId::E:
      return "E";
    case FieldId::pbar:
      return "pbar";
  }
  return "?";
}

inline constexpr int kMaxFieldDerivative = 4;

namespace detail {

template <int N>
Jet<1, N> jet_from_taylor(double x0, const std::array<double, N + 1>& c) {
  Jet<1, N> j(0.0);
  for (int k = 0; k <= N; ++k) j[k] = c[k];
  (void)x0;
  return j;
}

}  // namespace detail

/// Radial pressure profile P(xi) = -int_xi^2 f'(eta)^2 / eta d eta of the
/// stationary ring, tabulated once on panels and completed per query by a
/// Gauss-Legendre rule on the partial panel.
class PressureTable {
 public:
  explicit PressureTable(const Profile& f, int panels = 384) : f_(f), panels_(panels) {
    h_ = (hi_ - lo_) / panels_;
    tail_.assign(panels_ + 1, 0.0);
    for (int k = panels_ - 1; k >= 0; --k) {
      const double a = lo_ + k * h_;
      tail_[k] = tail_[k + 1] + integrate(a, a + h_);
    }
  }

  /// P(xi); constant -total for xi <= 1/2 and 0 for xi >= 2.
  double value(double xi) const {
    if (xi >= hi_) return 0.0;
    if (xi <= lo_) return -tail_[0];
    const int k = std::min(panels_ - 1, static_cast<int>((xi - lo_) / h_));
    const double end = lo_ + (k + 1) * h_;
    return -(tail_[k + 1] + integrate(xi, end));
  }

  double integrand(double eta) const {
    const double fp = f_.taylor<0, 1>(eta)[0];
    return fp * fp / eta;
  }

  /// Taylor coefficients of P about xi.
  template <int M>
  std::array<double, M + 1> taylor(double xi) const {
    std::array<double, M + 1> out{};
    out[0] = value(xi);
    if constexpr (M >= 1) {
      if (f_.vanishes_at(xi)) return out;
      const auto fp = detail::jet_from_taylor<M - 1>(xi, f_.taylor<M - 1, 1>(xi));
      const auto x = Jet<1, M - 1>::variable(0, xi);
      const auto q = fp * fp / x;
      for (int k = 1; k <= M; ++k) out[k] = q[k - 1] / k;
    }
    return out;
  }

 private:
  double integrate(double a, double b) const {
    if (b <= a) return 0.0;
    auto fn = [this](double e) { return integrand(e); };
    return boost::math::quadrature::gauss<double, 30>::integrate(fn, a, b);
  }

  Profile f_;
  int panels_;
  double lo_ = 0.5;
  double hi_ = 2.0;
  double h_ = 0.0;
  std::vector<double> tail_;
};

/// Evaluators for every object of the construction.
class Construction {
 public:
  explicit Construction(Params p)
      : p_(p),
        f_(make_f()),
        g_(p.swirl_free ? Profile(Profile::Kind::zero) : make_g()),
        pressure_(std::make_shared<PressureTable>(f_)),
        A_(p.amplitude()),
        r0_(p.ring_radius()) {}

  const Params& params() const { return p_; }
  double amplitude() const { return A_; }
  double ring_radius() const { return r0_; }
  const Profile& f() const { return f_; }
  const Profile& g() const { return g_; }

  /// Outer radius (in rho) of the support of every constructed field.
  double support_radius() const { return 2.0 / p_.mu; }

  bool in_support(double r, double z) const {
    return std::hypot(r - r0_, z) * p_.mu < 2.0;
  }

  /// All component jets at one point, order M.
  template <int M>
  struct Ring {
    using J = Jet<2, M>;
    bool active = false;
    J r, rho, cosphi, sinphi;
    J f, fp, g;  // f(mu rho), f'(mu rho), g(mu rho)
    J u0_theta, u0_r, u0_z, uc;
    J ubar_theta, dt_ubar_theta;
  };

  template <int M>
  Ring<M> ring(double t, double r, double z) const {
    using J = Jet<2, M>;
    Ring<M> R;
    const double rho0 = std::hypot(r - r0_, z);
    if (!(rho0 * p_.mu < 2.0) || rho0 * p_.mu <= 0.5) return R;
    R.active = true;
    R.r = J::variable(0, r);
    const J zz = J::variable(1, z);
    const J dr = R.r - r0_;
    R.rho = sqrt(dr * dr + zz * zz);
    R.cosphi = dr / R.rho;
    R.sinphi = zz / R.rho;
    const J x = R.rho * p_.mu;
    const double xv = x.value();
    R.f = compose(x, f_.taylor<M>(xv));
    R.fp = compose(x, f_.taylor<M, 1>(xv));
    R.g = compose(x, g_.taylor<M>(xv));
    R.u0_theta = A_ * R.g * R.sinphi;
    R.u0_r = -A_ * R.fp * R.sinphi;
    R.u0_z = A_ * R.fp * R.cosphi;
    R.uc = (A_ / p_.mu) * R.f / R.r;
    if (g_.vanishes_at(xv)) {
      R.ubar_theta = J(0.0);
      R.dt_ubar_theta = J(0.0);
    } else {
      const J w = (t * A_) / R.rho;
      const J cw = cos(w), sw = sin(w);
      const J sin_ph = R.sinphi * cw - R.cosphi * sw;  // sin(phi - w)
      const J cos_ph = R.cosphi * cw + R.sinphi * sw;  // cos(phi - w)
      R.ubar_theta = A_ * R.g * sin_ph;
      R.dt_ubar_theta = -(A_ * A_) * R.g * cos_ph / R.rho;
    }
    return R;
  }

  template <int N>
  CylVec<Jet<2, N>> initial_velocity_jet(double r, double z) const {
    const auto R = ring<N>(0.0, r, z);
    if (!R.active) return {};
    return {R.u0_theta, R.u0_r, R.u0_z + R.uc};
  }

  template <int N>
  CylVec<Jet<2, N>> approx_velocity_jet(double t, double r, double z) const {
    const auto R = ring<N>(t, r, z);
    if (!R.active) return {};
    return {R.ubar_theta, R.u0_r, R.u0_z + R.uc};
  }

  template <int N>
  CylVec<Jet<2, N>> corrector_jet(double r, double z) const {
    const auto R = ring<N>(0.0, r, z);
    if (!R.active) return {};
    return {Jet<2, N>(0.0), Jet<2, N>(0.0), R.uc};
  }

  template <int N>
  Jet<2, N> pressure_jet(double r, double z) const {
    using J = Jet<2, N>;
    const double rho0 = std::hypot(r - r0_, z);
    const double xi0 = rho0 * p_.mu;
    if (xi0 >= 2.0) return J(0.0);
    if (xi0 <= 0.5) return J(A_ * A_ * pressure_->value(xi0));
    const J dr = J::variable(0, r) - r0_;
    const J zz = J::variable(1, z);
    const J x = sqrt(dr * dr + zz * zz) * p_.mu;
    return (A_ * A_) * compose(x, pressure_->taylor<N>(xi0));
  }

  /// Error field (momentum defect) of the approximate solution, order N.
  template <int N>
  CylVec<Jet<2, N>> error_field_jet(double t, double r, double z) const {
    using J = Jet<2, N>;
    const auto R = ring<N + 2>(t, r, z);
    if (!R.active) return {};
    auto v = [](const Jet<2, N + 2>& j) { return truncate<N>(j); };
    auto dr = [](const Jet<2, N + 2>& j) { return truncate<N>(partial(j, 0)); };
    auto dz = [](const Jet<2, N + 2>& j) { return truncate<N>(partial(j, 1)); };
    const J r_ = v(R.r), ut = v(R.ubar_theta), ur = v(R.u0_r), uz = v(R.u0_z), uc = v(R.uc);
    CylVec<J> E;
    E.theta = uc * dz(R.ubar_theta) + ut * ur / r_;
    E.r = uc * dz(R.u0_r) - ut * ut / r_;
    E.z = ur * dr(R.uc) + uz * dz(R.uc) + uc * dz(R.uc) + uc * dz(R.u0_z);
    if (p_.mode == Mode::viscous) {
      const auto lap = vector_laplacian<N>(R);
      E.theta -= lap.theta;
      E.r -= lap.r;
      E.z -= lap.z;
    }
    return E;
  }

  /// Cylindrical vector Laplacian of ubar(t) at order N from a ring at N + 2.
  template <int N>
  CylVec<Jet<2, N>> vector_laplacian(const Ring<N + 2>& R) const {
    using J = Jet<2, N>;
    auto scalar_lap = [&](const Jet<2, N + 2>& j) {
      const J rr = truncate<N>(partial(partial(j, 0), 0));
      const J zz = truncate<N>(partial(partial(j, 1), 1));
      const J r1 = truncate<N>(partial(j, 0));
      return rr + zz + r1 / truncate<N>(R.r);
    };
    const J r_ = truncate<N>(R.r);
    const J inv_r2 = 1.0 / (r_ * r_);
    CylVec<J> L;
    L.theta = scalar_lap(R.ubar_theta) - truncate<N>(R.ubar_theta) * inv_r2;
    L.r = scalar_lap(R.u0_r) - truncate<N>(R.u0_r) * inv_r2;
    L.z = scalar_lap(R.u0_z + R.uc);
    return L;
  }

  // Plain point values.

  CylVec<double> initial_velocity(double r, double z) const {
    return values(initial_velocity_jet<0>(r, z));
  }
  double approx_swirl(double t, double r, double z) const {
    return ring<0>(t, r, z).ubar_theta.value();
  }
  /// d ubar_theta / dt, analytic.
  double approx_swirl_rate(double t, double r, double z) const {
    return ring<0>(t, r, z).dt_ubar_theta.value();
  }
  CylVec<double> approx_velocity(double t, double r, double z) const {
    return values(approx_velocity_jet<0>(t, r, z));
  }
  double corrector(double r, double z) const { return ring<0>(0.0, r, z).uc.value(); }
  CylVec<double> error_field(double t, double r, double z) const {
    return values(error_field_jet<0>(t, r, z));
  }
  /// pbar as a function of the distance rho to the ring core.
  double pressure(double rho) const {
    if (rho < 0.0) throw std::invalid_argument("rho must be nonnegative");
    return A_ * A_ * pressure_->value(rho * p_.mu);
  }
  const PressureTable& pressure_table() const { return *pressure_; }

  /// Exact partial derivative d^i/dr^i d^j/dz^j of a field at time t.
  /// Vector fields return (theta, r, z); the pressure returns one value.
  std::vector<double> field_derivative(FieldId id, double t, double r, double z, int i,
                                       int j) const {
    if (i < 0 || j < 0 || i + j > kMaxFieldDerivative)
      throw std::out_of_range("field derivative order must be at most 4");
    if (!(r > 0.0)) throw std::domain_error("field derivatives need r > 0");
    constexpr int K = kMaxFieldDerivative;
    const std::array<int, 2> a{i, j};
    auto pick = [&](const CylVec<Jet<2, K>>& v) {
      return std::vector<double>{v.theta.derivative(a), v.r.derivative(a), v.z.derivative(a)};
    };
    switch (id) {
      case FieldId::u0:
        return pick(initial_velocity_jet<K>(r, z));
      case FieldId::u_c:
        return pick(corrector_jet<K>(r, z));
      case FieldId::ubar:
        return pick(approx_velocity_jet<K>(t, r, z));
      case FieldId::E:
        return pick(error_field_jet<K>(t, r, z));
      case FieldId::pbar:
        return {pressure_jet<K>(r, z).derivative(a)};
    }
    return {};
  }

  /// Jet of a vector field by id (pbar is not a vector field).
  template <int N>
  CylVec<Jet<2, N>> vector_field_jet(FieldId id, double t, double r, double z) const {
    switch (id) {
      case FieldId::u0:
        return initial_velocity_jet<N>(r, z);
      case FieldId::u_c:
        return corrector_jet<N>(r, z);
      case FieldId::ubar:
        return approx_velocity_jet<N>(t, r, z);
      case FieldId::E:
        return error_field_jet<N>(t, r, z);
      case FieldId::pbar:
        break;
    }
    throw std::invalid_argument("pbar is a scalar field");
  }

 private:
  template <int N>
  static CylVec<double> values(const CylVec<Jet<2, N>>& v) {
    return {v.theta.value(), v.r.value(), v.z.value()};
  }

  Params p_;
  Profile f_;
  Profile g_;
  std::shared_ptr<const PressureTable> pressure_;
  double A_;
  double r0_;
};

}  // namespace inflation

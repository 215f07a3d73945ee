#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "inflation/construction.hpp"
#include "inflation/norms.hpp"

namespace inflation {
namespace {

TEST(Params, DerivedExponentsInviscid) {
  const Params p = make_params(0.5, 0.5, 64.0, Mode::inviscid);
  EXPECT_DOUBLE_EQ(p.b, 0.02);
  EXPECT_DOUBLE_EQ(p.N, 100.0);
  EXPECT_NEAR(p.nu, 58.892009639992005, 1e-12);
}

TEST(Params, DerivedExponentsViscous) {
  const Params p = make_params(0.25, 1.0, 32.0, Mode::viscous);
  EXPECT_DOUBLE_EQ(p.b, 0.0025);
  EXPECT_DOUBLE_EQ(p.N, 100.0);
  // N = max(10 / s, 100) grows for small s.
  EXPECT_DOUBLE_EQ(make_params(0.05, 1.0, 32.0, Mode::inviscid).N, 200.0);
}

TEST(Params, FrozenTimeScaleAndAmplitude) {
  const Params p = make_params(0.5, 0.9, 64.0, Mode::inviscid, 2.0);
  EXPECT_NEAR(p.t_star, 0.00038791074896029855, 1e-13 * 0.00038791074896029855);
  EXPECT_NEAR(p.amplitude(), 49.728251945821708, 1e-12 * 49.728251945821708);
}

TEST(Params, RejectsOutOfRangeInputs) {
  EXPECT_THROW(make_params(0.0, 0.5, 16, Mode::inviscid), std::invalid_argument);
  EXPECT_THROW(make_params(2.5, 0.5, 16, Mode::inviscid), std::invalid_argument);
  EXPECT_THROW(make_params(0.5, 0.5, 16, Mode::viscous), std::invalid_argument);
  EXPECT_THROW(make_params(0.5, 0.0, 16, Mode::inviscid), std::invalid_argument);
  EXPECT_THROW(make_params(0.5, 0.5, 0.5, Mode::inviscid), std::invalid_argument);
  EXPECT_THROW(make_params(0.5, 0.5, 16, Mode::inviscid, -1.0), std::invalid_argument);
  EXPECT_THROW(make_params(0.5, 0.5, 16, Mode::inviscid, std::nullopt, 0.0),
               std::invalid_argument);
}

TEST(Construction, InitialDataOnTheRing) {
  const Params p = make_params(0.5, 0.5, 32.0, Mode::inviscid);
  const Construction c(p);
  const double r = c.ring_radius() + 1.25 / p.mu;
  const auto u = c.initial_velocity(r, 0.0);
  // phi = 0, f'(1.25) = 1 and f(1.25) = 0, so only u_z = A survives.
  EXPECT_NEAR(u.theta, 0.0, 1e-14 * c.amplitude());
  EXPECT_NEAR(u.r, 0.0, 1e-14 * c.amplitude());
  EXPECT_NEAR(u.z, c.amplitude(), 1e-12 * c.amplitude());
}

TEST(Construction, FieldsVanishOutsideTheSupport) {
  const Params p = make_params(0.25, 0.5, 32.0, Mode::viscous);
  const Construction c(p);
  const double r0 = c.ring_radius();
  for (double rho : {2.0 / p.mu, 2.5 / p.mu, 0.4 / p.mu, 0.0}) {
    for (double phi : {0.0, 1.0, 2.5, 4.0}) {
      const double r = r0 + rho * std::cos(phi), z = rho * std::sin(phi);
      const auto u = c.initial_velocity(r, z);
      const auto e = c.error_field(1e-3, r, z);
      EXPECT_EQ(u.theta, 0.0);
      EXPECT_EQ(u.r, 0.0);
      EXPECT_EQ(u.z, 0.0);
      EXPECT_EQ(e.theta, 0.0);
      EXPECT_EQ(e.r, 0.0);
      EXPECT_EQ(e.z, 0.0);
    }
  }
  EXPECT_EQ(c.pressure(2.0 / p.mu), 0.0);
  EXPECT_EQ(c.pressure(3.0 / p.mu), 0.0);
}

TEST(Construction, ApproximateSolutionStartsAtInitialData) {
  const Params p = make_params(0.5, 0.5, 32.0, Mode::inviscid);
  const Construction c(p);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> rho_d(0.5 / p.mu, 2.0 / p.mu), phi_d(0, 6.283);
  for (int n = 0; n < 200; ++n) {
    const double rho = rho_d(rng), phi = phi_d(rng);
    const double r = c.ring_radius() + rho * std::cos(phi), z = rho * std::sin(phi);
    const auto u0 = c.initial_velocity(r, z);
    const auto ub = c.approx_velocity(0.0, r, z);
    EXPECT_NEAR(ub.theta, u0.theta, 1e-13 * c.amplitude());
    EXPECT_EQ(ub.r, u0.r);
    EXPECT_EQ(ub.z, u0.z);
    // Only the swirl evolves.
    const auto later = c.approx_velocity(5.0 * p.t_star, r, z);
    EXPECT_EQ(later.r, u0.r);
    EXPECT_EQ(later.z, u0.z);
  }
}

TEST(Construction, SwirlRateMatchesFiniteDifference) {
  const Params p = make_params(0.5, 0.9, 32.0, Mode::inviscid, 2.0);
  const Construction c(p);
  const double r = c.ring_radius() + 1.2 / p.mu * std::cos(0.7);
  const double z = 1.2 / p.mu * std::sin(0.7);
  const double t = 0.3 * p.t_star, h = 1e-4 * p.t_star;
  const double fd = (c.approx_swirl(t + h, r, z) - c.approx_swirl(t - h, r, z)) / (2 * h);
  EXPECT_NEAR(c.approx_swirl_rate(t, r, z), fd, 1e-6 * std::abs(fd) + 1e-9);
}

TEST(Construction, SwirlL2IsConstantInTime) {
  const Params p = make_params(0.5, 0.9, 16.0, Mode::inviscid, 2.0);
  const Construction c(p);
  QuadratureOptions opt;
  opt.rel_tol = 1e-9;
  auto swirl_l2 = [&](double t) {
    auto integrand = [&](double r, double z) {
      const double u = c.approx_swirl(t, r, z);
      return u * u;
    };
    return std::sqrt(integrate_ring(c, integrand, false, opt).value);
  };
  const double n0 = swirl_l2(0.0);
  for (double f : {0.5, 1.0, 3.0}) EXPECT_NEAR(swirl_l2(f * p.t_star), n0, 1e-7 * n0);
}

TEST(Construction, PressureProfile) {
  const Params p = make_params(0.5, 0.5, 16.0, Mode::inviscid);
  const Construction c(p);
  EXPECT_NEAR(c.pressure(1.2 / p.mu), -8.432085542525092, 1e-11 * 8.432085542525092);
  // pbar' = A^2 f'(mu rho)^2 / rho >= 0: nondecreasing, constant in the core.
  double prev = c.pressure(0.0);
  for (int k = 1; k <= 400; ++k) {
    const double v = c.pressure(2.5 * k / 400.0 / p.mu);
    EXPECT_GE(v, prev - 1e-12 * std::abs(prev));
    prev = v;
  }
  EXPECT_EQ(c.pressure(0.1 / p.mu), c.pressure(0.4 / p.mu));
  EXPECT_THROW((void)c.pressure(-1.0), std::invalid_argument);
}

TEST(Construction, SwirlFreeErrorField) {
  Params p = make_params(0.5, 0.5, 32.0, Mode::inviscid);
  p.swirl_free = true;
  const Construction c(p);
  for (double phi : {0.3, 1.9, 4.2}) {
    const double rho = 1.3 / p.mu;
    const double r = c.ring_radius() + rho * std::cos(phi), z = rho * std::sin(phi);
    const auto e = c.error_field(0.0, r, z);
    EXPECT_EQ(e.theta, 0.0);
    const double uc = c.corrector(r, z);
    const double dz_ur = c.field_derivative(FieldId::u0, 0.0, r, z, 0, 1)[1];
    EXPECT_NEAR(e.r, uc * dz_ur, 1e-12 * std::abs(uc * dz_ur) + 1e-300);
  }
}

TEST(Construction, FieldDerivativeOrderZeroMatchesEvaluators) {
  const Params p = make_params(0.25, 0.9, 32.0, Mode::viscous, 2.0);
  const Construction c(p);
  const double t = 0.4 * p.t_star;
  const double r = c.ring_radius() + 1.1 / p.mu * std::cos(2.0);
  const double z = 1.1 / p.mu * std::sin(2.0);
  const auto u0 = c.initial_velocity(r, z);
  const auto d0 = c.field_derivative(FieldId::u0, t, r, z, 0, 0);
  EXPECT_EQ(d0[0], u0.theta);
  EXPECT_EQ(d0[1], u0.r);
  EXPECT_EQ(d0[2], u0.z);
  const auto ub = c.approx_velocity(t, r, z);
  const auto db = c.field_derivative(FieldId::ubar, t, r, z, 0, 0);
  EXPECT_EQ(db[0], ub.theta);
  EXPECT_EQ(db[2], ub.z);
  const auto e = c.error_field(t, r, z);
  const auto de = c.field_derivative(FieldId::E, t, r, z, 0, 0);
  EXPECT_NEAR(de[0], e.theta, 1e-12 * std::abs(e.theta));
  EXPECT_NEAR(de[1], e.r, 1e-12 * std::abs(e.r));
  EXPECT_NEAR(de[2], e.z, 1e-12 * std::abs(e.z));
  EXPECT_EQ(c.field_derivative(FieldId::u_c, t, r, z, 0, 0)[2], c.corrector(r, z));
  EXPECT_THROW((void)c.field_derivative(FieldId::u0, t, r, z, 3, 2), std::out_of_range);
  EXPECT_THROW((void)c.field_derivative(FieldId::u0, t, r, z, -1, 0), std::out_of_range);
  EXPECT_THROW((void)c.field_derivative(FieldId::u0, t, 0.0, z, 1, 0), std::domain_error);
}

TEST(Construction, FieldDerivativesAgreeWithFiniteDifferences) {
  const Params p = make_params(0.5, 0.9, 16.0, Mode::inviscid, 2.0);
  const Construction c(p);
  const double t = 0.7 * p.t_star;
  const double r = c.ring_radius() + 1.35 / p.mu * std::cos(0.9);
  const double z = 1.35 / p.mu * std::sin(0.9);
  for (FieldId id : {FieldId::u0, FieldId::ubar, FieldId::E, FieldId::pbar}) {
    auto err = [&](double h) {
      const auto exact = c.field_derivative(id, t, r, z, 1, 1);
      double worst = 0.0;
      for (std::size_t k = 0; k < exact.size(); ++k) {
        auto v = [&](double dr, double dz) {
          return c.field_derivative(id, t, r + dr, z + dz, 0, 0)[k];
        };
        const double fd = (v(h, h) - v(h, -h) - v(-h, h) + v(-h, -h)) / (4 * h * h);
        worst = std::max(worst, std::abs(fd - exact[k]));
      }
      return worst;
    };
    const double h = 1e-2 / p.mu;
    const double order = std::log2(err(h) / err(h / 2));
    EXPECT_GT(order, 1.9) << to_string(id);
  }
}

TEST(Construction, ErrorFieldScalesWithEpsSquaredSquared) {
  // Every velocity is proportional to eps^2; the inviscid defect is quadratic.
  const Params a = make_params(0.5, 0.5, 32.0, Mode::inviscid, 2.0);
  const Params b = make_params(0.5, 0.25, 32.0, Mode::inviscid, 2.0);
  const Construction ca(a), cb(b);
  const double r = ca.ring_radius() + 1.2 / a.mu * std::cos(1.0);
  const double z = 1.2 / a.mu * std::sin(1.0);
  const auto ua = ca.initial_velocity(r, z), ub = cb.initial_velocity(r, z);
  EXPECT_NEAR(ub.z, ua.z / 4.0, 1e-15 * std::abs(ua.z));
  EXPECT_NEAR(ub.r, ua.r / 4.0, 1e-15 * std::abs(ua.r));
  const auto ea = ca.error_field(0.0, r, z), eb = cb.error_field(0.0, r, z);
  EXPECT_NEAR(eb.z, ea.z / 16.0, 1e-13 * std::abs(ea.z));
}

TEST(Construction, FrozenInitialL2Norm) {
  const Params p = make_params(0.5, 0.5, 16.0, Mode::inviscid);
  const Construction c(p);
  const auto rep = gradient_norm_axisym(c, FieldId::u0, 0.0, 0, Integrability::two);
  EXPECT_NEAR(rep.value, 1.1769095343123105, 1e-8);
}

TEST(Construction, SwirlGradientAmplification) {
  // max |d_rho ubar_theta| / max |ubar_theta| <= 10 max(mu, t eps^2 mu^(3-s) nu^(1/2)).
  const Params p = make_params(0.5, 0.9, 32.0, Mode::inviscid, 2.0);
  const Construction c(p);
  for (double f : {0.0, 0.5, 1.0, 2.0}) {
    const double t = f * p.t_star;
    double umax = 0.0, dmax = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double rho = (0.5 + 1.5 * i / 200.0) / p.mu;
      for (int j = 0; j < 64; ++j) {
        const double phi = 6.283185307179586 * j / 64;
        const double r = c.ring_radius() + rho * std::cos(phi), z = rho * std::sin(phi);
        const auto d = c.field_derivative(FieldId::ubar, t, r, z, 1, 0);
        const auto e = c.field_derivative(FieldId::ubar, t, r, z, 0, 1);
        const double drho = d[0] * std::cos(phi) + e[0] * std::sin(phi);
        umax = std::max(umax, std::abs(c.approx_swirl(t, r, z)));
        dmax = std::max(dmax, std::abs(drho));
      }
    }
    const double scale =
        std::max(p.mu, t * p.eps * p.eps * std::pow(p.mu, 3 - p.s) * std::sqrt(p.nu));
    EXPECT_LE(dmax / umax, 10.0 * scale) << "t/t* = " << f;
  }
}

}  // namespace
}  // namespace inflation

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "inflation/norms.hpp"

namespace inflation {
namespace {

Params base(double eps = 0.5, double mu = 16.0) {
  return make_params(0.5, eps, mu, Mode::inviscid);
}

TEST(Spectral, ParsevalIdentity) {
  const Grid3D g = sample_grid3(base(), FieldId::u0, 0.0, 64);
  double sum = 0.0;
  for (const auto& comp : g.components)
    for (double v : comp) sum += v * v;
  const double h = g.spacing();
  const double direct = std::sqrt(sum * h * h * h);
  EXPECT_NEAR(hs_norm(g, 0.0).value, direct, 1e-12 * direct);
}

TEST(Spectral, L2AgreesWithQuadrature) {
  const Params p = base();
  const double quad = gradient_norm_axisym(Construction(p), FieldId::u0, 0.0, 0,
                                           Integrability::two).value;
  const double spec = hs_norm(sample_grid3(p, FieldId::u0, 0.0, 128), 0.0).value;
  EXPECT_NEAR(spec, quad, 2e-3 * quad);
  EXPECT_NEAR(quad, 1.1769095343123105, 1e-8);
}

TEST(Spectral, H1SeminormConvergesToQuadrature) {
  // 128 points on the default box leave about 8 per 1/mu, so agreement is
  // at the few-percent level and must improve monotonically with n.
  const Params p = base();
  const double quad = gradient_norm_axisym(Construction(p), FieldId::u0, 0.0, 1,
                                           Integrability::two).value;
  double prev = INFINITY;
  for (int n : {32, 64, 128}) {
    const double gap = std::abs(hs_norm(sample_grid3(p, FieldId::u0, 0.0, n), 1.0).value - quad);
    EXPECT_LT(gap, prev) << "n = " << n;
    prev = gap;
  }
  EXPECT_LT(prev, 0.05 * quad);
}

TEST(Spectral, InhomogeneousNormIdentities) {
  const ShellSpectrum sp = power_spectrum(sample_grid3(base(), FieldId::u0, 0.0, 64));
  const double l2 = hs_norm(sp, 0.0).value, h1 = hs_norm(sp, 1.0).value;
  EXPECT_NEAR(sobolev_norm(sp, 1.0).value, std::hypot(l2, h1), 1e-10 * std::hypot(l2, h1));
  EXPECT_DOUBLE_EQ(sobolev_norm(sp, 0.0).value, l2);
  for (double s : {0.25, 0.5, 1.5}) EXPECT_GE(sobolev_norm(sp, s).value, hs_norm(sp, s).value);
}

TEST(Spectral, LogConvexInTheOrder) {
  const ShellSpectrum sp = power_spectrum(sample_grid3(base(), FieldId::u0, 0.0, 64));
  for (double s : {0.25, 0.5, 0.75}) {
    const double lhs = hs_norm(sp, s).value;
    const double rhs = std::pow(hs_norm(sp, 0.0).value, 1.0 - s) * std::pow(hs_norm(sp, 1.0).value, s);
    EXPECT_LE(lhs, rhs * (1.0 + 1e-12)) << "s = " << s;
  }
}

TEST(Spectral, NormsScaleWithEpsSquared) {
  const double a = hs_norm(sample_grid3(base(0.5), FieldId::u0, 0.0, 32), 0.5).value;
  const double b = hs_norm(sample_grid3(base(0.25), FieldId::u0, 0.0, 32), 0.5).value;
  EXPECT_DOUBLE_EQ(b, a / 4.0);
}

TEST(Spectral, BoxAndResolutionIndependence) {
  const Params p = base();
  // Same spacing on a box twice as wide.
  const double small = hs_norm(sample_grid3(p, FieldId::u0, 0.0, 64, 4.0), 0.5).value;
  const double wide = hs_norm(sample_grid3(p, FieldId::u0, 0.0, 128, 8.0), 0.5).value;
  EXPECT_NEAR(wide, small, 1e-3 * small);
  // Doubling the resolution on a fixed box.
  const double fine = hs_norm(sample_grid3(p, FieldId::u0, 0.0, 128, 4.0), 0.5).value;
  EXPECT_NEAR(fine, small, 1e-2 * fine);
}

TEST(Spectral, TruncationEstimateShrinksWithResolution) {
  double prev = INFINITY;
  for (int n : {32, 64, 128}) {
    const auto rep = hs_norm(sample_grid3(base(), FieldId::u0, 0.0, n), 0.5);
    EXPECT_EQ(rep.method, NormMethod::spectral);
    EXPECT_EQ(rep.resolution, n);
    EXPECT_GE(rep.truncation_error, 0.0);
    EXPECT_LT(rep.truncation_error, prev);
    prev = rep.truncation_error;
  }
}

TEST(Spectral, RejectsInvalidInput) {
  const Params p = base();
  EXPECT_THROW(sample_grid3(p, FieldId::u0, 0.0, 48), std::invalid_argument);
  EXPECT_THROW(sample_grid3(p, FieldId::u0, 0.0, 32, 1.0), std::invalid_argument);
  const Grid3D g = sample_grid3(p, FieldId::u0, 0.0, 32);
  EXPECT_THROW(hs_norm(g, -1.5), std::invalid_argument);
  EXPECT_THROW(sobolev_norm(g, -2.0), std::invalid_argument);
  EXPECT_NO_THROW(hs_norm(g, -1.4));
}

TEST(Spectral, BoundaryDecayIsRequired) {
  const Grid3D g = sample_grid3(base(), FieldId::u0, 0.0, 32);
  EXPECT_EQ(boundary_ratio(g), 0.0);
  Grid3D bad = g;
  bad.components[0][bad.index(0, 5, 5)] = 1.0;
  EXPECT_GT(boundary_ratio(bad), kBoundaryDecayTol);
  EXPECT_THROW(require_boundary_decay(bad), std::runtime_error);
  EXPECT_THROW(hs_norm(bad, 0.5), std::runtime_error);
}

TEST(Quadrature, SeminormsAndSums) {
  const Construction c(base());
  const double l2 = gradient_norm_axisym(c, FieldId::u0, 0.0, 0, Integrability::two).value;
  const double h1 = gradient_norm_axisym(c, FieldId::u0, 0.0, 1, Integrability::two).value;
  const double w12 = wkp_norm_axisym(c, FieldId::u0, 0.0, 1, Integrability::two).value;
  EXPECT_NEAR(w12, l2 + h1, 1e-12 * w12);
  EXPECT_DOUBLE_EQ(wkp_norm_axisym(c.params(), FieldId::u0, 0.0, 1, 2.0).value, w12);
  EXPECT_THROW(gradient_norm_axisym(c, FieldId::u0, 0.0, 4, Integrability::two),
               std::invalid_argument);
  EXPECT_THROW(integrability_from(3.0), std::invalid_argument);
  EXPECT_EQ(integrability_from(INFINITY), Integrability::infinity);
}

TEST(Quadrature, SupNormBoundsTheLpNorms) {
  const Construction c(base());
  const double sup = gradient_norm_axisym(c, FieldId::u0, 0.0, 1, Integrability::infinity).value;
  // |supp| = 2 pi r0 pi (2/mu)^2 (1 - 1/16) bounds ||F||_p <= |supp|^(1/p) sup.
  const double mu = c.params().mu;
  const double vol = 2.0 * std::numbers::pi * c.ring_radius() * std::numbers::pi *
                     (4.0 - 0.25) / (mu * mu);
  for (Integrability q : {Integrability::one, Integrability::two, Integrability::four}) {
    const double qe = exponent_of(q);
    const double lp = gradient_norm_axisym(c, FieldId::u0, 0.0, 1, q).value;
    EXPECT_LE(lp, std::pow(vol * 1.01, 1.0 / qe) * sup);
  }
}

TEST(Quadrature, PressureIsIntegratedOverTheCore) {
  const Construction c(base());
  const double l1 = gradient_norm_axisym(c, FieldId::pbar, 0.0, 0, Integrability::one).value;
  // pbar is constant on the core disc of radius 1/(2 mu); its share alone is a lower bound.
  const double mu = c.params().mu;
  const double core = std::abs(c.pressure(0.0)) * 2.0 * std::numbers::pi * c.ring_radius() *
                      std::numbers::pi * 0.25 / (mu * mu);
  EXPECT_GT(l1, core * 0.99);
}

}  // namespace
}  // namespace inflation

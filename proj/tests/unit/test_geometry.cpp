#include "support/generators.hpp"

#include <gtest/gtest.h>

using namespace shellreg;

TEST(SphereChart, CurvatureIsQuarterEverywhere) {
  const SurfaceChart chart = SurfaceChart::sphere_r2();
  gen::Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    const Vec2 y = rng.in_disk(Disk{Vec2::Zero(), 1.5});
    EXPECT_NEAR(geometry_at(chart, y).kappa, 0.25, 1e-9);
  }
}

TEST(SphereChart, ApexValues) {
  const GeometryAtPoint g = geometry_at(SurfaceChart::sphere_r2(), Vec2::Zero());
  EXPECT_NEAR((g.a_ff - Mat2::Identity()).norm(), 0.0, 1e-14);
  EXPECT_NEAR((g.b_ff + 0.5 * Mat2::Identity()).norm(), 0.0, 1e-10);
  EXPECT_NEAR(g.area_el, 1.0, 1e-14);
  EXPECT_NEAR(g.theta.z(), 2.0, 1e-14);
}

TEST(SphereChart, DualBasisProperty) {
  const SurfaceChart chart = SurfaceChart::sphere_r2();
  gen::Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    const GeometryAtPoint g = geometry_at(chart, rng.in_disk(Disk{Vec2::Zero(), 1.4}));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(g.a_contra[i].dot(g.a_cov[j]), i == j ? 1.0 : 0.0, 1e-12);
    }
    EXPECT_NEAR(g.a_cov[2].norm(), 1.0, 1e-12);
  }
}

// Christoffel symbols of the chart must match finite differences of the covariant basis.
TEST(SphereChart, ChristoffelMatchesDifferences) {
  const SurfaceChart chart = SurfaceChart::sphere_r2();
  const Vec2 y(0.3, -0.4);
  const GeometryAtPoint g = geometry_at(chart, y);
  const double h = 1e-6;
  for (int b = 0; b < 2; ++b) {
    Vec2 e = Vec2::Zero();
    e[b] = h;
    for (int a = 0; a < 2; ++a) {
      auto tangent = [&](const Vec2& p) {
        const CovariantBasis cb = covariant_basis(chart, p);
        return a == 0 ? cb.a1 : cb.a2;
      };
      const Vec3 da = (tangent(y + e) - tangent(y - e)) / (2 * h);
      for (int s = 0; s < 2; ++s) EXPECT_NEAR(g.christoffel[s](a, b), da.dot(g.a_contra[s]), 1e-7);
      EXPECT_NEAR(g.b_ff(a, b), da.dot(g.a_cov[2]), 1e-7);
    }
  }
}

TEST(Ellipsoid, UnitAxesMatchUnitSphereCurvature) {
  const SurfaceChart chart = SurfaceChart::ellipsoid(1.0, 1.0, 1.0);
  EXPECT_NEAR(geometry_at(chart, Vec2(0.2, 0.1)).kappa, 1.0, 1e-9);
  EXPECT_FALSE(chart.defined_at(Vec2(1.0, 0.0)));
  EXPECT_TRUE(chart.defined_at(Vec2(0.5, 0.0)));
}

TEST(Chart, ParseRoundTrip) {
  const SurfaceChart e = SurfaceChart::parse("ellipsoid:a=2,b=1.5,c=3");
  EXPECT_EQ(SurfaceChart::parse(e.spec_string()).spec_string(), e.spec_string());
  EXPECT_EQ(SurfaceChart::parse("sphere_r2").kind(), ChartKind::sphere_r2);
  EXPECT_THROW(SurfaceChart::parse("torus"), Error);
}

TEST(Ellipticity, FlatChartIsNotElliptic) {
  EXPECT_FALSE(check_ellipticity(SurfaceChart::flat(1.0), PlanarDomain{1.0}, 21).is_elliptic);
  EXPECT_TRUE(check_ellipticity(SurfaceChart::sphere_r2(), PlanarDomain{1.0}, 21).is_elliptic);
}

TEST(DensityCondition, SidewaysNormalFails) {
  const SurfaceChart chart = SurfaceChart::sphere_r2();
  EXPECT_TRUE(check_density_condition(chart, PlanarDomain{1.0}, Vec3(0, 0, 1), 21).holds);
  EXPECT_FALSE(check_density_condition(chart, PlanarDomain{1.0}, Vec3(1, 0, 0), 21).holds);
}

TEST(Prolongation, OuterDiskLimits) {
  const SurfaceChart chart = SurfaceChart::sphere_r2();
  EXPECT_TRUE(prolong(chart, PlanarDomain{1.0}, PlanarDomain{1.5}, Vec3(0, 0, 1), 41).all_hold());
  // the radius-2 hemisphere chart stops existing before |y| = 2.5
  try {
    prolong(chart, PlanarDomain{1.0}, PlanarDomain{2.5}, Vec3(0, 0, 1), 41);
    FAIL() << "expected ChartUndefinedOnOuter";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChartUndefinedOnOuter);
  }
  EXPECT_FALSE(prolong(chart, PlanarDomain{1.0}, PlanarDomain{1.5}, Vec3(1, 0, 0), 41).all_hold());
}

TEST(GapConstant, ConcentricDisks) {
  const GapConstant g = gap_constant(GapSets{Disk{Vec2(1, 0), 0.14}, Disk{Vec2(1, 0), 0.32},
                                             Disk{Vec2::Zero(), 1.5}, Disk{Vec2::Zero(), 1.0}});
  EXPECT_NEAR(g.dist_w1_w0, 0.18, 1e-3);
  EXPECT_GT(g.d, 0.0);
  EXPECT_LE(g.d, 0.5 * g.dist_w1_w0 + 1e-12);
}

TEST(Sampling, ClosedDiskContainsBoundary) {
  const auto pts = sample_closed_disk(Disk{Vec2::Zero(), 1.0}, 11);
  int on_circle = 0;
  for (const Vec2& p : pts) {
    EXPECT_LE(p.norm(), 1.0 + 1e-12);
    if (std::abs(p.norm() - 1.0) < 1e-12) ++on_circle;
  }
  EXPECT_GE(on_circle, 44);
}

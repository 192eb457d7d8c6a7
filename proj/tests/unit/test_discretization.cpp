#include "support/generators.hpp"

#include <gtest/gtest.h>

using namespace shellreg;

TEST(Mesh, ValidAndRefinesToTarget) {
  for (double h : {0.2, 0.1, 0.05}) {
    const TriMesh m = make_disk_mesh(1.0, h);
    EXPECT_TRUE(validate_mesh(m).ok());
    EXPECT_LE(m.h_mesh, h + 1e-12);
  }
}

TEST(Mesh, QuarterTurnSymmetry) {
  const TriMesh m = make_disk_mesh(1.0, 0.2);
  const Eigen::Rotation2Dd quarter(std::numbers::pi / 2);
  for (int n = 0; n < m.num_nodes(); ++n) {
    EXPECT_NEAR((m.nodes[m.rotate_quarter(n)] - quarter * m.nodes[n]).norm(), 0.0, 1e-12);
  }
}

TEST(Locator, ReproducesLinearFunctions) {
  const TriMesh m = make_disk_mesh(1.0, 0.2);
  Vector v(3 * m.num_nodes());
  for (int n = 0; n < m.num_nodes(); ++n) {
    v.segment<3>(3 * n) = Vec3(1 + 2 * m.nodes[n].x(), m.nodes[n].y(), -m.nodes[n].x() + 3 * m.nodes[n].y());
  }
  const FieldEvaluator f(m, v);
  gen::Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const Vec2 y = rng.in_disk(Disk{Vec2::Zero(), 0.95});
    const auto s = f.sample(y);
    EXPECT_NEAR(s.value[0], 1 + 2 * y.x(), 1e-12);
    EXPECT_NEAR(s.value[2], -y.x() + 3 * y.y(), 1e-12);
    EXPECT_NEAR(s.grad(2, 1), 3.0, 1e-11);
  }
  EXPECT_EQ(f.value(Vec2(1.2, 0.0)), Vec3::Zero());
}

class AssemblyTest : public ::testing::Test {
 protected:
  TriMesh mesh = make_disk_mesh(1.0, 0.2);
  SurfaceChart chart = SurfaceChart::sphere_r2();
  LoadSpec load{{Bump{Vec2(0.1, 0.0), 0.5, -1.0, 3}}, {}};
  AssembledSystem sys = assemble(mesh, chart, ShellMaterial{1.0, 1.0, 0.01}, load);
};

TEST_F(AssemblyTest, StiffnessIsSymmetric) {
  const SparseMatrix d = sys.K - SparseMatrix(sys.K.transpose());
  EXPECT_LT(d.norm(), 1e-12 * sys.K.norm());
}

TEST_F(AssemblyTest, MatrixEnergyMatchesQuadrature) {
  gen::Rng rng(4);
  const Vector free = gen::random_nodal_values(rng, sys.dofs.free_size(), 0.1);
  const MixedFEField field{sys.dofs.expand(free)};
  const double direct = energy_by_quadrature(mesh, chart, ShellMaterial{1.0, 1.0, 0.01}, load, field);
  EXPECT_NEAR(sys.energy(free), direct, 1e-10 * (1 + std::abs(direct)));
}

TEST_F(AssemblyTest, KornConstantPositive) {
  const KornReport k = korn_constant(sys);
  EXPECT_GT(k.sigma_min, 0.0);
  EXPECT_GT(k.c0, 0.0);
}

TEST(Assembly, FlatChartRejectedWhenEllipticityRequired) {
  const TriMesh m = make_disk_mesh(1.0, 0.3);
  EXPECT_THROW(assemble(m, SurfaceChart::flat(1.0), ShellMaterial{}, LoadSpec{}), Error);
}

TEST(Load, H10FlagFollowsSupport) {
  const TriMesh m = make_disk_mesh(1.0, 0.2);
  EXPECT_TRUE((LoadSpec{{Bump{Vec2::Zero(), 0.5, -1.0, 3}}, {}}).h10_flag(m));
  EXPECT_FALSE((LoadSpec{{Bump{Vec2(0.8, 0.0), 0.5, -1.0, 3}}, {}}).h10_flag(m));
  EXPECT_TRUE(LoadSpec{}.is_zero());
}

TEST(DofMap, BoundaryKeepsOnlyTransverse) {
  const TriMesh m = make_disk_mesh(1.0, 0.3);
  const DofMap d(m);
  const int b = m.boundary_nodes.front();
  EXPECT_EQ(d.node_dofs(b).size(), 1u);
  EXPECT_EQ(d.free_index(b, 0), -1);
  EXPECT_EQ(d.node_dofs(0).size(), 3u);
  EXPECT_EQ(d.free_size(), 3 * m.num_nodes() - 2 * static_cast<int>(m.boundary_nodes.size()));
}

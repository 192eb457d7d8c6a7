#include "support/generators.hpp"
#include "shellreg/obstacle_solver.hpp"

#include <gtest/gtest.h>

using namespace shellreg;

namespace {

struct Problem {
  TriMesh mesh;
  AssembledSystem sys;
  HalfSpaceObstacle obstacle;
};

Problem coarse_problem(double height, int constrained) {
  Problem p;
  const SurfaceChart chart = SurfaceChart::sphere_r2();
  p.mesh = make_disk_mesh(1.0, 0.3);
  p.sys = assemble(p.mesh, chart, ShellMaterial{1.0, 1.0, 0.01}, LoadSpec{{Bump{Vec2::Zero(), 0.6, height, 3}}, {}},
                   {true, false});
  std::vector<int> nodes;
  for (int n = 0; n < constrained && n < p.mesh.num_nodes(); ++n) nodes.push_back(n);
  p.obstacle = obstacle_rows(p.mesh, chart, Vec3(0, 0, 1), nodes);
  return p;
}

}  // namespace

TEST(ObstacleRows, RestStateIsFeasible) {
  const Problem p = coarse_problem(-1.0, 0);
  const Vector slack = p.obstacle.slack(Vector::Zero(3 * p.mesh.num_nodes()));
  EXPECT_EQ(static_cast<int>(p.obstacle.rows.size()), p.mesh.num_nodes());
  EXPECT_GT(slack.minCoeff(), 0.0);
}

TEST(Obstacle, InactiveConstraintsGiveLinearSolution) {
  const Problem p = coarse_problem(0.01, 0);
  const VISolution vi = solve_obstacle(p.sys, p.obstacle);
  EXPECT_TRUE(vi.active_rows.empty());
  EXPECT_NEAR((vi.zeta_free - solve_linear_free(p.sys)).norm(), 0.0, 1e-10);
}

TEST(Obstacle, ActiveSetSatisfiesKkt) {
  const Problem p = coarse_problem(-1.0, 0);
  const VISolution vi = solve_obstacle(p.sys, p.obstacle);
  EXPECT_FALSE(vi.active_rows.empty());
  EXPECT_TRUE(kkt_report(vi, p.sys, p.obstacle).passes());
}

TEST(Obstacle, PsorAgreesWithActiveSet) {
  const Problem p = coarse_problem(-1.0, 0);
  const VISolution a = solve_obstacle(p.sys, p.obstacle);
  SolveOptions o;
  o.method = SolverMethod::psor;
  const VISolution b = solve_obstacle(p.sys, p.obstacle, o);
  EXPECT_NEAR(a.energy, b.energy, 1e-8);
  EXPECT_TRUE(kkt_report(b, p.sys, p.obstacle).passes());
}

TEST(Obstacle, EnumerationMatchesActiveSet) {
  gen::Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Problem p = coarse_problem(rng.uniform(-3.0, -0.5), 8);
    const VISolution a = solve_obstacle(p.sys, p.obstacle);
    const VISolution e = solve_obstacle_enumerate(p.sys, p.obstacle);
    EXPECT_LT((a.zeta.values - e.zeta.values).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Obstacle, EnumerationRejectsTooManyRows) {
  const Problem p = coarse_problem(-1.0, 20);
  EXPECT_THROW(solve_obstacle_enumerate(p.sys, p.obstacle), Error);
}

TEST(Obstacle, PsorEnergyNeverIncreases) {
  const Problem p = coarse_problem(-1.0, 0);
  SolveOptions o;
  o.method = SolverMethod::psor;
  o.record_energies = true;
  const VISolution b = solve_obstacle(p.sys, p.obstacle, o);
  for (std::size_t k = 1; k < b.energy_history.size(); ++k) {
    EXPECT_LE(b.energy_history[k], b.energy_history[k - 1] + 1e-12);
  }
}

TEST(Separated, RecoveryTracksFullSolveUnderRefinement) {
  const SurfaceChart chart = SurfaceChart::sphere_r2();
  const ShellMaterial mat{1.0, 1.0, 0.01};
  const LoadSpec load{{Bump{Vec2::Zero(), 0.5, -1.0, 3}}, {}};
  double previous = 1e300;
  for (double h : {0.2, 0.1}) {
    const TriMesh m = make_disk_mesh(1.0, h);
    const AssembledSystem sys = assemble(m, chart, mat, load, {true, false});
    const MixedFEField full = solve_linear(sys);
    const double gap = separated_l2_gap(m, full, solve_separated(m, chart, mat, load));
    EXPECT_LT(gap, previous);
    previous = gap;
  }
  EXPECT_LT(previous, 0.1);
}

TEST(Separated, DbreveOnSphereApex) {
  const GeometryAtPoint g = geometry_at(SurfaceChart::sphere_r2(), Vec2::Zero());
  const ElasticityTensor2D a = elasticity_tensor(1.0, 1.0, g);
  // b = -I/2, a^{abst} with lambda = mu = 1 on the identity metric
  const Mat2 b = g.b_ff;
  EXPECT_NEAR(dbreve(a, g), 1.0 / a.form(b, b), 1e-14);
  const ElasticityTensor2D r = reduced_tensor(a, g);
  EXPECT_NEAR(r.form(b, b), 0.0, 1e-12);
}

TEST(SolverMethod, ParseNames) {
  EXPECT_EQ(parse_method("psor"), SolverMethod::psor);
  EXPECT_EQ(parse_method("active_set"), SolverMethod::active_set);
  EXPECT_THROW(parse_method("newton"), Error);
}

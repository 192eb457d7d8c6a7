#pragma once

#include "shellreg/shell_discretization.hpp"

#include <string>
#include <vector>

namespace shellreg {

enum class SolverMethod { psor, active_set };

SolverMethod parse_method(std::string_view text);
std::string_view to_string(SolverMethod m);

struct SolveOptions {
  SolverMethod method = SolverMethod::active_set;
  double tol = 1e-10;
  int max_iterations = 0;          // 0: 50 * nodes sweeps for psor, 200 for active_set
  double omega = 1.6;              // psor over-relaxation
  Vector initial;                  // optional free-dof starting point
  std::vector<int> initial_active; // optional starting active rows (active_set)
  bool record_energies = false;    // psor: recompute the energy after every sweep
};

/// Solution of the discrete variational inequality.
struct VISolution {
  MixedFEField zeta;
  Vector zeta_free;
  Vector multipliers;            // one per obstacle row, >= 0
  std::vector<int> active_rows;  // rows holding with equality
  double energy = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  bool converged = false;
  int degenerate_rows = 0;       // slack and multiplier both ~0, classified inactive
  std::vector<double> energy_history;
};

/// Unconstrained linear problem  K zeta = f.
MixedFEField solve_linear(const AssembledSystem& system);
Vector solve_linear_free(const AssembledSystem& system);

VISolution solve_obstacle(const AssembledSystem& system, const HalfSpaceObstacle& obstacle,
                          const SolveOptions& options = {});

/// Exhaustive search over all active subsets; at most 16 rows.
VISolution solve_obstacle_enumerate(const AssembledSystem& system, const HalfSpaceObstacle& obstacle);

/// Residuals of the three optimality conditions, recomputed from the
/// solution fields only.
struct KktCertificate {
  double min_slack = 0.0;            // feasibility, must be >= -1e-10
  double max_complementarity = 0.0;  // max lambda * slack, must be <= 1e-8
  double min_multiplier = 0.0;
  double stationarity = 0.0;         // |K z - f - C^T lambda| / (1 + |f|), must be <= 1e-8
  int degenerate_rows = 0;

  bool feasible() const { return min_slack >= -1e-10; }
  bool complementary() const { return max_complementarity <= 1e-8 && min_multiplier >= 0.0; }
  bool stationary() const { return stationarity <= 1e-8; }
  bool passes() const { return feasible() && complementary() && stationary(); }
};

KktCertificate kkt_report(const VISolution& solution, const AssembledSystem& system,
                          const HalfSpaceObstacle& obstacle);

/// Wraps a linear solution as a variational-inequality candidate with zero multipliers.
VISolution as_vi_candidate(const AssembledSystem& system, const Vector& zeta_free,
                           const HalfSpaceObstacle& obstacle);

/// C^T lambda as a free-dof vector.
Vector constraint_transpose_times(const AssembledSystem& system, const HalfSpaceObstacle& obstacle,
                                  const Vector& lambda);

/// Tangential solve of the problem with the transverse component eliminated
/// pointwise, plus the transverse recovery.
struct SeparatedSolution {
  MixedFEField zeta;               // tangential from the reduced system; transverse = nodal average of the recovery
  std::vector<double> zeta3_qp;    // recovery at the quadrature points, three per triangle
  std::vector<double> dbreve_qp;
  double dbreve_min = 0.0;
  double dbreve_max = 0.0;
};

/// 1 / (a^{abst} b_st b_ab); throws DbreveSingular below 1e-10.
double dbreve(const ElasticityTensor2D& a, const GeometryAtPoint& g);

/// a^{abst} - dbreve s^{ab} s^{st} with s = a : b.
ElasticityTensor2D reduced_tensor(const ElasticityTensor2D& a, const GeometryAtPoint& g);

SeparatedSolution solve_separated(const TriMesh& mesh, const SurfaceChart& chart, const ShellMaterial& material,
                                  const LoadSpec& load);

/// Relative L2 distance between the transverse component of a full solve and
/// the recovered one.
double separated_l2_gap(const TriMesh& mesh, const MixedFEField& full, const SeparatedSolution& sep);

/// Boundary trace from the tangential gradients, one value per boundary node.
struct TraceFormulaCheck {
  std::vector<double> formula;    // dbreve (s : sym grad zeta + p3/epsilon) with one-sided gradients
  std::vector<double> nodal;      // transverse nodal values of the compared field
  double max_abs_residual = 0.0;
  double relative_residual = 0.0; // max residual / max |nodal transverse| over all nodes
};

TraceFormulaCheck trace_formula_check(const TriMesh& mesh, const SurfaceChart& chart, const ShellMaterial& material,
                                      const LoadSpec& load, const MixedFEField& field);

}  // namespace shellreg

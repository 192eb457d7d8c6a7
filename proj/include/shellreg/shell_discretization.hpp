#pragma once

#include "shellreg/mesh.hpp"
#include "shellreg/surface_geometry.hpp"

#include <Eigen/Sparse>

#include <optional>
#include <vector>

namespace shellreg {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

struct ShellMaterial {
  double lambda = 1.0;
  double mu = 1.0;
  double epsilon = 0.01;  // half-thickness

  void validate() const;
};

/// A * max(0, 1 - |y - c|^2 / r^2)^3 applied to one displacement component (1..3).
struct Bump {
  Vec2 center = Vec2::Zero();
  double radius = 0.5;
  double height = 1.0;
  int component = 3;

  double value(const Vec2& y) const;
};

/// Applied force density, already multiplied out per unit area of the
/// planar domain; enters the load functional as is.
struct LoadSpec {
  std::vector<Bump> bumps;
  Vector nodal;  // optional table, 3 values per mesh node, interpolated piecewise linearly

  /// Bump contribution at y (the nodal table needs element context).
  Vec3 bump_value(const Vec2& y) const;
  bool is_zero() const;
  /// True when the load vanishes on the boundary circle of `mesh`.
  bool h10_flag(const TriMesh& mesh) const;
};

/// Node-major numbering: full index 3*node + component (0-based components).
/// Tangential components at boundary nodes are eliminated; the transverse
/// component is free everywhere.
class DofMap {
 public:
  DofMap() = default;
  explicit DofMap(const TriMesh& mesh);

  int full_size() const { return static_cast<int>(free_of_full_.size()); }
  int free_size() const { return static_cast<int>(full_of_free_.size()); }
  int free_index(int node, int comp) const { return free_of_full_[3 * node + comp]; }
  int full_index(int free) const { return full_of_free_[free]; }
  /// Free dofs of one node, in component order (1 entry on the boundary, 3 inside).
  std::vector<int> node_dofs(int node) const;

  Vector expand(const Vector& free) const;
  Vector restrict_to_free(const Vector& full) const;

 private:
  std::vector<int> free_of_full_;
  std::vector<int> full_of_free_;
};

/// Displacement with covariant components (eta1, eta2, eta3), continuous
/// piecewise linear, stored node-major.
struct MixedFEField {
  Vector values;

  static MixedFEField zero(const TriMesh& mesh) { return {Vector::Zero(3 * mesh.num_nodes())}; }
  double eta(int node, int comp) const { return values[3 * node + comp]; }
  Vec3 at_node(int node) const { return values.segment<3>(3 * node); }
};

/// Point evaluation of a field on its mesh, extended by zero outside the disk.
class FieldEvaluator {
 public:
  FieldEvaluator(const TriMesh& mesh, const Vector& full_values);

  struct Sample {
    Vec3 value = Vec3::Zero();
    Eigen::Matrix<double, 3, 2> grad = Eigen::Matrix<double, 3, 2>::Zero();  // grad(i, a) = d_a eta_i
    bool inside = false;
  };

  Sample sample(const Vec2& y) const;
  Vec3 value(const Vec2& y) const { return sample(y).value; }
  const PointLocator& locator() const { return locator_; }

 private:
  const TriMesh* mesh_;
  const Vector* values_;
  PointLocator locator_;
  std::vector<Eigen::Matrix<double, 2, 3>> grads_;
};

struct QuadraturePoint {
  int triangle = -1;
  Vec3 bary = Vec3::Zero();
  Vec2 y = Vec2::Zero();
  double weight = 0.0;  // dy-measure weight
};

/// Interior three-point rule, exact for quadratics.
std::array<QuadraturePoint, 3> triangle_quadrature(const TriMesh& mesh, int t);

/// gamma(eta) for eta = phi * e_comp with P1 value phi and gradient grad at a point.
Mat2 basis_strain(const GeometryAtPoint& g, double phi, const Vec2& grad, int comp);

struct AssemblyOptions {
  bool require_elliptic = true;
  bool gram_matrices = true;  // also build M_mixed and G
};

/// Free-dof matrices and vectors of the discrete membrane problem.
struct AssembledSystem {
  DofMap dofs;
  double epsilon = 0.0;
  SparseMatrix K;        // epsilon * membrane form
  Vector f;              // load functional
  SparseMatrix M_mixed;  // H1 x H1 x L2 Gram matrix (plain dy)
  SparseMatrix G;        // sum_ab int gamma_ab gamma_ab sqrt(a) dy

  /// 1/2 v.K v - f.v on free dofs.
  double energy(const Vector& v) const { return 0.5 * v.dot(K * v) - f.dot(v); }
};

AssembledSystem assemble(const TriMesh& mesh, const SurfaceChart& chart, const ShellMaterial& material,
                         const LoadSpec& load, const AssemblyOptions& options = {});

/// Load density at a quadrature point (bumps plus interpolated nodal table).
Vec3 load_at(const TriMesh& mesh, const LoadSpec& load, const QuadraturePoint& qp);

struct StrainSample {
  QuadraturePoint qp;
  GeometryAtPoint geom;
  Vec3 eta = Vec3::Zero();
  Mat2 gamma = Mat2::Zero();
};

/// gamma_ab of a field at every quadrature point, computed directly from the
/// interpolated field.
std::vector<StrainSample> gamma_at_quadrature(const TriMesh& mesh, const SurfaceChart& chart,
                                              const MixedFEField& field);

/// Energy of a field by direct quadrature of the membrane energy functional.
double energy_by_quadrature(const TriMesh& mesh, const SurfaceChart& chart, const ShellMaterial& material,
                            const LoadSpec& load, const MixedFEField& field);

struct ObstacleRow {
  int node = -1;
  Vec3 c = Vec3::Zero();  // c_i = a^i(y_n) . q
  double g = 0.0;         // theta(y_n) . q
};

/// Node-wise constraint  c_n . eta(y_n) >= -g_n.
struct HalfSpaceObstacle {
  Vec3 q = Vec3::Zero();
  std::vector<ObstacleRow> rows;

  /// Slack c.eta + g per row for a full-length nodal vector.
  Vector slack(const Vector& full_values) const;
};

/// One row per node (or per listed node).
HalfSpaceObstacle obstacle_rows(const TriMesh& mesh, const SurfaceChart& chart, const Vec3& q,
                                const std::vector<int>& nodes = {});

struct KornReport {
  double sigma_min = 0.0;
  double c0 = 0.0;
  bool dense = true;
};

/// Smallest generalized eigenvalue of G v = sigma M_mixed v.
KornReport korn_constant(const AssembledSystem& system);

}  // namespace shellreg

#include "shellreg/shell_discretization.hpp"

#include "shellreg/sparse_solver.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace shellreg {

void ShellMaterial::validate() const {
  if (!(mu > 0.0)) throw Error(ErrorCode::InvalidArgument, "mu must be positive");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be nonnegative");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
}

double Bump::value(const Vec2& y) const {
  const double s = 1.0 - (y - center).squaredNorm() / (radius * radius);
  return s > 0.0 ? height * s * s * s : 0.0;
}

Vec3 LoadSpec::bump_value(const Vec2& y) const {
  Vec3 p = Vec3::Zero();
  for (const auto& b : bumps) p(b.component - 1) += b.value(y);
  return p;
}

bool LoadSpec::is_zero() const {
  const bool bumps_zero =
      std::all_of(bumps.begin(), bumps.end(), [](const Bump& b) { return b.height == 0.0; });
  return bumps_zero && (nodal.size() == 0 || nodal.isZero(0.0));
}

bool LoadSpec::h10_flag(const TriMesh& mesh) const {
  for (const auto& b : bumps) {
    if (b.height == 0.0) continue;
    const double dc = (b.center - mesh.center).norm();
    if (dc + b.radius > mesh.radius && dc - b.radius < mesh.radius) return false;
  }
  if (nodal.size() > 0) {
    for (int n : mesh.boundary_nodes)
      for (int i = 0; i < 3; ++i)
        if (nodal[3 * n + i] != 0.0) return false;
  }
  return true;
}

DofMap::DofMap(const TriMesh& mesh) {
  free_of_full_.assign(3 * mesh.num_nodes(), -1);
  for (int n = 0; n < mesh.num_nodes(); ++n)
    for (int i = 0; i < 3; ++i) {
      if (i < 2 && mesh.on_boundary[n]) continue;
      free_of_full_[3 * n + i] = static_cast<int>(full_of_free_.size());
      full_of_free_.push_back(3 * n + i);
    }
}

std::vector<int> DofMap::node_dofs(int node) const {
  std::vector<int> out;
  for (int i = 0; i < 3; ++i)
    if (free_of_full_[3 * node + i] >= 0) out.push_back(free_of_full_[3 * node + i]);
  return out;
}

Vector DofMap::expand(const Vector& free) const {
  Vector full = Vector::Zero(full_size());
  for (int k = 0; k < free_size(); ++k) full[full_of_free_[k]] = free[k];
  return full;
}

Vector DofMap::restrict_to_free(const Vector& full) const {
  Vector free(free_size());
  for (int k = 0; k < free_size(); ++k) free[k] = full[full_of_free_[k]];
  return free;
}

FieldEvaluator::FieldEvaluator(const TriMesh& mesh, const Vector& full_values)
    : mesh_(&mesh), values_(&full_values), locator_(mesh) {
  if (full_values.size() != 3 * mesh.num_nodes()) {
    throw Error(ErrorCode::InvalidArgument, "field size does not match mesh");
  }
  grads_.reserve(mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) grads_.push_back(p1_gradients(mesh, t));
}

FieldEvaluator::Sample FieldEvaluator::sample(const Vec2& y) const {
  Sample s;
  const auto hit = locator_.locate(y);
  if (!hit) return s;
  s.inside = true;
  const auto& tri = mesh_->triangles[hit->triangle];
  for (int k = 0; k < 3; ++k) {
    const Vec3 v = values_->segment<3>(3 * tri[k]);
    s.value += hit->bary[k] * v;
    s.grad += v * grads_[hit->triangle].col(k).transpose();
  }
  return s;
}

std::array<QuadraturePoint, 3> triangle_quadrature(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const double w = mesh.triangle_area(t) / 3.0;
  std::array<QuadraturePoint, 3> out;
  for (int q = 0; q < 3; ++q) {
    Vec3 b = Vec3::Constant(1.0 / 6.0);
    b[q] = 2.0 / 3.0;
    out[q].triangle = t;
    out[q].bary = b;
    out[q].y = b[0] * mesh.nodes[tri[0]] + b[1] * mesh.nodes[tri[1]] + b[2] * mesh.nodes[tri[2]];
    out[q].weight = w;
  }
  return out;
}

Mat2 basis_strain(const GeometryAtPoint& g, double phi, const Vec2& grad, int comp) {
  if (comp == 2) return -g.b_ff * phi;
  Mat2 s = -g.christoffel[comp] * phi;
  for (int a = 0; a < 2; ++a) {
    s(comp, a) += 0.5 * grad(a);
    s(a, comp) += 0.5 * grad(a);
  }
  return s;
}

Vec3 load_at(const TriMesh& mesh, const LoadSpec& load, const QuadraturePoint& qp) {
  Vec3 p = load.bump_value(qp.y);
  if (load.nodal.size() > 0) {
    const auto& tri = mesh.triangles[qp.triangle];
    for (int k = 0; k < 3; ++k) p += qp.bary[k] * load.nodal.segment<3>(3 * tri[k]);
  }
  return p;
}

namespace {

// Compressed pattern coupling every free dof of a node with every free dof
// of the node's neighbours (including itself).
SparseMatrix node_pattern(const TriMesh& mesh, const DofMap& dofs) {
  std::vector<std::set<int>> adj(mesh.num_nodes());
  for (const auto& tri : mesh.triangles)
    for (int a : tri)
      for (int b : tri) adj[a].insert(b);
  std::vector<std::vector<int>> nd(mesh.num_nodes());
  for (int n = 0; n < mesh.num_nodes(); ++n) nd[n] = dofs.node_dofs(n);
  const int n_free = dofs.free_size();
  std::vector<int> outer(n_free + 1, 0);
  std::vector<int> inner;
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    std::vector<int> rows;
    for (int m : adj[n]) rows.insert(rows.end(), nd[m].begin(), nd[m].end());
    for (int col : nd[n]) {
      inner.insert(inner.end(), rows.begin(), rows.end());
      outer[col + 1] = static_cast<int>(inner.size());
    }
  }
  std::vector<double> zeros(inner.size(), 0.0);
  Eigen::Map<const SparseMatrix> view(n_free, n_free, static_cast<Eigen::Index>(inner.size()), outer.data(),
                                      inner.data(), zeros.data());
  return SparseMatrix(view);
}

void check_geometry(const GeometryAtPoint& g, bool require_elliptic) {
  if (require_elliptic && !(g.kappa > 0.0)) {
    throw Error(ErrorCode::NotElliptic, "Gaussian curvature not positive at a quadrature point");
  }
}

}  // namespace

AssembledSystem assemble(const TriMesh& mesh, const SurfaceChart& chart, const ShellMaterial& material,
                         const LoadSpec& load, const AssemblyOptions& options) {
  material.validate();
  if (load.nodal.size() != 0 && load.nodal.size() != 3 * mesh.num_nodes()) {
    throw Error(ErrorCode::InvalidArgument, "nodal load table does not match the mesh");
  }
  AssembledSystem sys;
  sys.dofs = DofMap(mesh);
  sys.epsilon = material.epsilon;
  sys.K = node_pattern(mesh, sys.dofs);
  if (options.gram_matrices) {
    sys.M_mixed = sys.K;
    sys.G = sys.K;
  }
  sys.f = Vector::Zero(sys.dofs.free_size());

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto grads = p1_gradients(mesh, t);
    int ld[9];
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i) ld[3 * k + i] = sys.dofs.free_index(tri[k], i);
    Eigen::Matrix<double, 9, 9> ke = Eigen::Matrix<double, 9, 9>::Zero();
    Eigen::Matrix<double, 9, 9> ge = Eigen::Matrix<double, 9, 9>::Zero();
    Eigen::Matrix<double, 9, 9> me = Eigen::Matrix<double, 9, 9>::Zero();
    Eigen::Matrix<double, 9, 1> fe = Eigen::Matrix<double, 9, 1>::Zero();
    for (const auto& qp : triangle_quadrature(mesh, t)) {
      const auto g = geometry_at(chart, qp.y);
      check_geometry(g, options.require_elliptic);
      const auto A = elasticity_tensor(material.lambda, material.mu, g);
      const double w = qp.weight * g.area_el;
      std::array<Mat2, 9> strain;
      std::array<Mat2, 9> stress;
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i) {
          strain[3 * k + i] = basis_strain(g, qp.bary[k], grads.col(k), i);
          stress[3 * k + i] = A.contract(strain[3 * k + i]);
        }
      const Vec3 p = load_at(mesh, load, qp);
      for (int r = 0; r < 9; ++r) {
        fe[r] += w * p[r % 3] * qp.bary[r / 3];
        for (int c = 0; c < 9; ++c) {
          ke(r, c) += material.epsilon * w * (stress[c].array() * strain[r].array()).sum();
          if (options.gram_matrices) ge(r, c) += w * (strain[c].array() * strain[r].array()).sum();
        }
      }
      if (options.gram_matrices) {
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            const double mass = qp.weight * qp.bary[k] * qp.bary[l];
            const double stiff = qp.weight * grads.col(k).dot(grads.col(l));
            for (int i = 0; i < 3; ++i) me(3 * k + i, 3 * l + i) += mass + (i < 2 ? stiff : 0.0);
          }
      }
    }
    for (int r = 0; r < 9; ++r) {
      if (ld[r] < 0) continue;
      sys.f[ld[r]] += fe[r];
      for (int c = 0; c < 9; ++c) {
        if (ld[c] < 0) continue;
        sys.K.coeffRef(ld[r], ld[c]) += ke(r, c);
        if (options.gram_matrices) {
          sys.G.coeffRef(ld[r], ld[c]) += ge(r, c);
          sys.M_mixed.coeffRef(ld[r], ld[c]) += me(r, c);
        }
      }
    }
  }
  return sys;
}

std::vector<StrainSample> gamma_at_quadrature(const TriMesh& mesh, const SurfaceChart& chart,
                                              const MixedFEField& field) {
  std::vector<StrainSample> out;
  out.reserve(3 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto grads = p1_gradients(mesh, t);
    Eigen::Matrix<double, 3, 2> deta = Eigen::Matrix<double, 3, 2>::Zero();
    for (int k = 0; k < 3; ++k) deta += field.at_node(tri[k]) * grads.col(k).transpose();
    for (const auto& qp : triangle_quadrature(mesh, t)) {
      StrainSample s;
      s.qp = qp;
      s.geom = geometry_at(chart, qp.y);
      for (int k = 0; k < 3; ++k) s.eta += qp.bary[k] * field.at_node(tri[k]);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          double v = 0.5 * (deta(a, b) + deta(b, a)) - s.geom.b_ff(a, b) * s.eta[2];
          for (int sg = 0; sg < 2; ++sg) v -= s.geom.christoffel[sg](a, b) * s.eta[sg];
          s.gamma(a, b) = v;
        }
      out.push_back(s);
    }
  }
  return out;
}

double energy_by_quadrature(const TriMesh& mesh, const SurfaceChart& chart, const ShellMaterial& material,
                            const LoadSpec& load, const MixedFEField& field) {
  double e = 0.0;
  for (const auto& s : gamma_at_quadrature(mesh, chart, field)) {
    const auto A = elasticity_tensor(material.lambda, material.mu, s.geom);
    const double w = s.qp.weight * s.geom.area_el;
    e += w * (0.5 * material.epsilon * A.form(s.gamma, s.gamma) - load_at(mesh, load, s.qp).dot(s.eta));
  }
  return e;
}

Vector HalfSpaceObstacle::slack(const Vector& full_values) const {
  Vector s(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    s[r] = rows[r].c.dot(full_values.segment<3>(3 * rows[r].node)) + rows[r].g;
  }
  return s;
}

HalfSpaceObstacle obstacle_rows(const TriMesh& mesh, const SurfaceChart& chart, const Vec3& q,
                                const std::vector<int>& nodes) {
  if (!(q.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "q must be nonzero");
  HalfSpaceObstacle obs;
  obs.q = q;
  std::vector<int> list = nodes;
  if (list.empty()) {
    list.resize(mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n) list[n] = n;
  }
  for (int n : list) {
    const auto g = geometry_at(chart, mesh.nodes[n]);
    ObstacleRow row;
    row.node = n;
    for (int i = 0; i < 3; ++i) row.c[i] = g.a_contra[i].dot(q);
    row.g = g.theta.dot(q);
    if (!(row.g > 0.0)) {
      throw Error(ErrorCode::ObstacleViolatedByRest,
                  "theta.q = " + std::to_string(row.g) + " at node " + std::to_string(n));
    }
    obs.rows.push_back(row);
  }
  return obs;
}

KornReport korn_constant(const AssembledSystem& system) {
  if (system.G.rows() == 0 || system.M_mixed.rows() == 0) {
    throw Error(ErrorCode::InvalidArgument, "system was assembled without Gram matrices");
  }
  KornReport rep;
  const int n = static_cast<int>(system.G.rows());
  if (n <= 4000) {
    const Eigen::MatrixXd G(system.G), M(system.M_mixed);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(G, M, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::KornFailure, "generalized eigensolve failed");
    rep.sigma_min = es.eigenvalues().minCoeff();
    rep.dense = true;
  } else {
    // Inverse iteration G x_{k+1} = M x_k.
    SpdSolver ldlt;
    try {
      ldlt.compute(system.G);
    } catch (const Error&) {
      throw Error(ErrorCode::KornFailure, "strain Gram matrix is not positive definite");
    }
    Vector x = Vector::Ones(n);
    double sigma = 0.0;
    for (int it = 0; it < 2000; ++it) {
      x = ldlt.solve(system.M_mixed * x);
      x /= std::sqrt(x.dot(system.M_mixed * x));
      const double next = x.dot(system.G * x);
      if (it > 0 && std::abs(next - sigma) <= 1e-12 * std::abs(next)) {
        sigma = next;
        break;
      }
      sigma = next;
    }
    rep.sigma_min = sigma;
    rep.dense = false;
  }
  if (!(rep.sigma_min > 1e-12)) {
    throw Error(ErrorCode::KornFailure, "smallest eigenvalue " + std::to_string(rep.sigma_min) + " <= 1e-12");
  }
  rep.c0 = 1.0 / std::sqrt(rep.sigma_min);
  return rep;
}

}  // namespace shellreg

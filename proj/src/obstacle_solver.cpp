#include "shellreg/obstacle_solver.hpp"

#include "shellreg/sparse_solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace shellreg {

SolverMethod parse_method(std::string_view text) {
  if (text == "psor") return SolverMethod::psor;
  if (text == "active_set") return SolverMethod::active_set;
  throw Error(ErrorCode::InvalidArgument, "unknown solver method '" + std::string(text) + "'");
}

std::string_view to_string(SolverMethod m) { return m == SolverMethod::psor ? "psor" : "active_set"; }

namespace {

// An obstacle row restricted to the free dofs of its node.
struct FreeRow {
  int row = -1;
  std::vector<int> dofs;
  Eigen::VectorXd c;
  double g = 0.0;
};

std::vector<FreeRow> free_rows(const AssembledSystem& sys, const HalfSpaceObstacle& obs) {
  std::vector<FreeRow> out;
  for (std::size_t r = 0; r < obs.rows.size(); ++r) {
    const auto& row = obs.rows[r];
    FreeRow fr;
    fr.row = static_cast<int>(r);
    fr.g = row.g;
    std::vector<double> c;
    for (int i = 0; i < 3; ++i) {
      const int d = sys.dofs.free_index(row.node, i);
      if (d < 0) continue;
      fr.dofs.push_back(d);
      c.push_back(row.c[i]);
    }
    fr.c = Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    out.push_back(std::move(fr));
  }
  return out;
}

// Orthonormal matrix whose first column is u / |u|.
Eigen::MatrixXd frame(const Eigen::VectorXd& u) {
  const int n = static_cast<int>(u.size());
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd e = u / u.norm();
  if (n == 1) {
    q(0, 0) = e(0);
    return q;
  }
  // Householder reflection mapping e_0 to e.
  Eigen::VectorXd v = e;
  v(0) -= 1.0;
  if (v.norm() > 1e-14) {
    q -= 2.0 * v * v.transpose() / v.squaredNorm();
  }
  return q;
}

VISolution finish(const AssembledSystem& sys, const HalfSpaceObstacle& obs, const Vector& z_free,
                  const Vector& lambda) {
  VISolution sol;
  sol.zeta_free = z_free;
  sol.zeta.values = sys.dofs.expand(z_free);
  sol.multipliers = lambda;
  sol.energy = sys.energy(z_free);
  const Vector slack = obs.slack(sol.zeta.values);
  for (int r = 0; r < static_cast<int>(obs.rows.size()); ++r) {
    if (lambda[r] > 0.0) sol.active_rows.push_back(r);
    else if (std::abs(slack[r]) <= 1e-12 * (1.0 + obs.rows[r].g)) {
      sol.active_rows.push_back(r);
      ++sol.degenerate_rows;
    }
  }
  return sol;
}

VISolution solve_active_set(const AssembledSystem& sys, const HalfSpaceObstacle& obs, const SolveOptions& opt) {
  const int n = sys.dofs.free_size();
  const auto rows = free_rows(sys, obs);
  const int m = static_cast<int>(rows.size());

  // Block-diagonal change of variables that turns each row into a bound on
  // the first local coordinate.
  std::vector<Eigen::Triplet<double>> qt;
  std::vector<char> covered(n, 0);
  std::vector<int> bound_dof(m, -1);
  std::vector<double> bound(m, 0.0), cnorm(m, 0.0);
  for (int r = 0; r < m; ++r) {
    const auto& fr = rows[r];
    cnorm[r] = fr.c.norm();
    if (cnorm[r] == 0.0) continue;  // row cannot bind: g > 0
    const Eigen::MatrixXd q = frame(fr.c);
    for (int a = 0; a < q.rows(); ++a)
      for (int b = 0; b < q.cols(); ++b)
        if (q(a, b) != 0.0) qt.emplace_back(fr.dofs[a], fr.dofs[b], q(a, b));
    for (int d : fr.dofs) covered[d] = 1;
    bound_dof[r] = fr.dofs[0];
    bound[r] = -fr.g / cnorm[r];
  }
  for (int d = 0; d < n; ++d)
    if (!covered[d]) qt.emplace_back(d, d, 1.0);
  SparseMatrix Q(n, n);
  Q.setFromTriplets(qt.begin(), qt.end());
  SparseMatrix Kh = SparseMatrix(Q.transpose()) * sys.K * Q;
  Kh.makeCompressed();
  const Vector fh = Q.transpose() * sys.f;

  std::vector<char> active(m, 0);
  if (!opt.initial_active.empty()) {
    for (int r : opt.initial_active)
      if (r >= 0 && r < m && bound_dof[r] >= 0) active[r] = 1;
  } else if (opt.initial.size() == n) {
    const Vector zi = Q.transpose() * opt.initial;
    for (int r = 0; r < m; ++r)
      if (bound_dof[r] >= 0 && zi[bound_dof[r]] < bound[r]) active[r] = 1;
  }

  SpdSolver solver;
  solver.analyze(Kh);
  std::set<std::vector<char>> seen;
  Vector z = Vector::Zero(n), mu = Vector::Zero(m);
  const int max_it = opt.max_iterations > 0 ? opt.max_iterations : 200;
  bool converged = false;
  int it = 0;
  for (; it < max_it; ++it) {
    std::vector<char> is_active_dof(n, 0);
    Vector z_fixed = Vector::Zero(n);
    for (int r = 0; r < m; ++r)
      if (active[r]) {
        is_active_dof[bound_dof[r]] = 1;
        z_fixed[bound_dof[r]] = bound[r];
      }
    SparseMatrix A = Kh;
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator e(A, k); e; ++e)
        if (is_active_dof[e.row()] || is_active_dof[e.col()]) e.valueRef() = e.row() == e.col() ? 1.0 : 0.0;
    Vector rhs = fh - Kh * z_fixed;
    for (int d = 0; d < n; ++d)
      if (is_active_dof[d]) rhs[d] = z_fixed[d];
    solver.factorize(A);
    z = solver.solve(rhs);
    const Vector grad = Kh * z - fh;
    std::vector<char> next(m, 0);
    for (int r = 0; r < m; ++r) {
      mu[r] = 0.0;
      if (bound_dof[r] < 0) continue;
      const int d = bound_dof[r];
      if (active[r]) {
        mu[r] = grad[d];
        next[r] = mu[r] > 0.0;
      } else {
        next[r] = z[d] < bound[r] - 1e-13 * (1.0 + std::abs(bound[r]));
      }
    }
    if (next == active) {
      converged = true;
      ++it;
      break;
    }
    seen.insert(active);
    if (seen.count(next)) {
      // Cycling: apply only the change on the lowest row index.
      for (int r = 0; r < m; ++r)
        if (next[r] != active[r]) {
          active[r] = next[r];
          break;
        }
    } else {
      active = next;
    }
  }
  Vector lambda = Vector::Zero(m);
  for (int r = 0; r < m; ++r)
    if (active[r] && mu[r] > 0.0) lambda[r] = mu[r] / cnorm[r];
  VISolution sol = finish(sys, obs, Q * z, lambda);
  sol.iterations = it;
  sol.converged = converged;
  sol.kkt_residual = 0.0;
  const auto cert = kkt_report(sol, sys, obs);
  sol.kkt_residual = std::max({cert.stationarity, std::max(0.0, -cert.min_slack), cert.max_complementarity});
  return sol;
}

struct NodeBlock {
  std::vector<int> dofs;
  Eigen::MatrixXd k;
  Eigen::MatrixXd kinv;
  int row = -1;  // index into free rows
};

// Multipliers that best explain a gradient under the current slacks; returns
// the relative KKT residual.
double psor_kkt(const AssembledSystem& sys, const std::vector<FreeRow>& rows, const Vector& z, const Vector& slack,
                Vector& lambda) {
  Vector res = sys.K * z - sys.f;
  double compl_max = 0.0, slack_min = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& fr = rows[r];
    lambda[r] = 0.0;
    slack_min = std::min(slack_min, slack[r]);
    const double cc = fr.c.squaredNorm();
    if (cc == 0.0) continue;
    Eigen::VectorXd rn(fr.dofs.size());
    for (std::size_t a = 0; a < fr.dofs.size(); ++a) rn[a] = res[fr.dofs[a]];
    const double lam = std::max(0.0, fr.c.dot(rn) / cc);
    const double as_active = std::max((rn - lam * fr.c).norm(), lam * std::abs(slack[r]));
    if (as_active < rn.norm()) {
      lambda[r] = lam;
      for (std::size_t a = 0; a < fr.dofs.size(); ++a) res[fr.dofs[a]] -= lam * fr.c[a];
      compl_max = std::max(compl_max, lam * std::abs(slack[r]));
    }
  }
  const double stat = res.norm() / (1.0 + sys.f.norm());
  return std::max({stat, compl_max, std::max(0.0, -slack_min)});
}

VISolution solve_psor(const AssembledSystem& sys, const HalfSpaceObstacle& obs, const SolveOptions& opt) {
  const int n = sys.dofs.free_size();
  const auto rows = free_rows(sys, obs);
  const int m = static_cast<int>(rows.size());
  const int nodes = sys.dofs.full_size() / 3;
  std::vector<NodeBlock> blocks(nodes);
  for (int v = 0; v < nodes; ++v) {
    blocks[v].dofs = sys.dofs.node_dofs(v);
    const int s = static_cast<int>(blocks[v].dofs.size());
    blocks[v].k.resize(s, s);
    for (int a = 0; a < s; ++a)
      for (int b = 0; b < s; ++b) blocks[v].k(a, b) = sys.K.coeff(blocks[v].dofs[a], blocks[v].dofs[b]);
    blocks[v].kinv = blocks[v].k.inverse();
  }
  for (int r = 0; r < m; ++r) {
    const int node = obs.rows[r].node;
    if (rows[r].c.norm() == 0.0) continue;
    if (blocks[node].row >= 0) throw Error(ErrorCode::InvalidArgument, "psor supports one row per node");
    blocks[node].row = r;
  }

  Vector z = opt.initial.size() == n ? opt.initial : Vector::Zero(n);
  Vector slack(m);
  auto update_slack = [&] {
    for (int r = 0; r < m; ++r) {
      double s = rows[r].g;
      for (std::size_t a = 0; a < rows[r].dofs.size(); ++a) s += rows[r].c[a] * z[rows[r].dofs[a]];
      slack[r] = s;
    }
  };
  update_slack();
  for (int r = 0; r < m; ++r)
    if (slack[r] < -1e-12 * (1.0 + rows[r].g)) throw Error(ErrorCode::InfeasibleStart, "starting point violates a row");

  VISolution sol;
  if (opt.record_energies) sol.energy_history.push_back(sys.energy(z));
  const int max_sweeps = opt.max_iterations > 0 ? opt.max_iterations : 50 * nodes;
  Vector lambda = Vector::Zero(m);
  double kkt = psor_kkt(sys, rows, z, slack, lambda);
  int sweep = 0;
  for (; sweep < max_sweeps && kkt > opt.tol; ++sweep) {
    for (int v = 0; v < nodes; ++v) {
      const auto& b = blocks[v];
      const int s = static_cast<int>(b.dofs.size());
      Eigen::VectorXd eta(s), r(s);
      for (int a = 0; a < s; ++a) {
        const int d = b.dofs[a];
        eta[a] = z[d];
        double kz = 0.0;
        for (SparseMatrix::InnerIterator e(sys.K, d); e; ++e) kz += e.value() * z[e.row()];
        r[a] = sys.f[d] - kz;
      }
      r += b.k * eta;
      const Eigen::VectorXd xstar = b.kinv * r;
      auto project = [&](Eigen::VectorXd x) {
        if (b.row < 0) return x;
        const auto& fr = rows[b.row];
        const double viol = fr.c.dot(x) + fr.g;
        if (viol >= 0.0) return x;
        const Eigen::VectorXd kc = b.kinv * fr.c;
        x -= (viol / fr.c.dot(kc)) * kc;
        return x;
      };
      auto local_energy = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXd d = x - xstar;
        return 0.5 * d.dot(b.k * d);
      };
      Eigen::VectorXd x = project(eta + opt.omega * (xstar - eta));
      double de = local_energy(x) - local_energy(eta);
      if (de > 0.0) {
        x = project(xstar);
        de = local_energy(x) - local_energy(eta);
      }
      for (int a = 0; a < s; ++a) z[b.dofs[a]] = x[a];
    }
    update_slack();
    if (opt.record_energies) sol.energy_history.push_back(sys.energy(z));
    kkt = psor_kkt(sys, rows, z, slack, lambda);
  }
  // Rows ending marginally on the wrong side are put back on their plane.
  for (int r = 0; r < m; ++r) {
    if (slack[r] >= 0.0 || rows[r].c.norm() == 0.0) continue;
    const auto& fr = rows[r];
    for (std::size_t a = 0; a < fr.dofs.size(); ++a) z[fr.dofs[a]] -= slack[r] * fr.c[a] / fr.c.squaredNorm();
  }
  update_slack();
  kkt = psor_kkt(sys, rows, z, slack, lambda);
  VISolution out = finish(sys, obs, z, lambda);
  out.energy_history = std::move(sol.energy_history);
  out.iterations = sweep;
  out.kkt_residual = kkt;
  out.converged = kkt <= opt.tol;
  return out;
}

}  // namespace

Vector solve_linear_free(const AssembledSystem& system) {
  if (system.f.isZero(0.0)) return Vector::Zero(system.f.size());
  SpdSolver solver;
  solver.compute(system.K);
  Vector x = solver.solve(system.f);
  const double rel = (system.K * x - system.f).norm() / system.f.norm();
  if (!(rel <= 1e-10)) {
    // one step of iterative refinement before giving up
    x += solver.solve(system.f - system.K * x);
    if (!((system.K * x - system.f).norm() <= 1e-10 * system.f.norm())) {
      throw Error(ErrorCode::SingularSystem, "linear solve residual above 1e-10");
    }
  }
  return x;
}

MixedFEField solve_linear(const AssembledSystem& system) {
  return MixedFEField{system.dofs.expand(solve_linear_free(system))};
}

VISolution solve_obstacle(const AssembledSystem& system, const HalfSpaceObstacle& obstacle,
                          const SolveOptions& options) {
  if (options.initial.size() != 0 && options.initial.size() != system.dofs.free_size()) {
    throw Error(ErrorCode::InvalidArgument, "initial guess has the wrong size");
  }
  if (options.method == SolverMethod::psor) return solve_psor(system, obstacle, options);
  return solve_active_set(system, obstacle, options);
}

VISolution solve_obstacle_enumerate(const AssembledSystem& system, const HalfSpaceObstacle& obstacle) {
  const auto rows = free_rows(system, obstacle);
  const int m = static_cast<int>(rows.size());
  if (m > 16) throw Error(ErrorCode::InvalidArgument, "enumeration limited to 16 rows");
  const int n = system.dofs.free_size();
  const Eigen::MatrixXd K(system.K);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, n);
  Vector g(m);
  for (int r = 0; r < m; ++r) {
    for (std::size_t a = 0; a < rows[r].dofs.size(); ++a) C(r, rows[r].dofs[a]) = rows[r].c[a];
    g[r] = rows[r].g;
  }
  const Vector x0 = ldlt.solve(Vector(system.f));
  const Eigen::MatrixXd KiCt = ldlt.solve(Eigen::MatrixXd(C.transpose()));
  double best_energy = std::numeric_limits<double>::infinity();
  Vector best_x = x0, best_lambda = Vector::Zero(m);
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> s;
    for (int r = 0; r < m; ++r)
      if (mask & (1u << r)) s.push_back(r);
    Vector lam = Vector::Zero(m);
    Vector x = x0;
    if (!s.empty()) {
      const int k = static_cast<int>(s.size());
      Eigen::MatrixXd S(k, k);
      Vector rhs(k);
      for (int a = 0; a < k; ++a) {
        rhs[a] = -g[s[a]] - C.row(s[a]).dot(x0);
        for (int b = 0; b < k; ++b) S(a, b) = C.row(s[a]).dot(KiCt.col(s[b]));
      }
      const Vector ls = S.fullPivLu().solve(rhs);
      for (int a = 0; a < k; ++a) {
        lam[s[a]] = ls[a];
        x += ls[a] * KiCt.col(s[a]);
      }
    }
    if (lam.size() > 0 && lam.minCoeff() < -1e-12) continue;
    const Vector slack = C * x + g;
    if (m > 0 && slack.minCoeff() < -1e-12) continue;
    const double e = 0.5 * x.dot(K * x) - system.f.dot(x);
    if (e < best_energy) {
      best_energy = e;
      best_x = x;
      best_lambda = lam.cwiseMax(0.0);
    }
  }
  VISolution sol = finish(system, obstacle, best_x, best_lambda);
  sol.iterations = 1 << m;
  sol.converged = std::isfinite(best_energy);
  return sol;
}

Vector constraint_transpose_times(const AssembledSystem& system, const HalfSpaceObstacle& obstacle,
                                  const Vector& lambda) {
  Vector out = Vector::Zero(system.dofs.free_size());
  for (std::size_t r = 0; r < obstacle.rows.size(); ++r) {
    const auto& row = obstacle.rows[r];
    for (int i = 0; i < 3; ++i) {
      const int d = system.dofs.free_index(row.node, i);
      if (d >= 0) out[d] += lambda[r] * row.c[i];
    }
  }
  return out;
}

KktCertificate kkt_report(const VISolution& solution, const AssembledSystem& system,
                          const HalfSpaceObstacle& obstacle) {
  KktCertificate cert;
  const Vector full = system.dofs.expand(solution.zeta_free);
  const Vector slack = obstacle.slack(full);
  const int m = static_cast<int>(obstacle.rows.size());
  Vector lambda = solution.multipliers.size() == m ? solution.multipliers : Vector::Zero(m);
  cert.min_slack = m > 0 ? slack.minCoeff() : 0.0;
  cert.min_multiplier = m > 0 ? lambda.minCoeff() : 0.0;
  for (int r = 0; r < m; ++r) {
    cert.max_complementarity = std::max(cert.max_complementarity, std::abs(lambda[r] * slack[r]));
    if (std::abs(slack[r]) <= 1e-12 * (1.0 + obstacle.rows[r].g) && std::abs(lambda[r]) <= 1e-12) {
      ++cert.degenerate_rows;
    }
  }
  const Vector res = system.K * solution.zeta_free - system.f - constraint_transpose_times(system, obstacle, lambda);
  cert.stationarity = res.norm() / (1.0 + system.f.norm());
  return cert;
}

VISolution as_vi_candidate(const AssembledSystem& system, const Vector& zeta_free, const HalfSpaceObstacle& obstacle) {
  VISolution sol = finish(system, obstacle, zeta_free, Vector::Zero(obstacle.rows.size()));
  sol.converged = true;
  return sol;
}

double dbreve(const ElasticityTensor2D& a, const GeometryAtPoint& g) {
  const double denom = a.form(g.b_ff, g.b_ff);
  if (!(denom >= 1e-10)) throw Error(ErrorCode::DbreveSingular, "a:b:b = " + std::to_string(denom) + " < 1e-10");
  return 1.0 / denom;
}

ElasticityTensor2D reduced_tensor(const ElasticityTensor2D& a, const GeometryAtPoint& g) {
  const double db = dbreve(a, g);
  const Mat2 s = a.contract(g.b_ff);
  ElasticityTensor2D out = a;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out.values[((i * 2 + j) * 2 + k) * 2 + l] -= db * s(i, j) * s(k, l);
  return out;
}

SeparatedSolution solve_separated(const TriMesh& mesh, const SurfaceChart& chart, const ShellMaterial& material,
                                  const LoadSpec& load) {
  material.validate();
  std::vector<int> tdof(2 * mesh.num_nodes(), -1);
  int nt = 0;
  for (int v = 0; v < mesh.num_nodes(); ++v)
    if (!mesh.on_boundary[v]) {
      tdof[2 * v] = nt++;
      tdof[2 * v + 1] = nt++;
    }
  std::vector<Eigen::Triplet<double>> trip;
  Vector rhs = Vector::Zero(nt);
  SeparatedSolution sep;
  sep.dbreve_min = std::numeric_limits<double>::infinity();
  sep.dbreve_max = 0.0;
  struct QpData {
    GeometryAtPoint g;
    ElasticityTensor2D a;
    double db;
    double p3;
  };
  std::vector<QpData> qdata;
  qdata.reserve(3 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto grads = p1_gradients(mesh, t);
    for (const auto& qp : triangle_quadrature(mesh, t)) {
      const auto g = geometry_at(chart, qp.y);
      const auto a = elasticity_tensor(material.lambda, material.mu, g);
      const double db = dbreve(a, g);
      sep.dbreve_min = std::min(sep.dbreve_min, db);
      sep.dbreve_max = std::max(sep.dbreve_max, db);
      const auto ah = reduced_tensor(a, g);
      const Mat2 s = a.contract(g.b_ff);
      const Vec3 p = load_at(mesh, load, qp);
      qdata.push_back({g, a, db, p[2]});
      const double w = qp.weight * g.area_el;
      std::array<Mat2, 6> strain;
      for (int k = 0; k < 3; ++k)
        for (int al = 0; al < 2; ++al) strain[2 * k + al] = basis_strain(g, qp.bary[k], grads.col(k), al);
      for (int r = 0; r < 6; ++r) {
        const int dr = tdof[2 * tri[r / 2] + r % 2];
        if (dr < 0) continue;
        rhs[dr] += w * (p[r % 2] * qp.bary[r / 2] + db * p[2] * (s.array() * strain[r].array()).sum());
        const Mat2 st = ah.contract(strain[r]);
        for (int c = 0; c < 6; ++c) {
          const int dc = tdof[2 * tri[c / 2] + c % 2];
          if (dc < 0) continue;
          trip.emplace_back(dr, dc, material.epsilon * w * (st.array() * strain[c].array()).sum());
        }
      }
    }
  }
  SparseMatrix K(nt, nt);
  K.setFromTriplets(trip.begin(), trip.end());
  Vector zt = Vector::Zero(nt);
  if (!rhs.isZero(0.0)) {
    SpdSolver solver;
    solver.compute(K);
    zt = solver.solve(rhs);
  }
  sep.zeta = MixedFEField::zero(mesh);
  for (int v = 0; v < mesh.num_nodes(); ++v)
    for (int al = 0; al < 2; ++al)
      if (tdof[2 * v + al] >= 0) sep.zeta.values[3 * v + al] = zt[tdof[2 * v + al]];

  // transverse recovery
  std::vector<double> node_sum(mesh.num_nodes(), 0.0), node_w(mesh.num_nodes(), 0.0);
  sep.zeta3_qp.resize(qdata.size());
  sep.dbreve_qp.resize(qdata.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto grads = p1_gradients(mesh, t);
    Mat2 dz = Mat2::Zero();  // dz(al, be) = d_be zeta_al
    for (int k = 0; k < 3; ++k)
      for (int al = 0; al < 2; ++al) dz.row(al) += sep.zeta.values[3 * tri[k] + al] * grads.col(k).transpose();
    const auto qps = triangle_quadrature(mesh, t);
    double tri_avg = 0.0;
    for (int q = 0; q < 3; ++q) {
      const auto& d = qdata[3 * t + q];
      Vec2 zeta_t = Vec2::Zero();
      for (int k = 0; k < 3; ++k) zeta_t += qps[q].bary[k] * sep.zeta.values.segment<2>(3 * tri[k]);
      Mat2 gh = 0.5 * (dz + dz.transpose());
      for (int sg = 0; sg < 2; ++sg) gh -= d.g.christoffel[sg] * zeta_t[sg];
      const Mat2 s = d.a.contract(d.g.b_ff);
      const double z3 = d.db * ((s.array() * gh.array()).sum() + d.p3 / material.epsilon);
      sep.zeta3_qp[3 * t + q] = z3;
      sep.dbreve_qp[3 * t + q] = d.db;
      tri_avg += z3 / 3.0;
    }
    const double area = mesh.triangle_area(t);
    for (int k = 0; k < 3; ++k) {
      node_sum[tri[k]] += area * tri_avg;
      node_w[tri[k]] += area;
    }
  }
  for (int v = 0; v < mesh.num_nodes(); ++v) sep.zeta.values[3 * v + 2] = node_sum[v] / node_w[v];
  return sep;
}

double separated_l2_gap(const TriMesh& mesh, const MixedFEField& full, const SeparatedSolution& sep) {
  double num = 0.0, den = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto qps = triangle_quadrature(mesh, t);
    for (int q = 0; q < 3; ++q) {
      double z3 = 0.0;
      for (int k = 0; k < 3; ++k) z3 += qps[q].bary[k] * full.eta(tri[k], 2);
      const double d = z3 - sep.zeta3_qp[3 * t + q];
      num += qps[q].weight * d * d;
      den += qps[q].weight * z3 * z3;
    }
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

TraceFormulaCheck trace_formula_check(const TriMesh& mesh, const SurfaceChart& chart, const ShellMaterial& material,
                                      const LoadSpec& load, const MixedFEField& field) {
  std::vector<Mat2> grad_sum(mesh.num_nodes(), Mat2::Zero());
  std::vector<double> area_sum(mesh.num_nodes(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    if (!(mesh.on_boundary[tri[0]] || mesh.on_boundary[tri[1]] || mesh.on_boundary[tri[2]])) continue;
    const auto grads = p1_gradients(mesh, t);
    Mat2 dz = Mat2::Zero();
    for (int k = 0; k < 3; ++k)
      for (int al = 0; al < 2; ++al) dz.row(al) += field.eta(tri[k], al) * grads.col(k).transpose();
    const double area = mesh.triangle_area(t);
    for (int k = 0; k < 3; ++k)
      if (mesh.on_boundary[tri[k]]) {
        grad_sum[tri[k]] += area * dz;
        area_sum[tri[k]] += area;
      }
  }
  TraceFormulaCheck out;
  double scale = 0.0;
  for (int v = 0; v < mesh.num_nodes(); ++v) scale = std::max(scale, std::abs(field.eta(v, 2)));
  for (int v : mesh.boundary_nodes) {
    const Mat2 dz = grad_sum[v] / area_sum[v];
    const auto g = geometry_at(chart, mesh.nodes[v]);
    const auto a = elasticity_tensor(material.lambda, material.mu, g);
    const Mat2 s = a.contract(g.b_ff);
    double p3 = load.bump_value(mesh.nodes[v])[2];
    if (load.nodal.size() > 0) p3 += load.nodal[3 * v + 2];
    const Mat2 sym = 0.5 * (dz + dz.transpose());
    const double f = dbreve(a, g) * ((s.array() * sym.array()).sum() + p3 / material.epsilon);
    out.formula.push_back(f);
    out.nodal.push_back(field.eta(v, 2));
    out.max_abs_residual = std::max(out.max_abs_residual, std::abs(f - field.eta(v, 2)));
  }
  out.relative_residual = scale > 0.0 ? out.max_abs_residual / scale : out.max_abs_residual;
  return out;
}

}  // namespace shellreg

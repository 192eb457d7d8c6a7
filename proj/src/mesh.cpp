#include "shellreg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace shellreg {

namespace {

int ring_size(int k) { return k == 0 ? 1 : 4 * static_cast<int>(std::ceil(1.5 * k)); }

double compute_h_mesh(const TriMesh& m) {
  double h = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) h = std::max(h, m.triangle_diameter(t));
  return h;
}

}  // namespace

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  const Vec2 e1 = nodes[tri[1]] - nodes[tri[0]];
  const Vec2 e2 = nodes[tri[2]] - nodes[tri[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

double TriMesh::triangle_diameter(int t) const {
  const auto& tri = triangles[t];
  return std::max({(nodes[tri[0]] - nodes[tri[1]]).norm(), (nodes[tri[1]] - nodes[tri[2]]).norm(),
                   (nodes[tri[2]] - nodes[tri[0]]).norm()});
}

int TriMesh::rotate_quarter(int node) const {
  if (node == 0) return 0;
  const auto it = std::upper_bound(ring_offsets.begin(), ring_offsets.end(), node);
  const int k = static_cast<int>(it - ring_offsets.begin()) - 1;
  const int n = ring_offsets[k + 1] - ring_offsets[k];
  return ring_offsets[k] + (node - ring_offsets[k] + n / 4) % n;
}

TriMesh make_disk_mesh_rings(double radius, int rings, const Vec2& center) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "mesh radius must be positive");
  if (rings < 2) throw Error(ErrorCode::MeshTooCoarse, "fewer than 3 interior nodes");
  TriMesh m;
  m.center = center;
  m.radius = radius;
  m.ring_offsets.push_back(0);
  m.nodes.push_back(center);
  for (int k = 1; k <= rings; ++k) {
    m.ring_offsets.push_back(static_cast<int>(m.nodes.size()));
    const int n = ring_size(k);
    const double r = k == rings ? radius : radius * k / rings;
    for (int j = 0; j < n; ++j) {
      const double t = 2.0 * std::numbers::pi * j / n;
      m.nodes.push_back(center + r * Vec2(std::cos(t), std::sin(t)));
    }
  }
  m.ring_offsets.push_back(static_cast<int>(m.nodes.size()));

  // center fan
  {
    const int n = ring_size(1);
    for (int j = 0; j < n; ++j) m.triangles.push_back({0, 1 + j, 1 + (j + 1) % n});
  }
  // Merge neighbouring rings by comparing the angles of the next nodes as
  // exact integer fractions.
  for (int k = 2; k <= rings; ++k) {
    const int in0 = m.ring_offsets[k - 1], out0 = m.ring_offsets[k];
    const int ni = ring_size(k - 1), no = ring_size(k);
    int i = 0, j = 0;
    while (i < ni || j < no) {
      const long long next_out = static_cast<long long>(j + 1) * ni;
      const long long next_in = static_cast<long long>(i + 1) * no;
      if (j < no && (i >= ni || next_out <= next_in)) {
        m.triangles.push_back({in0 + i % ni, out0 + j, out0 + (j + 1) % no});
        ++j;
      } else {
        m.triangles.push_back({in0 + i, out0 + j % no, in0 + (i + 1) % ni});
        ++i;
      }
    }
  }
  m.on_boundary.assign(m.nodes.size(), 0);
  for (int v = m.ring_offsets[rings]; v < m.num_nodes(); ++v) {
    m.boundary_nodes.push_back(v);
    m.on_boundary[v] = 1;
  }
  m.h_mesh = compute_h_mesh(m);
  return m;
}

TriMesh make_disk_mesh(double radius, double target_h, const Vec2& center) {
  if (!(radius > 0.0) || !(target_h > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "radius and target_h must be positive");
  }
  if (target_h >= radius) throw Error(ErrorCode::MeshTooCoarse, "target_h must be below the radius");
  int rings = std::max(2, static_cast<int>(std::ceil(radius / target_h)));
  TriMesh m = make_disk_mesh_rings(radius, rings, center);
  if (m.h_mesh > target_h) {
    rings = std::max(rings + 1, static_cast<int>(std::floor(rings * m.h_mesh / target_h)));
    m = make_disk_mesh_rings(radius, rings, center);
    while (m.h_mesh > target_h) m = make_disk_mesh_rings(radius, ++rings, center);
  }
  return m;
}

MeshValidation validate_mesh(const TriMesh& mesh) {
  MeshValidation v;
  v.min_area = std::numeric_limits<double>::infinity();
  v.positively_oriented = true;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mesh.triangle_area(t);
    v.min_area = std::min(v.min_area, a);
    if (!(a > 0.0)) v.positively_oriented = false;
  }
  v.boundary_exact = true;
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const bool at_radius = std::abs((mesh.nodes[n] - mesh.center).norm() - mesh.radius) <= 1e-9;
    if (at_radius != static_cast<bool>(mesh.on_boundary[n])) v.boundary_exact = false;
  }
  std::map<std::pair<int, int>, int> edges;
  for (const auto& tri : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e], b = tri[(e + 1) % 3];
      ++edges[{std::min(a, b), std::max(a, b)}];
    }
  v.conforming = true;
  for (const auto& [e, count] : edges) {
    if (count > 2) v.conforming = false;
    if (count == 1 && !(mesh.on_boundary[e.first] && mesh.on_boundary[e.second])) v.conforming = false;
  }
  return v;
}

Eigen::Matrix<double, 2, 3> p1_gradients(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const Vec2 p0 = mesh.nodes[tri[0]], p1 = mesh.nodes[tri[1]], p2 = mesh.nodes[tri[2]];
  Eigen::Matrix2d J;
  J.col(0) = p1 - p0;
  J.col(1) = p2 - p0;
  const Eigen::Matrix2d Jit = J.inverse().transpose();
  Eigen::Matrix<double, 2, 3> g;
  g.col(1) = Jit.col(0);
  g.col(2) = Jit.col(1);
  g.col(0) = -g.col(1) - g.col(2);
  return g;
}

PointLocator::PointLocator(const TriMesh& mesh) : mesh_(&mesh) {
  const double r = mesh.radius;
  origin_ = mesh.center - Vec2(r, r);
  cell_ = std::max(mesh.h_mesh, 1e-12);
  nx_ = static_cast<int>(std::ceil(2.0 * r / cell_)) + 1;
  const int ncell = nx_ * nx_;
  inv_.resize(mesh.triangles.size());
  std::vector<std::vector<int>> buckets(ncell);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    Eigen::Matrix2d J;
    J.col(0) = mesh.nodes[tri[1]] - mesh.nodes[tri[0]];
    J.col(1) = mesh.nodes[tri[2]] - mesh.nodes[tri[0]];
    inv_[t] = J.inverse();
    Vec2 lo = mesh.nodes[tri[0]], hi = lo;
    for (int k = 1; k < 3; ++k) {
      lo = lo.cwiseMin(mesh.nodes[tri[k]]);
      hi = hi.cwiseMax(mesh.nodes[tri[k]]);
    }
    const int i0 = std::clamp(static_cast<int>((lo.x() - origin_.x()) / cell_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((hi.x() - origin_.x()) / cell_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((lo.y() - origin_.y()) / cell_), 0, nx_ - 1);
    const int j1 = std::clamp(static_cast<int>((hi.y() - origin_.y()) / cell_), 0, nx_ - 1);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j) buckets[i * nx_ + j].push_back(t);
  }
  cell_start_.assign(ncell + 1, 0);
  for (int c = 0; c < ncell; ++c) cell_start_[c + 1] = cell_start_[c] + static_cast<int>(buckets[c].size());
  cell_items_.reserve(cell_start_[ncell]);
  for (const auto& b : buckets) cell_items_.insert(cell_items_.end(), b.begin(), b.end());
}

Vec3 PointLocator::barycentric(int t, const Vec2& y) const {
  const Vec2 l = inv_[t] * (y - mesh_->nodes[mesh_->triangles[t][0]]);
  return Vec3(1.0 - l.x() - l.y(), l.x(), l.y());
}

std::optional<PointLocator::Hit> PointLocator::locate(const Vec2& y) const {
  const int ci = static_cast<int>(std::floor((y.x() - origin_.x()) / cell_));
  const int cj = static_cast<int>(std::floor((y.y() - origin_.y()) / cell_));
  if (ci >= 0 && ci < nx_ && cj >= 0 && cj < nx_) {
    const int c = ci * nx_ + cj;
    for (int k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
      const int t = cell_items_[k];
      const Vec3 b = barycentric(t, y);
      if (b.minCoeff() >= -1e-12) return Hit{t, b, true};
    }
  }
  if ((y - mesh_->center).norm() >= mesh_->radius) return std::nullopt;
  // Sliver between the boundary polygon and the circle.
  Hit best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj) {
      const int i = ci + di, j = cj + dj;
      if (i < 0 || i >= nx_ || j < 0 || j >= nx_) continue;
      const int c = i * nx_ + j;
      for (int k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
        const int t = cell_items_[k];
        const Vec3 b = barycentric(t, y);
        if (b.minCoeff() > best_score) {
          best_score = b.minCoeff();
          best = Hit{t, b, false};
        }
      }
    }
  if (best.triangle < 0) return std::nullopt;
  return best;
}

}  // namespace shellreg

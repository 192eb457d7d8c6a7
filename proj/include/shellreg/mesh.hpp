#pragma once

#include "shellreg/types.hpp"

#include <array>
#include <optional>
#include <vector>

namespace shellreg {

/// Concentric-ring triangulation of a closed disk.
///
/// Node 0 is the center; ring k (k = 1..rings) holds 4*ceil(1.5 k) nodes at
/// radius k*radius/rings, starting on the positive y1 axis and running
/// counter-clockwise.  Every ring count is a multiple of four, so a quarter
/// turn about the center maps the mesh onto itself.
struct TriMesh {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> boundary_nodes;
  std::vector<char> on_boundary;
  std::vector<int> ring_offsets;  // first node of ring k; ring_offsets[rings + 1] == nodes.size()
  double h_mesh = 0.0;            // max triangle diameter

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int rings() const { return static_cast<int>(ring_offsets.size()) - 2; }
  double triangle_area(int t) const;
  double triangle_diameter(int t) const;
  /// Index of the node obtained by rotating `node` a quarter turn counter-clockwise.
  int rotate_quarter(int node) const;
};

/// Smallest ring count whose triangles all have diameter <= target_h.
TriMesh make_disk_mesh(double radius, double target_h, const Vec2& center = Vec2::Zero());

/// Mesh with a prescribed ring count.
TriMesh make_disk_mesh_rings(double radius, int rings, const Vec2& center = Vec2::Zero());

struct MeshValidation {
  double min_area = 0.0;
  bool positively_oriented = false;
  bool boundary_exact = false;  // boundary nodes are exactly those at distance radius
  bool conforming = false;      // every edge has one or two triangles; single ones lie on the boundary
  bool ok() const { return positively_oriented && boundary_exact && conforming && min_area >= 1e-14; }
};

MeshValidation validate_mesh(const TriMesh& mesh);

/// P1 shape-function gradients of one triangle, one column per vertex.
Eigen::Matrix<double, 2, 3> p1_gradients(const TriMesh& mesh, int t);

/// Bucket-grid point location on a TriMesh.
class PointLocator {
 public:
  explicit PointLocator(const TriMesh& mesh);

  struct Hit {
    int triangle = -1;
    Vec3 bary = Vec3::Zero();
    bool inside = true;  // false when the point lies in the sliver between the
                         // boundary polygon and the circle (linear extrapolation)
  };

  /// Containing triangle of y.  Points of the open disk outside the polygon
  /// get the nearest boundary triangle; points with |y - center| >= radius
  /// return nullopt.
  std::optional<Hit> locate(const Vec2& y) const;

  const TriMesh& mesh() const { return *mesh_; }

 private:
  Vec3 barycentric(int t, const Vec2& y) const;

  const TriMesh* mesh_;
  Vec2 origin_;
  double cell_ = 1.0;
  int nx_ = 1;
  std::vector<int> cell_start_;
  std::vector<int> cell_items_;
  std::vector<Eigen::Matrix2d> inv_;  // maps y - p0 to (l1, l2)
};

}  // namespace shellreg

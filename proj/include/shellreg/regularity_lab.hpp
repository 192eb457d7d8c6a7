#pragma once

#include "shellreg/shell_discretization.hpp"

#include <functional>
#include <string>
#include <vector>

namespace shellreg {

using ScalarFn = std::function<double(const Vec2&)>;

enum class QuotientKind { forward, backward, second, shift };

/// Finite-difference quotient in direction e_rho (rho = 1 or 2) with step h.
///   forward   (xi(y + h e) - xi(y)) / h
///   backward  (xi(y - h e) - xi(y)) / (-h)
///   second    (xi(y + h e) - 2 xi(y) + xi(y - h e)) / h^2
///   shift     xi(y + h e)
struct QuotientOperator {
  int rho = 1;
  double h = 0.1;
  QuotientKind kind = QuotientKind::forward;

  Vec2 step() const { return rho == 1 ? Vec2(h, 0.0) : Vec2(0.0, h); }
  double apply(const ScalarFn& f, const Vec2& y) const;
  /// Magnitude of the quantities combined by apply(); rounding errors of
  /// apply() are a small multiple of machine epsilon times this.
  double rounding_scale(const ScalarFn& f, const Vec2& y) const;
  /// The quotient of f as a new point-evaluable function.
  ScalarFn operator()(ScalarFn f) const;
};

/// Throws RegionOverflow unless every point of eval_region translated by the
/// operator stays in the closed field domain.
void require_translates_inside(const QuotientOperator& op, const Disk& eval_region, const Disk& field_domain);

/// Pointwise application with a domain check per point.
std::vector<double> apply_quotient(const QuotientOperator& op, const ScalarFn& f, const std::vector<Vec2>& points,
                                   const Disk& field_domain);

/// Worst residual of each identity over the points, relative to the rounding
/// scale of the terms involved.
struct IdentityResiduals {
  double second_as_composition = 0.0;  // delta = D_{-h} D_h
  double forward_product = 0.0;
  double backward_product = 0.0;
  double second_product = 0.0;
};

IdentityResiduals product_rules_check(const ScalarFn& v, const ScalarFn& w, int rho, double h,
                                      const std::vector<Vec2>& points, const Disk& field_domain);

/// Square lattice covering a disk; sums over it approximate integrals.
struct Lattice {
  Vec2 origin = Vec2::Zero();
  double spacing = 0.01;
  int n = 0;  // n x n points

  static Lattice covering(const Disk& d, double spacing);
  Vec2 point(int i, int j) const { return origin + spacing * Vec2(i, j); }
};

/// |sum (D_h u) v + sum u (D_{-h} v)| / (sum |(D_h u) v| + sum |u (D_{-h} v)|)
/// over the lattice points of `region`; u and v must vanish within h of its edge.
double integration_by_parts_residual(const ScalarFn& u, const ScalarFn& v, int rho, double h, const Disk& region,
                                     double spacing);

struct SmoothScalar {
  ScalarFn value;
  std::function<Vec2(const Vec2&)> grad;
};

/// Lattice H1 norm over a disk.
double lattice_h1_norm(const SmoothScalar& f, const Disk& region, double spacing);

struct ConvergenceCheck {
  std::vector<double> quotient_errors;  // |D_h v_k - D_h v|_{H1(w0)}
  std::vector<double> bounds;           // (2/h) |v_k - v|_{H1(w_tilde)}
  bool respects_bound = false;
  bool decreasing = false;
};

ConvergenceCheck quotient_convergence_check(const std::vector<SmoothScalar>& sequence, const SmoothScalar& limit,
                                            int rho, double h, const Disk& w0, const Disk& w_tilde, double spacing);

/// C2 cutoff: 1 on the inner disk, 0 outside the support disk, quintic
/// smoothstep in between.
struct CutoffFunction {
  Vec2 center = Vec2::Zero();
  double inner_radius = 0.05;
  double support_radius = 0.12;

  double value(const Vec2& y) const;
  Vec2 grad(const Vec2& y) const;
};

/// A deformation field vartheta: y -> E^3 with the Hessian of vartheta . q.
struct Vartheta {
  std::function<Vec3(const Vec2&)> value;
  std::function<Mat2(const Vec2&)> hessian_q;
};

/// vartheta = chart (its Hessian along q from the chart's second derivatives).
Vartheta vartheta_from_chart(const SurfaceChart& chart, const Vec3& q);

/// Largest Hessian eigenvalue of vartheta . q over a 41 x 41 sample of the disk.
double max_hessian_eigenvalue(const Vartheta& v, const Disk& region, int density = 41);

/// g(y) = 1 - 1/2 exp(r (y1 - y01) + r (y2 - y02)) and a shift B such that
/// (B - chart . q) g is convex on the certified disk around y0.
struct Convexifier {
  Vec2 y0 = Vec2::Zero();
  Vec3 q = Vec3::Zero();
  double r = 1.0;
  double B = 0.0;
  double B0 = 0.0;        // min g on the certified disk
  double radius = 0.0;    // certified disk radius
  double min_hessian_eigenvalue = 0.0;
  int candidates_tried = 0;
  bool certified = false;

  double g(const Vec2& y) const;
  Vec2 grad_g(const Vec2& y) const;
  Mat2 hess_g(const Vec2& y) const;
  /// (chart - B q/|q|^2) g, whose component along q is concave on the certified disk.
  Vartheta convexified(const SurfaceChart& chart) const;
  std::string to_text() const;
};

/// Searches r in {1, 2, 4, ..., 1024}, B below min chart . q and a disk radius
/// shrinking from `radius` until the sampled certificate passes.
Convexifier build_convexifier(const SurfaceChart& chart, const Vec3& q, const Vec2& y0, double radius);

/// Covariant components of a field at lattice points (only the points inside
/// `support` are meaningful).
struct LatticeField {
  Lattice lattice;
  std::vector<Vec3> eta;

  const Vec3& at(int i, int j) const { return eta[i * lattice.n + j]; }
  Vec3& at(int i, int j) { return eta[i * lattice.n + j]; }
};

struct FeasibilityReport {
  int points_checked = 0;
  int violations = 0;
  double min_value = 0.0;  // min (vartheta + eta_rho,i a^i) . q over checked points
};

/// Builds eta_rho with eta_rho,j a^j = eta_i a^i + varrho phi1 delta_h(eta_i a^i)
/// at the lattice points of w1 and checks the confinement there.  h must be a
/// multiple of the lattice spacing.
FeasibilityReport feasibility_perturbation(const Vartheta& vartheta, const SurfaceChart& chart, const Vec3& q,
                                           const Disk& w0, const Disk& w1, const CutoffFunction& phi1, int rho,
                                           double varrho, double h, const LatticeField& eta,
                                           LatticeField* perturbed = nullptr);

struct EpsilonReport {
  std::vector<double> h;
  std::vector<double> epsilon;
  double inf_second_difference = 0.0;  // over the h-grid, rho and the sampled closed w1
  double max_contravariant_q = 0.0;    // max_i sup |a^i . q| over the outer disk
};

/// epsilon(h) = h^2 inf delta(-vartheta . q) / (2 max_i |a^i . q|).
EpsilonReport epsilon_of_h(const Vartheta& vartheta, const SurfaceChart& chart, const Vec3& q, const Disk& w1,
                           const Disk& outer, const std::vector<double>& h_grid, int density = 41);

/// Value and gradient of a displacement at a point.
struct FieldSample {
  Vec3 value = Vec3::Zero();
  Eigen::Matrix<double, 3, 2> grad = Eigen::Matrix<double, 3, 2>::Zero();
};
using FieldSampler = std::function<FieldSample(const Vec2&)>;

/// The finite-element field inside its disk, zero outside.
FieldSampler zero_extension(const FieldEvaluator& field);

struct ScanSettings {
  Disk u1;                  // integration region
  Disk field_domain;        // where the sampled field is defined
  Disk shell{Vec2::Zero(), 1.0};  // triangles straddling its edge are subdivided
  double gap_d = 0.0;       // every h must stay below it
  double h_mesh = 0.0;      // every h must be at least twice this
  double quad_h = 0.0;      // quadrature mesh size on u1 (0: h_mesh / 2)
  double bound_ratio = 2.0;
  std::string label = "boundary";
};

struct QuotientScanReport {
  std::string label;
  std::vector<double> h_values;
  std::vector<double> norms[2];  // per rho
  std::vector<double> epsilon_of_h;
  double ratio = 0.0;            // max / min over all norms
  double bound_ratio = 2.0;
  bool bounded_verdict = false;
};

/// Discrete H1 x H1 x L2(u1) norms of D_{rho h}(phi zeta) for every h and rho.
QuotientScanReport uniform_bound_scan(const FieldSampler& zeta, const CutoffFunction& phi,
                                      const std::vector<double>& h_list, const ScanSettings& settings);

double max_boundary_transverse(const TriMesh& mesh, const MixedFEField& field);

struct RadialProfile {
  std::vector<double> depth;
  std::vector<double> value;  // |zeta3| at each depth
  double plateau = 0.0;       // value at the deepest sample
  double layer_width = 0.0;   // first depth where |zeta3| >= plateau / 2
};

/// |zeta3| sampled along the inward ray from the boundary point in `direction`.
RadialProfile radial_profile(const TriMesh& mesh, const MixedFEField& field, const Vec2& direction, double step,
                             double max_depth);

}  // namespace shellreg

#pragma once

#include "shellreg/types.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace shellreg {

/// Partial derivatives of a chart y -> theta(y) up to third order.
/// d2[a][b] = d_a d_b theta, d3[a][b][c] = d_a d_b d_c theta.
struct ChartJet {
  Vec3 value = Vec3::Zero();
  std::array<Vec3, 2> d1{Vec3::Zero(), Vec3::Zero()};
  std::array<std::array<Vec3, 2>, 2> d2{};
  std::array<std::array<std::array<Vec3, 2>, 2>, 2> d3{};
};

/// Scalar jet of a height function z = f(y), used by graph charts.
struct ScalarJet {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
  std::array<Mat2, 2> third{Mat2::Zero(), Mat2::Zero()};  // third[a](b,c)
};

enum class ChartKind { sphere_r2, ellipsoid_abc, custom };

/// Closed-form immersion of a planar domain into E^3 with exact derivatives.
///
/// Charts are immutable values; copying shares the underlying callables.
class SurfaceChart {
 public:
  using JetFn = std::function<ChartJet(const Vec2&)>;
  using DefinedFn = std::function<bool(const Vec2&)>;

  /// theta(y) = (y1, y2, sqrt(4 - |y|^2)): upper hemisphere of radius 2.
  static SurfaceChart sphere_r2();

  /// theta(y) = (y1, y2, c sqrt(1 - y1^2/a^2 - y2^2/b^2)), semi-axes a, b, c.
  static SurfaceChart ellipsoid(double a, double b, double c);

  /// Graph chart theta(y) = (y1, y2, f(y)).
  static SurfaceChart graph(std::string name, std::function<ScalarJet(const Vec2&)> f,
                            DefinedFn defined = nullptr);

  /// Plane theta(y) = (y1, y2, height).
  static SurfaceChart flat(double height);

  static SurfaceChart custom(std::string name, JetFn jet, DefinedFn defined = nullptr);

  /// Parses `sphere_r2` or `ellipsoid:a=..,b=..,c=..`.
  static SurfaceChart parse(std::string_view text);

  ChartKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::vector<double>& params() const { return params_; }

  /// Canonical selection string; round-trips through parse() for the
  /// built-in kinds.
  std::string spec_string() const;

  bool defined_at(const Vec2& y) const { return defined_ ? defined_(y) : true; }
  Vec3 eval(const Vec2& y) const { return jet(y).value; }
  ChartJet jet(const Vec2& y) const;

 private:
  SurfaceChart(ChartKind kind, std::string name, std::vector<double> params, JetFn jet,
               DefinedFn defined);

  ChartKind kind_;
  std::string name_;
  std::vector<double> params_;
  JetFn jet_;
  DefinedFn defined_;
};

/// Every differential-geometric coefficient of the surface at one point.
struct GeometryAtPoint {
  Vec2 y = Vec2::Zero();
  Vec3 theta = Vec3::Zero();
  std::array<Vec3, 3> a_cov{};
  std::array<Vec3, 3> a_contra{};
  Mat2 a_ff = Mat2::Identity();      // a_{ab}
  Mat2 a_ff_inv = Mat2::Identity();  // a^{ab}
  Mat2 b_ff = Mat2::Zero();          // b_{ab}
  Mat2 b_mixed = Mat2::Zero();       // b_mixed(a, b) = b_a^b = a^{b s} b_{a s}
  std::array<Mat2, 2> christoffel{Mat2::Zero(), Mat2::Zero()};  // christoffel[s](a, b)
  double area_el = 1.0;              // sqrt(det a_{ab})
  double kappa = 0.0;
};

/// Contravariant components a^{abst} of the two-dimensional elasticity tensor.
struct ElasticityTensor2D {
  double lambda = 0.0;
  double mu = 0.0;
  std::array<double, 16> values{};

  double operator()(int a, int b, int s, int t) const { return values[((a * 2 + b) * 2 + s) * 2 + t]; }

  /// Contraction (A : t)^{ab} = a^{abst} t_{st}.
  Mat2 contract(const Mat2& t) const;
  /// Quadratic form a^{abst} t_{st} u_{ab}.
  double form(const Mat2& t, const Mat2& u) const { return (contract(t).array() * u.array()).sum(); }
};

struct CovariantBasis {
  Vec3 a1, a2, a3;
};

CovariantBasis covariant_basis(const SurfaceChart& chart, const Vec2& y);

GeometryAtPoint geometry_at(const SurfaceChart& chart, const Vec2& y);

/// a^{abst} = 4 lambda mu / (lambda + 2 mu) a^{ab} a^{st} + 2 mu (a^{as} a^{bt} + a^{at} a^{bs}).
ElasticityTensor2D elasticity_tensor(double lambda, double mu, const GeometryAtPoint& geom);

/// Shell domain: an open disk centered at the origin.
struct PlanarDomain {
  double radius = 1.0;

  Disk disk() const { return Disk{Vec2::Zero(), radius}; }
};

/// Sample points covering a closed disk: an n x n grid clipped to the disk
/// plus 4n points on the boundary circle.  Deterministic order.
std::vector<Vec2> sample_closed_disk(const Disk& disk, int density);

struct EllipticityReport {
  double kappa_min = 0.0;
  bool is_elliptic = false;
};

EllipticityReport check_ellipticity(const SurfaceChart& chart, const PlanarDomain& domain,
                                    int sample_density = 101);

struct DensityConditionReport {
  double min_theta_q = 0.0;
  double min_a3_q = 0.0;
  bool holds = false;
};

DensityConditionReport check_density_condition(const SurfaceChart& chart, const PlanarDomain& domain,
                                                const Vec3& q, int sample_density = 101);

/// Evidence that the chart extends to the closed outer disk: (a) it stays an
/// immersion, (b) elliptic, (c) theta . q > 0, and (d) a3 . q > 0 whenever
/// that already held on the inner disk.
struct ProlongationCertificate {
  PlanarDomain inner;
  PlanarDomain outer;
  Vec3 q = Vec3::Zero();
  double min_normal_length_outer = 0.0;  // min |a1 ^ a2|
  double kappa_min_outer = 0.0;
  double theta_dot_q_min_outer = 0.0;
  double a3_dot_q_min_inner = 0.0;
  double a3_dot_q_min_outer = 0.0;
  bool holds_a = false;
  bool holds_b = false;
  bool holds_c = false;
  bool holds_d = false;
  bool d_antecedent = false;  // min over the inner disk of a3.q > 0

  bool all_hold() const { return holds_a && holds_b && holds_c && holds_d; }
  std::string to_text() const;
};

ProlongationCertificate prolong(const SurfaceChart& chart, const PlanarDomain& inner,
                                const PlanarDomain& outer, const Vec3& q, int sample_density = 101);

/// Inputs of the gap constant: w1 cc w0 cc w_tilde, and the shell domain w.
struct GapSets {
  Disk w1;
  Disk w0;
  Disk w_tilde;
  Disk w;
};

struct GapConstant {
  double d = 0.0;
  double dist_w1_w0 = 0.0;
  double dist_w0_wtilde = 0.0;
  double diam_w1_in_w = 0.0;
  double diam_w1_outside_w = 0.0;
};

/// Half the minimum of the two boundary distances and the two diameters,
/// computed on 720-gon boundary approximations.
GapConstant gap_constant(const GapSets& sets, int segments = 720);

}  // namespace shellreg

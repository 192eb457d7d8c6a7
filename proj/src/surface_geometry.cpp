#include "shellreg/surface_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace shellreg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateImmersion: return "DegenerateImmersion";
    case ErrorCode::NotElliptic: return "NotElliptic";
    case ErrorCode::ChartUndefinedOnOuter: return "ChartUndefinedOnOuter";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::NotCompactlyContained: return "NotCompactlyContained";
    case ErrorCode::MeshTooCoarse: return "MeshTooCoarse";
    case ErrorCode::ObstacleViolatedByRest: return "ObstacleViolatedByRest";
    case ErrorCode::KornFailure: return "KornFailure";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::InfeasibleStart: return "InfeasibleStart";
    case ErrorCode::DbreveSingular: return "DbreveSingular";
    case ErrorCode::RegionOverflow: return "RegionOverflow";
    case ErrorCode::NotConcave: return "NotConcave";
    case ErrorCode::RhoTooLarge: return "RhoTooLarge";
    case ErrorCode::SearchExhausted: return "SearchExhausted";
    case ErrorCode::ScanTooCoarse: return "ScanTooCoarse";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

ChartJet graph_jet(const ScalarJet& f, const Vec2& y) {
  ChartJet j;
  j.value = Vec3(y.x(), y.y(), f.value);
  j.d1[0] = Vec3(1.0, 0.0, f.grad(0));
  j.d1[1] = Vec3(0.0, 1.0, f.grad(1));
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      j.d2[a][b] = Vec3(0.0, 0.0, f.hess(a, b));
      for (int c = 0; c < 2; ++c) j.d3[a][b][c] = Vec3(0.0, 0.0, f.third[a](b, c));
    }
  }
  return j;
}

// f = c sqrt(u), u = 1 - y1^2/A1 - y2^2/A2.
ScalarJet ellipsoid_height(double a, double b, double c, const Vec2& y) {
  const double A[2] = {a * a, b * b};
  const double u = 1.0 - y(0) * y(0) / A[0] - y(1) * y(1) / A[1];
  if (!(u > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "chart evaluated outside its domain of definition");
  }
  double du[2], ddu[2][2];
  for (int i = 0; i < 2; ++i) {
    du[i] = -2.0 * y(i) / A[i];
    for (int k = 0; k < 2; ++k) ddu[i][k] = (i == k) ? -2.0 / A[i] : 0.0;
  }
  const double s = std::sqrt(u);
  const double um1 = 1.0 / s;          // u^{-1/2}
  const double um3 = um1 / u;          // u^{-3/2}
  const double um5 = um3 / u;          // u^{-5/2}
  ScalarJet f;
  f.value = c * s;
  for (int i = 0; i < 2; ++i) {
    f.grad(i) = 0.5 * c * um1 * du[i];
    for (int k = 0; k < 2; ++k) {
      f.hess(i, k) = c * (0.5 * um1 * ddu[i][k] - 0.25 * um3 * du[i] * du[k]);
      for (int l = 0; l < 2; ++l) {
        f.third[i](k, l) =
            c * (-0.25 * um3 * (ddu[i][k] * du[l] + ddu[i][l] * du[k] + ddu[k][l] * du[i]) +
                 0.375 * um5 * du[i] * du[k] * du[l]);
      }
    }
  }
  return f;
}

double parse_number(std::string_view s) {
  std::string tmp(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tmp, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != tmp.size()) {
    throw Error(ErrorCode::InvalidArgument, "not a number: '" + tmp + "'");
  }
  return v;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

SurfaceChart::SurfaceChart(ChartKind kind, std::string name, std::vector<double> params, JetFn jet,
                           DefinedFn defined)
    : kind_(kind), name_(std::move(name)), params_(std::move(params)), jet_(std::move(jet)),
      defined_(std::move(defined)) {}

SurfaceChart SurfaceChart::sphere_r2() {
  auto chart = ellipsoid(2.0, 2.0, 2.0);
  chart.kind_ = ChartKind::sphere_r2;
  chart.name_ = "sphere_r2";
  chart.params_ = {};
  return chart;
}

SurfaceChart SurfaceChart::ellipsoid(double a, double b, double c) {
  if (!(a > 0.0 && b > 0.0 && c > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "ellipsoid axis lengths must be positive");
  }
  auto jet = [a, b, c](const Vec2& y) { return graph_jet(ellipsoid_height(a, b, c, y), y); };
  auto defined = [a, b](const Vec2& y) {
    return 1.0 - y(0) * y(0) / (a * a) - y(1) * y(1) / (b * b) > 0.0;
  };
  return SurfaceChart(ChartKind::ellipsoid_abc, "ellipsoid", {a, b, c}, jet, defined);
}

SurfaceChart SurfaceChart::graph(std::string name, std::function<ScalarJet(const Vec2&)> f,
                                 DefinedFn defined) {
  auto jet = [f = std::move(f)](const Vec2& y) { return graph_jet(f(y), y); };
  return SurfaceChart(ChartKind::custom, std::move(name), {}, jet, std::move(defined));
}

SurfaceChart SurfaceChart::flat(double height) {
  return graph("flat", [height](const Vec2&) {
    ScalarJet f;
    f.value = height;
    return f;
  });
}

SurfaceChart SurfaceChart::custom(std::string name, JetFn jet, DefinedFn defined) {
  return SurfaceChart(ChartKind::custom, std::move(name), {}, std::move(jet), std::move(defined));
}

SurfaceChart SurfaceChart::parse(std::string_view text) {
  if (text == "sphere_r2") return sphere_r2();
  constexpr std::string_view prefix = "ellipsoid:";
  if (text.substr(0, prefix.size()) == prefix) {
    double axes[3] = {0.0, 0.0, 0.0};
    bool seen[3] = {false, false, false};
    std::string_view rest = text.substr(prefix.size());
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq != 1) {
        throw Error(ErrorCode::InvalidArgument, "bad ellipsoid parameter '" + std::string(item) + "'");
      }
      const int idx = item[0] == 'a' ? 0 : item[0] == 'b' ? 1 : item[0] == 'c' ? 2 : -1;
      if (idx < 0) {
        throw Error(ErrorCode::InvalidArgument, "unknown ellipsoid parameter '" + std::string(item) + "'");
      }
      axes[idx] = parse_number(item.substr(2));
      seen[idx] = true;
    }
    if (!(seen[0] && seen[1] && seen[2])) {
      throw Error(ErrorCode::InvalidArgument, "ellipsoid needs a, b and c");
    }
    return ellipsoid(axes[0], axes[1], axes[2]);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown surface '" + std::string(text) + "'");
}

std::string SurfaceChart::spec_string() const {
  switch (kind_) {
    case ChartKind::sphere_r2: return "sphere_r2";
    case ChartKind::ellipsoid_abc:
      return "ellipsoid:a=" + format_number(params_[0]) + ",b=" + format_number(params_[1]) +
             ",c=" + format_number(params_[2]);
    case ChartKind::custom: return "custom:" + name_;
  }
  return name_;
}

ChartJet SurfaceChart::jet(const Vec2& y) const { return jet_(y); }

Mat2 ElasticityTensor2D::contract(const Mat2& t) const {
  Mat2 out = Mat2::Zero();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double s = 0.0;
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) s += (*this)(a, b, c, d) * t(c, d);
      out(a, b) = s;
    }
  return out;
}

CovariantBasis covariant_basis(const SurfaceChart& chart, const Vec2& y) {
  const ChartJet j = chart.jet(y);
  const Vec3 n = j.d1[0].cross(j.d1[1]);
  const double len = n.norm();
  if (len < 1e-12) {
    throw Error(ErrorCode::DegenerateImmersion, "|a1 ^ a2| < 1e-12");
  }
  return {j.d1[0], j.d1[1], n / len};
}

GeometryAtPoint geometry_at(const SurfaceChart& chart, const Vec2& y) {
  const ChartJet j = chart.jet(y);
  const Vec3 n = j.d1[0].cross(j.d1[1]);
  const double len = n.norm();
  if (len < 1e-12) {
    throw Error(ErrorCode::DegenerateImmersion, "|a1 ^ a2| < 1e-12");
  }
  GeometryAtPoint g;
  g.y = y;
  g.theta = j.value;
  g.a_cov = {j.d1[0], j.d1[1], n / len};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) g.a_ff(a, b) = g.a_cov[a].dot(g.a_cov[b]);
  g.a_ff_inv = g.a_ff.inverse();
  for (int a = 0; a < 2; ++a) g.a_contra[a] = g.a_ff_inv(a, 0) * g.a_cov[0] + g.a_ff_inv(a, 1) * g.a_cov[1];
  g.a_contra[2] = g.a_cov[2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      g.b_ff(a, b) = j.d2[a][b].dot(g.a_cov[2]);
      for (int s = 0; s < 2; ++s) g.christoffel[s](a, b) = j.d2[a][b].dot(g.a_contra[s]);
    }
  // b_a^b = a^{bs} b_{as}
  g.b_mixed = g.b_ff * g.a_ff_inv;
  const double det_a = g.a_ff.determinant();
  g.area_el = std::sqrt(det_a);
  g.kappa = g.b_ff.determinant() / det_a;
  return g;
}

ElasticityTensor2D elasticity_tensor(double lambda, double mu, const GeometryAtPoint& geom) {
  if (!(mu > 0.0) || !(lambda >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "elasticity tensor requires mu > 0 and lambda >= 0");
  }
  ElasticityTensor2D t;
  t.lambda = lambda;
  t.mu = mu;
  const Mat2& ai = geom.a_ff_inv;
  const double c1 = 4.0 * lambda * mu / (lambda + 2.0 * mu);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int s = 0; s < 2; ++s)
        for (int u = 0; u < 2; ++u)
          t.values[((a * 2 + b) * 2 + s) * 2 + u] =
              c1 * ai(a, b) * ai(s, u) + 2.0 * mu * (ai(a, s) * ai(b, u) + ai(a, u) * ai(b, s));
  return t;
}

std::vector<Vec2> sample_closed_disk(const Disk& disk, int density) {
  if (density <= 1) {
    throw Error(ErrorCode::InvalidArgument, "sample density must exceed 1");
  }
  std::vector<Vec2> pts;
  const double r = disk.radius;
  for (int i = 0; i < density; ++i) {
    for (int j = 0; j < density; ++j) {
      const Vec2 d(-r + 2.0 * r * i / (density - 1), -r + 2.0 * r * j / (density - 1));
      if (d.norm() <= r) pts.push_back(disk.center + d);
    }
  }
  const int nb = 4 * density;
  for (int k = 0; k < nb; ++k) {
    const double t = 2.0 * std::numbers::pi * k / nb;
    pts.push_back(disk.center + r * Vec2(std::cos(t), std::sin(t)));
  }
  return pts;
}

EllipticityReport check_ellipticity(const SurfaceChart& chart, const PlanarDomain& domain,
                                    int sample_density) {
  EllipticityReport rep;
  rep.kappa_min = std::numeric_limits<double>::infinity();
  for (const Vec2& y : sample_closed_disk(domain.disk(), sample_density)) {
    rep.kappa_min = std::min(rep.kappa_min, geometry_at(chart, y).kappa);
  }
  rep.is_elliptic = rep.kappa_min > 0.0;
  return rep;
}

DensityConditionReport check_density_condition(const SurfaceChart& chart, const PlanarDomain& domain,
                                                const Vec3& q, int sample_density) {
  if (!(q.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "q must be nonzero");
  DensityConditionReport rep;
  rep.min_theta_q = std::numeric_limits<double>::infinity();
  rep.min_a3_q = std::numeric_limits<double>::infinity();
  for (const Vec2& y : sample_closed_disk(domain.disk(), sample_density)) {
    const auto basis = covariant_basis(chart, y);
    rep.min_theta_q = std::min(rep.min_theta_q, chart.eval(y).dot(q));
    rep.min_a3_q = std::min(rep.min_a3_q, basis.a3.dot(q));
  }
  rep.holds = rep.min_theta_q > 0.0 && rep.min_a3_q > 0.0;
  return rep;
}

ProlongationCertificate prolong(const SurfaceChart& chart, const PlanarDomain& inner,
                                const PlanarDomain& outer, const Vec3& q, int sample_density) {
  if (!(inner.radius > 0.0) || !(outer.radius > inner.radius)) {
    throw Error(ErrorCode::InvalidArgument, "outer disk must strictly contain the inner disk");
  }
  if (!(q.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "q must be nonzero");
  const auto outer_pts = sample_closed_disk(outer.disk(), sample_density);
  for (const Vec2& y : outer_pts) {
    if (!chart.defined_at(y)) {
      std::ostringstream os;
      os << "closed form of " << chart.spec_string() << " undefined at y=(" << y(0) << ", " << y(1)
         << "), |y|=" << y.norm();
      throw Error(ErrorCode::ChartUndefinedOnOuter, os.str());
    }
  }
  ProlongationCertificate cert;
  cert.inner = inner;
  cert.outer = outer;
  cert.q = q;
  constexpr double inf = std::numeric_limits<double>::infinity();
  cert.min_normal_length_outer = inf;
  cert.kappa_min_outer = inf;
  cert.theta_dot_q_min_outer = inf;
  cert.a3_dot_q_min_outer = inf;
  cert.a3_dot_q_min_inner = inf;
  bool immersion = true;
  for (const Vec2& y : outer_pts) {
    const ChartJet j = chart.jet(y);
    const double len = j.d1[0].cross(j.d1[1]).norm();
    cert.min_normal_length_outer = std::min(cert.min_normal_length_outer, len);
    if (len < 1e-12) {
      immersion = false;
      continue;
    }
    const auto g = geometry_at(chart, y);
    cert.kappa_min_outer = std::min(cert.kappa_min_outer, g.kappa);
    cert.theta_dot_q_min_outer = std::min(cert.theta_dot_q_min_outer, g.theta.dot(q));
    cert.a3_dot_q_min_outer = std::min(cert.a3_dot_q_min_outer, g.a_contra[2].dot(q));
  }
  for (const Vec2& y : sample_closed_disk(inner.disk(), sample_density)) {
    cert.a3_dot_q_min_inner = std::min(cert.a3_dot_q_min_inner, covariant_basis(chart, y).a3.dot(q));
  }
  // The prolongation is the chart's own closed form, so it restricts to the
  // original immersion on the inner disk by construction.
  cert.holds_a = immersion;
  cert.holds_b = immersion && cert.kappa_min_outer > 0.0;
  cert.holds_c = immersion && cert.theta_dot_q_min_outer > 0.0;
  cert.d_antecedent = cert.a3_dot_q_min_inner > 0.0;
  cert.holds_d = !cert.d_antecedent || (immersion && cert.a3_dot_q_min_outer > 0.0);
  return cert;
}

std::string ProlongationCertificate::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "inner_radius=" << inner.radius << "\n"
     << "outer_radius=" << outer.radius << "\n"
     << "q=" << q(0) << "," << q(1) << "," << q(2) << "\n"
     << "min_normal_length_outer=" << min_normal_length_outer << "\n"
     << "kappa_min_outer=" << kappa_min_outer << "\n"
     << "theta_dot_q_min_outer=" << theta_dot_q_min_outer << "\n"
     << "a3_dot_q_min_inner=" << a3_dot_q_min_inner << "\n"
     << "a3_dot_q_min_outer=" << a3_dot_q_min_outer << "\n"
     << "holds_a=" << holds_a << "\n"
     << "holds_b=" << holds_b << "\n"
     << "holds_c=" << holds_c << "\n"
     << "d_antecedent=" << d_antecedent << "\n"
     << "holds_d=" << holds_d << "\n";
  return os.str();
}

namespace {

std::vector<Vec2> polygon(const Disk& d, int segments) {
  std::vector<Vec2> pts(segments);
  for (int k = 0; k < segments; ++k) {
    const double t = 2.0 * std::numbers::pi * k / segments;
    pts[k] = d.center + d.radius * Vec2(std::cos(t), std::sin(t));
  }
  return pts;
}

double min_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : a)
    for (const auto& r : b) best = std::min(best, (p - r).squaredNorm());
  return std::sqrt(best);
}

double diameter(const std::vector<Vec2>& pts) {
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, (pts[i] - pts[j]).squaredNorm());
  return std::sqrt(best);
}

bool compactly_inside(const Disk& inner, const Disk& outer) {
  return (inner.center - outer.center).norm() + inner.radius < outer.radius;
}

}  // namespace

GapConstant gap_constant(const GapSets& s, int segments) {
  if (!compactly_inside(s.w1, s.w0)) {
    throw Error(ErrorCode::NotCompactlyContained, "w1 is not compactly contained in w0 (d = 0)");
  }
  if (!compactly_inside(s.w0, s.w_tilde)) {
    throw Error(ErrorCode::NotCompactlyContained, "w0 is not compactly contained in w_tilde (d = 0)");
  }
  const auto p1 = polygon(s.w1, segments);
  const auto p0 = polygon(s.w0, segments);
  const auto pt = polygon(s.w_tilde, segments);
  const auto pw = polygon(s.w, segments);

  // Boundary of an intersection/difference lies on the boundaries of its
  // constituents, so its diameter is attained on those boundary samples.
  std::vector<Vec2> in_w, outside_w;
  for (const auto& y : p1) {
    if (s.w.contains_closed(y)) in_w.push_back(y);
    if (s.w_tilde.contains_closed(y) && !s.w.contains(y)) outside_w.push_back(y);
  }
  for (const auto& y : pw) {
    if (s.w1.contains_closed(y)) {
      in_w.push_back(y);
      if (s.w_tilde.contains_closed(y)) outside_w.push_back(y);
    }
  }
  for (const auto& y : pt) {
    if (s.w1.contains_closed(y) && !s.w.contains(y)) outside_w.push_back(y);
  }
  if (in_w.size() < 2) throw Error(ErrorCode::EmptyIntersection, "w1 does not meet w");
  if (outside_w.size() < 2) throw Error(ErrorCode::EmptyIntersection, "w1 does not meet w_tilde \\ w");

  GapConstant g;
  g.dist_w1_w0 = min_distance(p1, p0);
  g.dist_w0_wtilde = min_distance(p0, pt);
  g.diam_w1_in_w = diameter(in_w);
  g.diam_w1_outside_w = diameter(outside_w);
  g.d = 0.5 * std::min({g.dist_w1_w0, g.dist_w0_wtilde, g.diam_w1_in_w, g.diam_w1_outside_w});
  if (!(g.d > 0.0)) throw Error(ErrorCode::NotCompactlyContained, "gap constant is zero");
  return g;
}

}  // namespace shellreg

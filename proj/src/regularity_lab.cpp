#include "shellreg/regularity_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace shellreg {

namespace {

constexpr double kDomainSlack = 1e-12;

Vec2 unit(int rho) { return rho == 1 ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0); }

void check_direction(int rho, double h) {
  if (rho != 1 && rho != 2) throw Error(ErrorCode::InvalidArgument, "rho must be 1 or 2");
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "quotient increment must be positive");
}

void require_point(const Disk& domain, const Vec2& y) {
  if (!domain.contains_closed(y, kDomainSlack)) {
    std::ostringstream os;
    os << "translated point (" << y.x() << ", " << y.y() << ") leaves the field domain";
    throw Error(ErrorCode::RegionOverflow, os.str());
  }
}

// Quotient value together with the magnitude it was computed from.
struct Scaled {
  double value = 0.0;
  double scale = 0.0;
};

struct Stencil {
  double minus, mid, plus;
};

Stencil stencil(const ScalarFn& f, const Vec2& y, const Vec2& step) { return {f(y - step), f(y), f(y + step)}; }

Scaled fwd(const Stencil& s, double h) { return {(s.plus - s.mid) / h, (std::abs(s.plus) + std::abs(s.mid)) / h}; }
Scaled bwd(const Stencil& s, double h) { return {(s.minus - s.mid) / -h, (std::abs(s.minus) + std::abs(s.mid)) / h}; }
Scaled second(const Stencil& s, double h) {
  return {(s.plus - 2.0 * s.mid + s.minus) / (h * h),
          (std::abs(s.plus) + 2.0 * std::abs(s.mid) + std::abs(s.minus)) / (h * h)};
}

double relative(double lhs, double rhs, double scale) {
  const double diff = std::abs(lhs - rhs);
  if (diff == 0.0) return 0.0;
  return diff / scale;
}

bool lattice_in(const Disk& d, const Vec2& y) { return d.contains_closed(y, kDomainSlack); }

double lattice_h1_on(const SmoothScalar& f, const Lattice& lat, const Disk& region) {
  double sum = 0.0;
  for (int i = 0; i < lat.n; ++i) {
    for (int j = 0; j < lat.n; ++j) {
      const Vec2 y = lat.point(i, j);
      if (!lattice_in(region, y)) continue;
      const double v = f.value(y);
      sum += v * v + f.grad(y).squaredNorm();
    }
  }
  return std::sqrt(sum * lat.spacing * lat.spacing);
}

}  // namespace

double QuotientOperator::apply(const ScalarFn& f, const Vec2& y) const {
  check_direction(rho, h);
  const Vec2 s = step();
  switch (kind) {
    case QuotientKind::forward: return (f(y + s) - f(y)) / h;
    case QuotientKind::backward: return (f(y - s) - f(y)) / -h;
    case QuotientKind::second: return (f(y + s) - 2.0 * f(y) + f(y - s)) / (h * h);
    case QuotientKind::shift: return f(y + s);
  }
  return 0.0;
}

double QuotientOperator::rounding_scale(const ScalarFn& f, const Vec2& y) const {
  const Vec2 s = step();
  switch (kind) {
    case QuotientKind::forward: return (std::abs(f(y + s)) + std::abs(f(y))) / h;
    case QuotientKind::backward: return (std::abs(f(y - s)) + std::abs(f(y))) / h;
    case QuotientKind::second: return (std::abs(f(y + s)) + 2.0 * std::abs(f(y)) + std::abs(f(y - s))) / (h * h);
    case QuotientKind::shift: return std::abs(f(y + s));
  }
  return 0.0;
}

ScalarFn QuotientOperator::operator()(ScalarFn f) const {
  check_direction(rho, h);
  return [op = *this, f = std::move(f)](const Vec2& y) { return op.apply(f, y); };
}

void require_translates_inside(const QuotientOperator& op, const Disk& eval_region, const Disk& field_domain) {
  check_direction(op.rho, op.h);
  const Vec2 s = op.step();
  auto fits = [&](const Vec2& shift) {
    return (eval_region.center + shift - field_domain.center).norm() + eval_region.radius <=
           field_domain.radius + kDomainSlack;
  };
  const bool need_plus = op.kind != QuotientKind::backward;
  const bool need_minus = op.kind == QuotientKind::backward || op.kind == QuotientKind::second;
  if ((need_plus && !fits(s)) || (need_minus && !fits(-s)) || !fits(Vec2::Zero())) {
    std::ostringstream os;
    os << "region of radius " << eval_region.radius << " translated by h = " << op.h << " along e" << op.rho
       << " leaves the field domain";
    throw Error(ErrorCode::RegionOverflow, os.str());
  }
}

std::vector<double> apply_quotient(const QuotientOperator& op, const ScalarFn& f, const std::vector<Vec2>& points,
                                   const Disk& field_domain) {
  check_direction(op.rho, op.h);
  const Vec2 s = op.step();
  std::vector<double> out;
  out.reserve(points.size());
  for (const Vec2& y : points) {
    require_point(field_domain, y);
    if (op.kind != QuotientKind::backward) require_point(field_domain, y + s);
    if (op.kind == QuotientKind::backward || op.kind == QuotientKind::second) require_point(field_domain, y - s);
    out.push_back(op.apply(f, y));
  }
  return out;
}

IdentityResiduals product_rules_check(const ScalarFn& v, const ScalarFn& w, int rho, double h,
                                      const std::vector<Vec2>& points, const Disk& field_domain) {
  check_direction(rho, h);
  const Vec2 s = h * unit(rho);
  const ScalarFn vw = [&](const Vec2& y) { return v(y) * w(y); };
  IdentityResiduals r;
  for (const Vec2& y : points) {
    require_point(field_domain, y);
    require_point(field_domain, y + s);
    require_point(field_domain, y - s);
    const Stencil sv = stencil(v, y, s), sw = stencil(w, y, s), sp = stencil(vw, y, s);

    // delta = D_{-h} D_h, for both factors
    for (const ScalarFn* f : {&v, &w}) {
      const Stencil sf = stencil(*f, y, s);
      const Scaled lhs = second(sf, h);
      const double dh_here = (sf.plus - sf.mid) / h;
      const double dh_back = (sf.mid - sf.minus) / h;  // D_h f at y - h e
      const double rhs = (dh_back - dh_here) / -h;
      r.second_as_composition = std::max(r.second_as_composition, relative(lhs.value, rhs, 2.0 * lhs.scale));
    }

    const Scaled dv = fwd(sv, h), dw = fwd(sw, h), bv = bwd(sv, h), bw = bwd(sw, h);
    const Scaled d2v = second(sv, h), d2w = second(sw, h);

    {
      const Scaled lhs = fwd(sp, h);
      const double rhs = sw.plus * dv.value + sv.mid * dw.value;
      const double scale = lhs.scale + std::abs(sw.plus) * dv.scale + std::abs(sv.mid) * dw.scale;
      r.forward_product = std::max(r.forward_product, relative(lhs.value, rhs, scale));
    }
    {
      const Scaled lhs = bwd(sp, h);
      const double rhs = sw.minus * bv.value + sv.mid * bw.value;
      const double scale = lhs.scale + std::abs(sw.minus) * bv.scale + std::abs(sv.mid) * bw.scale;
      r.backward_product = std::max(r.backward_product, relative(lhs.value, rhs, scale));
    }
    {
      const Scaled lhs = second(sp, h);
      const double rhs = sw.mid * d2v.value + dw.value * dv.value + bw.value * bv.value + sv.mid * d2w.value;
      const double scale = lhs.scale + std::abs(sw.mid) * d2v.scale + dw.scale * dv.scale + bw.scale * bv.scale +
                           std::abs(sv.mid) * d2w.scale;
      r.second_product = std::max(r.second_product, relative(lhs.value, rhs, scale));
    }
  }
  return r;
}

Lattice Lattice::covering(const Disk& d, double spacing) {
  if (!(spacing > 0.0)) throw Error(ErrorCode::InvalidArgument, "lattice spacing must be positive");
  const int m = static_cast<int>(std::ceil(d.radius / spacing));
  Lattice lat;
  lat.spacing = spacing;
  lat.n = 2 * m + 1;
  lat.origin = d.center - Vec2::Constant(m * spacing);
  return lat;
}

double integration_by_parts_residual(const ScalarFn& u, const ScalarFn& v, int rho, double h, const Disk& region,
                                     double spacing) {
  check_direction(rho, h);
  const Vec2 s = h * unit(rho);
  const Lattice lat = Lattice::covering(region, spacing);
  double lhs = 0.0, rhs = 0.0, scale = 0.0;
  for (int i = 0; i < lat.n; ++i) {
    for (int j = 0; j < lat.n; ++j) {
      const Vec2 y = lat.point(i, j);
      if (!lattice_in(region, y)) continue;
      const double a = (u(y + s) - u(y)) / h * v(y);
      const double b = u(y) * ((v(y - s) - v(y)) / -h);
      lhs += a;
      rhs += b;
      scale += std::abs(a) + std::abs(b);
    }
  }
  if (scale == 0.0) return 0.0;
  return std::abs(lhs + rhs) / scale;
}

double lattice_h1_norm(const SmoothScalar& f, const Disk& region, double spacing) {
  return lattice_h1_on(f, Lattice::covering(region, spacing), region);
}

ConvergenceCheck quotient_convergence_check(const std::vector<SmoothScalar>& sequence, const SmoothScalar& limit,
                                            int rho, double h, const Disk& w0, const Disk& w_tilde, double spacing) {
  require_translates_inside(QuotientOperator{rho, h, QuotientKind::forward}, w0, w_tilde);
  const Vec2 s = h * unit(rho);
  // One lattice for both norms so translated points of w0 are points of w_tilde.
  const Lattice lat = Lattice::covering(w_tilde, spacing);
  ConvergenceCheck out;
  out.respects_bound = true;
  out.decreasing = true;
  for (const SmoothScalar& vk : sequence) {
    const SmoothScalar diff{[&](const Vec2& y) { return vk.value(y) - limit.value(y); },
                            [&](const Vec2& y) -> Vec2 { return vk.grad(y) - limit.grad(y); }};
    const SmoothScalar quotient{[&](const Vec2& y) { return (diff.value(y + s) - diff.value(y)) / h; },
                                [&](const Vec2& y) -> Vec2 { return (diff.grad(y + s) - diff.grad(y)) / h; }};
    const double err = lattice_h1_on(quotient, lat, w0);
    const double bound = 2.0 / h * lattice_h1_on(diff, lat, w_tilde);
    if (err > bound * (1.0 + 1e-12)) out.respects_bound = false;
    if (!out.quotient_errors.empty() && err > out.quotient_errors.back()) out.decreasing = false;
    out.quotient_errors.push_back(err);
    out.bounds.push_back(bound);
  }
  return out;
}

namespace {

// 6t^5 - 15t^4 + 10t^3 on [0, 1]: C2 with vanishing first and second
// derivatives at both ends.
double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

double smoothstep_d(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 30.0 * t * t * (t - 1.0) * (t - 1.0);
}

}  // namespace

double CutoffFunction::value(const Vec2& y) const {
  const double r = (y - center).norm();
  return smoothstep((support_radius - r) / (support_radius - inner_radius));
}

Vec2 CutoffFunction::grad(const Vec2& y) const {
  const Vec2 d = y - center;
  const double r = d.norm();
  if (r <= inner_radius || r >= support_radius) return Vec2::Zero();
  const double width = support_radius - inner_radius;
  return -smoothstep_d((support_radius - r) / width) / width * d / r;
}

Vartheta vartheta_from_chart(const SurfaceChart& chart, const Vec3& q) {
  Vartheta v;
  v.value = [chart](const Vec2& y) { return chart.eval(y); };
  v.hessian_q = [chart, q](const Vec2& y) {
    const ChartJet j = chart.jet(y);
    Mat2 hs;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) hs(a, b) = j.d2[a][b].dot(q);
    return hs;
  };
  return v;
}

double max_hessian_eigenvalue(const Vartheta& v, const Disk& region, int density) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const Vec2& y : sample_closed_disk(region, density)) {
    const Mat2 hs = v.hessian_q(y);
    worst = std::max(worst, Eigen::SelfAdjointEigenSolver<Mat2>(hs, Eigen::EigenvaluesOnly).eigenvalues()[1]);
  }
  return worst;
}

double Convexifier::g(const Vec2& y) const { return 1.0 - 0.5 * std::exp(r * (y - y0).sum()); }

Vec2 Convexifier::grad_g(const Vec2& y) const { return Vec2::Constant(-0.5 * r * std::exp(r * (y - y0).sum())); }

Mat2 Convexifier::hess_g(const Vec2& y) const { return Mat2::Constant(-0.5 * r * r * std::exp(r * (y - y0).sum())); }

Vartheta Convexifier::convexified(const SurfaceChart& chart) const {
  const Convexifier c = *this;
  Vartheta v;
  v.value = [chart, c](const Vec2& y) {
    return Vec3((chart.eval(y) - c.B * c.q / c.q.squaredNorm()) * c.g(y));
  };
  v.hessian_q = [chart, c](const Vec2& y) {
    const ChartJet j = chart.jet(y);
    const double s = j.value.dot(c.q) - c.B;
    const Vec2 ds(j.d1[0].dot(c.q), j.d1[1].dot(c.q));
    Mat2 hs;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) hs(a, b) = j.d2[a][b].dot(c.q);
    const Vec2 dg = c.grad_g(y);
    return Mat2(c.g(y) * hs + ds * dg.transpose() + dg * ds.transpose() + s * c.hess_g(y));
  };
  return v;
}

std::string Convexifier::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "y0=" << y0.x() << "," << y0.y() << "\n"
     << "r=" << r << "\n"
     << "B=" << B << "\n"
     << "B0=" << B0 << "\n"
     << "radius=" << radius << "\n"
     << "min_hessian_eigenvalue=" << min_hessian_eigenvalue << "\n"
     << "candidates_tried=" << candidates_tried << "\n"
     << "certified=" << (certified ? "true" : "false") << "\n";
  return os.str();
}

Convexifier build_convexifier(const SurfaceChart& chart, const Vec3& q, const Vec2& y0, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "convexifier radius must be positive");
  if (!(q.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "q must be nonzero");
  constexpr int kShrinks = 7;
  constexpr double kOffsets[] = {0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
  Convexifier best;
  best.min_hessian_eigenvalue = -std::numeric_limits<double>::infinity();
  int tried = 0;
  for (int k = 0; k < kShrinks; ++k) {
    const Disk u{y0, radius / std::pow(2.0, k)};
    const std::vector<Vec2> pts = sample_closed_disk(u, 41);
    double smin = std::numeric_limits<double>::infinity();
    for (const Vec2& y : pts) {
      if (!chart.defined_at(y)) throw Error(ErrorCode::ChartUndefinedOnOuter, "convexifier disk leaves the chart");
      smin = std::min(smin, chart.eval(y).dot(q));
    }
    if (!(smin > 0.0)) throw Error(ErrorCode::InvalidArgument, "chart . q must be positive on the convexifier disk");
    for (int e = 0; e <= 10; ++e) {
      for (double off : kOffsets) {
        Convexifier c;
        c.y0 = y0;
        c.q = q;
        c.r = std::ldexp(1.0, e);
        c.B = smin - off * std::max(1.0, smin);
        c.radius = u.radius;
        ++tried;
        const Vartheta v = c.convexified(chart);
        double b0 = std::numeric_limits<double>::infinity();
        double eig = std::numeric_limits<double>::infinity();
        for (const Vec2& y : pts) {
          b0 = std::min(b0, c.g(y));
          // the convex function is -(vartheta . q)
          const Mat2 hs = -v.hessian_q(y);
          eig = std::min(eig, Eigen::SelfAdjointEigenSolver<Mat2>(hs, Eigen::EigenvaluesOnly).eigenvalues()[0]);
        }
        c.B0 = b0;
        c.min_hessian_eigenvalue = eig;
        c.candidates_tried = tried;
        if (b0 > 0.0 && eig >= -1e-9) {
          c.certified = true;
          return c;
        }
        if (b0 > 0.0 && eig > best.min_hessian_eigenvalue) best = c;
      }
    }
  }
  std::ostringstream os;
  os << "no certificate after " << tried << " candidates; best r=" << best.r << " B=" << best.B
     << " radius=" << best.radius << " min eigenvalue=" << best.min_hessian_eigenvalue;
  throw Error(ErrorCode::SearchExhausted, os.str());
}

FeasibilityReport feasibility_perturbation(const Vartheta& vartheta, const SurfaceChart& chart, const Vec3& q,
                                           const Disk& w0, const Disk& w1, const CutoffFunction& phi1, int rho,
                                           double varrho, double h, const LatticeField& eta,
                                           LatticeField* perturbed) {
  check_direction(rho, h);
  if (!(varrho >= 0.0) || !(varrho < 0.5 * h * h)) {
    std::ostringstream os;
    os << "varrho = " << varrho << " must lie in [0, h^2/2) = [0, " << 0.5 * h * h << ")";
    throw Error(ErrorCode::RhoTooLarge, os.str());
  }
  const Lattice& lat = eta.lattice;
  const int step = static_cast<int>(std::lround(h / lat.spacing));
  if (step < 1 || std::abs(step * lat.spacing - h) > 1e-9 * h) {
    throw Error(ErrorCode::InvalidArgument, "h must be a multiple of the lattice spacing");
  }
  if (static_cast<int>(eta.eta.size()) != lat.n * lat.n) {
    throw Error(ErrorCode::InvalidArgument, "lattice field size does not match its lattice");
  }
  const double hmax = max_hessian_eigenvalue(vartheta, w0);
  if (hmax > 1e-9) {
    std::ostringstream os;
    os << "vartheta . q is not concave on the region (Hessian eigenvalue " << hmax << ")";
    throw Error(ErrorCode::NotConcave, os.str());
  }

  const int n = lat.n;
  std::vector<char> in0(n * n, 0);
  std::vector<std::array<Vec3, 3>> contra(n * n), cov(n * n);
  std::vector<Vec3> field(n * n, Vec3::Zero());  // eta_i a^i
  std::vector<double> base(n * n, 0.0);           // vartheta . q
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int id = i * n + j;
      const Vec2 y = lat.point(i, j);
      if (!lattice_in(w0, y)) continue;
      in0[id] = 1;
      const GeometryAtPoint g = geometry_at(chart, y);
      contra[id] = g.a_contra;
      cov[id] = g.a_cov;
      const Vec3& e = eta.eta[id];
      field[id] = e[0] * g.a_contra[0] + e[1] * g.a_contra[1] + e[2] * g.a_contra[2];
      base[id] = vartheta.value(y).dot(q);
      if (base[id] + field[id].dot(q) < -1e-12) {
        std::ostringstream os;
        os << "input field violates the confinement at (" << y.x() << ", " << y.y() << ")";
        throw Error(ErrorCode::InfeasibleStart, os.str());
      }
    }
  }

  if (perturbed) *perturbed = eta;
  FeasibilityReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  const int di = rho == 1 ? step : 0;
  const int dj = rho == 2 ? step : 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 y = lat.point(i, j);
      if (!lattice_in(w1, y)) continue;
      const int ip = i + di, jp = j + dj, im = i - di, jm = j - dj;
      auto inside = [&](int a, int b) { return a >= 0 && b >= 0 && a < n && b < n && in0[a * n + b]; };
      const int id = i * n + j;
      if (!in0[id] || !inside(ip, jp) || !inside(im, jm)) {
        throw Error(ErrorCode::RegionOverflow, "lattice translates of the inner region leave the outer region");
      }
      const Vec3 second_diff = (field[ip * n + jp] - 2.0 * field[id] + field[im * n + jm]) / (h * h);
      const Vec3 moved = field[id] + varrho * phi1.value(y) * second_diff;
      Vec3 comps;
      for (int k = 0; k < 3; ++k) comps[k] = moved.dot(cov[id][k]);
      // recompose from the new components so the check uses eta_rho itself
      const Vec3 recomposed = comps[0] * contra[id][0] + comps[1] * contra[id][1] + comps[2] * contra[id][2];
      const double value = base[id] + recomposed.dot(q);
      ++rep.points_checked;
      rep.min_value = std::min(rep.min_value, value);
      if (value < -1e-12) ++rep.violations;
      if (perturbed) perturbed->eta[id] = comps;
    }
  }
  return rep;
}

EpsilonReport epsilon_of_h(const Vartheta& vartheta, const SurfaceChart& chart, const Vec3& q, const Disk& w1,
                           const Disk& outer, const std::vector<double>& h_grid, int density) {
  if (h_grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty h grid");
  const std::vector<Vec2> pts = sample_closed_disk(w1, density);
  EpsilonReport rep;
  rep.inf_second_difference = std::numeric_limits<double>::infinity();
  const ScalarFn minus_q = [&](const Vec2& y) { return -vartheta.value(y).dot(q); };
  for (double h : h_grid) {
    for (int rho = 1; rho <= 2; ++rho) {
      check_direction(rho, h);
      const Vec2 s = h * unit(rho);
      for (const Vec2& y : pts) {
        rep.inf_second_difference = std::min(rep.inf_second_difference, second(stencil(minus_q, y, s), h).value);
      }
    }
  }
  if (!(rep.inf_second_difference > 0.0)) {
    std::ostringstream os;
    os << "second difference of -vartheta . q reaches " << rep.inf_second_difference;
    throw Error(ErrorCode::NotConcave, os.str());
  }
  for (const Vec2& y : sample_closed_disk(outer, density)) {
    const GeometryAtPoint g = geometry_at(chart, y);
    for (int i = 0; i < 3; ++i) rep.max_contravariant_q = std::max(rep.max_contravariant_q, std::abs(g.a_contra[i].dot(q)));
  }
  for (double h : h_grid) {
    rep.h.push_back(h);
    rep.epsilon.push_back(h * h * rep.inf_second_difference / (2.0 * rep.max_contravariant_q));
  }
  return rep;
}

FieldSampler zero_extension(const FieldEvaluator& field) {
  return [&field](const Vec2& y) {
    const FieldEvaluator::Sample s = field.sample(y);
    FieldSample out;
    if (s.inside) {
      out.value = s.value;
      out.grad = s.grad;
    }
    return out;
  };
}

namespace {

struct ScanPoint {
  Vec2 y;
  double weight;
};

// Three-point rule on the triangles of a ring mesh of u1; triangles whose
// vertices straddle the shell boundary are split once into four.
std::vector<ScanPoint> scan_quadrature(const Disk& u1, const Disk& shell, double quad_h) {
  const TriMesh m = make_disk_mesh(u1.radius, quad_h, u1.center);
  std::vector<ScanPoint> pts;
  auto rule = [&](const Vec2& a, const Vec2& b, const Vec2& c) {
    const double area = 0.5 * std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
    for (int k = 0; k < 3; ++k) {
      Vec3 bary = Vec3::Constant(1.0 / 6.0);
      bary[k] = 2.0 / 3.0;
      pts.push_back({bary[0] * a + bary[1] * b + bary[2] * c, area / 3.0});
    }
  };
  for (const auto& t : m.triangles) {
    const Vec2 &a = m.nodes[t[0]], &b = m.nodes[t[1]], &c = m.nodes[t[2]];
    const int inside = shell.contains(a) + shell.contains(b) + shell.contains(c);
    if (inside == 0 || inside == 3) {
      rule(a, b, c);
      continue;
    }
    const Vec2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
    rule(a, ab, ca);
    rule(ab, b, bc);
    rule(ca, bc, c);
    rule(ab, bc, ca);
  }
  return pts;
}

struct CutField {
  Vec3 value;                                // phi zeta
  Eigen::Matrix<double, 2, 2> tangent_grad;  // rows: grad of phi zeta_alpha
};

CutField cut(const FieldSampler& zeta, const CutoffFunction& phi, const Vec2& y) {
  const FieldSample s = zeta(y);
  const double p = phi.value(y);
  const Vec2 dp = phi.grad(y);
  CutField c;
  c.value = p * s.value;
  for (int a = 0; a < 2; ++a) c.tangent_grad.row(a) = (s.value[a] * dp + p * s.grad.row(a).transpose()).transpose();
  return c;
}

}  // namespace

QuotientScanReport uniform_bound_scan(const FieldSampler& zeta, const CutoffFunction& phi,
                                      const std::vector<double>& h_list, const ScanSettings& settings) {
  if (h_list.empty()) throw Error(ErrorCode::InvalidArgument, "empty h list");
  for (std::size_t k = 1; k < h_list.size(); ++k) {
    if (!(h_list[k] < h_list[k - 1])) throw Error(ErrorCode::InvalidArgument, "h list must be strictly decreasing");
  }
  for (double h : h_list) {
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "h must be positive");
    if (!(h < settings.gap_d)) {
      std::ostringstream os;
      os << "h = " << h << " is not below the gap constant d = " << settings.gap_d;
      throw Error(ErrorCode::RegionOverflow, os.str());
    }
  }
  if (settings.h_mesh > 0.0 && h_list.back() < 2.0 * settings.h_mesh) {
    std::ostringstream os;
    os << "h = " << h_list.back() << " is below 2 * h_mesh = " << 2.0 * settings.h_mesh;
    throw Error(ErrorCode::ScanTooCoarse, os.str());
  }
  if (phi.support_radius + (phi.center - settings.u1.center).norm() > settings.u1.radius) {
    throw Error(ErrorCode::NotCompactlyContained, "cutoff support is not inside the scan region");
  }
  for (double h : h_list) {
    for (int rho = 1; rho <= 2; ++rho) {
      require_translates_inside(QuotientOperator{rho, h, QuotientKind::forward}, settings.u1, settings.field_domain);
    }
  }

  double quad_h = settings.quad_h;
  if (!(quad_h > 0.0)) quad_h = settings.h_mesh > 0.0 ? 0.5 * settings.h_mesh : settings.u1.radius / 40.0;
  const std::vector<ScanPoint> pts = scan_quadrature(settings.u1, settings.shell, quad_h);

  std::vector<CutField> here;
  here.reserve(pts.size());
  for (const ScanPoint& p : pts) here.push_back(cut(zeta, phi, p.y));

  QuotientScanReport rep;
  rep.label = settings.label;
  rep.bound_ratio = settings.bound_ratio;
  rep.h_values = h_list;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int rho = 1; rho <= 2; ++rho) {
    for (double h : h_list) {
      const Vec2 s = h * unit(rho);
      double sum = 0.0;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const CutField there = cut(zeta, phi, pts[k].y + s);
        const Vec3 dv = (there.value - here[k].value) / h;
        const Eigen::Matrix2d dg = (there.tangent_grad - here[k].tangent_grad) / h;
        sum += pts[k].weight * (dv.squaredNorm() + dg.squaredNorm());
      }
      const double norm = std::sqrt(sum);
      rep.norms[rho - 1].push_back(norm);
      lo = std::min(lo, norm);
      hi = std::max(hi, norm);
    }
  }
  rep.ratio = lo > 0.0 ? hi / lo : (hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  rep.bounded_verdict = rep.ratio <= rep.bound_ratio;
  return rep;
}

double max_boundary_transverse(const TriMesh& mesh, const MixedFEField& field) {
  double m = 0.0;
  for (int n : mesh.boundary_nodes) m = std::max(m, std::abs(field.eta(n, 2)));
  return m;
}

RadialProfile radial_profile(const TriMesh& mesh, const MixedFEField& field, const Vec2& direction, double step,
                             double max_depth) {
  if (!(step > 0.0) || !(max_depth >= step)) throw Error(ErrorCode::InvalidArgument, "bad profile sampling");
  if (!(max_depth < mesh.radius)) throw Error(ErrorCode::InvalidArgument, "profile depth exceeds the radius");
  const Vec2 dir = direction.normalized();
  const FieldEvaluator eval(mesh, field.values);
  RadialProfile p;
  const int count = static_cast<int>(std::floor(max_depth / step + 1e-9));
  for (int k = 0; k <= count; ++k) {
    const double depth = k * step;
    // the boundary sample is nudged inside so that it is located on the mesh
    const double r = mesh.radius - std::max(depth, 1e-12 * mesh.radius);
    p.depth.push_back(depth);
    p.value.push_back(std::abs(eval.value(mesh.center + r * dir)[2]));
  }
  p.plateau = p.value.back();
  p.layer_width = p.depth.back();
  for (std::size_t k = 0; k < p.value.size(); ++k) {
    if (p.value[k] >= 0.5 * p.plateau) {
      p.layer_width = p.depth[k];
      break;
    }
  }
  return p;
}

}  // namespace shellreg

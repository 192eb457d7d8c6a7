#pragma once

// Seeded random inputs shared by the unit tests and the acceptance run.

#include "shellreg/regularity_lab.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace shellreg::gen {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }

  Vec2 in_disk(const Disk& d) {
    const double r = d.radius * std::sqrt(uniform(0.0, 1.0));
    const double t = uniform(0.0, 2.0 * std::numbers::pi);
    return d.center + r * Vec2(std::cos(t), std::sin(t));
  }

 private:
  std::mt19937_64 engine_;
};

/// Sum of Gaussian bumps plus an affine part, with its exact gradient.
struct GaussianSum {
  struct Term {
    Vec2 center;
    double width;
    double amplitude;
  };
  std::vector<Term> terms;
  double constant = 0.0;
  Vec2 slope = Vec2::Zero();

  double value(const Vec2& y) const {
    double v = constant + slope.dot(y);
    for (const Term& t : terms) v += t.amplitude * std::exp(-(y - t.center).squaredNorm() / (t.width * t.width));
    return v;
  }
  Vec2 grad(const Vec2& y) const {
    Vec2 g = slope;
    for (const Term& t : terms) {
      const double e = t.amplitude * std::exp(-(y - t.center).squaredNorm() / (t.width * t.width));
      g += -2.0 * e / (t.width * t.width) * (y - t.center);
    }
    return g;
  }
  ScalarFn fn() const {
    return [f = *this](const Vec2& y) { return f.value(y); };
  }
  SmoothScalar smooth() const {
    return {fn(), [f = *this](const Vec2& y) -> Vec2 { return f.grad(y); }};
  }
};

inline GaussianSum random_gaussian_sum(Rng& rng, const Disk& where) {
  GaussianSum f;
  const int n = rng.integer(1, 4);
  for (int k = 0; k < n; ++k) {
    f.terms.push_back({rng.in_disk(where), rng.uniform(0.05, 0.5), rng.uniform(-3.0, 3.0)});
  }
  f.constant = rng.uniform(-1.0, 1.0);
  f.slope = Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  return f;
}

/// Compactly supported C2 bump (1 - |y - c|^2 / r^2)^3 scaled by `amplitude`.
inline SmoothScalar compact_bump(const Vec2& c, double r, double amplitude) {
  return {[=](const Vec2& y) {
            const double s = 1.0 - (y - c).squaredNorm() / (r * r);
            return s > 0.0 ? amplitude * s * s * s : 0.0;
          },
          [=](const Vec2& y) -> Vec2 {
            const double s = 1.0 - (y - c).squaredNorm() / (r * r);
            return s > 0.0 ? Vec2(amplitude * 3.0 * s * s * (-2.0 / (r * r)) * (y - c)) : Vec2::Zero();
          }};
}

inline Vector random_nodal_values(Rng& rng, int size, double scale) {
  Vector v(size);
  for (int i = 0; i < size; ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

inline Bump random_bump(Rng& rng, const Disk& where) {
  Bump b;
  b.center = rng.in_disk(where);
  b.radius = rng.uniform(0.3, 0.6);
  b.height = rng.uniform(-3.0, -0.5);
  b.component = rng.chance(0.8) ? 3 : rng.integer(1, 2);
  return b;
}

/// Random covariant components on the lattice, made feasible for
/// (vartheta + eta_i a^i) . q >= 0 at every lattice point of `w0` by moving
/// eta_3; a fraction of the points is put exactly on the constraint.
inline LatticeField random_feasible_field(Rng& rng, const Vartheta& vartheta, const SurfaceChart& chart,
                                          const Vec3& q, const Lattice& lattice, const Disk& w0, double scale,
                                          double active_fraction) {
  LatticeField f;
  f.lattice = lattice;
  f.eta.assign(lattice.n * lattice.n, Vec3::Zero());
  for (int i = 0; i < lattice.n; ++i) {
    for (int j = 0; j < lattice.n; ++j) {
      const Vec2 y = lattice.point(i, j);
      Vec3 e(rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale));
      if (w0.contains_closed(y, 1e-12)) {
        const GeometryAtPoint g = geometry_at(chart, y);
        const double base = vartheta.value(y).dot(q);
        const double slack = base + e[0] * g.a_contra[0].dot(q) + e[1] * g.a_contra[1].dot(q) +
                             e[2] * g.a_contra[2].dot(q);
        double target = slack;
        if (rng.chance(active_fraction)) target = 0.0;
        else if (slack < 0.0) target = rng.uniform(0.0, scale);
        e[2] += (target - slack) / g.a_contra[2].dot(q);
        // rounding can leave the moved point a hair below zero
        const double after = base + e[0] * g.a_contra[0].dot(q) + e[1] * g.a_contra[1].dot(q) +
                             e[2] * g.a_contra[2].dot(q);
        if (after < 0.0) e[2] += -after / g.a_contra[2].dot(q) * (1.0 + 1e-12);
      }
      f.at(i, j) = e;
    }
  }
  return f;
}

}  // namespace shellreg::gen

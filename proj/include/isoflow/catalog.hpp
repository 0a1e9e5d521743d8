#ifndef ISOFLOW_CATALOG_HPP
#define ISOFLOW_CATALOG_HPP

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "isoflow/characteristics.hpp"
#include "isoflow/core.hpp"
#include "isoflow/fields.hpp"
#include "isoflow/torus.hpp"

namespace isoflow {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------------------
// Catalog of worked example fields. Each entry bundles the field, its scalar
// potential when it is a gradient, a reference level specification, a
// criterium frame when one exists, a known invariant measure on the torus,
// and whatever closed-form evaluators are available as oracles.
// ---------------------------------------------------------------------------

struct ClosedForms {
  std::function<Point(double, const Point&)> flow;        // X(t, x)
  std::function<double(const Point&)> hitting_time;       // tau for entry.level
  std::function<double(const Point&)> sigma;              // same gauge
  std::optional<Point> effective_velocity;                 // xi
};

struct CatalogEntry {
  std::string name;
  VectorField field;
  std::optional<ScalarField> potential;
  std::optional<LevelSpec> level;  // gauge of the closed-form tau and sigma
  std::optional<PotentialFrame> frame;
  std::function<double(const Point&)> invariant_measure;  // null if none known
  std::map<std::string, VectorField> variants;
  std::vector<std::pair<double, double>> ratio_bounds;
  ClosedForms closed_forms;
  std::string notes;
};

namespace detail {

inline CatalogEntry make_arctan2d() {
  CatalogEntry e;
  e.name = "arctan2d";
  ScalarField u;
  u.dimension = 2;
  u.value = [](const Point& x) { return std::atan(x[0]) + std::atan(x[1]); };
  u.gradient = [](const Point& x) {
    return Point{1.0 / (1.0 + x[0] * x[0]), 1.0 / (1.0 + x[1] * x[1])};
  };
  u.laplacian = [](const Point& x) {
    const double a = 1.0 + x[0] * x[0], b = 1.0 + x[1] * x[1];
    return -2.0 * x[0] / (a * a) - 2.0 * x[1] / (b * b);
  };
  u.range = {-std::numbers::pi, std::numbers::pi};
  e.potential = u;

  VectorField b;
  b.dimension = 2;
  b.eval_into = [](const Point& x, Point& out) {
    out.resize(2);
    out[0] = 1.0 / (1.0 + x[0] * x[0]);
    out[1] = 1.0 / (1.0 + x[1] * x[1]);
  };
  b.divergence = u.laplacian;
  b.jacobian = [](const Point& x) {
    Matrix j = Matrix::Zero(2, 2);
    const double a = 1.0 + x[0] * x[0], c = 1.0 + x[1] * x[1];
    j(0, 0) = -2.0 * x[0] / (a * a);
    j(1, 1) = -2.0 * x[1] / (c * c);
    return j;
  };
  e.field = b;

  LevelSpec spec;
  spec.potential = u;
  spec.level = 0.0;
  spec.band_low = -std::numbers::pi;
  spec.band_high = std::numbers::pi;
  e.level = spec;

  // The flow integrates componentwise: G(X_i) = G(x_i) + t with G(s)=s+s^3/3.
  const auto G = [](double s) { return s + s * s * s / 3.0; };
  e.closed_forms.flow = [G](double t, const Point& x) {
    return Point{cubic_shift_inverse(G(x[0]) + t),
                 cubic_shift_inverse(G(x[1]) + t)};
  };
  e.closed_forms.hitting_time = [G](const Point& x) {
    return -0.5 * (G(x[0]) + G(x[1]));
  };
  e.closed_forms.sigma = [G](const Point& x) {
    const double z = cubic_shift_inverse(0.5 * (G(x[0]) - G(x[1])));
    const double den = 1.0 + z * z;
    return (1.0 + x[0] * x[0]) * (1.0 + x[1] * x[1]) / (den * den);
  };
  e.notes = "gradient of atan(x1)+atan(x2); |grad u| -> 0 at infinity";
  return e;
}

inline CatalogEntry make_cubic3d() {
  CatalogEntry e;
  e.name = "cubic3d";
  ScalarField u;
  u.dimension = 3;
  u.value = [](const Point& x) {
    const double a = x[0], b = x[1], c = x[2];
    return a * a * a + b * b * b + c * c * c + a * a * b + a * b * b +
           a * a * c + a * c * c + b * b * c + b * c * c;
  };
  u.gradient = [](const Point& x) {
    const double a = x[0], b = x[1], c = x[2];
    return Point{3 * a * a + b * b + c * c + 2 * a * b + 2 * a * c,
                 a * a + 3 * b * b + c * c + 2 * a * b + 2 * b * c,
                 a * a + b * b + 3 * c * c + 2 * a * c + 2 * b * c};
  };
  u.laplacian = [](const Point& x) { return 10.0 * (x[0] + x[1] + x[2]); };
  u.critical_values = {0.0};
  e.potential = u;
  e.field = gradient_field(u);
  const double lo = (2.0 - std::sqrt(3.0)) / (2.0 + std::sqrt(3.0));
  e.ratio_bounds = {{lo, 1.0 / lo}, {lo, 1.0 / lo}};
  e.notes = "partial derivatives are positive quadratic forms sharing "
            "eigenvalues {2-sqrt3, 1, 2+sqrt3}; origin is the only critical point";
  return e;
}

inline CatalogEntry make_fcomposite3d() {
  CatalogEntry e;
  e.name = "fcomposite3d";
  // f increasing with f'(t) = t^2 (t-1)^2 vanishing exactly at {0, 1}.
  const auto f = [](double t) {
    return t * t * t * t * t / 5.0 - t * t * t * t / 2.0 + t * t * t / 3.0;
  };
  const auto fp = [](double t) { return t * t * (t - 1.0) * (t - 1.0); };
  const auto fpp = [](double t) { return 2.0 * t * (2.0 * t - 1.0) * (t - 1.0); };
  const auto args = [](const Point& x) {
    return std::array<double, 4>{x[0] + x[1] + x[2], x[0] + 2 * x[1] + x[2],
                                 x[0] + x[1] + 3 * x[2],
                                 x[0] + 4 * x[1] + 5 * x[2]};
  };
  ScalarField u;
  u.dimension = 3;
  u.value = [f, args](const Point& x) {
    const auto a = args(x);
    return 0.25 * (f(a[0]) + f(a[1]) + f(a[2]) + f(a[3]));
  };
  u.gradient = [fp, args](const Point& x) {
    const auto a = args(x);
    const double f1 = fp(a[0]), f2 = fp(a[1]), f3 = fp(a[2]), f4 = fp(a[3]);
    return Point{0.25 * (f1 + f2 + f3 + f4), 0.25 * (f1 + 2 * f2 + f3 + 4 * f4),
                 0.25 * (f1 + f2 + 3 * f3 + 5 * f4)};
  };
  u.laplacian = [fpp, args](const Point& x) {
    const auto a = args(x);
    return 0.25 * (3 * fpp(a[0]) + 6 * fpp(a[1]) + 11 * fpp(a[2]) +
                   42 * fpp(a[3]));
  };
  u.critical_values = {f(0.0), f(1.0)};  // {0, 1/30}
  e.potential = u;
  e.field = gradient_field(u);
  e.ratio_bounds = {{1.0, 4.0}, {0.25, 5.0}};
  e.notes = "composite of an increasing f with f' = t^2(t-1)^2; critical "
            "points (0,0,0) and (1,0,0)";
  return e;
}

inline CatalogEntry make_cubicflow2d() {
  CatalogEntry e;
  e.name = "cubicflow2d";
  ScalarField v;
  v.dimension = 2;
  v.value = [](const Point& x) {
    return (x[0] * x[0] * x[0] + x[1] * x[1] * x[1]) / 3.0;
  };
  v.gradient = [](const Point& x) { return Point{x[0] * x[0], x[1] * x[1]}; };
  v.laplacian = [](const Point& x) { return 2.0 * (x[0] + x[1]); };
  e.potential = v;

  VectorField b;
  b.dimension = 2;
  b.eval_into = [](const Point& x, Point& out) {
    out.resize(2);
    out[0] = x[0] * x[0];
    out[1] = x[1] * x[1];
  };
  b.divergence = v.laplacian;
  b.jacobian = [](const Point& x) {
    Matrix j = Matrix::Zero(2, 2);
    j(0, 0) = 2.0 * x[0];
    j(1, 1) = 2.0 * x[1];
    return j;
  };
  e.field = b;

  // Hitting level u = x1 + x2 with c = 1 on the band {u > 0}.
  ScalarField usum;
  usum.dimension = 2;
  usum.value = [](const Point& x) { return x[0] + x[1]; };
  usum.gradient = [](const Point&) { return Point{1.0, 1.0}; };
  usum.laplacian = [](const Point&) { return 0.0; };
  LevelSpec spec;
  spec.potential = usum;
  spec.level = 1.0;
  spec.band_low = 0.0;
  spec.band_high = kInf;
  e.level = spec;

  e.closed_forms.flow = [](double t, const Point& x) {
    return Point{x[0] / (1.0 - t * x[0]), x[1] / (1.0 - t * x[1])};
  };
  // Unique tau with X1(tau)+X2(tau) = 1, as a quadratic in tau; the valid
  // root keeps both 1 - tau x_i positive (inside the maximal interval).
  e.closed_forms.hitting_time = [](const Point& x) {
    const double s = x[0] + x[1];
    if (!(s > 0))
      throw std::domain_error("cubicflow2d closed-form tau needs x1+x2 > 0");
    const double a = x[0] * x[1];
    if (std::abs(a) < 1e-14 * std::max(1.0, s * s)) return (1.0 - s) / s;
    const double bq = 2.0 * a - s, cq = 1.0 - s;
    const double disc = std::sqrt(bq * bq - 4.0 * a * cq);
    const double q = -0.5 * (bq + (bq >= 0 ? disc : -disc));
    // On the diagonal the spurious root sits exactly on the blow-up time, so
    // take the root whose denominators 1 - tau x_i stay farthest positive.
    double best = 0.0, best_margin = -kInf;
    for (double r : {q / a, cq / q}) {
      const double margin = std::min(1.0 - r * x[0], 1.0 - r * x[1]);
      if (margin > best_margin) {
        best_margin = margin;
        best = r;
      }
    }
    if (!(best_margin > 1e-12))
      throw std::domain_error("cubicflow2d closed-form tau: no admissible root");
    return best;
  };
  e.closed_forms.sigma = [tau = e.closed_forms.hitting_time](const Point& x) {
    const double t = tau(x);
    const double d1 = 1.0 - t * x[0], d2 = 1.0 - t * x[1];
    return 1.0 / (d1 * d1 * d2 * d2);
  };
  e.notes = "gradient of (x1^3+x2^3)/3; finite-time blow-up, explicit flow";
  return e;
}

inline CatalogEntry make_shearcos2d() {
  CatalogEntry e;
  e.name = "shearcos2d";
  const double alpha = 2.0 * kTwoPi + 1.0;  // 4*pi + 1
  ScalarField u;
  u.dimension = 2;
  u.value = [alpha](const Point& x) {
    return alpha * (x[0] + x[1]) +
           2.0 * std::cos(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]);
  };
  u.gradient = [alpha](const Point& x) {
    return Point{
        alpha - 2.0 * kTwoPi * std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]),
        alpha - 2.0 * kTwoPi * std::cos(kTwoPi * x[0]) * std::sin(kTwoPi * x[1])};
  };
  u.laplacian = [](const Point& x) {
    return -4.0 * kTwoPi * kTwoPi * std::cos(kTwoPi * x[0]) *
           std::cos(kTwoPi * x[1]);
  };
  e.potential = u;
  e.field = gradient_field(u, /*periodic=*/true);

  // Same field in rotated coordinates x = (y1+y2, y2-y1): the first component
  // depends on y1 alone and changes sign, which feeds the slab detector.
  VectorField rotated;
  rotated.dimension = 2;
  rotated.periodic = true;
  rotated.eval_into = [alpha](const Point& y, Point& out) {
    out.resize(2);
    out[0] = -2.0 * kTwoPi * std::sin(2.0 * kTwoPi * y[0]);
    out[1] = 2.0 * alpha - 2.0 * kTwoPi * std::sin(2.0 * kTwoPi * y[1]);
  };
  rotated.divergence = [](const Point& y) {
    return -4.0 * kTwoPi * kTwoPi *
           (std::cos(2.0 * kTwoPi * y[0]) + std::cos(2.0 * kTwoPi * y[1]));
  };
  e.variants["rotated"] = rotated;
  e.notes = "componentwise positive gradient without any positive periodic "
            "invariant measure; the rotated variant exposes the sign change";
  return e;
}

// Shared layered2d building blocks: v1(s) = 2s + sin(2 pi s)/(2 pi).
inline double layered_v1(double s) { return 2.0 * s + std::sin(kTwoPi * s) / kTwoPi; }
inline double layered_v1p(double s) { return 2.0 + std::cos(kTwoPi * s); }
inline double layered_v1_inverse(double c) {
  return invert_monotone(layered_v1, layered_v1p, c, c / 2.0, c / 2.0 - 1.0,
                         c / 2.0 + 1.0);
}

inline CatalogEntry make_layered2d() {
  CatalogEntry e;
  e.name = "layered2d";
  VectorField b;
  b.dimension = 2;
  b.periodic = true;
  b.eval_into = [](const Point& x, Point& out) {
    out.resize(2);
    out[0] = 0.0;
    out[1] = 1.0 / layered_v1p(x[1]);
  };
  b.divergence = [](const Point& x) {
    const double w = layered_v1p(x[1]);
    return kTwoPi * std::sin(kTwoPi * x[1]) / (w * w);
  };
  e.field = b;
  e.invariant_measure = [](const Point& x) {
    return (2.0 + std::sin(kTwoPi * x[0])) * layered_v1p(x[1]);
  };

  PotentialFrame frame;
  AffinePlusPeriodic v1;
  v1.dimension = 2;
  v1.linear = {0.0, 2.0};
  v1.periodic = [](const Point& x) { return std::sin(kTwoPi * x[1]) / kTwoPi; };
  v1.periodic_gradient = [](const Point& x) {
    return Point{0.0, std::cos(kTwoPi * x[1])};
  };
  AffinePlusPeriodic v2;
  v2.dimension = 2;
  v2.linear = {-2.0, 0.0};
  v2.periodic = [](const Point& x) { return std::cos(kTwoPi * x[0]) / kTwoPi; };
  v2.periodic_gradient = [](const Point& x) {
    return Point{-std::sin(kTwoPi * x[0]), 0.0};
  };
  frame.v = {v1, v2};
  e.frame = frame;

  e.closed_forms.flow = [](double t, const Point& x) {
    return Point{x[0], layered_v1_inverse(layered_v1(x[1]) + t)};
  };
  e.closed_forms.effective_velocity = Point{0.0, 0.5};
  e.notes = "b = e2 / v1'(x2) with sigma = v(x1) v1'(x2); non-ergodic flow "
            "with constant effective velocity";
  return e;
}

inline CatalogEntry make_layered3d() {
  CatalogEntry e;
  e.name = "layered3d";
  const double eps = 0.1;
  PotentialFrame frame;
  for (int k = 0; k < 3; ++k) {
    AffinePlusPeriodic vk = coordinate_function(3, k);
    if (k < 2) {
      vk.periodic = [eps, k](const Point& x) {
        return eps / kTwoPi * std::sin(kTwoPi * x[k]);
      };
      vk.periodic_gradient = [eps, k](const Point& x) {
        Point g(3, 0.0);
        g[k] = eps * std::cos(kTwoPi * x[k]);
        return g;
      };
    } else {
      vk.periodic = [eps](const Point& x) {
        return eps / kTwoPi * std::sin(kTwoPi * (x[0] + x[2]));
      };
      vk.periodic_gradient = [eps](const Point& x) {
        const double c = eps * std::cos(kTwoPi * (x[0] + x[2]));
        return Point{c, 0.0, c};
      };
    }
    frame.v.push_back(std::move(vk));
  }
  e.frame = frame;

  // b = (grad v2 x grad v3) / det(DV), written out for speed.
  const auto w1 = [eps](double s) { return 1.0 + eps * std::cos(kTwoPi * s); };
  const auto g3 = [eps](const Point& x) {
    return eps * std::cos(kTwoPi * (x[0] + x[2]));
  };
  VectorField b;
  b.dimension = 3;
  b.periodic = true;
  b.eval_into = [w1, g3](const Point& x, Point& out) {
    out.resize(3);
    const double a = w1(x[0]), g = g3(x);
    out[0] = 1.0 / a;
    out[1] = 0.0;
    out[2] = -g / (a * (1.0 + g));
  };
  b.divergence = [eps, w1, g3](const Point& x) {
    const double a = w1(x[0]), g = g3(x);
    const double s1 = kTwoPi * eps * std::sin(kTwoPi * x[0]);
    const double s13 = kTwoPi * eps * std::sin(kTwoPi * (x[0] + x[2]));
    return s1 / (a * a) + s13 / (a * (1.0 + g) * (1.0 + g));
  };
  e.field = b;
  e.invariant_measure = [eps, w1, g3](const Point& x) {
    return w1(x[0]) * (1.0 + eps * std::cos(kTwoPi * x[1])) * (1.0 + g3(x));
  };
  e.notes = "three-dimensional cross-gradient field with b.e2 = 0; "
            "non-ergodic via the x2-only potential v2";
  return e;
}

// harmonic1d antiderivative F(t) = int_0^t ds / (2 + cos(2 pi s)), via the
// branch-corrected arctan closed form.
inline double harmonic_antiderivative(double t) {
  const double k = std::round(t);
  const double r3 = std::sqrt(3.0);
  return k / r3 + std::atan(std::tan(std::numbers::pi * (t - k)) / r3) /
                      (std::numbers::pi * r3);
}

inline CatalogEntry make_harmonic1d() {
  CatalogEntry e;
  e.name = "harmonic1d";
  const auto bval = [](double s) { return 2.0 + std::cos(kTwoPi * s); };
  VectorField b;
  b.dimension = 1;
  b.periodic = true;
  b.eval_into = [bval](const Point& x, Point& out) {
    out.resize(1);
    out[0] = bval(x[0]);
  };
  b.divergence = [](const Point& x) { return -kTwoPi * std::sin(kTwoPi * x[0]); };
  e.field = b;
  e.invariant_measure = [bval](const Point& x) { return 1.0 / bval(x[0]); };

  PotentialFrame frame;
  AffinePlusPeriodic v1;
  v1.dimension = 1;
  const double r3 = std::sqrt(3.0);
  v1.linear = {1.0 / r3};
  v1.periodic = [r3](const Point& x) {
    return harmonic_antiderivative(x[0]) - x[0] / r3;
  };
  v1.periodic_gradient = [bval, r3](const Point& x) {
    return Point{1.0 / bval(x[0]) - 1.0 / r3};
  };
  frame.v = {v1};
  e.frame = frame;

  e.closed_forms.flow = [bval](double t, const Point& x) {
    const double target = harmonic_antiderivative(x[0]) + t;
    const double r3 = std::sqrt(3.0);
    const double guess = target * r3;
    return Point{invert_monotone(harmonic_antiderivative,
                                 [bval](double s) { return 1.0 / bval(s); },
                                 target, guess, guess - 2.0, guess + 2.0)};
  };
  e.closed_forms.effective_velocity = Point{std::sqrt(3.0)};
  e.notes = "non-vanishing 1d field; sigma = 1/b, harmonic-mean velocity";
  return e;
}

}  // namespace detail

inline const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = {
      "arctan2d",  "cubic3d",   "fcomposite3d", "cubicflow2d",
      "shearcos2d", "layered2d", "layered3d",    "harmonic1d"};
  return names;
}

inline const CatalogEntry& catalog_get(const std::string& name) {
  static const std::map<std::string, CatalogEntry> entries = [] {
    std::map<std::string, CatalogEntry> m;
    for (CatalogEntry e :
         {detail::make_arctan2d(), detail::make_cubic3d(),
          detail::make_fcomposite3d(), detail::make_cubicflow2d(),
          detail::make_shearcos2d(), detail::make_layered2d(),
          detail::make_layered3d(), detail::make_harmonic1d()})
      m.emplace(e.name, std::move(e));
    return m;
  }();
  const auto it = entries.find(name);
  if (it == entries.end())
    throw UnknownCatalogEntry("no catalog entry named '" + name + "'");
  return it->second;
}

/// Variant lookup, e.g. catalog_variant("shearcos2d", "rotated").
inline const VectorField& catalog_variant(const std::string& name,
                                          const std::string& variant) {
  const CatalogEntry& e = catalog_get(name);
  const auto it = e.variants.find(variant);
  if (it == e.variants.end())
    throw UnknownCatalogEntry("entry '" + name + "' has no variant '" +
                              variant + "'");
  return it->second;
}

}  // namespace isoflow

#endif  // ISOFLOW_CATALOG_HPP

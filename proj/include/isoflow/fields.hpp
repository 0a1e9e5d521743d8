#ifndef ISOFLOW_FIELDS_HPP
#define ISOFLOW_FIELDS_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "isoflow/core.hpp"

namespace isoflow {

using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Field definitions. Immutable after construction; evaluators must be safe
// for concurrent read-only use.
// ---------------------------------------------------------------------------

/// Scalar potential u with optional analytic gradient and Laplacian.
/// critical_values lists the interior critical values c_1 < ... < c_n;
/// `range` holds (inf u, sup u) when known.
struct ScalarField {
  int dimension = 0;
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;    // optional
  std::function<double(const Point&)> laplacian;  // optional
  std::vector<double> critical_values;
  std::pair<double, double> range{-kInf, kInf};

  bool has_gradient() const { return static_cast<bool>(gradient); }
  bool has_laplacian() const { return static_cast<bool>(laplacian); }
};

/// Vector field b. `eval_into` is the primary evaluator (no allocation on the
/// hot path); `operator()` is the by-value convenience.
struct VectorField {
  int dimension = 0;
  std::function<void(const Point&, Point&)> eval_into;
  std::function<double(const Point&)> divergence;  // optional
  std::function<Matrix(const Point&)> jacobian;    // optional
  bool periodic = false;

  Point operator()(const Point& x) const {
    Point r(dimension);
    eval_into(x, r);
    return r;
  }
  bool has_divergence() const { return static_cast<bool>(divergence); }
};

inline VectorField make_vector_field(int d,
                                     std::function<Point(const Point&)> f,
                                     bool periodic = false) {
  VectorField b;
  b.dimension = d;
  b.periodic = periodic;
  b.eval_into = [f = std::move(f)](const Point& x, Point& out) { out = f(x); };
  return b;
}

inline VectorField constant_field(Point c) {
  const int d = static_cast<int>(c.size());
  VectorField b;
  b.dimension = d;
  b.periodic = true;
  b.eval_into = [c = std::move(c)](const Point&, Point& out) { out = c; };
  b.divergence = [](const Point&) { return 0.0; };
  return b;
}

// ---------------------------------------------------------------------------
// Finite differences (central, default step 1e-5). Fallbacks for fields
// without analytic derivatives, and consistency oracles in tests.
// ---------------------------------------------------------------------------

inline constexpr double kDefaultFdStep = 1e-5;

inline Point fd_gradient(const std::function<double(const Point&)>& f,
                         const Point& x, double h = kDefaultFdStep) {
  Point g(x.size());
  Point xp = x, xm = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    xp[k] = x[k] + h;
    xm[k] = x[k] - h;
    g[k] = (f(xp) - f(xm)) / (2.0 * h);
    xp[k] = x[k];
    xm[k] = x[k];
  }
  return g;
}

inline double fd_divergence(const VectorField& b, const Point& x,
                            double h = kDefaultFdStep) {
  Point xp = x, xm = x, bp(b.dimension), bm(b.dimension);
  double div = 0.0;
  for (int k = 0; k < b.dimension; ++k) {
    xp[k] = x[k] + h;
    xm[k] = x[k] - h;
    b.eval_into(xp, bp);
    b.eval_into(xm, bm);
    div += (bp[k] - bm[k]) / (2.0 * h);
    xp[k] = x[k];
    xm[k] = x[k];
  }
  return div;
}

inline double fd_laplacian(const std::function<double(const Point&)>& f,
                           const Point& x, double h = 1e-4) {
  double lap = 0.0;
  const double f0 = f(x);
  Point xp = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    xp[k] = x[k] + h;
    const double fp = f(xp);
    xp[k] = x[k] - h;
    const double fm = f(xp);
    xp[k] = x[k];
    lap += (fp - 2.0 * f0 + fm) / (h * h);
  }
  return lap;
}

/// Divergence of b at x: analytic when provided, else central differences.
inline double eval_divergence(const VectorField& b, const Point& x,
                              double h = kDefaultFdStep) {
  require_dimension(x, b.dimension, "eval_divergence");
  if (b.has_divergence()) return b.divergence(x);
  return fd_divergence(b, x, h);
}

inline Point eval_gradient(const ScalarField& u, const Point& x,
                           double h = kDefaultFdStep) {
  require_dimension(x, u.dimension, "eval_gradient");
  if (u.has_gradient()) return u.gradient(x);
  return fd_gradient(u.value, x, h);
}

/// Gradient field b = grad u; div b = Laplacian of u when available.
inline VectorField gradient_field(const ScalarField& u, bool periodic = false) {
  VectorField b;
  b.dimension = u.dimension;
  b.periodic = periodic;
  if (u.has_gradient()) {
    b.eval_into = [g = u.gradient](const Point& x, Point& out) { out = g(x); };
  } else {
    b.eval_into = [f = u.value](const Point& x, Point& out) {
      out = fd_gradient(f, x);
    };
  }
  if (u.has_laplacian()) b.divergence = u.laplacian;
  return b;
}

// ---------------------------------------------------------------------------
// Componentwise sign classification over a sample grid.
// ---------------------------------------------------------------------------

enum class SignClass { all_positive, all_negative, mixed };

inline const char* to_string(SignClass c) {
  switch (c) {
    case SignClass::all_positive: return "all_positive";
    case SignClass::all_negative: return "all_negative";
    default: return "mixed";
  }
}

struct SignReport {
  SignClass classification = SignClass::mixed;
  double margin = 0.0;                      // worst-case |b_k| for uniform sign
  std::vector<double> component_min;        // per component over the grid
  std::vector<double> component_max;
};

inline SignReport check_componentwise_sign(const VectorField& b,
                                           const std::vector<Point>& grid) {
  if (grid.empty())
    throw std::invalid_argument("check_componentwise_sign: empty grid");
  const int d = b.dimension;
  SignReport rep;
  rep.component_min.assign(d, kInf);
  rep.component_max.assign(d, -kInf);
  Point v(d);
  for (const Point& x : grid) {
    require_dimension(x, d, "check_componentwise_sign");
    b.eval_into(x, v);
    for (int k = 0; k < d; ++k) {
      rep.component_min[k] = std::min(rep.component_min[k], v[k]);
      rep.component_max[k] = std::max(rep.component_max[k], v[k]);
    }
  }
  double lo = kInf, hi = -kInf;
  for (int k = 0; k < d; ++k) {
    lo = std::min(lo, rep.component_min[k]);
    hi = std::max(hi, rep.component_max[k]);
  }
  if (lo > 0) {
    rep.classification = SignClass::all_positive;
    rep.margin = lo;
  } else if (hi < 0) {
    rep.classification = SignClass::all_negative;
    rep.margin = -hi;
  } else {
    rep.classification = SignClass::mixed;
    rep.margin = 0.0;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Ratio condition on consecutive partial derivatives: checks
// lo_k <= |d_{k+1} u / d_k u| <= hi_k over the grid, as constant bounds.
// Points where both derivatives vanish are skipped; a vanishing denominator
// with a non-vanishing numerator counts as a violation.
// ---------------------------------------------------------------------------

struct RatioViolation {
  Point x;
  int pair_index;  // k for the (k, k+1) pair
  double ratio;    // may be inf
};

struct RatioReport {
  bool ok = true;
  std::vector<RatioViolation> violations;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // both derivatives ~ 0

  explicit operator bool() const { return ok; }
};

inline RatioReport check_ratio_condition(
    const ScalarField& u, const std::vector<Point>& grid,
    const std::vector<std::pair<double, double>>& bounds,
    double zero_tol = 1e-13, double slack = 1e-12) {
  const int d = u.dimension;
  if (static_cast<int>(bounds.size()) != d - 1)
    throw std::invalid_argument("check_ratio_condition: need d-1 bound pairs");
  RatioReport rep;
  for (const Point& x : grid) {
    const Point g = eval_gradient(u, x);
    const double scale = norm_inf(g);
    for (int k = 0; k + 1 < d; ++k) {
      const double den = std::abs(g[k]);
      const double num = std::abs(g[k + 1]);
      if (den <= zero_tol * scale && num <= zero_tol * scale) {
        ++rep.skipped;
        continue;
      }
      ++rep.checked;
      const double ratio = den > 0 ? num / den : kInf;
      const auto& [lo, hi] = bounds[k];
      if (ratio < lo * (1.0 - slack) - slack || ratio > hi * (1.0 + slack) + slack) {
        rep.ok = false;
        rep.violations.push_back({x, k, ratio});
      }
    }
  }
  return rep;
}

}  // namespace isoflow

#endif  // ISOFLOW_FIELDS_HPP

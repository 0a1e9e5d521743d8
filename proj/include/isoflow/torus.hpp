#ifndef ISOFLOW_TORUS_HPP
#define ISOFLOW_TORUS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "isoflow/core.hpp"
#include "isoflow/fields.hpp"
#include "isoflow/flow.hpp"

namespace isoflow {

// ---------------------------------------------------------------------------
// Affine-plus-periodic scalar functions v(x) = l.x + p(x), p periodic on the
// unit cell, with analytic gradients. These carry the potentials v_1..v_d and
// the corrector frame W.
// ---------------------------------------------------------------------------

struct AffinePlusPeriodic {
  int dimension = 0;
  Point linear;                                          // l
  std::function<double(const Point&)> periodic;          // p(x)
  std::function<Point(const Point&)> periodic_gradient;  // grad p (analytic)

  double value(const Point& x) const { return dot(linear, x) + periodic(x); }
  Point gradient(const Point& x) const {
    Point g = periodic_gradient(x);
    for (int k = 0; k < dimension; ++k) g[k] += linear[k];
    return g;
  }
};

inline AffinePlusPeriodic coordinate_function(int d, int axis, double slope = 1.0) {
  AffinePlusPeriodic v;
  v.dimension = d;
  v.linear.assign(d, 0.0);
  v.linear[axis] = slope;
  v.periodic = [](const Point&) { return 0.0; };
  v.periodic_gradient = [d](const Point&) { return Point(d, 0.0); };
  return v;
}

struct PotentialFrame {
  std::vector<AffinePlusPeriodic> v;

  int dimension() const { return v.empty() ? 0 : v.front().dimension; }

  /// DV(x) with columns grad v_1, ..., grad v_d (entries D_ij = d_i v_j).
  Matrix jacobian(const Point& x) const {
    const int d = dimension();
    Matrix m(d, d);
    for (int j = 0; j < d; ++j) {
      const Point g = v[j].gradient(x);
      for (int i = 0; i < d; ++i) m(i, j) = g[i];
    }
    return m;
  }
};

// ---------------------------------------------------------------------------
// Cell averages: tensor-product rectangle rule on the unit cell, spectrally
// accurate for smooth periodic integrands. Dense sampling is rejected above
// d=3 on cost grounds.
// ---------------------------------------------------------------------------

namespace detail {

template <typename Body>
void for_each_cell_node(int d, int n, Body&& body) {
  if (n < 2) throw std::invalid_argument("cell_average: need n >= 2");
  if (d < 1 || d > 3)
    throw std::invalid_argument("cell_average: supported for 1 <= d <= 3");
  Point x(d, 0.0);
  std::vector<int> idx(d, 0);
  for (;;) {
    for (int k = 0; k < d; ++k) x[k] = static_cast<double>(idx[k]) / n;
    body(const_cast<const Point&>(x));
    int k = d - 1;
    while (k >= 0 && ++idx[k] == n) idx[k--] = 0;
    if (k < 0) break;
  }
}

}  // namespace detail

inline double cell_average(const std::function<double(const Point&)>& f, int d,
                           int n = 64) {
  double acc = 0.0;
  detail::for_each_cell_node(d, n, [&](const Point& x) { acc += f(x); });
  return acc / std::pow(static_cast<double>(n), d);
}

inline Point cell_average(const std::function<Point(const Point&)>& f, int d,
                          int n = 64) {
  Point acc;
  detail::for_each_cell_node(d, n, [&](const Point& x) {
    Point v = f(x);
    if (acc.empty()) acc.assign(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
  });
  const double count = std::pow(static_cast<double>(n), d);
  for (double& a : acc) a /= count;
  return acc;
}

inline Matrix cell_average_matrix(const std::function<Matrix(const Point&)>& f,
                                  int d, int n = 64) {
  Matrix acc;
  bool first = true;
  detail::for_each_cell_node(d, n, [&](const Point& x) {
    if (first) {
      acc = f(x);
      first = false;
    } else {
      acc += f(x);
    }
  });
  return acc / std::pow(static_cast<double>(n), d);
}

// ---------------------------------------------------------------------------
// Cross products of gradients. R_perp is the clockwise rotation mapping
// e2 -> e1, (a, b) -> (b, -a); the d >= 3 cross product follows the cofactor
// sign convention, so sigma = sigma_b . grad v_1 = det(DV) in all dimensions.
// In d = 1 the empty cross product is the constant 1.
// ---------------------------------------------------------------------------

inline Point cross_product(const std::vector<Point>& xi) {
  const int d = static_cast<int>(xi.size()) + 1;
  Point out(d);
  Eigen::MatrixXd minor(d - 1, d - 1);
  for (int k = 0; k < d; ++k) {
    for (int c = 0; c < d - 1; ++c) {
      int r = 0;
      for (int i = 0; i < d; ++i) {
        if (i == k) continue;
        minor(r++, c) = xi[c][i];
      }
    }
    out[k] = ((k % 2) == 0 ? 1.0 : -1.0) * minor.determinant();
  }
  return out;
}

struct CrossGradientFields {
  int dimension = 0;
  std::function<double(const Point&)> sigma;    // det(DV)
  std::function<Point(const Point&)> sigma_b;
  VectorField b;                                // sigma_b / sigma, periodic
  double min_sigma_probe = 0.0;
};

inline CrossGradientFields cross_gradients(const PotentialFrame& frame,
                                           int probe_n = 16) {
  const int d = frame.dimension();
  if (d < 1) throw std::invalid_argument("cross_gradients: empty frame");
  CrossGradientFields out;
  out.dimension = d;
  out.sigma = [frame](const Point& x) { return frame.jacobian(x).determinant(); };
  if (d == 1) {
    out.sigma_b = [](const Point&) { return Point{1.0}; };
  } else if (d == 2) {
    out.sigma_b = [v2 = frame.v[1]](const Point& x) {
      const Point g = v2.gradient(x);
      return Point{g[1], -g[0]};
    };
  } else {
    out.sigma_b = [frame, d](const Point& x) {
      std::vector<Point> grads;
      grads.reserve(d - 1);
      for (int j = 1; j < d; ++j) grads.push_back(frame.v[j].gradient(x));
      return cross_product(grads);
    };
  }
  // Positivity probe; a vanishing determinant makes the criterium inapplicable.
  double min_sigma = kInf;
  detail::for_each_cell_node(d, probe_n, [&](const Point& x) {
    min_sigma = std::min(min_sigma, out.sigma(x));
  });
  if (!(min_sigma > 0))
    throw SigmaVanishes("min det(DV) = " + std::to_string(min_sigma) +
                        " on the probe grid");
  out.min_sigma_probe = min_sigma;
  VectorField b;
  b.dimension = d;
  b.periodic = true;
  b.eval_into = [sigma = out.sigma, sigma_b = out.sigma_b](const Point& x,
                                                           Point& r) {
    r = sigma_b(x);
    const double s = sigma(x);
    for (double& v : r) v /= s;
  };
  out.b = std::move(b);
  return out;
}

// ---------------------------------------------------------------------------
// The transport matrix M = <DV>^{-1}, corrector frame W = M^T V with
// <DW> = I, and xi = M^T e1 with (DW)^T b = xi.
// ---------------------------------------------------------------------------

struct CriteriumReport {
  int dimension = 0;
  std::function<double(const Point&)> sigma;
  std::function<Point(const Point&)> sigma_b;
  VectorField b;
  Matrix average_dv;
  Matrix m;                           // <DV>^{-1}
  std::vector<AffinePlusPeriodic> w;  // corrector frame
  Point xi;
  double min_sigma = 0.0;
  double max_transport_residual = 0.0;  // max |(DW)^T b - xi|
  double average_dw_error = 0.0;        // |<DW> - I|_max
  int grid_n = 0;
  bool pass = false;

  /// W_sharp(x) = x - W(x), periodic since <DW> = I.
  Point w_sharp(const Point& x) const {
    Point out(dimension);
    for (int k = 0; k < dimension; ++k) out[k] = x[k] - w[k].value(x);
    return out;
  }

  double sup_w_sharp(int n = 64) const {
    double sup = 0.0;
    detail::for_each_cell_node(dimension, n, [&](const Point& x) {
      sup = std::max(sup, norm(w_sharp(x)));
    });
    return sup;
  }
};

inline CriteriumReport build_transport_matrix(const PotentialFrame& frame,
                                              int n = 64) {
  const int d = frame.dimension();
  CriteriumReport rep;
  rep.dimension = d;
  rep.grid_n = n;

  rep.average_dv = cell_average_matrix(
      [&frame](const Point& x) { return frame.jacobian(x); }, d, n);
  const double det = rep.average_dv.determinant();
  double scale = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      scale = std::max(scale, std::abs(rep.average_dv(i, j)));
  if (std::abs(det) <= 1e-12 * std::pow(std::max(scale, 1e-300), d))
    throw SingularAverage("det <DV> = " + std::to_string(det));
  rep.m = rep.average_dv.inverse();

  CrossGradientFields cg = cross_gradients(frame);
  rep.sigma = cg.sigma;
  rep.sigma_b = cg.sigma_b;
  rep.b = cg.b;

  // W_j = sum_k M_kj v_k, each affine-plus-periodic.
  rep.w.reserve(d);
  for (int j = 0; j < d; ++j) {
    AffinePlusPeriodic wj;
    wj.dimension = d;
    wj.linear.assign(d, 0.0);
    std::vector<double> coeff(d);
    for (int k = 0; k < d; ++k) {
      coeff[k] = rep.m(k, j);
      for (int i = 0; i < d; ++i) wj.linear[i] += coeff[k] * frame.v[k].linear[i];
    }
    wj.periodic = [frame, coeff, d](const Point& x) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += coeff[k] * frame.v[k].periodic(x);
      return s;
    };
    wj.periodic_gradient = [frame, coeff, d](const Point& x) {
      Point g(d, 0.0);
      for (int k = 0; k < d; ++k) {
        const Point gk = frame.v[k].periodic_gradient(x);
        for (int i = 0; i < d; ++i) g[i] += coeff[k] * gk[i];
      }
      return g;
    };
    rep.w.push_back(std::move(wj));
  }

  rep.xi.assign(d, 0.0);
  for (int k = 0; k < d; ++k) rep.xi[k] = rep.m(0, k);  // M^T e1

  // Residuals on the n^d grid.
  const Matrix average_dw = rep.average_dv * rep.m;
  rep.average_dw_error = (average_dw - Matrix::Identity(d, d))
                             .cwiseAbs()
                             .maxCoeff();
  rep.min_sigma = kInf;
  Point bx(d);
  detail::for_each_cell_node(d, n, [&](const Point& x) {
    rep.min_sigma = std::min(rep.min_sigma, rep.sigma(x));
    rep.b.eval_into(x, bx);
    const Matrix dv = frame.jacobian(x);
    // (DW)^T b = M^T (DV)^T b
    Eigen::VectorXd bv(d);
    for (int i = 0; i < d; ++i) bv(i) = bx[i];
    Eigen::VectorXd r = rep.m.transpose() * (dv.transpose() * bv);
    double worst = 0.0;
    for (int i = 0; i < d; ++i) worst = std::max(worst, std::abs(r(i) - rep.xi[i]));
    rep.max_transport_residual = std::max(rep.max_transport_residual, worst);
  });
  rep.pass = rep.min_sigma > 0;
  return rep;
}

// ---------------------------------------------------------------------------
// Slab-integral non-existence detector: if b_k is strictly positive on one
// slice x_k = const and strictly negative on another, no positive periodic
// invariant measure exists. One-sided test; it can never certify existence.
// ---------------------------------------------------------------------------

struct SlabVerdict {
  bool no_invariant_measure = false;
  int axis = 0;
  double positive_slice = 0.0;  // witness x_k with b_k > 0 across the slice
  double negative_slice = 0.0;  // witness x_k with b_k < 0 across the slice
  double margin = 0.0;          // min |b_k| over both witness slices
};

inline SlabVerdict slab_sign_detector(const VectorField& field, int axis,
                                      int n_slices = 128, int n_transverse = 128,
                                      double sign_margin = 1e-12) {
  if (!field.periodic)
    throw std::invalid_argument("slab_sign_detector: field must be periodic");
  const int d = field.dimension;
  if (axis < 0 || axis >= d)
    throw std::invalid_argument("slab_sign_detector: bad axis");
  SlabVerdict verdict;
  verdict.axis = axis;
  bool have_pos = false, have_neg = false;
  double pos_margin = 0.0, neg_margin = 0.0;
  Point x(d, 0.0), bx(d);
  for (int i = 0; i < n_slices; ++i) {
    const double slice = static_cast<double>(i) / n_slices;
    double lo = kInf, hi = -kInf;
    auto sample = [&](const Point& p) {
      field.eval_into(p, bx);
      lo = std::min(lo, bx[axis]);
      hi = std::max(hi, bx[axis]);
    };
    if (d == 1) {
      x[0] = slice;
      sample(x);
    } else {
      detail::for_each_cell_node(d - 1, n_transverse, [&](const Point& tv) {
        int c = 0;
        for (int k = 0; k < d; ++k) x[k] = k == axis ? slice : tv[c++];
        sample(x);
      });
    }
    if (!have_pos && lo >= sign_margin) {
      have_pos = true;
      verdict.positive_slice = slice;
      pos_margin = lo;
    }
    if (!have_neg && hi <= -sign_margin) {
      have_neg = true;
      verdict.negative_slice = slice;
      neg_margin = -hi;
    }
    if (have_pos && have_neg) break;
  }
  verdict.no_invariant_measure = have_pos && have_neg;
  verdict.margin = verdict.no_invariant_measure ? std::min(pos_margin, neg_margin) : 0.0;
  return verdict;
}

// ---------------------------------------------------------------------------
// Defining identity of an invariant measure:
// int phi(X(t,x)) sigma(x) dx is constant in t. Returns the max deviation
// from the t = 0 value over the requested times.
// ---------------------------------------------------------------------------

inline double invariance_check(const std::function<double(const Point&)>& sigma,
                               const VectorField& field,
                               const std::function<double(const Point&)>& phi,
                               std::vector<double> times, int n = 64,
                               const IntegrationConfig& cfg = {},
                               int threads = 1) {
  if (!field.periodic)
    throw std::invalid_argument("invariance_check: field must be periodic");
  const int d = field.dimension;
  std::vector<Point> nodes;
  detail::for_each_cell_node(d, n, [&](const Point& x) { nodes.push_back(x); });
  std::vector<double> weights(nodes.size());
  double reference = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double s = sigma(nodes[i]);
    if (!(s > 0))
      throw NonpositiveAverage("invariance_check: sigma <= 0 at a sample point");
    weights[i] = s;
    reference += phi(nodes[i]) * s;
  }
  reference /= static_cast<double>(nodes.size());

  std::sort(times.begin(), times.end());
  std::vector<std::vector<double>> phi_vals(times.size(),
                                            std::vector<double>(nodes.size()));
  parallel_for(nodes.size(), threads, [&](std::size_t i) {
    // March each sample forward through the time list, reusing the stepper.
    double prev = 0.0;
    Point y = nodes[i];
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const double t = times[ti];
      if (t != prev) y = advance_flow(field, y, t - prev, cfg);
      phi_vals[ti][i] = phi(y);
      prev = t;
    }
  });

  double max_dev = 0.0;
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    double integral = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      integral += phi_vals[ti][i] * weights[i];
    integral /= static_cast<double>(nodes.size());
    max_dev = std::max(max_dev, std::abs(integral - reference));
  }
  return max_dev;
}

}  // namespace isoflow

#endif  // ISOFLOW_TORUS_HPP

#ifndef ISOFLOW_ASYMPTOTICS_HPP
#define ISOFLOW_ASYMPTOTICS_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "isoflow/core.hpp"
#include "isoflow/fields.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/torus.hpp"

namespace isoflow {

// ---------------------------------------------------------------------------
// Long-time effective velocity of the flow.
// ---------------------------------------------------------------------------

struct AsymptoticsReport {
  std::vector<Point> seeds;
  std::vector<double> horizons;
  std::vector<std::vector<Point>> estimates;  // [seed][horizon] = X(T,x)/T
  std::optional<Point> xi_reference;
  std::vector<std::vector<double>> errors;    // |estimate - xi|, when xi known
  std::vector<std::vector<double>> bounds;    // (|x| + 2 sup|W#|)/|T|, when frame known
  std::optional<double> sup_w_sharp;
};

/// X(T, x)/T for every seed and horizon. When a criterium report is supplied,
/// the exact identity X(t,x) = x + t xi + W#(X) - W#(x) yields the attached
/// error bound (|x| + 2 sup|W#|) / |T|.
inline AsymptoticsReport effective_velocity_flow(
    const VectorField& field, const std::vector<Point>& seeds,
    const std::vector<double>& horizons, const IntegrationConfig& cfg = {},
    const CriteriumReport* frame_report = nullptr,
    std::optional<Point> xi_reference = std::nullopt, int threads = 1) {
  if (!field.periodic)
    throw std::invalid_argument("effective_velocity_flow: field must be periodic");
  AsymptoticsReport rep;
  rep.seeds = seeds;
  rep.horizons = horizons;
  if (frame_report) {
    rep.sup_w_sharp = frame_report->sup_w_sharp();
    if (!xi_reference) xi_reference = frame_report->xi;
  }
  rep.xi_reference = xi_reference;
  rep.estimates.resize(seeds.size());
  rep.errors.resize(seeds.size());
  rep.bounds.resize(seeds.size());

  std::vector<double> sorted = horizons;
  std::sort(sorted.begin(), sorted.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  });
  parallel_for(seeds.size(), threads, [&](std::size_t si) {
    const Point& x0 = seeds[si];
    std::vector<Point> est(horizons.size());
    // March outward through the horizons, forward and backward separately.
    for (const int sign : {1, -1}) {
      Point y = x0;
      double prev = 0.0;
      for (double T : sorted) {
        if ((T > 0) != (sign > 0) || T == 0.0) continue;
        y = advance_flow(field, y, T - prev, cfg);
        prev = T;
        Point e = y;
        for (double& v : e) v /= T;
        for (std::size_t hi = 0; hi < horizons.size(); ++hi)
          if (horizons[hi] == T) est[hi] = e;
      }
    }
    for (std::size_t hi = 0; hi < horizons.size(); ++hi)
      if (horizons[hi] == 0.0) est[hi] = x0;  // degenerate: X(0,x)/0 left as x
    rep.estimates[si] = std::move(est);
  });

  for (std::size_t si = 0; si < seeds.size(); ++si) {
    for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
      if (xi_reference)
        rep.errors[si].push_back(
            norm(rep.estimates[si][hi] - *xi_reference));
      if (rep.sup_w_sharp)
        rep.bounds[si].push_back(
            (norm(seeds[si]) + 2.0 * *rep.sup_w_sharp) /
            std::abs(horizons[hi]));
    }
  }
  return rep;
}

/// xi = <sigma b> / <sigma> componentwise.
inline Point effective_velocity_average(
    const std::function<double(const Point&)>& sigma, const VectorField& field,
    int n = 64) {
  const int d = field.dimension;
  Point num(d, 0.0);
  double den = 0.0;
  std::size_t count = 0;
  Point bx(d);
  detail::for_each_cell_node(d, n, [&](const Point& x) {
    const double s = sigma(x);
    field.eval_into(x, bx);
    for (int k = 0; k < d; ++k) num[k] += s * bx[k];
    den += s;
    ++count;
  });
  if (!(den > 0)) throw NonpositiveAverage("effective_velocity_average: <sigma> <= 0");
  for (double& v : num) v /= den;
  (void)count;
  return num;
}

// ---------------------------------------------------------------------------
// Rotation number in d = 2.
// ---------------------------------------------------------------------------

struct RotationNumber {
  bool at_infinity = false;
  double value = 0.0;  // gamma = <sigma b2> / <sigma b1> when finite
};

inline RotationNumber rotation_number(
    const std::function<double(const Point&)>& sigma, const VectorField& field,
    int n = 64) {
  if (field.dimension != 2)
    throw DimensionMismatch("rotation_number: requires d = 2");
  double s_b1 = 0.0, s_b2 = 0.0, s_speed = 0.0;
  std::size_t count = 0;
  Point bx(2);
  detail::for_each_cell_node(2, n, [&](const Point& x) {
    const double s = sigma(x);
    field.eval_into(x, bx);
    s_b1 += s * bx[0];
    s_b2 += s * bx[1];
    s_speed += s * norm(bx);
    ++count;
  });
  RotationNumber out;
  if (std::abs(s_b1) <= 1e-12 * s_speed) {
    out.at_infinity = true;
  } else {
    out.value = s_b2 / s_b1;
  }
  (void)count;
  return out;
}

// ---------------------------------------------------------------------------
// Constructive non-ergodicity: an invariant, non-constant periodic function
// v = a1 lambda.x + a2 v_2 + ... + a_d v_d built from the null vector of
// [lambda, <grad v_2>, ..., <grad v_d>].
// ---------------------------------------------------------------------------

struct ErgodicityWitness {
  AffinePlusPeriodic v;         // the invariant function (linear part ~ 0)
  Point alpha;                  // null-vector coefficients
  double sup_b_dot_grad = 0.0;  // max |b . grad v| on the probe grid
  double variance = 0.0;        // over the n^d grid
  double scaled_variance = 0.0; // variance / range^2
  double linear_residual = 0.0; // |total linear part|

  bool valid(double grad_tol = 1e-10, double var_tol = 1e-12) const {
    return sup_b_dot_grad <= grad_tol && scaled_variance > var_tol &&
           linear_residual <= grad_tol;
  }
};

inline ErgodicityWitness build_nonergodic_witness(const VectorField& field,
                                                  const Point& lambda,
                                                  const PotentialFrame& frame,
                                                  int n = 64) {
  const int d = field.dimension;
  require_dimension(lambda, d, "build_nonergodic_witness");
  if (frame.dimension() != d)
    throw DimensionMismatch("build_nonergodic_witness: frame dimension mismatch");

  // Precondition b . lambda = 0 on a probe grid.
  {
    double worst = 0.0;
    Point bx(d);
    detail::for_each_cell_node(d, 16, [&](const Point& x) {
      field.eval_into(x, bx);
      worst = std::max(worst, std::abs(dot(bx, lambda)));
    });
    if (worst > 1e-10)
      throw LambdaNotOrthogonal("max |b.lambda| = " + std::to_string(worst));
  }

  // Null vector of D = [lambda, <grad v_2>, ..., <grad v_d>].
  Matrix D(d, d);
  for (int i = 0; i < d; ++i) D(i, 0) = lambda[i];
  for (int j = 1; j < d; ++j) {
    const Point avg = cell_average(
        std::function<Point(const Point&)>(
            [&frame, j](const Point& x) { return frame.v[j].gradient(x); }),
        d, n);
    for (int i = 0; i < d; ++i) D(i, j) = avg[i];
  }
  Eigen::JacobiSVD<Matrix> svd(D, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(d - 1) > 1e-10 * sv(0))
    throw NoNullVector("smallest singular value " + std::to_string(sv(d - 1)) +
                       " vs largest " + std::to_string(sv(0)));
  Eigen::VectorXd alpha = svd.matrixV().col(d - 1);

  ErgodicityWitness w;
  w.alpha.assign(d, 0.0);
  for (int i = 0; i < d; ++i) w.alpha[i] = alpha(i);
  Eigen::VectorXd lin = D * alpha;
  w.linear_residual = lin.cwiseAbs().maxCoeff();

  AffinePlusPeriodic v;
  v.dimension = d;
  v.linear.assign(d, 0.0);
  for (int i = 0; i < d; ++i) v.linear[i] = lin(i);
  std::vector<double> coeff(w.alpha.begin(), w.alpha.end());
  // a1 lambda.x cancels against the linear parts of the v_k up to the tiny
  // null-space residual, which is subtracted so that p stays periodic.
  const Point lam = lambda;
  const double a1 = coeff[0];
  const PotentialFrame frame_copy = frame;
  v.periodic = [frame_copy, coeff, lam, a1, lin, d](const Point& x) {
    double s = a1 * dot(lam, x);
    for (int k = 1; k < d; ++k) s += coeff[k] * frame_copy.v[k].value(x);
    // subtract the (numerically tiny) total linear part so p is periodic
    for (int i = 0; i < d; ++i) s -= lin(i) * x[i];
    return s;
  };
  v.periodic_gradient = [frame_copy, coeff, lam, a1, lin, d](const Point& x) {
    Point g(d, 0.0);
    for (int i = 0; i < d; ++i) g[i] = a1 * lam[i] - lin(i);
    for (int k = 1; k < d; ++k) {
      const Point gk = frame_copy.v[k].gradient(x);
      for (int i = 0; i < d; ++i) g[i] += coeff[k] * gk[i];
    }
    return g;
  };
  w.v = v;

  // Witness quality on the n^d grid.
  double sum = 0.0, sum2 = 0.0, vmin = kInf, vmax = -kInf, sup_bg = 0.0;
  std::size_t count = 0;
  Point bx(d);
  detail::for_each_cell_node(d, n, [&](const Point& x) {
    const double val = w.v.value(x);
    sum += val;
    sum2 += val * val;
    vmin = std::min(vmin, val);
    vmax = std::max(vmax, val);
    field.eval_into(x, bx);
    sup_bg = std::max(sup_bg, std::abs(dot(bx, w.v.gradient(x))));
    ++count;
  });
  const double mean = sum / count;
  w.variance = std::max(0.0, sum2 / count - mean * mean);
  const double range = vmax - vmin;
  w.scaled_variance = range > 0 ? w.variance / (range * range) : 0.0;
  w.sup_b_dot_grad = sup_bg;
  if (w.scaled_variance <= 1e-12)
    throw WitnessConstant("witness variance " + std::to_string(w.variance) +
                          " at range " + std::to_string(range));
  return w;
}

}  // namespace isoflow

#endif  // ISOFLOW_ASYMPTOTICS_HPP

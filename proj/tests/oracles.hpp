// Test-only oracles, deliberately independent of the library's adaptive
// integrator and dense output: fixed-step RK4, composite Simpson quadrature,
// and a bisection hitting-time search on top of them.
#ifndef ISOFLOW_TESTS_ORACLES_HPP
#define ISOFLOW_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "isoflow/core.hpp"
#include "isoflow/fields.hpp"

namespace oracle {

using isoflow::Point;

// Classic RK4 with n fixed steps from 0 to t (t may be negative).
inline Point rk4_flow(const isoflow::VectorField& field, Point y, double t,
                      int n) {
  const double h = t / n;
  const std::size_t d = y.size();
  Point k1(d), k2(d), k3(d), k4(d), tmp(d);
  for (int step = 0; step < n; ++step) {
    field.eval_into(y, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    field.eval_into(tmp, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    field.eval_into(tmp, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * k3[i];
    field.eval_into(tmp, k4);
    for (std::size_t i = 0; i < d; ++i)
      y[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return y;
}

// Composite Simpson on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Brute-force hitting time: march u(X(t)) with small RK4 steps until the
// level is crossed, then bisect on the step count.
inline double hitting_time_bisect(const isoflow::VectorField& field,
                                  const std::function<double(const Point&)>& u,
                                  const Point& x0, double level, double dir,
                                  double coarse_dt = 1e-3,
                                  double tol = 1e-9) {
  Point y = x0;
  double t = 0.0;
  const double u0 = u(x0);
  const double target_sign = level > u0 ? 1.0 : -1.0;
  for (int guard = 0; guard < 2000000; ++guard) {
    const Point y_next = rk4_flow(field, y, dir * coarse_dt, 1);
    const double u_next = u(y_next);
    if (target_sign * (u_next - level) >= 0.0) {
      // bisect inside [t, t + dir*coarse_dt]
      double lo = 0.0, hi = dir * coarse_dt;
      while (std::abs(hi - lo) > tol) {
        const double mid = 0.5 * (lo + hi);
        const double um = u(rk4_flow(field, y, mid, 8));
        if (target_sign * (um - level) >= 0.0)
          hi = mid;
        else
          lo = mid;
      }
      return t + 0.5 * (lo + hi);
    }
    y = y_next;
    t += dir * coarse_dt;
  }
  throw std::runtime_error("oracle hitting_time_bisect: no crossing found");
}

inline std::mt19937& rng() {
  static std::mt19937 gen(24601u);
  return gen;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline Point random_point(int d, double lo, double hi) {
  Point p(d);
  for (double& v : p) v = uniform(lo, hi);
  return p;
}

}  // namespace oracle

#endif  // ISOFLOW_TESTS_ORACLES_HPP

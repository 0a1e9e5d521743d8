#ifndef ISOFLOW_CHARACTERISTICS_HPP
#define ISOFLOW_CHARACTERISTICS_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "isoflow/core.hpp"
#include "isoflow/fields.hpp"
#include "isoflow/flow.hpp"

namespace isoflow {

// ---------------------------------------------------------------------------
// Level specification: the target level u = c_u inside a band (c_low, c_high)
// free of critical values.
// ---------------------------------------------------------------------------

struct LevelSpec {
  ScalarField potential;
  double level = 0.0;                 // c_u
  double band_low = -kInf;
  double band_high = kInf;

  void validate() const {
    if (!(band_low < level && level < band_high))
      throw std::invalid_argument("LevelSpec: level must lie strictly inside the band");
  }

  // Scale used for the on-level tolerance: the band width when finite.
  double band_scale() const {
    const double w = band_high - band_low;
    if (std::isfinite(w)) return w;
    return std::max(1.0, std::abs(level));
  }

  bool in_band(double u) const { return u > band_low && u < band_high; }
};

struct HittingOptions {
  double level_value_tol = 1e-10;   // |u(X(tau)) - c_u| target
  double on_level_rel_tol = 1e-12;  // relative to band scale
};

struct HittingTimeResult {
  double tau = 0.0;
  double bracket_width = 0.0;
  double monotonicity_margin = kInf;  // min observed f' = b.grad u
  int iterations = 0;
};

namespace detail {

struct HittingOutcome {
  HittingTimeResult result;
  Trajectory trajectory;
};

inline HittingOutcome hit_level(const VectorField& field, const LevelSpec& spec,
                                const Point& x, const IntegrationConfig& cfg,
                                const HittingOptions& opt) {
  spec.validate();
  require_dimension(x, field.dimension, "hitting_time");
  const ScalarField& u = spec.potential;
  const double u0 = u.value(x);
  if (!spec.in_band(u0))
    throw NotInBand("u(x)=" + std::to_string(u0) + " outside band (" +
                    std::to_string(spec.band_low) + ", " +
                    std::to_string(spec.band_high) + ")");
  const double on_level = opt.on_level_rel_tol * spec.band_scale();
  if (std::abs(u0 - spec.level) <= on_level) {
    Trajectory traj(x, 1);
    traj.finish(TrajectoryStatus::completed, 0.0);
    return {HittingTimeResult{0.0, 0.0, kInf, 0}, traj};
  }

  const double fp0 = dot(field(x), eval_gradient(u, x));
  if (fp0 <= 0)
    throw MonotonicityViolated("f'(0) = b.grad u = " + std::to_string(fp0) +
                               " at the initial point");
  // f is increasing along the flow, so the crossing lies forward when
  // c_u > u(x) and backward otherwise.
  const int sign = spec.level > u0 ? 1 : -1;
  const double transit_estimate = std::abs(spec.level - u0) / fp0;
  double chunk = std::min(0.1, 0.1 * transit_estimate);
  if (!(chunk > 0)) chunk = 0.1;

  Trajectory traj(x, sign);
  AdaptiveFlow stepper(field, x, sign, cfg);
  double margin = fp0;
  double f_prev = u0;
  bool found = false;
  const DenseSegment* cross_seg = nullptr;
  DenseSegment cross_copy;
  Point work(field.dimension);

  auto on_step = [&](const DenseSegment& seg, double, const Point& y) {
    traj.push_segment(seg);
    const double f_now = u.value(y);
    const double fp = dot(field(y), eval_gradient(u, y));
    margin = std::min(margin, fp);
    if (fp <= 0)
      throw MonotonicityViolated("f' = " + std::to_string(fp) +
                                 " sampled along the trajectory");
    const bool crossed = sign > 0 ? (f_prev < spec.level && f_now >= spec.level)
                                  : (f_prev > spec.level && f_now <= spec.level);
    if (crossed) {
      cross_copy = seg;
      cross_seg = &cross_copy;
      found = true;
      return false;
    }
    f_prev = f_now;
    return true;
  };

  double s_cap = chunk;
  while (!found) {
    if (s_cap > cfg.max_time) {
      throw BandExit("bracketing exceeded max_time=" + std::to_string(cfg.max_time) +
                     "; asymptotic level c~" + std::to_string(f_prev));
    }
    const StepperStatus st = stepper.advance_to(s_cap, on_step);
    if (found) break;
    if (st == StepperStatus::blew_up || st == StepperStatus::step_collapse) {
      throw BandExit("trajectory blew up at t=" +
                     std::to_string(sign * stepper.escape_s()) +
                     " before reaching the level; last u=" + std::to_string(f_prev));
    }
    s_cap *= 2.0;  // geometric bracket expansion
  }

  // Refine inside the crossing step on the dense output.
  const DenseSegment& seg = *cross_seg;
  auto g = [&](double s) {
    seg.eval(s, work);
    return u.value(work) - spec.level;
  };
  const double ga = g(seg.s0);
  const double gb = g(seg.s0 + seg.h);
  double s_star;
  if (ga == 0.0) {
    s_star = seg.s0;
  } else if ((ga > 0) == (gb > 0)) {
    s_star = seg.s0 + seg.h;  // landed on the level at the step end
  } else {
    s_star = brent(g, seg.s0, seg.s0 + seg.h, ga, gb,
                   1e-15 * std::max(1.0, seg.s0 + seg.h), 0.0);
  }
  if (std::abs(g(s_star)) > opt.level_value_tol * std::max(1.0, std::abs(spec.level)))
    throw BandExit("level refinement stalled: residual " +
                   std::to_string(std::abs(g(s_star))));

  seg.eval(s_star, work);
  margin = std::min(margin, dot(field(work), eval_gradient(u, work)));
  traj.finish(TrajectoryStatus::completed, std::max(s_star, seg.s0 + seg.h));

  HittingTimeResult res;
  res.tau = sign * s_star;
  res.bracket_width = 4.0 * std::numeric_limits<double>::epsilon() *
                      std::max(1.0, std::abs(s_star));
  res.monotonicity_margin = margin;
  res.iterations = stepper.steps_accepted();
  return {res, std::move(traj)};
}

}  // namespace detail

/// Unique time tau with u(X(tau, x)) = c_u, found by geometric bracketing and
/// safeguarded interpolation on the dense output.
inline HittingTimeResult hitting_time(const VectorField& field,
                                      const LevelSpec& spec, const Point& x,
                                      const IntegrationConfig& cfg = {},
                                      const HittingOptions& opt = {}) {
  return detail::hit_level(field, spec, x, cfg, opt).result;
}

/// sigma(x) = exp( int_0^tau div b (X(s,x)) ds ) > 0. For gradient fields the
/// divergence is the potential's Laplacian when the field carries it.
inline double reconstruct_sigma(const VectorField& field, const LevelSpec& spec,
                                const Point& x, const IntegrationConfig& cfg = {},
                                const HittingOptions& opt = {},
                                double* tau_out = nullptr) {
  auto outcome = detail::hit_level(field, spec, x, cfg, opt);
  if (tau_out) *tau_out = outcome.result.tau;
  if (outcome.result.tau == 0.0) return 1.0;
  auto div_b = [&](const Point& p) { return eval_divergence(field, p); };
  const double integral =
      path_integral(div_b, outcome.trajectory, 0.0, outcome.result.tau);
  return std::exp(integral);
}

// ---------------------------------------------------------------------------
// Batch reconstruction over a grid. Failures are per-point, never fatal.
// ---------------------------------------------------------------------------

struct SigmaField {
  std::vector<Point> points;
  std::vector<double> sigma;        // NaN where failed
  std::vector<double> tau;          // NaN where failed
  std::vector<double> u_value;
  std::vector<std::string> status;  // "ok" or an error code
  LevelSpec level;
  std::size_t n_ok = 0;
};

inline SigmaField sigma_on_grid(const VectorField& field, const LevelSpec& spec,
                                const std::vector<Point>& points,
                                const IntegrationConfig& cfg = {},
                                int threads = 1, const HittingOptions& opt = {}) {
  SigmaField out;
  out.points = points;
  out.level = spec;
  const std::size_t n = points.size();
  out.sigma.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.tau.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.u_value.assign(n, 0.0);
  out.status.assign(n, "ok");
  parallel_for(n, threads, [&](std::size_t i) {
    out.u_value[i] = spec.potential.value(points[i]);
    try {
      double tau = 0.0;
      out.sigma[i] = reconstruct_sigma(field, spec, points[i], cfg, opt, &tau);
      out.tau[i] = tau;
    } catch (const NumericalError& e) {
      out.status[i] = e.code();
    }
  });
  for (const auto& st : out.status)
    if (st == "ok") ++out.n_ok;
  return out;
}

// ---------------------------------------------------------------------------
// Residual of div(sigma b) = 0 in the normalized form
// |grad(sigma).b + sigma div b| / (|sigma| |b|), with central-difference
// grad(sigma) at step h.
// ---------------------------------------------------------------------------

struct ResidualReport {
  double max = 0.0;
  double mean = 0.0;
  double h = 0.0;
  std::size_t n_points = 0;
};

inline ResidualReport pde_residual(
    const std::function<double(const Point&)>& sigma, const VectorField& field,
    const std::vector<Point>& points, double h) {
  if (points.empty())
    throw GridTooCoarse("pde_residual: no evaluation points");
  ResidualReport rep;
  rep.h = h;
  double total = 0.0;
  Point bx(field.dimension);
  for (const Point& x : points) {
    Point xp = x, xm = x;
    double grad_dot_b = 0.0;
    field.eval_into(x, bx);
    for (int k = 0; k < field.dimension; ++k) {
      xp[k] = x[k] + h;
      xm[k] = x[k] - h;
      grad_dot_b += bx[k] * (sigma(xp) - sigma(xm)) / (2.0 * h);
      xp[k] = x[k];
      xm[k] = x[k];
    }
    const double s0 = sigma(x);
    const double r = std::abs(grad_dot_b + s0 * eval_divergence(field, x)) /
                     (std::abs(s0) * norm(bx));
    rep.max = std::max(rep.max, r);
    total += r;
    ++rep.n_points;
  }
  rep.mean = total / static_cast<double>(rep.n_points);
  return rep;
}

/// Residual of a reconstructed field: sigma is re-evaluated at the offset
/// points through the characteristics reconstruction.
inline ResidualReport pde_residual(const SigmaField& sf, const VectorField& field,
                                   double h, const IntegrationConfig& cfg = {},
                                   int threads = 1) {
  // Interior-grid sanity: need at least 3 distinct coordinates per axis.
  const int d = field.dimension;
  for (int k = 0; k < d; ++k) {
    std::vector<double> coords;
    for (const Point& p : sf.points) coords.push_back(p[k]);
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    if (coords.size() < 3)
      throw GridTooCoarse("pde_residual: fewer than 3 points per axis");
  }
  std::vector<Point> ok_points;
  for (std::size_t i = 0; i < sf.points.size(); ++i)
    if (sf.status[i] == "ok") ok_points.push_back(sf.points[i]);
  // Evaluate sigma at the 2d+1 stencil points, parallel over grid points.
  std::vector<double> residuals(ok_points.size());
  parallel_for(ok_points.size(), threads, [&](std::size_t i) {
    auto sig = [&](const Point& p) {
      return reconstruct_sigma(field, sf.level, p, cfg);
    };
    residuals[i] = pde_residual(sig, field, {ok_points[i]}, h).max;
  });
  ResidualReport rep;
  rep.h = h;
  rep.n_points = residuals.size();
  double total = 0.0;
  for (double r : residuals) {
    rep.max = std::max(rep.max, r);
    total += r;
  }
  rep.mean = rep.n_points ? total / rep.n_points : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Band classification by interior critical values.
// ---------------------------------------------------------------------------

/// Index j with c_j < u(x) < c_{j+1}; a potential with no critical values has
/// the single band 0.
inline int band_classify(const ScalarField& potential, const Point& x,
                         double tol = 1e-10) {
  require_dimension(x, potential.dimension, "band_classify");
  const double u = potential.value(x);
  int band = 0;
  for (double c : potential.critical_values) {
    if (std::abs(u - c) <= tol * std::max(1.0, std::abs(c)))
      throw OnCriticalLevel("u(x)=" + std::to_string(u) +
                            " lies on critical level c=" + std::to_string(c));
    if (u > c) ++band;
  }
  return band;
}

}  // namespace isoflow

#endif  // ISOFLOW_CHARACTERISTICS_HPP

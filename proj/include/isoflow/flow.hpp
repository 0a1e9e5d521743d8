#ifndef ISOFLOW_FLOW_HPP
#define ISOFLOW_FLOW_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "isoflow/core.hpp"
#include "isoflow/fields.hpp"

namespace isoflow {

struct IntegrationConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = kInf;
  double blowup_radius = 1e6;  // escape radius
  double max_time = 1e4;
  bool dense_output = true;

  void validate() const {
    if (!(rel_tol > 0) || !(abs_tol > 0))
      throw std::invalid_argument("IntegrationConfig: tolerances must be positive");
    if (!(blowup_radius > 0) || !(max_time > 0) || !(max_step > 0))
      throw std::invalid_argument("IntegrationConfig: invalid limits");
  }
};

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with the standard quartic dense output. The stepper
// works in an internal clock s >= 0; backward trajectories integrate the
// negated field and map t = sign * s, so one code path serves both
// directions.
// ---------------------------------------------------------------------------

/// One accepted step's interpolant on [s0, s0+h]:
///   y(s0 + th*h) = r1 + th*(r2 + (1-th)*(r3 + th*(r4 + (1-th)*r5)))
struct DenseSegment {
  double s0 = 0.0;
  double h = 0.0;
  Point r1, r2, r3, r4, r5;

  void eval(double s, Point& out) const {
    const double th = (s - s0) / h;
    const double th1 = 1.0 - th;
    const std::size_t n = r1.size();
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
  }
};

enum class TrajectoryStatus { completed, blew_up, max_time_reached };

inline const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::completed: return "completed";
    case TrajectoryStatus::blew_up: return "blew_up";
    default: return "max_time_reached";
  }
}

/// A numerically integrated flow path with dense-output interpolation.
/// Immutable once produced; safe to share read-only.
class Trajectory {
 public:
  Trajectory(Point x0, int time_sign)
      : initial_(std::move(x0)), sign_(time_sign) {}

  const Point& initial() const { return initial_; }
  int time_sign() const { return sign_; }
  TrajectoryStatus status() const { return status_; }
  double blowup_time() const { return sign_ * s_end_; }  // t* when blew_up

  double t_min() const { return sign_ > 0 ? 0.0 : -s_end_; }
  double t_max() const { return sign_ > 0 ? s_end_ : 0.0; }

  bool covers(double t) const {
    const double slack = 1e-12 * (1.0 + s_end_);
    return t >= t_min() - slack && t <= t_max() + slack;
  }

  void at_into(double t, Point& out) const {
    if (!covers(t))
      throw IntervalNotCovered("trajectory covers [" + std::to_string(t_min()) +
                               ", " + std::to_string(t_max()) +
                               "], requested t=" + std::to_string(t));
    const double s = std::clamp(sign_ * t, 0.0, s_end_);
    if (segments_.empty()) {  // zero-length trajectory
      out = initial_;
      return;
    }
    // last segment with s0 <= s
    std::size_t lo = 0, hi = segments_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi + 1) / 2;
      if (segments_[mid].s0 <= s) lo = mid; else hi = mid - 1;
    }
    segments_[lo].eval(s, out);
  }

  Point at(double t) const {
    Point out;
    at_into(t, out);
    return out;
  }

  const std::vector<DenseSegment>& segments() const { return segments_; }

  /// Knot times (actual t, in integration order) and states.
  std::vector<std::pair<double, Point>> knots() const {
    std::vector<std::pair<double, Point>> ks;
    ks.reserve(segments_.size() + 1);
    for (const auto& seg : segments_) ks.emplace_back(sign_ * seg.s0, seg.r1);
    Point last;
    if (!segments_.empty()) {
      at_into(sign_ * s_end_, last);
      ks.emplace_back(sign_ * s_end_, last);
    } else {
      ks.emplace_back(0.0, initial_);
    }
    return ks;
  }

  // Populated by the integrator.
  void push_segment(const DenseSegment& seg) { segments_.push_back(seg); }
  void finish(TrajectoryStatus st, double s_end) {
    status_ = st;
    s_end_ = s_end;
  }

 private:
  Point initial_;
  int sign_;
  std::vector<DenseSegment> segments_;
  TrajectoryStatus status_ = TrajectoryStatus::completed;
  double s_end_ = 0.0;
};

namespace detail {

// Dormand-Prince tableau.
inline constexpr double kA21 = 1.0 / 5;
inline constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
inline constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
inline constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                        kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
inline constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33,
                        kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
                        kA65 = -5103.0 / 18656;
inline constexpr double kA71 = 35.0 / 384, kA73 = 500.0 / 1113,
                        kA74 = 125.0 / 192, kA75 = -2187.0 / 6784,
                        kA76 = 11.0 / 84;
inline constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695,
                        kE4 = 71.0 / 1920, kE5 = -17253.0 / 339200,
                        kE6 = 22.0 / 525, kE7 = -1.0 / 40;
// Dense-output weights.
inline constexpr double kD1 = -12715105075.0 / 11282082432.0;
inline constexpr double kD3 = 87487479700.0 / 32700410799.0;
inline constexpr double kD4 = -10690763975.0 / 1880347072.0;
inline constexpr double kD5 = 701980252875.0 / 199316789632.0;
inline constexpr double kD6 = -1453857185.0 / 822651844.0;
inline constexpr double kD7 = 69997945.0 / 29380423.0;

}  // namespace detail

enum class StepperStatus { reached_target, blew_up, step_collapse };

/// Resumable adaptive integrator for y' = sign * b(y) on the internal clock.
class AdaptiveFlow {
 public:
  AdaptiveFlow(const VectorField& field, Point x0, int time_sign,
               const IntegrationConfig& cfg)
      : field_(field), cfg_(cfg), sign_(time_sign), y_(std::move(x0)) {
    cfg_.validate();
    const int d = field.dimension;
    require_dimension(y_, d, "AdaptiveFlow");
    if (norm(y_) >= cfg_.blowup_radius)
      throw std::invalid_argument(
          "IntegrationConfig: blowup_radius must exceed |x0|");
    for (Point* p : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_})
      p->assign(d, 0.0);
    seg_.r1.assign(d, 0.0);
    seg_.r2.assign(d, 0.0);
    seg_.r3.assign(d, 0.0);
    seg_.r4.assign(d, 0.0);
    seg_.r5.assign(d, 0.0);
    rhs(y_, k1_);
  }

  double s() const { return s_; }
  const Point& state() const { return y_; }
  double escape_s() const { return escape_s_; }
  const Point& escape_state() const { return escape_y_; }
  int steps_accepted() const { return accepted_; }
  int steps_rejected() const { return rejected_; }

  /// Advance to exactly s_target (>= current s). After every accepted step,
  /// on_step(segment, s_new, y_new) may return false to pause; the stepper
  /// stays resumable. Returns blew_up / step_collapse when triggered, in
  /// which case escape_s()/escape_state() hold the refined crossing.
  template <typename Cb>
  StepperStatus advance_to(double s_target, Cb&& on_step) {
    paused_ = false;
    if (h_ == 0.0) h_ = initial_step(s_target);
    while (s_ < s_target) {
      double h = std::min({h_, cfg_.max_step, s_target - s_});
      if (h < 1e-14 * std::max(1.0, std::abs(s_target))) {
        escape_s_ = s_;
        escape_y_ = y_;
        return StepperStatus::step_collapse;
      }
      const double err = try_step(h);
      if (err <= 1.0) {
        make_dense(h);
        ++accepted_;
        const bool escaped = norm(ynew_) >= cfg_.blowup_radius;
        if (escaped) refine_escape(h);
        s_ += h;
        y_.swap(ynew_);
        k1_.swap(k7_);
        const double fac = std::clamp(0.9 * std::pow(err > 0 ? err : 1e-10, -0.2),
                                      0.2, last_rejected_ ? 1.0 : 5.0);
        h_ = h * fac;
        last_rejected_ = false;
        if (escaped) return StepperStatus::blew_up;
        if (!on_step(seg_, s_, y_)) {
          paused_ = true;
          return StepperStatus::reached_target;
        }
      } else {
        ++rejected_;
        last_rejected_ = true;
        h_ = h * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
        if (rejected_ > 10000 + 10 * accepted_)
          throw NumericalError("IntegratorStall",
                               "too many rejected steps at s=" + std::to_string(s_));
      }
    }
    return StepperStatus::reached_target;
  }

  StepperStatus advance_to(double s_target) {
    return advance_to(s_target,
                      [](const DenseSegment&, double, const Point&) { return true; });
  }

  bool paused() const { return paused_; }
  const DenseSegment& last_segment() const { return seg_; }

 private:
  void rhs(const Point& y, Point& out) {
    field_.eval_into(y, out);
    if (sign_ < 0)
      for (double& v : out) v = -v;
  }

  // One trial step of size h from (s_, y_); fills k2..k7, ynew_; returns the
  // scaled error norm.
  double try_step(double h) {
    using namespace detail;
    const std::size_t n = y_.size();
    auto stage = [&](Point& k, auto&&... terms) {
      for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y_[i] + h * (... + terms(i));
      rhs(ytmp_, k);
    };
    auto w = [&](double c, const Point& k) {
      return [c, &k](std::size_t i) { return c * k[i]; };
    };
    stage(k2_, w(kA21, k1_));
    stage(k3_, w(kA31, k1_), w(kA32, k2_));
    stage(k4_, w(kA41, k1_), w(kA42, k2_), w(kA43, k3_));
    stage(k5_, w(kA51, k1_), w(kA52, k2_), w(kA53, k3_), w(kA54, k4_));
    stage(k6_, w(kA61, k1_), w(kA62, k2_), w(kA63, k3_), w(kA64, k4_),
          w(kA65, k5_));
    for (std::size_t i = 0; i < n; ++i)
      ynew_[i] = y_[i] + h * (kA71 * k1_[i] + kA73 * k3_[i] + kA74 * k4_[i] +
                              kA75 * k5_[i] + kA76 * k6_[i]);
    rhs(ynew_, k7_);
    double err2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (kE1 * k1_[i] + kE3 * k3_[i] + kE4 * k4_[i] +
                            kE5 * k5_[i] + kE6 * k6_[i] + kE7 * k7_[i]);
      const double sc = cfg_.abs_tol +
                        cfg_.rel_tol * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
      err2 += (e / sc) * (e / sc);
    }
    return std::sqrt(err2 / n);
  }

  void make_dense(double h) {
    using namespace detail;
    const std::size_t n = y_.size();
    seg_.s0 = s_;
    seg_.h = h;
    for (std::size_t i = 0; i < n; ++i) {
      const double dy = ynew_[i] - y_[i];
      const double bspl = h * k1_[i] - dy;
      seg_.r1[i] = y_[i];
      seg_.r2[i] = dy;
      seg_.r3[i] = bspl;
      seg_.r4[i] = dy - h * k7_[i] - bspl;
      seg_.r5[i] = h * (kD1 * k1_[i] + kD3 * k3_[i] + kD4 * k4_[i] +
                        kD5 * k5_[i] + kD6 * k6_[i] + kD7 * k7_[i]);
    }
  }

  // Escape-radius crossing inside [s_, s_+h], bisected to 1e-6.
  void refine_escape(double h) {
    double lo = s_, hi = s_ + h;
    Point probe(y_.size());
    while (hi - lo > 1e-6 &&
           hi - lo > 8 * std::numeric_limits<double>::epsilon() * std::abs(hi)) {
      const double mid = 0.5 * (lo + hi);
      seg_.eval(mid, probe);
      (norm(probe) >= cfg_.blowup_radius ? hi : lo) = mid;
    }
    escape_s_ = hi;
    seg_.eval(hi, escape_y_);
  }

  double initial_step(double s_target) {
    const std::size_t n = y_.size();
    auto scaled_norm = [&](const Point& v, const Point& ref) {
      double a = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double sc = cfg_.abs_tol + cfg_.rel_tol * std::abs(ref[i]);
        a += (v[i] / sc) * (v[i] / sc);
      }
      return std::sqrt(a / n);
    };
    const double d0 = scaled_norm(y_, y_);
    const double d1 = scaled_norm(k1_, y_);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min({h0, s_target - s_, cfg_.max_step});
    for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y_[i] + h0 * k1_[i];
    rhs(ytmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) k2_[i] -= k1_[i];
    const double d2 = scaled_norm(k2_, y_) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm > 1e-15 ? std::pow(0.01 / dm, 0.2) : std::max(1e-6, h0 * 1e-3);
    return std::min({100 * h0, h1, s_target - s_, cfg_.max_step});
  }

  const VectorField& field_;
  IntegrationConfig cfg_;
  int sign_;
  Point y_;
  Point k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_;
  DenseSegment seg_;
  double s_ = 0.0;
  double h_ = 0.0;
  double escape_s_ = 0.0;
  Point escape_y_;
  int accepted_ = 0;
  int rejected_ = 0;
  bool last_rejected_ = false;
  bool paused_ = false;
};

// ---------------------------------------------------------------------------
// Flow operations.
// ---------------------------------------------------------------------------

/// X(t, x). Backward time (t < 0) is handled by the reflected-clock stepper.
/// Throws BlowUpError when the trajectory escapes the configured radius.
inline Point advance_flow(const VectorField& field, const Point& x, double t,
                          const IntegrationConfig& cfg = {}) {
  if (t == 0.0) {
    cfg.validate();
    require_dimension(x, field.dimension, "advance_flow");
    return x;
  }
  const int sign = t > 0 ? 1 : -1;
  AdaptiveFlow stepper(field, x, sign, cfg);
  const StepperStatus st = stepper.advance_to(std::abs(t));
  if (st == StepperStatus::blew_up)
    throw BlowUpError(sign * stepper.escape_s(),
                      "flow escaped radius " + std::to_string(cfg.blowup_radius) +
                          " at t=" + std::to_string(sign * stepper.escape_s()));
  if (st == StepperStatus::step_collapse)
    throw BlowUpError(sign * stepper.escape_s(),
                      "step size collapse at t=" +
                          std::to_string(sign * stepper.escape_s()));
  return stepper.state();
}

/// Integrate up to time t (sign gives the direction) keeping dense output.
/// A blow-up is recorded in the status rather than thrown.
inline Trajectory integrate_flow(const VectorField& field, const Point& x,
                                 double t, const IntegrationConfig& cfg = {}) {
  const int sign = t >= 0 ? 1 : -1;
  Trajectory traj(x, sign);
  if (t == 0.0) {
    cfg.validate();
    require_dimension(x, field.dimension, "integrate_flow");
    traj.finish(TrajectoryStatus::completed, 0.0);
    return traj;
  }
  AdaptiveFlow stepper(field, x, sign, cfg);
  const StepperStatus st =
      stepper.advance_to(std::abs(t), [&](const DenseSegment& seg, double,
                                          const Point&) {
        traj.push_segment(seg);
        return true;
      });
  if (st == StepperStatus::reached_target) {
    traj.finish(TrajectoryStatus::completed, std::abs(t));
  } else {
    traj.push_segment(stepper.last_segment());
    traj.finish(TrajectoryStatus::blew_up, stepper.escape_s());
  }
  return traj;
}

/// Maximal existence interval (tau_-, tau_+), each endpoint either a blow-up
/// time bracketed to 1e-6 or "reached max_time, presumed infinite".
struct MaximalIntervalEstimate {
  double tau_minus = -kInf;
  double tau_plus = kInf;
  bool minus_finite = false;
  bool plus_finite = false;
};

inline MaximalIntervalEstimate estimate_maximal_interval(
    const VectorField& field, const Point& x, const IntegrationConfig& cfg = {}) {
  MaximalIntervalEstimate est;
  for (const int sign : {1, -1}) {
    AdaptiveFlow stepper(field, x, sign, cfg);
    const StepperStatus st = stepper.advance_to(cfg.max_time);
    double endpoint;
    bool finite;
    if (st == StepperStatus::reached_target) {
      endpoint = cfg.max_time;
      finite = false;
    } else {
      endpoint = stepper.escape_s();
      finite = true;
    }
    if (sign > 0) {
      est.tau_plus = endpoint;
      est.plus_finite = finite;
    } else {
      est.tau_minus = -endpoint;
      est.minus_finite = finite;
    }
  }
  return est;
}

/// Integral of g along the trajectory: int_{t0}^{t1} g(X(s,x)) ds, by 7-point
/// Gauss-Legendre on every dense-output step.
inline double path_integral(const std::function<double(const Point&)>& g,
                            const Trajectory& traj, double t0, double t1) {
  static constexpr std::array<double, 7> kNodes = {
      -0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0,
      0.4058451513773972,  0.7415311855993945,  0.9491079123427585};
  static constexpr std::array<double, 7> kWeights = {
      0.1294849661688697, 0.2797053914892766, 0.3818300505051189,
      0.4179591836734694, 0.3818300505051189, 0.2797053914892766,
      0.1294849661688697};
  if (!traj.covers(t0) || !traj.covers(t1))
    throw IntervalNotCovered("path_integral: [" + std::to_string(t0) + ", " +
                             std::to_string(t1) + "] not covered");
  if (t0 == t1) return 0.0;
  const int sign = traj.time_sign();
  const double a = sign * t0, b = sign * t1;
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double orientation = (b > a ? 1.0 : -1.0) * sign;
  double total = 0.0;
  Point probe;
  for (const DenseSegment& seg : traj.segments()) {
    const double sa = std::max(lo, seg.s0);
    const double sb = std::min(hi, seg.s0 + seg.h);
    if (sb <= sa) continue;
    const double mid = 0.5 * (sa + sb), half = 0.5 * (sb - sa);
    double acc = 0.0;
    for (int q = 0; q < 7; ++q) {
      seg.eval(mid + half * kNodes[q], probe);
      acc += kWeights[q] * g(probe);
    }
    total += acc * half;
  }
  // Degenerate zero-length trajectory covering only t=0.
  if (traj.segments().empty()) return 0.0;
  return orientation * total;
}

}  // namespace isoflow

#endif  // ISOFLOW_FLOW_HPP

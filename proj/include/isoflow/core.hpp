#ifndef ISOFLOW_CORE_HPP
#define ISOFLOW_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace isoflow {

using Point = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors. Every numerical failure carries a stable code string that the CLI
// surfaces verbatim on stderr.
// ---------------------------------------------------------------------------

class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class BlowUpError : public NumericalError {
 public:
  BlowUpError(double escape_time, const std::string& what)
      : NumericalError("BlowUp", what), escape_time_(escape_time) {}
  double escape_time() const { return escape_time_; }

 private:
  double escape_time_;
};

#define ISOFLOW_DEFINE_ERROR(Name)                       \
  class Name : public NumericalError {                   \
   public:                                               \
    explicit Name(const std::string& what)               \
        : NumericalError(#Name, what) {}                 \
  }

ISOFLOW_DEFINE_ERROR(DimensionMismatch);
ISOFLOW_DEFINE_ERROR(MonotonicityViolated);
ISOFLOW_DEFINE_ERROR(BandExit);
ISOFLOW_DEFINE_ERROR(NotInBand);
ISOFLOW_DEFINE_ERROR(OnCriticalLevel);
ISOFLOW_DEFINE_ERROR(IntervalNotCovered);
ISOFLOW_DEFINE_ERROR(SigmaVanishes);
ISOFLOW_DEFINE_ERROR(SingularAverage);
ISOFLOW_DEFINE_ERROR(NonpositiveAverage);
ISOFLOW_DEFINE_ERROR(NoNullVector);
ISOFLOW_DEFINE_ERROR(WitnessConstant);
ISOFLOW_DEFINE_ERROR(LambdaNotOrthogonal);
ISOFLOW_DEFINE_ERROR(FrameUnavailable);
ISOFLOW_DEFINE_ERROR(UnknownCatalogEntry);
ISOFLOW_DEFINE_ERROR(GridTooCoarse);

#undef ISOFLOW_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Small vector helpers. States are plain std::vector<double>; the hot loops
// (integrator stages) preallocate and write in place.
// ---------------------------------------------------------------------------

inline double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Point& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline Point operator+(Point a, const Point& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Point operator-(Point a, const Point& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

inline Point operator*(double c, Point a) {
  for (double& v : a) v *= c;
  return a;
}

inline void require_dimension(const Point& x, int d, const char* where) {
  if (static_cast<int>(x.size()) != d)
    throw DimensionMismatch(std::string(where) + ": point has dimension " +
                            std::to_string(x.size()) + ", expected " +
                            std::to_string(d));
}

// ---------------------------------------------------------------------------
// Rectangular grids (inclusive endpoints), row-major deterministic ordering.
// ---------------------------------------------------------------------------

struct GridSpec {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<int> n;  // points per axis, >= 1

  int dimension() const { return static_cast<int>(n.size()); }
  std::size_t total() const {
    std::size_t t = 1;
    for (int k : n) t *= static_cast<std::size_t>(k);
    return t;
  }
};

inline std::vector<Point> make_grid(const GridSpec& g) {
  const int d = g.dimension();
  std::vector<Point> pts;
  pts.reserve(g.total());
  std::vector<int> idx(d, 0);
  Point x(d);
  for (;;) {
    for (int k = 0; k < d; ++k)
      x[k] = g.n[k] == 1 ? g.lo[k]
                         : g.lo[k] + (g.hi[k] - g.lo[k]) * idx[k] / (g.n[k] - 1);
    pts.push_back(x);
    int k = d - 1;
    while (k >= 0 && ++idx[k] == g.n[k]) idx[k--] = 0;
    if (k < 0) break;
  }
  return pts;
}

// n^d periodic sample points i/n on the unit cell.
inline std::vector<Point> unit_cell_grid(int d, int n) {
  GridSpec g;
  g.lo.assign(d, 0.0);
  g.hi.assign(d, double(n - 1) / n);
  g.n.assign(d, n);
  return make_grid(g);
}

// ---------------------------------------------------------------------------
// parallel_for: chunked index sweep over worker threads. Slot-indexed output
// keeps results deterministic regardless of the thread count.
// ---------------------------------------------------------------------------

inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const int nw = std::min<std::size_t>(threads, count);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(nw);
  for (int w = 0; w < nw; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += nw) body(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Scalar root finding.
// ---------------------------------------------------------------------------

// Brent's method on a sign-changing bracket [a,b]. Refines until the bracket
// collapses to x_tol or |f| <= f_tol.
template <typename F>
double brent(F&& f, double a, double b, double fa, double fb, double x_tol,
             double f_tol, int max_iter = 200) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0) == (fb > 0))
    throw std::invalid_argument("brent: endpoints do not bracket a root");
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if ((fb > 0) == (fc > 0)) { c = a; fc = fa; d = e = b - a; }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol = 2.0 * std::numeric_limits<double>::epsilon() *
                           std::abs(b) + 0.5 * x_tol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || std::abs(fb) <= f_tol) return b;
    if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
      d = e = m;  // bisection
    } else {
      double p, q;
      const double s = fb / fa;
      if (a == c) {  // secant
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {  // inverse quadratic
        const double qa = fa / fc, r = fb / fc;
        p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) q = -q; else p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d; d = p / q;
      } else {
        d = e = m;
      }
    }
    a = b; fa = fb;
    b += std::abs(d) > tol ? d : (m > 0 ? tol : -tol);
    fb = f(b);
    if (fb == 0.0) return b;
  }
  return b;
}

// Newton iteration for strictly monotone f, with bisection fallback when the
// step leaves the maintained bracket.
template <typename F, typename DF>
double invert_monotone(F&& f, DF&& df, double target, double guess, double lo,
                       double hi, double tol = 1e-14, int max_iter = 100) {
  double x = std::clamp(guess, lo, hi);
  for (int it = 0; it < max_iter; ++it) {
    const double r = f(x) - target;
    if (r > 0) hi = x; else lo = x;
    const double d = df(x);
    double step = d != 0.0 ? r / d : 0.0;
    double xn = x - step;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::abs(xn - x) <= tol * std::max(1.0, std::abs(x))) return xn;
    x = xn;
  }
  return x;
}

// Unique real root of s + s^3/3 = c (Cardano, stable form).
inline double cubic_shift_inverse(double c) {
  const double a = std::abs(c);
  const double u = std::cbrt(1.5 * a + std::sqrt(2.25 * a * a + 1.0));
  const double r = u - 1.0 / u;
  return c >= 0 ? r : -r;
}

}  // namespace isoflow

#endif  // ISOFLOW_CORE_HPP

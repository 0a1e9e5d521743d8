#ifndef ISOFLOW_TRANSPORT_HPP
#define ISOFLOW_TRANSPORT_HPP

#include <cmath>
#include <optional>
#include <vector>

#include "isoflow/core.hpp"
#include "isoflow/fields.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/torus.hpp"

namespace isoflow {

// ---------------------------------------------------------------------------
// Oscillating transport equation d_t u - b(x/eps) . grad u = 0 solved by
// characteristics: u_eps(t, x) = u0(eps X(t/eps, x/eps)) with the forward
// flow. (A +b . grad convention would need time reversal.)
// ---------------------------------------------------------------------------

struct TransportProblem {
  ScalarField initial;       // u0
  VectorField field;         // periodic b
  double epsilon = 1.0;
  double time = 1.0;
  std::vector<Point> grid;   // evaluation points

  void validate() const {
    if (!(epsilon > 0))
      throw std::invalid_argument("TransportProblem: epsilon must be positive");
    if (!field.periodic)
      throw std::invalid_argument("TransportProblem: field must be periodic");
  }
};

inline std::vector<double> solve_transport(const TransportProblem& prob,
                                           const IntegrationConfig& cfg = {},
                                           int threads = 1) {
  prob.validate();
  std::vector<double> out(prob.grid.size());
  parallel_for(prob.grid.size(), threads, [&](std::size_t i) {
    const Point& x = prob.grid[i];
    Point y = x;
    for (double& v : y) v /= prob.epsilon;
    y = advance_flow(prob.field, y, prob.time / prob.epsilon, cfg);
    for (double& v : y) v *= prob.epsilon;
    out[i] = prob.initial.value(y);
  });
  return out;
}

/// The homogenized limit u0(x + t xi) on the grid.
inline std::vector<double> homogenized_solution(const ScalarField& u0,
                                                const Point& xi, double t,
                                                const std::vector<Point>& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Point y = grid[i];
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += t * xi[k];
    out[i] = u0.value(y);
  }
  return out;
}

// ---------------------------------------------------------------------------
// eps-convergence study against the homogenized limit.
// ---------------------------------------------------------------------------

struct ConvergenceStudy {
  std::vector<double> epsilons;       // strictly decreasing
  std::vector<double> sup_errors;
  std::vector<double> ratios;         // sup_errors[i] / sup_errors[i+1]
  std::optional<double> fitted_rate;  // least-squares slope; absent at floor
  std::vector<double> bounds;         // Lip(u0) * 2 eps * sup|W#|, when known
  bool at_machine_floor = false;
};

/// Estimate of the Lipschitz constant of u0: max |grad u0| over the grid.
inline double lipschitz_estimate(const ScalarField& u0,
                                 const std::vector<Point>& grid) {
  double lip = 0.0;
  for (const Point& x : grid) lip = std::max(lip, norm(eval_gradient(u0, x)));
  return lip;
}

inline ConvergenceStudy convergence_study(TransportProblem prob,
                                          const std::vector<double>& eps_list,
                                          const Point& xi,
                                          const IntegrationConfig& cfg = {},
                                          int threads = 1,
                                          std::optional<double> sup_w_sharp =
                                              std::nullopt) {
  if (eps_list.size() < 3)
    throw std::invalid_argument("convergence_study: need at least 3 epsilons");
  for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
    if (!(eps_list[i] > eps_list[i + 1]))
      throw std::invalid_argument("convergence_study: eps list must decrease");

  ConvergenceStudy study;
  study.epsilons = eps_list;
  const std::vector<double> reference =
      homogenized_solution(prob.initial, xi, prob.time, prob.grid);
  double u_scale = 0.0;
  for (double v : reference) u_scale = std::max(u_scale, std::abs(v));
  const double lip = sup_w_sharp ? lipschitz_estimate(prob.initial, prob.grid) : 0.0;

  for (double eps : eps_list) {
    prob.epsilon = eps;
    const std::vector<double> ue = solve_transport(prob, cfg, threads);
    double sup = 0.0;
    for (std::size_t i = 0; i < ue.size(); ++i)
      sup = std::max(sup, std::abs(ue[i] - reference[i]));
    study.sup_errors.push_back(sup);
    if (sup_w_sharp) study.bounds.push_back(lip * 2.0 * eps * *sup_w_sharp);
  }
  for (std::size_t i = 0; i + 1 < study.sup_errors.size(); ++i)
    study.ratios.push_back(study.sup_errors[i] /
                           std::max(study.sup_errors[i + 1], 1e-300));

  // Errors below the integrator's own accuracy carry no rate information.
  const double floor =
      std::max(1e3 * cfg.rel_tol, 1e-11) * std::max(u_scale, 1.0);
  study.at_machine_floor =
      *std::max_element(study.sup_errors.begin(), study.sup_errors.end()) <= floor;
  if (!study.at_machine_floor) {
    // least-squares slope of log(err) against log(eps)
    const std::size_t m = eps_list.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double lx = std::log(eps_list[i]);
      const double ly = std::log(std::max(study.sup_errors[i], 1e-300));
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    study.fitted_rate = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return study;
}

}  // namespace isoflow

#endif  // ISOFLOW_TRANSPORT_HPP

#ifndef ISOFLOW_SERIALIZE_HPP
#define ISOFLOW_SERIALIZE_HPP

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isoflow/asymptotics.hpp"
#include "isoflow/characteristics.hpp"
#include "isoflow/core.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/torus.hpp"
#include "isoflow/transport.hpp"

namespace isoflow {

// Key order is fixed for byte-identical reruns; doubles keep nlohmann's
// shortest round-trip formatting.
using json = nlohmann::ordered_json;

// CSV cells carry 17 significant digits.
inline std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool contains_nan(const json& j) {
  if (j.is_number_float() && std::isnan(j.get<double>())) return true;
  if (j.is_structured())
    for (const auto& item : j)
      if (contains_nan(item)) return true;
  return false;
}

// Extended reals never feed raw non-finite values to the JSON writer.
inline json extended_real(double v, bool finite) {
  json j;
  j["finite"] = finite;
  if (finite) j["value"] = v;
  return j;
}

inline json to_json(const MaximalIntervalEstimate& est) {
  json j;
  j["tau_minus"] = extended_real(est.tau_minus, est.minus_finite);
  j["tau_plus"] = extended_real(est.tau_plus, est.plus_finite);
  return j;
}

inline json to_json(const SignReport& rep) {
  json j;
  j["classification"] = to_string(rep.classification);
  j["margin"] = rep.margin;
  j["component_min"] = rep.component_min;
  j["component_max"] = rep.component_max;
  return j;
}

inline json to_json(const HittingTimeResult& r) {
  json j;
  j["tau"] = r.tau;
  j["bracket_width"] = r.bracket_width;
  j["monotonicity_margin"] = r.monotonicity_margin;
  j["iterations"] = r.iterations;
  return j;
}

inline json to_json(const SigmaField& sf) {
  json j;
  j["level"] = sf.level.level;
  j["band"] = {extended_real(sf.level.band_low, std::isfinite(sf.level.band_low)),
               extended_real(sf.level.band_high, std::isfinite(sf.level.band_high))};
  j["n_points"] = sf.points.size();
  j["n_ok"] = sf.n_ok;
  json rows = json::array();
  for (std::size_t i = 0; i < sf.points.size(); ++i) {
    json row;
    row["x"] = sf.points[i];
    row["u"] = sf.u_value[i];
    row["status"] = sf.status[i];
    if (sf.status[i] == "ok") {
      row["tau"] = sf.tau[i];
      row["sigma"] = sf.sigma[i];
    }
    rows.push_back(row);
  }
  j["samples"] = rows;
  return j;
}

inline json to_json(const ResidualReport& r) {
  json j;
  j["max"] = r.max;
  j["mean"] = r.mean;
  j["h"] = r.h;
  j["grid"] = r.n_points;
  return j;
}

inline json to_json(const CriteriumReport& rep) {
  json j;
  j["dimension"] = rep.dimension;
  json m = json::array(), adv = json::array();
  for (int i = 0; i < rep.dimension; ++i) {
    json mrow = json::array(), arow = json::array();
    for (int k = 0; k < rep.dimension; ++k) {
      mrow.push_back(rep.m(i, k));
      arow.push_back(rep.average_dv(i, k));
    }
    m.push_back(mrow);
    adv.push_back(arow);
  }
  j["average_dv"] = adv;
  j["M"] = m;
  j["xi"] = rep.xi;
  j["residuals"] = {{"min_sigma", rep.min_sigma},
                    {"max_transport_residual", rep.max_transport_residual},
                    {"average_dw_error", rep.average_dw_error}};
  j["grid_n"] = rep.grid_n;
  j["pass"] = rep.pass;
  return j;
}

inline json to_json(const SlabVerdict& v) {
  json j;
  j["verdict"] = v.no_invariant_measure ? "NoInvariantMeasure" : "Inconclusive";
  j["axis"] = v.axis;
  if (v.no_invariant_measure) {
    j["witness"] = {{"positive_slice", v.positive_slice},
                    {"negative_slice", v.negative_slice}};
    j["margin"] = v.margin;
  }
  return j;
}

inline json to_json(const AsymptoticsReport& rep) {
  json j;
  j["seeds"] = rep.seeds;
  j["horizons"] = rep.horizons;
  j["estimates"] = rep.estimates;
  if (rep.xi_reference) j["xi"] = *rep.xi_reference;
  if (!rep.errors.empty() && !rep.errors.front().empty()) j["errors"] = rep.errors;
  if (rep.sup_w_sharp) {
    j["sup_w_sharp"] = *rep.sup_w_sharp;
    j["bounds"] = rep.bounds;
  }
  return j;
}

inline json to_json(const ErgodicityWitness& w) {
  json j;
  j["alpha"] = w.alpha;
  j["sup_b_dot_grad"] = w.sup_b_dot_grad;
  j["variance"] = w.variance;
  j["scaled_variance"] = w.scaled_variance;
  j["linear_residual"] = w.linear_residual;
  j["valid"] = w.valid();
  return j;
}

inline json to_json(const ConvergenceStudy& s) {
  json j;
  j["epsilons"] = s.epsilons;
  j["sup_errors"] = s.sup_errors;
  j["ratios"] = s.ratios;
  if (s.fitted_rate)
    j["fitted_rate"] = *s.fitted_rate;
  else
    j["fitted_rate"] = nullptr;
  j["at_machine_floor"] = s.at_machine_floor;
  if (!s.bounds.empty()) j["bounds"] = s.bounds;
  return j;
}

// ---------------------------------------------------------------------------
// CSV writers.
// ---------------------------------------------------------------------------

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int d = static_cast<int>(traj.initial().size());
  os << "t";
  for (int k = 1; k <= d; ++k) os << ",x" << k;
  os << "\n";
  for (const auto& [t, state] : traj.knots()) {
    os << csv_double(t);
    for (double v : state) os << "," << csv_double(v);
    os << "\n";
  }
}

inline void write_sigma_csv(std::ostream& os, const SigmaField& sf) {
  const int d = sf.points.empty() ? 0 : static_cast<int>(sf.points.front().size());
  for (int k = 1; k <= d; ++k) os << "x" << k << ",";
  os << "u,tau,sigma,status\n";
  for (std::size_t i = 0; i < sf.points.size(); ++i) {
    for (double v : sf.points[i]) os << csv_double(v) << ",";
    os << csv_double(sf.u_value[i]) << ",";
    if (sf.status[i] == "ok")
      os << csv_double(sf.tau[i]) << "," << csv_double(sf.sigma[i]);
    else
      os << ",";
    os << "," << sf.status[i] << "\n";
  }
}

inline void write_asymptotics_csv(std::ostream& os, const AsymptoticsReport& rep) {
  const int d = rep.seeds.empty() ? 0 : static_cast<int>(rep.seeds.front().size());
  os << "seed,T";
  for (int k = 1; k <= d; ++k) os << ",estimate" << k;
  if (!rep.errors.empty() && !rep.errors.front().empty()) os << ",error";
  if (rep.sup_w_sharp) os << ",bound";
  os << "\n";
  for (std::size_t si = 0; si < rep.seeds.size(); ++si) {
    for (std::size_t hi = 0; hi < rep.horizons.size(); ++hi) {
      os << si << "," << csv_double(rep.horizons[hi]);
      for (double v : rep.estimates[si][hi]) os << "," << csv_double(v);
      if (!rep.errors.empty() && !rep.errors.front().empty())
        os << "," << csv_double(rep.errors[si][hi]);
      if (rep.sup_w_sharp) os << "," << csv_double(rep.bounds[si][hi]);
      os << "\n";
    }
  }
}

inline void write_study_csv(std::ostream& os, const ConvergenceStudy& s) {
  os << "eps,sup_error,ratio";
  if (!s.bounds.empty()) os << ",bound";
  os << "\n";
  for (std::size_t i = 0; i < s.epsilons.size(); ++i) {
    os << csv_double(s.epsilons[i]) << "," << csv_double(s.sup_errors[i]) << ",";
    if (i > 0) os << csv_double(s.ratios[i - 1]);
    if (!s.bounds.empty()) os << "," << csv_double(s.bounds[i]);
    os << "\n";
  }
}

inline void write_surface_csv(std::ostream& os, const std::vector<Point>& grid,
                              const std::vector<double>& values,
                              const std::string& value_name = "u") {
  const int d = grid.empty() ? 0 : static_cast<int>(grid.front().size());
  for (int k = 1; k <= d; ++k) os << "x" << k << ",";
  os << value_name << "\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (double v : grid[i]) os << csv_double(v) << ",";
    os << csv_double(values[i]) << "\n";
  }
}

}  // namespace isoflow

#endif  // ISOFLOW_SERIALIZE_HPP

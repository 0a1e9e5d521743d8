#ifndef ISOFLOW_CLI_HPP
#define ISOFLOW_CLI_HPP

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "isoflow/isoflow.hpp"

namespace isoflow::cli {

// Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O error.

struct RunConfig {
  std::string command;
  std::string field_name;
  std::string variant;
  std::string sigma_choice = "catalog";  // catalog | one
  std::string u0_name = "sin_sum";
  std::string out_path;
  std::string format = "json";  // csv | json
  GridSpec grid;
  std::optional<double> level;
  double band_low = -kInf, band_high = kInf;
  std::vector<double> horizons;
  std::vector<double> epsilons;
  std::vector<double> seed;
  std::vector<double> times{0.1, 1.0, 10.0};
  double time = 1.0;
  int grid_n = 64;
  int quad_n = 64;
  int phi_axis = -1;  // default: last axis
  int phi_k = 1;
  bool with_bound = false;
  int threads = 1;
  IntegrationConfig integration;
};

namespace detail {

inline std::vector<double> parse_reals(const std::string& csv, const char* what) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "inf" || tok == "+inf")
      out.push_back(kInf);
    else if (tok == "-inf")
      out.push_back(-kInf);
    else {
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw CLI::ValidationError(std::string(what) + ": bad number '" + tok + "'");
      }
    }
  }
  if (out.empty()) throw CLI::ValidationError(std::string(what) + ": empty list");
  return out;
}

// "lo,hi,n" applied to every axis, or per-axis triples joined with ';'.
inline GridSpec parse_grid(const std::string& text, int dimension) {
  GridSpec g;
  std::stringstream ss(text);
  std::string part;
  std::vector<std::array<double, 3>> triples;
  while (std::getline(ss, part, ';')) {
    const std::vector<double> v = parse_reals(part, "--grid");
    if (v.size() != 3 || v[2] < 1 || !std::isfinite(v[0]) || !std::isfinite(v[1]))
      throw CLI::ValidationError("--grid: expected lo,hi,n with finite bounds");
    triples.push_back({v[0], v[1], v[2]});
  }
  if (triples.size() == 1) triples.assign(dimension, triples.front());
  if (static_cast<int>(triples.size()) != dimension)
    throw CLI::ValidationError("--grid: need one triple or one per axis");
  for (const auto& t : triples) {
    g.lo.push_back(t[0]);
    g.hi.push_back(t[1]);
    g.n.push_back(static_cast<int>(t[2]));
  }
  return g;
}

inline int env_threads() {
  if (const char* env = std::getenv("ISOFLOW_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

inline int write_output(const RunConfig& cfg, const json& j,
                        const std::function<void(std::ostream&)>& csv_writer,
                        const std::string& summary) {
  std::string payload;
  if (cfg.format == "json") {
    if (contains_nan(j)) {
      std::cerr << "error: NaN in output\n";
      return 2;
    }
    payload = j.dump(2);
    payload.push_back('\n');
  } else {
    std::ostringstream os;
    csv_writer(os);
    payload = os.str();
    if (payload.find("nan") != std::string::npos ||
        payload.find("NaN") != std::string::npos) {
      std::cerr << "error: NaN in output\n";
      return 2;
    }
  }
  std::ofstream ofs(cfg.out_path, std::ios::binary);
  if (!ofs) {
    std::cerr << "error: cannot open '" << cfg.out_path << "' for writing\n";
    return 3;
  }
  ofs << payload;
  if (!ofs.flush()) {
    std::cerr << "error: short write to '" << cfg.out_path << "'\n";
    return 3;
  }
  std::cout << summary << "\n";
  return 0;
}

inline ScalarField named_initial_datum(const std::string& name, int d) {
  ScalarField u;
  u.dimension = d;
  if (name == "sin_sum") {
    u.value = [d](const Point& x) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += x[k];
      return std::sin(kTwoPi * s);
    };
    u.gradient = [d](const Point& x) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += x[k];
      return Point(d, kTwoPi * std::cos(kTwoPi * s));
    };
  } else if (name == "sin_x1") {
    u.value = [](const Point& x) { return std::sin(kTwoPi * x[0]); };
    u.gradient = [d](const Point& x) {
      Point g(d, 0.0);
      g[0] = kTwoPi * std::cos(kTwoPi * x[0]);
      return g;
    };
  } else if (name == "linear") {
    u.value = [d](const Point& x) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += x[k];
      return s;
    };
    u.gradient = [d](const Point&) { return Point(d, 1.0); };
  } else {
    throw CLI::ValidationError("--u0: unknown initial datum '" + name +
                               "' (sin_sum, sin_x1, linear)");
  }
  return u;
}

// ---------------------------------------------------------------------------
// Subcommand bodies. Each returns the process exit code.
// ---------------------------------------------------------------------------

inline int cmd_catalog_list() {
  for (const auto& name : catalog_names()) {
    const CatalogEntry& e = catalog_get(name);
    std::cout << name << "  d=" << e.field.dimension
              << (e.field.periodic ? "  periodic" : "") << "  " << e.notes
              << "\n";
  }
  return 0;
}

inline int cmd_reconstruct(RunConfig cfg) {
  const CatalogEntry& e = catalog_get(cfg.field_name);
  LevelSpec spec;
  if (e.level)
    spec = *e.level;
  else if (e.potential) {
    spec.potential = *e.potential;
    spec.level = 0.0;
    spec.band_low = e.potential->range.first;
    spec.band_high = e.potential->range.second;
  } else {
    std::cerr << "error: field '" << cfg.field_name
              << "' has no scalar potential for level sets\n";
    return 1;
  }
  if (cfg.level) spec.level = *cfg.level;
  spec.band_low = cfg.band_low;
  spec.band_high = cfg.band_high;
  spec.validate();
  if (cfg.grid.n.empty()) {
    std::cerr << "error: reconstruct requires --grid\n";
    return 1;
  }
  const SigmaField sf = sigma_on_grid(e.field, spec, make_grid(cfg.grid),
                                      cfg.integration, cfg.threads);
  json j;
  j["command"] = "reconstruct";
  j["field"] = cfg.field_name;
  j["report"] = to_json(sf);
  std::ostringstream sum;
  sum << "reconstruct " << cfg.field_name << ": " << sf.n_ok << "/"
      << sf.points.size() << " points ok, wrote " << cfg.out_path;
  return write_output(cfg, j, [&](std::ostream& os) { write_sigma_csv(os, sf); },
                      sum.str());
}

inline int cmd_check_invariant(RunConfig cfg) {
  const CatalogEntry& e = catalog_get(cfg.field_name);
  const VectorField& field = cfg.variant.empty()
                                 ? e.field
                                 : catalog_variant(cfg.field_name, cfg.variant);
  if (!field.periodic) {
    std::cerr << "error: field must be periodic for invariant-measure checks\n";
    return 1;
  }
  json j;
  j["command"] = "check-invariant";
  j["field"] = cfg.field_name;
  if (!cfg.variant.empty()) j["variant"] = cfg.variant;
  json slabs = json::array();
  bool any_negative = false;
  for (int axis = 0; axis < field.dimension; ++axis) {
    const SlabVerdict v = slab_sign_detector(field, axis);
    any_negative = any_negative || v.no_invariant_measure;
    slabs.push_back(to_json(v));
  }
  j["slab"] = slabs;
  std::ostringstream sum;
  sum << "check-invariant " << cfg.field_name
      << (cfg.variant.empty() ? "" : ":" + cfg.variant) << ": "
      << (any_negative ? "NoInvariantMeasure" : "Inconclusive");

  std::function<double(const Point&)> sigma;
  if (cfg.sigma_choice == "one") {
    sigma = [](const Point&) { return 1.0; };
  } else if (e.invariant_measure) {
    sigma = e.invariant_measure;
  }
  if (sigma) {
    const int axis = cfg.phi_axis < 0 ? field.dimension - 1 : cfg.phi_axis;
    if (axis >= field.dimension) {
      std::cerr << "error: --phi-axis out of range\n";
      return 1;
    }
    const double k = cfg.phi_k;
    const double dev = invariance_check(
        sigma, field,
        [axis, k](const Point& x) { return std::cos(k * kTwoPi * x[axis]); },
        cfg.times, cfg.quad_n, cfg.integration, cfg.threads);
    j["invariance"] = {{"sigma", cfg.sigma_choice},
                       {"phi", "cos(" + std::to_string(cfg.phi_k) + "*2pi*x" +
                                   std::to_string(axis + 1) + ")"},
                       {"times", cfg.times},
                       {"max_deviation", dev}};
    sum << ", invariance deviation " << dev;
  }
  sum << ", wrote " << cfg.out_path;
  return write_output(cfg, j, [&](std::ostream& os) { os << j.dump(2) << "\n"; },
                      sum.str());
}

inline int cmd_criterium(RunConfig cfg) {
  const CatalogEntry& e = catalog_get(cfg.field_name);
  if (!e.frame)
    throw FrameUnavailable("no potential frame for '" + cfg.field_name + "'");
  const CriteriumReport rep = build_transport_matrix(*e.frame, cfg.quad_n);
  json j;
  j["command"] = "criterium";
  j["frame"] = cfg.field_name;
  j["report"] = to_json(rep);
  j["sup_w_sharp"] = rep.sup_w_sharp(cfg.quad_n);
  std::ostringstream sum;
  sum << "criterium " << cfg.field_name << ": " << (rep.pass ? "pass" : "fail")
      << ", xi = (";
  for (int k = 0; k < rep.dimension; ++k)
    sum << (k ? ", " : "") << rep.xi[k];
  sum << "), wrote " << cfg.out_path;
  return write_output(cfg, j, [&](std::ostream& os) { os << j.dump(2) << "\n"; },
                      sum.str());
}

inline int cmd_asymptotics(RunConfig cfg) {
  const CatalogEntry& e = catalog_get(cfg.field_name);
  if (!e.field.periodic) {
    std::cerr << "error: asymptotics requires a periodic field\n";
    return 1;
  }
  if (cfg.seed.empty()) cfg.seed.assign(e.field.dimension, 0.0);
  if (static_cast<int>(cfg.seed.size()) != e.field.dimension) {
    std::cerr << "error: --seed has wrong dimension\n";
    return 1;
  }
  std::optional<CriteriumReport> frame;
  if (cfg.with_bound) {
    if (!e.frame)
      throw FrameUnavailable("no criterium frame for '" + cfg.field_name +
                             "'; bound unavailable");
    frame = build_transport_matrix(*e.frame, cfg.quad_n);
  }
  std::optional<Point> xi;
  if (e.closed_forms.effective_velocity) xi = *e.closed_forms.effective_velocity;
  const AsymptoticsReport rep = effective_velocity_flow(
      e.field, {cfg.seed}, cfg.horizons, cfg.integration,
      frame ? &*frame : nullptr, xi, cfg.threads);
  json j;
  j["command"] = "asymptotics";
  j["field"] = cfg.field_name;
  j["report"] = to_json(rep);
  std::ostringstream sum;
  sum << "asymptotics " << cfg.field_name << ": " << cfg.horizons.size()
      << " horizons";
  if (rep.xi_reference && !rep.errors.front().empty())
    sum << ", last error " << rep.errors.front().back();
  sum << ", wrote " << cfg.out_path;
  return write_output(cfg, j,
                      [&](std::ostream& os) { write_asymptotics_csv(os, rep); },
                      sum.str());
}

inline int cmd_homogenize(RunConfig cfg) {
  const CatalogEntry& e = catalog_get(cfg.field_name);
  if (!e.field.periodic) {
    std::cerr << "error: homogenize requires a periodic field\n";
    return 1;
  }
  const int d = e.field.dimension;
  TransportProblem prob;
  prob.initial = named_initial_datum(cfg.u0_name, d);
  prob.field = e.field;
  prob.time = cfg.time;
  prob.grid = unit_cell_grid(d, cfg.grid_n);
  std::sort(cfg.epsilons.begin(), cfg.epsilons.end(), std::greater<>());

  std::optional<CriteriumReport> frame;
  std::optional<double> supw;
  Point xi;
  if (e.frame) {
    frame = build_transport_matrix(*e.frame, cfg.quad_n);
    supw = frame->sup_w_sharp(cfg.quad_n);
    xi = frame->xi;
  } else if (e.closed_forms.effective_velocity) {
    xi = *e.closed_forms.effective_velocity;
  } else {
    throw FrameUnavailable("no effective velocity known for '" +
                           cfg.field_name + "'");
  }
  const ConvergenceStudy s = convergence_study(prob, cfg.epsilons, xi,
                                               cfg.integration, cfg.threads, supw);
  json j;
  j["command"] = "homogenize";
  j["field"] = cfg.field_name;
  j["u0"] = cfg.u0_name;
  j["time"] = cfg.time;
  j["xi"] = xi;
  j["study"] = to_json(s);
  std::ostringstream sum;
  sum << "homogenize " << cfg.field_name << ": sup-errors";
  for (double v : s.sup_errors) sum << " " << v;
  if (s.fitted_rate) sum << ", rate " << *s.fitted_rate;
  if (s.at_machine_floor) sum << " (machine floor)";
  sum << ", wrote " << cfg.out_path;
  return write_output(cfg, j, [&](std::ostream& os) { write_study_csv(os, s); },
                      sum.str());
}

}  // namespace detail

inline int run(std::vector<std::string> args) {
  CLI::App app{"isoflow: conductivity reconstruction along characteristics, "
               "invariant measures on the torus, flow asymptotics, and "
               "transport homogenization"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value configuration file");

  RunConfig cfg;
  cfg.threads = detail::env_threads();
  app.add_option("--threads", cfg.threads, "worker thread cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--rel-tol", cfg.integration.rel_tol, "integrator relative tolerance")
      ->capture_default_str();
  app.add_option("--abs-tol", cfg.integration.abs_tol, "integrator absolute tolerance")
      ->capture_default_str();
  app.add_option("--max-time", cfg.integration.max_time, "integration time cap")
      ->capture_default_str();

  std::string band_text, grid_text, horizons_text, eps_text, seed_text,
      times_text;

  CLI::App* catalog = app.add_subcommand("catalog", "catalog inspection");
  catalog->require_subcommand(1);
  catalog->add_subcommand("list", "list the built-in fields");

  CLI::App* rec = app.add_subcommand(
      "reconstruct", "reconstruct sigma on a grid by hitting times; CSV "
                     "columns: x1..xd,u,tau,sigma,status");
  double level_value = 0.0;
  rec->add_option("--field", cfg.field_name, "catalog field")->required();
  CLI::Option* level_opt = rec->add_option("--level", level_value, "level c_u");
  rec->add_option("--band", band_text, "band lo,hi (inf allowed)");
  rec->add_option("--grid", grid_text, "grid lo,hi,n (per axis with ';')")
      ->required();

  CLI::App* chk = app.add_subcommand(
      "check-invariant", "slab-detector verdicts per axis, plus the "
                         "invariance identity when a measure is known");
  chk->add_option("--field", cfg.field_name, "catalog field")->required();
  chk->add_option("--variant", cfg.variant, "field variant (e.g. rotated)");
  chk->add_option("--sigma", cfg.sigma_choice,
                  "measure to test: catalog | one")
      ->check(CLI::IsMember({"catalog", "one"}));
  chk->add_option("--times", times_text, "comma list of times");
  chk->add_option("--n", cfg.quad_n, "quadrature points per axis");
  chk->add_option("--phi-axis", cfg.phi_axis, "test-function axis (1-based)");
  chk->add_option("--phi-k", cfg.phi_k, "test-function harmonic");

  CLI::App* cri = app.add_subcommand(
      "criterium", "transport matrix M, corrector frame W, xi, residuals");
  cri->add_option("--frame", cfg.field_name, "catalog entry with a frame")
      ->required();
  cri->add_option("--n", cfg.quad_n, "quadrature points per axis");

  CLI::App* asy = app.add_subcommand(
      "asymptotics", "X(T,x)/T against the effective velocity; CSV columns: "
                     "seed,T,estimate1..d[,error][,bound]");
  asy->add_option("--field", cfg.field_name, "catalog field")->required();
  asy->add_option("--seed", seed_text, "starting point x1,..,xd");
  asy->add_option("--horizons", horizons_text, "comma list of times T")
      ->required();
  asy->add_flag("--with-bound", cfg.with_bound,
                "attach the corrector bound (requires a criterium frame)");

  CLI::App* hom = app.add_subcommand(
      "homogenize", "transport homogenization sweep over eps; CSV columns: "
                    "eps,sup_error,ratio[,bound]");
  hom->add_option("--field", cfg.field_name, "catalog field")->required();
  hom->add_option("--u0", cfg.u0_name, "initial datum: sin_sum | sin_x1 | linear")
      ->capture_default_str();
  hom->add_option("--eps", eps_text, "comma list of epsilons")->required();
  hom->add_option("--time", cfg.time, "evaluation time")->capture_default_str();
  hom->add_option("--grid-n", cfg.grid_n, "evaluation grid points per axis")
      ->capture_default_str();

  for (CLI::App* sub : {rec, chk, cri, asy, hom}) {
    sub->add_option("--out", cfg.out_path, "output file path");
    sub->add_option("--format", cfg.format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
  }

  std::vector<const char*> argv;
  argv.push_back("isoflow");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (catalog->parsed()) return detail::cmd_catalog_list();
    if (rec->parsed()) {
      cfg.command = "reconstruct";
      if (*level_opt) cfg.level = level_value;
      if (!band_text.empty()) {
        const auto band = detail::parse_reals(band_text, "--band");
        if (band.size() != 2) throw CLI::ValidationError("--band: expected lo,hi");
        cfg.band_low = band[0];
        cfg.band_high = band[1];
      }
      const int d = catalog_get(cfg.field_name).field.dimension;
      cfg.grid = detail::parse_grid(grid_text, d);
      if (cfg.out_path.empty()) cfg.out_path = "isoflow_reconstruct.csv";
      if (cfg.format.empty() || (!rec->count("--format"))) cfg.format = "csv";
      return detail::cmd_reconstruct(cfg);
    }
    if (chk->parsed()) {
      cfg.command = "check-invariant";
      if (!times_text.empty()) cfg.times = detail::parse_reals(times_text, "--times");
      if (cfg.phi_axis > 0) --cfg.phi_axis;  // 1-based on the CLI
      if (cfg.out_path.empty()) cfg.out_path = "isoflow_check_invariant.json";
      return detail::cmd_check_invariant(cfg);
    }
    if (cri->parsed()) {
      cfg.command = "criterium";
      if (cfg.out_path.empty()) cfg.out_path = "isoflow_criterium.json";
      return detail::cmd_criterium(cfg);
    }
    if (asy->parsed()) {
      cfg.command = "asymptotics";
      cfg.horizons = detail::parse_reals(horizons_text, "--horizons");
      if (!seed_text.empty()) cfg.seed = detail::parse_reals(seed_text, "--seed");
      if (cfg.out_path.empty()) cfg.out_path = "isoflow_asymptotics.csv";
      if (!asy->count("--format")) cfg.format = "csv";
      return detail::cmd_asymptotics(cfg);
    }
    if (hom->parsed()) {
      cfg.command = "homogenize";
      cfg.epsilons = detail::parse_reals(eps_text, "--eps");
      if (cfg.out_path.empty()) cfg.out_path = "isoflow_homogenize.csv";
      if (!hom->count("--format")) cfg.format = "csv";
      return detail::cmd_homogenize(cfg);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const UnknownCatalogEntry& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

inline int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc));
}

}  // namespace isoflow::cli

#endif  // ISOFLOW_CLI_HPP

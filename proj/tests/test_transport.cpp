#include <catch2/catch_amalgamated.hpp>

#include "isoflow/catalog.hpp"
#include "isoflow/transport.hpp"
#include "oracles.hpp"

using namespace isoflow;

namespace {

ScalarField sin_sum(int d) {
  ScalarField u;
  u.dimension = d;
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
  return u;
}

std::vector<Point> cell_lattice(int d, int n) {
  return unit_cell_grid(d, n);
}

}  // namespace

TEST_CASE("solve_transport") {
  SECTION("t = 0 returns the initial datum exactly") {
    TransportProblem prob;
    prob.initial = sin_sum(2);
    prob.field = catalog_get("layered2d").field;
    prob.epsilon = 0.25;
    prob.time = 0.0;
    prob.grid = cell_lattice(2, 8);
    const auto vals = solve_transport(prob);
    for (std::size_t i = 0; i < prob.grid.size(); ++i)
      CHECK(vals[i] == Catch::Approx(prob.initial.value(prob.grid[i])).margin(1e-14));
  }
  SECTION("constant drift translates the datum for every epsilon") {
    TransportProblem prob;
    prob.initial = sin_sum(2);
    prob.field = constant_field({0.3, -0.2});
    prob.time = 0.7;
    prob.grid = cell_lattice(2, 6);
    for (double eps : {0.5, 0.125, 0.03125}) {
      prob.epsilon = eps;
      const auto vals = solve_transport(prob);
      for (std::size_t i = 0; i < prob.grid.size(); ++i) {
        const Point y{prob.grid[i][0] + 0.7 * 0.3, prob.grid[i][1] - 0.7 * 0.2};
        CHECK(vals[i] == Catch::Approx(prob.initial.value(y)).margin(1e-9));
      }
    }
  }
  SECTION("characteristic constancy u_eps(t, X_eps(-t, x)) = u0(x)") {
    const auto& e = catalog_get("layered2d");
    TransportProblem prob;
    prob.initial = sin_sum(2);
    prob.field = e.field;
    prob.epsilon = 0.2;
    prob.time = 0.9;
    for (int rep = 0; rep < 6; ++rep) {
      const Point x = oracle::random_point(2, 0.0, 1.0);
      // X_eps(-t, x) = eps X(-t/eps, x/eps)
      Point y{x[0] / prob.epsilon, x[1] / prob.epsilon};
      y = advance_flow(prob.field, y, -prob.time / prob.epsilon);
      const Point start{y[0] * prob.epsilon, y[1] * prob.epsilon};
      prob.grid = {start};
      const auto vals = solve_transport(prob);
      CHECK(vals[0] == Catch::Approx(prob.initial.value(x)).margin(1e-8));
    }
  }
}

TEST_CASE("homogenized_solution") {
  SECTION("zero velocity returns the datum") {
    const ScalarField u0 = sin_sum(2);
    const auto grid = cell_lattice(2, 5);
    const auto vals = homogenized_solution(u0, {0.0, 0.0}, 3.0, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(vals[i] == u0.value(grid[i]));
  }
  SECTION("linear datum translates linearly") {
    ScalarField lin;
    lin.dimension = 2;
    lin.value = [](const Point& x) { return 2.0 * x[0] - x[1]; };
    const auto vals = homogenized_solution(lin, {0.5, 0.25}, 2.0, {{1.0, 1.0}});
    CHECK(vals[0] == Catch::Approx(2.0 * 2.0 - 1.5));
  }
}

TEST_CASE("convergence_study") {
  SECTION("constant drift sits at the machine floor, rate undefined") {
    TransportProblem prob;
    prob.initial = sin_sum(2);
    prob.field = constant_field({0.3, -0.2});
    prob.time = 0.7;
    prob.grid = cell_lattice(2, 8);
    const ConvergenceStudy s =
        convergence_study(prob, {0.25, 0.125, 0.0625}, {0.3, -0.2});
    CHECK(s.at_machine_floor);
    CHECK_FALSE(s.fitted_rate);
  }
  SECTION("harmonic1d advection has first-order rate") {
    const auto& e = catalog_get("harmonic1d");
    ScalarField u0;
    u0.dimension = 1;
    u0.value = [](const Point& x) { return std::sin(kTwoPi * x[0]); };
    u0.gradient = [](const Point& x) { return Point{kTwoPi * std::cos(kTwoPi * x[0])}; };
    TransportProblem prob;
    prob.initial = u0;
    prob.field = e.field;
    prob.time = 1.0;
    prob.grid = cell_lattice(1, 128);
    const CriteriumReport frame = build_transport_matrix(*e.frame, 64);
    const ConvergenceStudy s = convergence_study(
        prob, {0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125}, frame.xi, {},
        1, frame.sup_w_sharp());
    REQUIRE(s.fitted_rate);
    CHECK(*s.fitted_rate == Catch::Approx(1.0).margin(0.3));
    for (std::size_t i = 0; i < s.epsilons.size(); ++i)
      CHECK(s.sup_errors[i] <= s.bounds[i]);
  }
  SECTION("layered2d at a non-resonant time decays at first order") {
    // At t = 0.9 the fast clock t/eps is not a multiple of the cell transit
    // time 2, so the corrector difference is generic.
    const auto& e = catalog_get("layered2d");
    TransportProblem prob;
    prob.initial = sin_sum(2);
    prob.field = e.field;
    prob.time = 0.9;
    prob.grid = cell_lattice(2, 32);
    const CriteriumReport frame = build_transport_matrix(*e.frame, 64);
    const ConvergenceStudy s =
        convergence_study(prob, {0.125, 0.0625, 0.03125}, frame.xi, {}, 1,
                          frame.sup_w_sharp());
    CHECK_FALSE(s.at_machine_floor);
    for (std::size_t i = 0; i < s.epsilons.size(); ++i) {
      CHECK(s.sup_errors[i] <= s.bounds[i]);
      CHECK(s.sup_errors[i] > 1e-3);
    }
    // oracle values computed from the exact remainder identity on this grid
    CHECK(s.sup_errors[0] == Catch::Approx(0.12127354).epsilon(1e-4));
    CHECK(s.sup_errors[1] == Catch::Approx(0.03061979).epsilon(1e-4));
    CHECK(s.sup_errors[2] == Catch::Approx(0.01364045).epsilon(1e-4));
  }
  SECTION("layered2d at resonant times collapses to the homogenized limit") {
    // t/eps lands on even integers, where X advances by whole cells and the
    // corrector difference vanishes identically.
    const auto& e = catalog_get("layered2d");
    TransportProblem prob;
    prob.initial = sin_sum(2);
    prob.field = e.field;
    prob.time = 1.0;
    prob.grid = cell_lattice(2, 16);
    const ConvergenceStudy s =
        convergence_study(prob, {0.125, 0.0625, 0.03125}, {0.0, 0.5});
    CHECK(s.at_machine_floor);
  }
  SECTION("grid refinement moves the sup-error by less than 5 percent") {
    const auto& e = catalog_get("layered2d");
    TransportProblem prob;
    prob.initial = sin_sum(2);
    prob.field = e.field;
    prob.time = 0.9;
    prob.epsilon = 0.125;
    double sup[2];
    int idx = 0;
    for (int n : {32, 64}) {
      prob.grid = cell_lattice(2, n);
      const auto vals = solve_transport(prob);
      const auto hom =
          homogenized_solution(prob.initial, {0.0, 0.5}, prob.time, prob.grid);
      double s = 0.0;
      for (std::size_t i = 0; i < vals.size(); ++i)
        s = std::max(s, std::abs(vals[i] - hom[i]));
      sup[idx++] = s;
    }
    CHECK(std::abs(sup[1] - sup[0]) <= 0.05 * sup[0]);
  }
  SECTION("input validation") {
    TransportProblem prob;
    prob.initial = sin_sum(2);
    prob.field = catalog_get("layered2d").field;
    prob.grid = cell_lattice(2, 4);
    CHECK_THROWS(convergence_study(prob, {0.5, 0.25}, {0.0, 0.5}));
    CHECK_THROWS(convergence_study(prob, {0.25, 0.5, 0.125}, {0.0, 0.5}));
  }
}

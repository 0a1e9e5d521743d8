#include <catch2/catch_amalgamated.hpp>

#include "isoflow/catalog.hpp"
#include "isoflow/characteristics.hpp"
#include "oracles.hpp"

using namespace isoflow;

namespace {

// Points of the 21x21 lattice on [-2,2]^2 with x1 + x2 > threshold.
std::vector<Point> masked_lattice(double threshold) {
  std::vector<Point> pts;
  for (const Point& p : make_grid({{-2, -2}, {2, 2}, {21, 21}}))
    if (p[0] + p[1] > threshold) pts.push_back(p);
  return pts;
}

}  // namespace

TEST_CASE("hitting_time") {
  const auto& e = catalog_get("cubicflow2d");
  SECTION("closed-form tau at (1,1)") {
    const HittingTimeResult r = hitting_time(e.field, *e.level, {1.0, 1.0});
    CHECK(r.tau == Catch::Approx(-1.0).margin(1e-8));
    CHECK(r.monotonicity_margin > 0);
  }
  SECTION("already on the level set") {
    const HittingTimeResult r = hitting_time(e.field, *e.level, {0.5, 0.5});
    CHECK(r.tau == 0.0);
    CHECK(r.iterations == 0);
  }
  SECTION("closed-form tau across the admissible lattice") {
    for (const Point& x : masked_lattice(0.2)) {
      const double expected = e.closed_forms.hitting_time(x);
      const HittingTimeResult r = hitting_time(e.field, *e.level, x);
      INFO("x = (" << x[0] << ", " << x[1] << ")");
      CHECK(r.tau == Catch::Approx(expected).margin(1e-8).epsilon(1e-8));
    }
  }
  SECTION("arctan2d level 0 from (1,0), against the closed form and the oracle") {
    const auto& a = catalog_get("arctan2d");
    const HittingTimeResult r = hitting_time(a.field, *a.level, {1.0, 0.0});
    CHECK(r.tau < 0);
    CHECK(r.tau == Catch::Approx(-2.0 / 3.0).margin(1e-8));
    // |u(X(tau))| at the reported time
    const Point hit = advance_flow(a.field, {1.0, 0.0}, r.tau);
    CHECK(std::abs(a.potential->value(hit)) <= 1e-8);
    // brute-force bisection oracle on fine-step RK4
    const double tau_oracle = oracle::hitting_time_bisect(
        a.field, a.potential->value, {1.0, 0.0}, 0.0, -1.0, 1e-3, 1e-8);
    CHECK(r.tau == Catch::Approx(tau_oracle).margin(1e-6));
  }
  SECTION("NotInBand outside the band") {
    CHECK_THROWS_AS(hitting_time(e.field, *e.level, {-1.0, 0.5}), NotInBand);
  }
  SECTION("MonotonicityViolated when f' changes sign") {
    // f(t) = 0.9 sin(1 + t) crests at 0.9, short of the 0.95 level.
    ScalarField u;
    u.dimension = 1;
    u.value = [](const Point& x) { return 0.9 * std::sin(x[0]); };
    u.gradient = [](const Point& x) { return Point{0.9 * std::cos(x[0])}; };
    LevelSpec spec;
    spec.potential = u;
    spec.level = 0.95;
    spec.band_low = -1.0;
    spec.band_high = 1.0;
    const VectorField b = constant_field({1.0});
    CHECK_THROWS_AS(hitting_time(b, spec, {1.0}), MonotonicityViolated);
  }
  SECTION("BandExit on blow-up before the crossing") {
    // b = (1/(1+x2^2), 1 + x2^2): x2 blows up at t = pi/2 while
    // u = x1 gains only pi/4, short of the level.
    VectorField b;
    b.dimension = 2;
    b.eval_into = [](const Point& x, Point& out) {
      out.resize(2);
      out[0] = 1.0 / (1.0 + x[1] * x[1]);
      out[1] = 1.0 + x[1] * x[1];
    };
    ScalarField u;
    u.dimension = 2;
    u.value = [](const Point& x) { return x[0]; };
    u.gradient = [](const Point&) { return Point{1.0, 0.0}; };
    LevelSpec spec;
    spec.potential = u;
    spec.level = 1.5;
    spec.band_low = -kInf;
    spec.band_high = kInf;
    CHECK_THROWS_AS(hitting_time(b, spec, {0.0, 0.0}), BandExit);
  }
  SECTION("BandExit with an asymptotic-level diagnostic near a critical point") {
    // cubic3d from the negative diagonal: u(X(t)) -> 0^- only as t -> inf.
    const auto& c = catalog_get("cubic3d");
    LevelSpec spec;
    spec.potential = *c.potential;
    spec.level = -1e-12;
    spec.band_low = -kInf;
    spec.band_high = 0.0;
    IntegrationConfig cfg;
    cfg.max_time = 50.0;
    try {
      hitting_time(c.field, spec, {-0.5, -0.5, -0.5}, cfg);
      FAIL("expected BandExit");
    } catch (const BandExit& err) {
      CHECK(std::string(err.what()).find("asymptotic") != std::string::npos);
    }
  }
}

TEST_CASE("reconstruct_sigma") {
  const auto& e = catalog_get("cubicflow2d");
  SECTION("spot value sigma(1,1) = 1/16") {
    CHECK(reconstruct_sigma(e.field, *e.level, {1.0, 1.0}) ==
          Catch::Approx(0.0625).epsilon(1e-8));
  }
  SECTION("identity on the level set") {
    CHECK(reconstruct_sigma(e.field, *e.level, {0.25, 0.75}) == 1.0);
  }
  SECTION("divergence-free field reconstructs sigma = 1") {
    // sigma b for layered2d is divergence free; reconstruct against u = x2.
    VectorField divfree;
    divfree.dimension = 2;
    divfree.periodic = true;
    divfree.eval_into = [](const Point& x, Point& out) {
      out.resize(2);
      out[0] = 0.0;
      out[1] = 2.0 + std::sin(kTwoPi * x[0]);
    };
    divfree.divergence = [](const Point&) { return 0.0; };
    ScalarField u;
    u.dimension = 2;
    u.value = [](const Point& x) { return x[1]; };
    u.gradient = [](const Point&) { return Point{0.0, 1.0}; };
    LevelSpec spec;
    spec.potential = u;
    spec.level = 0.0;
    spec.band_low = -kInf;
    spec.band_high = kInf;
    for (const Point& x : {Point{0.3, 0.8}, Point{0.9, -1.4}})
      CHECK(reconstruct_sigma(divfree, spec, x) == Catch::Approx(1.0).epsilon(1e-10));
  }
  SECTION("layered2d reconstructs v1'(x2)/v1'(0)") {
    const auto& l2 = catalog_get("layered2d");
    ScalarField u;
    u.dimension = 2;
    u.value = [](const Point& x) { return x[1]; };
    u.gradient = [](const Point&) { return Point{0.0, 1.0}; };
    LevelSpec spec;
    spec.potential = u;
    spec.level = 0.0;
    spec.band_low = -kInf;
    spec.band_high = kInf;
    for (const Point& x : {Point{0.0, 0.37}, Point{0.5, -0.81}}) {
      const double expected = (2.0 + std::cos(kTwoPi * x[1])) / 3.0;
      CHECK(reconstruct_sigma(l2.field, spec, x) ==
            Catch::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("sigma_on_grid") {
  const auto& e = catalog_get("cubicflow2d");
  SECTION("matches the closed form on the masked lattice") {
    const auto pts = masked_lattice(0.2);
    const SigmaField sf = sigma_on_grid(e.field, *e.level, pts);
    REQUIRE(sf.n_ok == pts.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double expected = e.closed_forms.sigma(pts[i]);
      worst = std::max(worst, std::abs(sf.sigma[i] - expected) / expected);
      CHECK(sf.sigma[i] > 0);
    }
    CHECK(worst <= 1e-6);
  }
  SECTION("grid entirely on the level set gives all ones") {
    std::vector<Point> pts;
    for (double a : {0.1, 0.3, 0.6, 0.9}) pts.push_back({a, 1.0 - a});
    const SigmaField sf = sigma_on_grid(e.field, *e.level, pts);
    for (double s : sf.sigma) CHECK(s == 1.0);
  }
  SECTION("out-of-band points are flagged, the rest computed") {
    const std::vector<Point> pts{{1.0, 1.0}, {-1.0, 0.0}, {0.4, 0.4}};
    const SigmaField sf = sigma_on_grid(e.field, *e.level, pts);
    CHECK(sf.n_ok == 2);
    CHECK(sf.status[0] == "ok");
    CHECK(sf.status[1] == "NotInBand");
    CHECK(sf.status[2] == "ok");
    CHECK(std::isnan(sf.sigma[1]));
  }
  SECTION("thread count does not change the result") {
    const auto pts = masked_lattice(0.6);
    const SigmaField a = sigma_on_grid(e.field, *e.level, pts, {}, 1);
    const SigmaField b = sigma_on_grid(e.field, *e.level, pts, {}, 4);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(a.sigma[i] == b.sigma[i]);
      CHECK(a.tau[i] == b.tau[i]);
    }
  }
}

TEST_CASE("pde_residual") {
  SECTION("closed-form sigma of cubicflow2d at h = 1e-3") {
    const auto& e = catalog_get("cubicflow2d");
    const auto pts = make_grid({{0.3, 0.3}, {1.5, 1.5}, {7, 7}});
    const ResidualReport rep =
        pde_residual(e.closed_forms.sigma, e.field, pts, 1e-3);
    CHECK(rep.max <= 5e-4);
    CHECK(rep.mean <= 1e-4);
  }
  SECTION("sigma = 1 with a divergence-free field") {
    VectorField divfree;
    divfree.dimension = 2;
    divfree.eval_into = [](const Point& x, Point& out) {
      out.resize(2);
      out[0] = std::sin(kTwoPi * x[1]);
      out[1] = std::cos(kTwoPi * x[0]);
    };
    divfree.divergence = [](const Point&) { return 0.0; };
    const ResidualReport rep = pde_residual(
        [](const Point&) { return 1.0; }, divfree,
        make_grid({{0.1, 0.1}, {0.4, 0.4}, {3, 3}}), 1e-3);
    CHECK(rep.max <= 1e-12);
  }
  SECTION("reconstructed arctan2d sigma: residual small, second-order in h") {
    const auto& a = catalog_get("arctan2d");
    IntegrationConfig cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-14;
    HittingOptions opt;
    opt.level_value_tol = 1e-12;
    auto sigma = [&](const Point& x) {
      return reconstruct_sigma(a.field, *a.level, x, cfg, opt);
    };
    const auto pts = make_grid({{-1, -1}, {1, 1}, {5, 5}});
    const ResidualReport at_h = pde_residual(sigma, a.field, pts, 1e-3);
    const ResidualReport at_h2 = pde_residual(sigma, a.field, pts, 5e-4);
    CHECK(at_h.max <= 1e-3);
    CHECK(at_h.max >= 3.5 * at_h2.max);
  }
  SECTION("too-coarse grids are rejected") {
    const auto& e = catalog_get("cubicflow2d");
    SigmaField sf = sigma_on_grid(e.field, *e.level, {{0.5, 0.5}, {0.6, 0.6}});
    CHECK_THROWS_AS(pde_residual(sf, e.field, 1e-3), GridTooCoarse);
  }
}

TEST_CASE("band_classify") {
  SECTION("fcomposite3d bands around {f(0), f(1)}") {
    const auto& e = catalog_get("fcomposite3d");
    CHECK(band_classify(*e.potential, {-1.0, -1.0, -1.0}) == 0);  // u < f(0)
    CHECK(band_classify(*e.potential, {5.0, 5.0, 5.0}) == 2);     // u > f(1)
  }
  SECTION("cubic3d has bands {u<0} and {u>0}") {
    const auto& e = catalog_get("cubic3d");
    CHECK(band_classify(*e.potential, {0.5, 0.5, 0.5}) == 1);
    CHECK(band_classify(*e.potential, {-0.5, -0.5, -0.5}) == 0);
    CHECK_THROWS_AS(band_classify(*e.potential, {0.0, 0.0, 0.0}), OnCriticalLevel);
  }
  SECTION("no critical values means a single band") {
    const auto& e = catalog_get("arctan2d");
    CHECK(band_classify(*e.potential, {3.0, -5.0}) == 0);
  }
}

TEST_CASE("characteristics invariants") {
  const auto& e = catalog_get("cubicflow2d");
  SECTION("time translation tau(X(t,x)) = tau(x) - t") {
    for (const Point& x : {Point{1.0, 1.0}, Point{0.7, 0.2}, Point{1.5, -0.6}}) {
      const double tau_x = hitting_time(e.field, *e.level, x).tau;
      for (double t : {0.05, -0.1}) {
        const Point y = advance_flow(e.field, x, t);
        const double tau_y = hitting_time(e.field, *e.level, y).tau;
        CHECK(tau_y == Catch::Approx(tau_x - t).margin(1e-8));
      }
    }
  }
  SECTION("flow transport of sigma") {
    for (const Point& x : {Point{0.8, 0.6}, Point{1.2, -0.3}}) {
      const double sig_x = reconstruct_sigma(e.field, *e.level, x);
      for (double t : {0.1, -0.2}) {
        const Point y = advance_flow(e.field, x, t);
        const double sig_y = reconstruct_sigma(e.field, *e.level, y);
        const Trajectory traj = integrate_flow(e.field, x, t);
        const double integral = path_integral(
            [&](const Point& p) { return eval_divergence(e.field, p); }, traj,
            0.0, t);
        CHECK(sig_y == Catch::Approx(sig_x * std::exp(-integral)).epsilon(1e-7));
      }
    }
  }
  SECTION("changing the level multiplies sigma by a flow constant") {
    LevelSpec other = *e.level;
    other.level = 1.5;
    const Point x{0.9, 0.7};
    const Point y = advance_flow(e.field, x, 0.12);  // same trajectory
    const double rx =
        reconstruct_sigma(e.field, *e.level, x) / reconstruct_sigma(e.field, other, x);
    const double ry =
        reconstruct_sigma(e.field, *e.level, y) / reconstruct_sigma(e.field, other, y);
    CHECK(rx == Catch::Approx(ry).epsilon(1e-7));
  }
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mprt/transport.hpp"

using namespace mprt;

TEST_CASE("attenuation along rays") {
  SpatialGrid g(Domain::unit_disk(), 1.0 / 32);

  SECTION("zero path length") {
    AttenuationField att(ScalarField(g, 3.7), 0.01);
    CHECK(att.attenuation({0.2, 0.1}, {1.0, 0.0}, 0.0) == 1.0);
  }

  SECTION("constant cross-section closed form") {
    double sig = 1.3;
    AttenuationField att(ScalarField(g, sig), 1.0 / 64);
    Vec2 x{0.5, 0.0}, v{1.0, 0.0};
    for (double s : {0.1, 0.7, 1.5})
      CHECK(att.attenuation(x, v, s) == Catch::Approx(std::exp(-sig * s)).margin(1e-12));
  }

  SECTION("quadratic cross-section against the analytic integral") {
    ScalarField sig(g, [](Vec2 p) { return 1.0 + p.x * p.x; });
    AttenuationField att(sig, 1.0 / 512);
    Vec2 x{0.5, 0.0}, v{1.0, 0.0};
    double s = 1.2;
    // int_0^s 1 + (0.5 - t)^2 dt, the ray marches through x - t v.
    double a = 0.5, b = 0.5 - s;
    double exact = s + (a * a * a - b * b * b) / 3.0;
    CHECK(att.attenuation(x, v, s) == Catch::Approx(std::exp(-exact)).margin(5e-3));
    CHECK(attenuation(x, v, s, sig, 1.0 / 512) == att.attenuation(x, v, s));
  }

  SECTION("paths leaving the domain are rejected") {
    AttenuationField att(ScalarField(g, 1.0), 0.01);
    double tau = g.domain().exit_distance({0.5, 0.0}, {1.0, 0.0});
    CHECK_THROWS_AS(att.attenuation({0.5, 0.0}, {1.0, 0.0}, tau + 0.1), mprt::domain_error);
    CHECK_THROWS_AS(att.attenuation({0.5, 0.0}, {1.0, 0.0}, -0.1), mprt::domain_error);
    CHECK_NOTHROW(att.attenuation({0.5, 0.0}, {1.0, 0.0}, tau));
  }
}

TEST_CASE("boundary sweep") {
  SpatialGrid g(Domain::unit_disk(), 1.0 / 16);
  AngularQuadrature ang(16);
  double h_ray = 0.5 * g.h();

  SECTION("transparent medium transports the boundary value") {
    AngularField u = sweep(g, ang, nullptr, ScalarField(g, 0.0), BoundarySource::constant(1.0),
                           h_ray);
    CHECK(u.min() == 1.0);
    CHECK(u.max() == 1.0);
  }

  SECTION("pure absorber matches exp(-sigma tau)") {
    double sig = 0.9;
    AngularField u = sweep(g, ang, nullptr, ScalarField(g, sig), BoundarySource::constant(1.0),
                           h_ray);
    for (int d = 0; d < ang.size(); ++d) {
      for (int a = 0; a < g.n_active(); ++a) {
        double tau = g.domain().exit_distance(g.center(a), ang.dir(d));
        CHECK(u.at(d, a) == Catch::Approx(std::exp(-sig * tau)).margin(1e-12));
      }
    }
  }

  SECTION("balanced emission and absorption is the constant state") {
    // sigma_t = 1, q = 1, f = 1: E(tau) + int_0^tau E = 1 exactly.
    AngularField q(g, ang.size(), 1.0);
    AngularField u = sweep(g, ang, &q, ScalarField(g, 1.0), BoundarySource::constant(1.0), h_ray);
    for (double x : u.data()) CHECK(x == Catch::Approx(1.0).margin(1e-3));
  }

  SECTION("nonnegative data gives a nonnegative solution") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ur(0.0, 2.0);
    ScalarField sig(g, 0.0);
    for (int a = 0; a < sig.size(); ++a) sig[a] = ur(rng);
    AngularField q(g, ang.size());
    for (auto& x : q.data()) x = ur(rng);
    AngularField u = sweep(g, ang, &q, sig, BoundarySource::constant(0.3), h_ray);
    CHECK(u.min() >= 0.0);
  }

  SECTION("affine in the volume source and boundary data") {
    ScalarField sig(g, [](Vec2 p) { return 1.0 + 0.5 * p.y; });
    AngularField q1(g, ang.size()), q2(g, ang.size());
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    for (auto& x : q1.data()) x = ur(rng);
    for (auto& x : q2.data()) x = ur(rng);
    AngularField qs(g, ang.size());
    for (size_t i = 0; i < qs.data().size(); ++i) qs.data()[i] = q1.data()[i] + q2.data()[i];

    AngularField a = sweep(g, ang, &q1, sig, BoundarySource::constant(0.4), h_ray);
    AngularField b = sweep(g, ang, &q2, sig, BoundarySource::constant(0.6), h_ray);
    AngularField c = sweep(g, ang, &qs, sig, BoundarySource::constant(1.0), h_ray);
    AngularField apb(g, ang.size());
    for (size_t i = 0; i < apb.data().size(); ++i) apb.data()[i] = a.data()[i] + b.data()[i];
    CHECK(sup_diff(c, apb) < 1e-12);
  }
}

TEST_CASE("attenuation cache") {
  SpatialGrid g(Domain::unit_disk(), 1.0 / 16);
  AngularQuadrature ang(8);
  double h_ray = 0.5 * g.h();
  ScalarField sig(g, [](Vec2 p) { return 1.0 + 0.3 * p.x + 0.2 * p.y * p.y; });
  AttenuationCache cache(g, ang, sig, h_ray);

  SECTION("cached sweep is bit-identical to the fresh one") {
    AngularField q(g, ang.size(), 0.7);
    BoundarySource f = BoundarySource::constant(1.1);
    AngularField fresh = sweep(g, ang, &q, sig, f, h_ray);
    AngularField cached = sweep(g, ang, &q, sig, f, h_ray, &cache);
    CHECK(sup_diff(fresh, cached) == 0.0);
  }

  SECTION("stored exit profiles agree with direct attenuation queries") {
    AttenuationField att(sig, h_ray);
    for (int d = 0; d < ang.size(); d += 3) {
      for (int a = 0; a < g.n_active(); a += 29) {
        double tau = cache.tau(d, a);
        CHECK(cache.profile(d, a)[cache.samples(d, a)] ==
              att.attenuation(g.center(a), ang.dir(d), tau));
      }
    }
  }

  SECTION("stale cache is rejected") {
    ScalarField other = sig;
    other[0] += 1e-9;
    CHECK_FALSE(cache.matches(other));
    CHECK_THROWS_AS(sweep(g, ang, nullptr, other, BoundarySource::constant(1.0), h_ray, &cache),
                    validation_error);
    CHECK_THROWS_AS(sweep(g, ang, nullptr, sig, BoundarySource::constant(1.0), 2.0 * h_ray, &cache),
                    validation_error);
  }
}

TEST_CASE("linear transport solve") {
  SpatialGrid g(Domain::unit_disk(), 1.0 / 16);
  AngularQuadrature ang(16);
  ScatteringModel K = ScatteringModel::isotropic();
  TransportConfig cfg;

  SECTION("no scattering reduces to a single sweep") {
    ScalarField sa(g, 0.7), ss(g, 0.0);
    LinearSolveResult r = solve_linear_rte(g, ang, sa, ss, K, BoundarySource::constant(1.0), cfg);
    CHECK(r.iterations == 0);
    for (int d = 0; d < ang.size(); ++d)
      for (int a = 0; a < g.n_active(); a += 7) {
        double tau = g.domain().exit_distance(g.center(a), ang.dir(d));
        CHECK(r.u.at(d, a) == Catch::Approx(std::exp(-0.7 * tau)).margin(1e-12));
      }
  }

  SECTION("scattering only adds particles") {
    ScalarField sa(g, 0.5), ss(g, 1.5);
    TransportConfig wide = cfg;
    wide.n_si = 200;
    double h_ray = resolve_h_ray(g, wide);
    AngularField u0 = sweep(g, ang, nullptr, sa + ss, BoundarySource::constant(1.0), h_ray);
    LinearSolveResult r = solve_linear_rte(g, ang, sa, ss, K, BoundarySource::constant(1.0), wide);
    for (size_t i = 0; i < r.u.data().size(); ++i)
      CHECK(r.u.data()[i] >= u0.data()[i] - 1e-12);
    CHECK(r.u.max() <= 1.0 + 1e-9);
  }

  SECTION("residuals contract at the scattering ratio") {
    ScalarField sa(g, 1.0), ss(g, 1.0);  // sup sigma_s / inf sigma_t = 0.5
    LinearSolveResult r = solve_linear_rte(g, ang, sa, ss, K, BoundarySource::constant(1.0), cfg);
    REQUIRE(r.residuals.size() >= 4);
    for (size_t k = 2; k + 1 < r.residuals.size(); ++k) {
      if (r.residuals[k] < 1e-12) break;
      CHECK(r.residuals[k + 1] / r.residuals[k] <= 0.55);
    }
  }

  SECTION("more absorption means less transmission") {
    ScalarField ss(g, 1.0);
    LinearSolveResult lo =
        solve_linear_rte(g, ang, ScalarField(g, 0.5), ss, K, BoundarySource::constant(1.0), cfg);
    LinearSolveResult hi =
        solve_linear_rte(g, ang, ScalarField(g, 1.0), ss, K, BoundarySource::constant(1.0), cfg);
    for (size_t i = 0; i < lo.u.data().size(); ++i)
      CHECK(hi.u.data()[i] <= lo.u.data()[i] + 1e-10);
  }

  SECTION("solution respects the max-principle bracket") {
    ScalarField sa(g, [](Vec2 p) { return 0.6 + 0.3 * p.x; }), ss(g, 0.8);
    BoundarySource f = BoundarySource::constant(1.2);
    LinearSolveResult r = solve_linear_rte(g, ang, sa, ss, K, f, cfg);
    CHECK(r.u.max() <= f.upper() + 1e-6);
    CHECK(r.u.min() >= f.lower() * std::exp(-g.domain().diameter() * sa.max()) - 1e-6);
  }

  SECTION("warm start converges to the same limit") {
    ScalarField sa(g, 0.8), ss(g, 0.9);
    BoundarySource f = BoundarySource::constant(1.0);
    LinearSolveResult cold = solve_linear_rte(g, ang, sa, ss, K, f, cfg);
    LinearSolveResult warm =
        solve_linear_rte(g, ang, sa, ss, K, f, cfg, nullptr, &cold.u);
    CHECK(sup_diff(cold.u, warm.u) <= 10.0 * cfg.tol_si);
    CHECK(warm.iterations <= 3);
  }

  SECTION("invalid cross-sections and starved iteration budgets") {
    CHECK_THROWS_AS(solve_linear_rte(g, ang, ScalarField(g, 0.0), ScalarField(g, 1.0), K,
                                     BoundarySource::constant(1.0), cfg),
                    model_error);
    CHECK_THROWS_AS(solve_linear_rte(g, ang, ScalarField(g, 1.0), ScalarField(g, -0.1), K,
                                     BoundarySource::constant(1.0), cfg),
                    model_error);
    TransportConfig tiny = cfg;
    tiny.n_si = 3;
    CHECK_THROWS_AS(solve_linear_rte(g, ang, ScalarField(g, 0.1), ScalarField(g, 2.0), K,
                                     BoundarySource::constant(1.0), tiny),
                    iteration_error);
  }
}

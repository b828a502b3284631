#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "mprt/angular.hpp"
#include "mprt/fields.hpp"
#include "mprt/geometry.hpp"
#include "mprt/grid.hpp"
#include "mprt/model.hpp"
#include "mprt/scattering.hpp"

using namespace mprt;

namespace {

// Independent oracle: bisection on |x - t v| - 1 over t in [0, 2.5].
double disk_exit_bisect(Vec2 x, Vec2 v) {
  auto f = [&](double t) { return norm(x - t * v) - 1.0; };
  double lo = 0.0, hi = 2.5;
  REQUIRE(f(lo) < 0.0);
  REQUIRE(f(hi) > 0.0);
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("disk exit distances") {
  Domain d = Domain::unit_disk();

  Vec2 vs[] = {{1.0, 0.0}, {0.0, -1.0}, {std::sqrt(0.5), std::sqrt(0.5)}};
  for (Vec2 v : vs) CHECK(d.exit_distance({0.0, 0.0}, v) == Catch::Approx(1.0).margin(1e-14));

  CHECK(d.exit_distance({0.5, 0.0}, {1.0, 0.0}) == Catch::Approx(1.5).margin(1e-14));
  double t = d.exit_distance({0.5, 0.0}, {0.0, 1.0});
  CHECK(t == Catch::Approx(std::sqrt(0.75)).margin(1e-14));
  CHECK(t == Catch::Approx(disk_exit_bisect({0.5, 0.0}, {0.0, 1.0})).margin(1e-10));

  SECTION("exit point lies on the boundary") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ur(-0.95, 0.95), ua(0.0, 2.0 * pi);
    for (int i = 0; i < 500; ++i) {
      Vec2 x{ur(rng), ur(rng)};
      if (!d.contains(x)) continue;
      double th = ua(rng);
      Vec2 v{std::cos(th), std::sin(th)};
      double tau = d.exit_distance(x, v);
      CHECK(std::abs(norm(x - tau * v) - 1.0) < 1e-14);
      // Backward and forward exits add up to the chord through x along v.
      double tp = d.forward_exit(x, v);
      CHECK(std::abs(norm(x + tp * v) - 1.0) < 1e-14);
      Vec2 chord = (x + tp * v) - (x - tau * v);
      CHECK(norm(chord) == Catch::Approx(tau + tp).margin(1e-12));
    }
  }

  CHECK_THROWS_AS(d.exit_distance({1.5, 0.0}, {1.0, 0.0}), mprt::domain_error);
  CHECK_THROWS_AS(d.exit_distance({1.0, 0.0}, {1.0, 0.0}), mprt::domain_error);
}

TEST_CASE("rectangle exit distances") {
  Domain r = Domain::rectangle(2.0, 1.0);
  CHECK(r.contains({0.9, 0.45}));
  CHECK_FALSE(r.contains({1.0, 0.0}));
  CHECK(r.exit_distance({0.0, 0.0}, {1.0, 0.0}) == Catch::Approx(1.0));
  CHECK(r.exit_distance({0.0, 0.0}, {0.0, 1.0}) == Catch::Approx(0.5));
  CHECK(r.exit_distance({0.5, 0.25}, {-1.0, 0.0}) == Catch::Approx(0.5));
  double s = std::sqrt(0.5);
  CHECK(r.exit_distance({0.0, 0.0}, {s, s}) == Catch::Approx(0.5 / s));
  CHECK(r.diameter() == Catch::Approx(std::sqrt(5.0)));
  CHECK(r.area() == Catch::Approx(2.0));
  CHECK_THROWS_AS(Domain::rectangle(-1.0, 1.0), validation_error);
}

TEST_CASE("grid active cells and area convergence") {
  Domain d = Domain::unit_disk();
  SpatialGrid g16(d, 1.0 / 16), g32(d, 1.0 / 32);
  for (int a = 0; a < g16.n_active(); ++a) CHECK(norm(g16.center(a)) < 1.0);

  double e16 = std::abs(g16.active_area() - d.area());
  double e32 = std::abs(g32.active_area() - d.area());
  CHECK(e32 < e16);
  CHECK(e16 / d.area() < 0.1);
  CHECK(e32 / d.area() < 0.05);

  SECTION("boundary distance matches the domain") {
    for (int a = 0; a < g16.n_active(); a += 17)
      CHECK(g16.boundary_dist(a) == Catch::Approx(1.0 - norm(g16.center(a))));
  }
}

TEST_CASE("nearest-active extension against brute force") {
  SpatialGrid g(Domain::unit_disk(), 1.0 / 8);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      int best = -1;
      double bd = 0.0;
      for (int a = 0; a < g.n_active(); ++a) {
        double di = g.active_i(a) - i, dj = g.active_j(a) - j;
        double d2 = di * di + dj * dj;
        if (best < 0 || d2 < bd - 1e-12 || (std::abs(d2 - bd) <= 1e-12 && a < best)) {
          best = a;
          bd = d2;
        }
      }
      CHECK(g.nearest_active(i, j) == best);
    }
  }
}

TEST_CASE("bilinear sampling reproduces affine fields") {
  SpatialGrid g(Domain::unit_disk(), 1.0 / 16);
  ScalarField f(g, [](Vec2 p) { return 0.3 + 1.7 * p.x - 0.9 * p.y; });
  std::vector<double> full;
  g.scatter_extended(f.data().data(), full);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ur(-0.5, 0.5);
  for (int i = 0; i < 200; ++i) {
    Vec2 p{ur(rng), ur(rng)};  // well inside, all four stencil cells active
    CHECK(g.bilinear(full, p) == Catch::Approx(0.3 + 1.7 * p.x - 0.9 * p.y).margin(1e-12));
  }
}

TEST_CASE("angular quadrature") {
  CHECK_THROWS_AS(AngularQuadrature(7), validation_error);
  CHECK_THROWS_AS(AngularQuadrature(0), validation_error);

  AngularQuadrature ang(16);
  double wsum = 0.0;
  for (int j = 0; j < ang.size(); ++j) wsum += ang.weight(j);
  CHECK(wsum == Catch::Approx(1.0).margin(1e-15));

  SECTION("closed under v -> -v") {
    for (int j = 0; j < ang.size(); ++j) {
      Vec2 v = ang.dir(j), w = ang.dir(ang.opposite(j));
      CHECK(std::abs(v.x + w.x) < 1e-13);
      CHECK(std::abs(v.y + w.y) < 1e-13);
    }
  }

  SECTION("trigonometric exactness up to the direction count") {
    for (int n = 1; n < ang.size(); ++n) {
      std::complex<double> s{0.0, 0.0};
      for (int j = 0; j < ang.size(); ++j)
        s += ang.weight(j) * std::exp(std::complex<double>(0.0, n * ang.theta(j)));
      CHECK(std::abs(s) < 1e-13);
    }
  }
}

TEST_CASE("angular average") {
  SpatialGrid g(Domain::unit_disk(), 1.0 / 8);
  AngularQuadrature ang(8);

  AngularField c(g, 8, 2.5);
  ScalarField avg = angular_average(c, ang);
  CHECK(avg.min() == Catch::Approx(2.5).margin(1e-15));
  CHECK(avg.max() == Catch::Approx(2.5).margin(1e-15));

  AngularField cosu(g, 8);
  for (int d = 0; d < 8; ++d)
    for (int a = 0; a < g.n_active(); ++a) cosu.at(d, a) = std::cos(ang.theta(d));
  CHECK(sup_norm(angular_average(cosu, ang)) < 1e-14);

  SECTION("matches the direct weighted sum and stays within direction bounds") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    AngularField u(g, 8);
    for (auto& x : u.data()) x = ur(rng);
    ScalarField m = angular_average(u, ang);
    for (int a = 0; a < g.n_active(); ++a) {
      double s = 0.0, lo = 1e30, hi = -1e30;
      for (int d = 0; d < 8; ++d) {
        s += u.at(d, a) / 8.0;
        lo = std::min(lo, u.at(d, a));
        hi = std::max(hi, u.at(d, a));
      }
      CHECK(m[a] == Catch::Approx(s).margin(1e-14));
      CHECK(m[a] >= lo - 1e-14);
      CHECK(m[a] <= hi + 1e-14);
    }
  }

  SECTION("idempotent after broadcast") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    AngularField u(g, 8);
    for (auto& x : u.data()) x = ur(rng);
    ScalarField m1 = angular_average(u, ang);
    ScalarField m2 = angular_average(broadcast(m1, 8), ang);
    CHECK(sup_norm(m1 - m2) < 1e-15);
  }
}

namespace {

// Random circulant kernel: rows/columns average to 1 under uniform weights.
Eigen::MatrixXd random_circulant_kernel(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  std::vector<double> c(n);
  double s = 0.0;
  for (double& x : c) {
    x = ur(rng);
    s += x;
  }
  for (double& x : c) x /= s;
  Eigen::MatrixXd p(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) p(j, k) = n * c[(k - j + n) % n];
  return p;
}

}  // namespace

TEST_CASE("scattering model") {
  SpatialGrid g(Domain::unit_disk(), 1.0 / 8);
  AngularQuadrature ang(8);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ur(0.0, 1.0);

  SECTION("isotropic broadcasts the angular average") {
    ScatteringModel k = ScatteringModel::isotropic();
    AngularField u(g, 8);
    for (auto& x : u.data()) x = ur(rng);
    AngularField ku = k.apply(u, ang);
    ScalarField m = angular_average(u, ang);
    for (int d = 0; d < 8; ++d)
      for (int a = 0; a < g.n_active(); ++a) CHECK(ku.at(d, a) == m[a]);
  }

  SECTION("tabulated kernel fixes constants and matches the dense product") {
    Eigen::MatrixXd p = random_circulant_kernel(8, rng);
    ScatteringModel k = ScatteringModel::tabulated(p, ang);

    AngularField ones(g, 8, 1.0);
    AngularField kones = k.apply(ones, ang);
    CHECK(sup_diff(kones, ones) < 1e-13);

    AngularField u(g, 8);
    for (auto& x : u.data()) x = ur(rng);
    AngularField ku = k.apply(u, ang);
    for (int a = 0; a < g.n_active(); a += 13) {
      for (int d = 0; d < 8; ++d) {
        double s = 0.0;
        for (int m = 0; m < 8; ++m) s += p(d, m) * u.at(m, a) / 8.0;
        CHECK(ku.at(d, a) == Catch::Approx(s).margin(1e-13));
      }
    }
  }

  SECTION("invalid kernels are rejected at construction") {
    Eigen::MatrixXd bad = Eigen::MatrixXd::Constant(8, 8, 1.0);
    bad(0, 0) = 2.0;  // breaks the row normalization
    CHECK_THROWS_AS(ScatteringModel::tabulated(bad, ang), validation_error);
    Eigen::MatrixXd neg = Eigen::MatrixXd::Constant(8, 8, 1.0);
    neg(1, 2) = -0.1;
    CHECK_THROWS_AS(ScatteringModel::tabulated(neg, ang), validation_error);
  }
}

TEST_CASE("averaging operator inequality") {
  // sum_j w |K phi|^2 / (K u) <= sum_j w phi^2 / u per cell, for u > 0.
  int nv = 16;
  AngularQuadrature ang(nv);
  SpatialGrid g(Domain::unit_disk(), 0.9);  // a handful of cells is enough
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uu(0.1, 2.0), up(-1.0, 1.0), sel(0.0, 1.0);

  for (int trial = 0; trial < 200; ++trial) {
    ScatteringModel k = sel(rng) < 0.3 ? ScatteringModel::isotropic()
                                       : ScatteringModel::tabulated(random_circulant_kernel(nv, rng), ang);
    AngularField u(g, nv), phi(g, nv);
    for (auto& x : u.data()) x = uu(rng);
    for (auto& x : phi.data()) x = up(rng);
    AngularField ku = k.apply(u, ang), kphi = k.apply(phi, ang);
    for (int a = 0; a < g.n_active(); ++a) {
      double lhs = 0.0, rhs = 0.0;
      for (int d = 0; d < nv; ++d) {
        lhs += ang.weight(d) * kphi.at(d, a) * kphi.at(d, a) / ku.at(d, a);
        rhs += ang.weight(d) * phi.at(d, a) * phi.at(d, a) / u.at(d, a);
      }
      CHECK(lhs <= rhs + 1e-12 * std::max(1.0, rhs));
    }
  }
}

TEST_CASE("absorption law evaluation") {
  SpatialGrid g(Domain::unit_disk(), 1.0 / 8);

  SECTION("degree zero is the coefficient itself") {
    MPAModel m({ScalarField(g, 0.3)});
    ScalarField out = m.eval(ScalarField(g, 42.0));
    CHECK(out.min() == Catch::Approx(0.3));
    CHECK(out.max() == Catch::Approx(0.3));
  }

  SECTION("degree one constant example") {
    MPAModel m({ScalarField(g, 1.0), ScalarField(g, 2.0)});
    ScalarField out = m.eval(ScalarField(g, 0.5));
    CHECK(out.max() == Catch::Approx(2.0).margin(1e-14));
  }

  SECTION("degree two matches the per-point Horner oracle") {
    ScalarField s0(g, [](Vec2 p) { return 1.0 + 0.2 * p.x; });
    ScalarField s1(g, [](Vec2 p) { return 0.5 + 0.1 * p.y; });
    ScalarField s2(g, [](Vec2 p) { return 0.25 + 0.05 * p.x * p.y; });
    MPAModel m({s0, s1, s2});
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> ur(-1.5, 1.5);
    ScalarField mm(g, 0.0);
    for (int a = 0; a < mm.size(); ++a) mm[a] = ur(rng);
    ScalarField out = m.eval(mm);
    for (int a = 0; a < mm.size(); ++a) {
      double t = std::abs(mm[a]);
      double horner = (s2[a] * t + s1[a]) * t + s0[a];
      CHECK(out[a] == Catch::Approx(horner).epsilon(1e-14));
    }
  }

  SECTION("model invariants are enforced") {
    CHECK_THROWS_WITH(MPAModel({ScalarField(g, 0.0)}),
                      Catch::Matchers::ContainsSubstring("sigma_{a,0} > 0"));
    CHECK_THROWS_AS(MPAModel({ScalarField(g, 1.0), ScalarField(g, -0.1)}), model_error);
    CHECK_THROWS_AS(MPAModel({ScalarField(g, 1.0)}, 0.5), model_error);
  }

  SECTION("growth envelope is nondecreasing") {
    MPAModel m({ScalarField(g, 1.0), ScalarField(g, 0.5), ScalarField(g, 0.25)});
    double prev = m.growth(0.0);
    CHECK(prev == Catch::Approx(1.0));
    for (double t = 0.25; t <= 2.0; t += 0.25) {
      double cur = m.growth(t);
      CHECK(cur >= prev);
      prev = cur;
    }
    CHECK(m.growth(1.0) == Catch::Approx(1.75));
  }

  SECTION("identity smoothing kernel changes nothing") {
    int n = g.n_active();
    auto id = std::make_shared<Eigen::MatrixXd>(Eigen::MatrixXd::Identity(n, n));
    MPAModel plain({ScalarField(g, 1.0), ScalarField(g, 0.5)});
    MPAModel with({ScalarField(g, 1.0), ScalarField(g, 0.5)}, 1.0, {nullptr, id});
    ScalarField mm(g, [](Vec2 p) { return 0.5 + 0.3 * p.x; });
    CHECK(sup_norm(plain.eval(mm) - with.eval(mm)) < 1e-14);
  }

  SECTION("smoothing kernel validation") {
    int n = g.n_active();
    Eigen::MatrixXd skew = Eigen::MatrixXd::Identity(n, n);
    skew(0, 1) = 0.5;  // not symmetric
    auto skp = std::make_shared<Eigen::MatrixXd>(skew);
    CHECK_THROWS_AS(MPAModel({ScalarField(g, 1.0), ScalarField(g, 0.5)}, 1.0, {nullptr, skp}),
                    model_error);
    Eigen::MatrixXd negdef = -Eigen::MatrixXd::Identity(n, n);
    auto ndp = std::make_shared<Eigen::MatrixXd>(negdef);
    CHECK_THROWS_AS(MPAModel({ScalarField(g, 1.0), ScalarField(g, 0.5)}, 1.0, {nullptr, ndp}),
                    model_error);
  }
}

TEST_CASE("derivative positivity integral") {
  SpatialGrid g(Domain::unit_disk(), 1.0 / 32);

  MPAModel m({ScalarField(g, 1.0), ScalarField(g, 1.0)});
  CHECK(m.frechet_positivity(ScalarField(g, 1.0), ScalarField(g, 0.0)) == 0.0);

  // K=1, sigma_1 = 1, m = f = 1: the integrand is 1, so the value is the
  // active area, which approximates pi.
  double v = m.frechet_positivity(ScalarField(g, 1.0), ScalarField(g, 1.0));
  CHECK(v == Catch::Approx(g.active_area()).margin(1e-12));
  CHECK(v == Catch::Approx(pi).margin(0.15));

  SECTION("nonnegative for nonnegative mean fields") {
    SpatialGrid gs(Domain::unit_disk(), 1.0 / 8);
    MPAModel mm({ScalarField(gs, 0.5), ScalarField(gs, 0.3), ScalarField(gs, 0.2)});
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> um(0.0, 1.0), uf(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
      ScalarField mf(gs, 0.0), ff(gs, 0.0);
      for (int a = 0; a < mf.size(); ++a) {
        mf[a] = um(rng);
        ff[a] = uf(rng);
      }
      CHECK(mm.frechet_positivity(mf, ff) >= -1e-12);
    }
  }
}

TEST_CASE("boundary source bounds") {
  CHECK_THROWS_AS(BoundarySource::constant(0.0), validation_error);
  CHECK_THROWS_AS(BoundarySource::constant(-1.0), validation_error);
  BoundarySource f = BoundarySource::constant(1.5);
  CHECK(f.lower() == 1.5);
  CHECK(f.upper() == 1.5);
  CHECK(f({1.0, 0.0}, {0.0, 1.0}) == 1.5);

  BoundarySource g = BoundarySource::isotropic([](Vec2 p) { return 1.0 + 0.5 * p.x; }, 0.5, 1.5);
  CHECK(g({1.0, 0.0}, {0.3, 0.7}) == Catch::Approx(1.5));
  CHECK_THROWS_AS(BoundarySource::isotropic([](Vec2) { return 1.0; }, 0.0, 1.0), validation_error);
}

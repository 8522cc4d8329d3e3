#include <doctest.h>

#include "mage/error.hpp"
#include "mage/ma_core.hpp"
#include "mage/oracles.hpp"

#include <algorithm>
#include <cmath>

using namespace mage;

namespace {

ReducedGrid p1(int n, double R = 3.0, double t_min = -6.0,
               MixedStencil st = MixedStencil::antidiagonal) {
  return ReducedGrid(FiberKind::truncated_rho, n, n, -R, R, t_min).with_mixed_stencil(st);
}

double softplus(double x) { return std::log1p(std::exp(x)); }

double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST_CASE("pluriharmonic ray solves the homogeneous equation exactly") {
  const ReducedGrid g = p1(33);
  const BackgroundGeometry bg = make_p1_background(g, 0.5, 4.0, 0.0);
  const PotentialField r = pluriharmonic_ray(0.7, g);
  CHECK(r.phi(5, 0) == doctest::Approx(0.7 * g.t(0)));
  CHECK(max_hma_determinant(r.phi, bg) <= 1e-12);
  for (int j = 1; j + 1 < g.nt(); j += 4) CHECK(reduced_hessian(r.phi, {7, j}).norm() <= 1e-12);
}

TEST_CASE("product ray: closed form, trivial weight, t = 0 trace") {
  const ReducedGrid g = p1(17);
  CHECK(max_abs(product_ray(0, g).phi) == 0.0);
  const PotentialField r = product_ray(2, g);
  for (int i = 0; i < g.nx(); ++i) CHECK(std::abs(r.phi(i, g.nt() - 1)) <= 1e-15);
  for (double rho : {-2.0, 0.0, 1.5})
    for (double t : {-4.0, -1.0})
      CHECK(product_ray_value(2, rho, t) ==
            doctest::Approx(softplus(rho + 2 * t) - softplus(rho)).epsilon(1e-14));
  // nonpositive for t <= 0 since softplus is increasing
  for (double v : r.phi.values) CHECK(v <= 1e-15);
}

TEST_CASE("product ray: residual refinement on the centered stencil") {
  // wide rho window so the truncation does not dominate
  const RefinementCheck rc = verify_product_ray(1, p1(33, 8.0, -6.0, MixedStencil::centered));
  CHECK(rc.ok);
  CHECK(rc.ratio >= 3.2);
  CHECK(rc.ratio <= 4.8);
}

TEST_CASE("product ray is an exact discrete solution on the anti-diagonal stencil") {
  const ReducedGrid g = p1(33);
  const BackgroundGeometry bg = make_p1_background(g, 0.5, 4.0, 0.0);
  CHECK(max_hma_determinant(product_ray(1, g).phi, bg) <= 1e-11);
  CHECK_NOTHROW(verify_product_ray(1, g));
}

TEST_CASE("toric segment") {
  const ReducedGrid g = p1(33);
  SUBCASE("the Fubini-Study endpoint pair gives zero") {
    const PotentialField z = toric_segment({}, {}, g);
    CHECK(max_abs(z.phi) <= 1e-10);
  }
  SUBCASE("endpoint traces") {
    const ToricEndpoint u0{0.5, 0.3}, u1{};
    const PotentialField f = toric_segment(u0, u1, g);
    for (int i = 0; i < g.nx(); ++i) CHECK(std::abs(f.phi(i, g.nt() - 1)) <= 1e-10);
    // a pure linear term lin * y shifts rho: phi = softplus(rho - lin) - softplus(rho)
    const ToricEndpoint lin_only{0.0, 0.3};
    for (double rho : {-1.0, 0.5})
      CHECK(toric_segment_value(lin_only, u1, g.t(0), rho, g.t(0)) ==
            doctest::Approx(softplus(rho - 0.3) - softplus(rho)).epsilon(1e-9));
  }
  SUBCASE("refinement of the residual") {
    const RefinementCheck rc = verify_toric_segment({0.5, 0.3}, {}, p1(33, 3.0, -6.0, MixedStencil::centered));
    CHECK(rc.ratio >= 3.2);
    CHECK(rc.ratio <= 4.8);
  }
}

TEST_CASE("manufactured solution") {
  const ManufacturedSpec ms{0.1, 1, 0.3, 0.01};
  SUBCASE("vanishes on both t ends") {
    const ReducedGrid g(FiberKind::periodic_x, 16, 17, 0.0, 1.0, -2.0);
    for (int i = 0; i < g.nx(); ++i) {
      CHECK(manufactured_value(ms, g.t(0), g.x(i), g.t(0)) == doctest::Approx(0.0));
      CHECK(manufactured_value(ms, g.t(0), g.x(i), 0.0) == 0.0);
    }
  }
  SUBCASE("exact Hessian against the discrete stencil converges at second order") {
    auto err = [&](int n) {
      const ReducedGrid g(FiberKind::periodic_x, n, n + 1, 0.0, 1.0, -2.0);
      const Field f = Field::sample(g, [&](double x, double t) { return manufactured_value(ms, -2.0, x, t); });
      double e = 0.0;
      for (int j = 1; j + 1 < g.nt(); ++j)
        for (int i = 0; i < g.nx(); ++i)
          e = std::max(e, (reduced_hessian(f, {i, j}) - manufactured_hessian(ms, g, g.x(i), g.t(j))).norm());
      return e;
    };
    const double r = err(32) / err(64);
    CHECK(r >= 3.2);
    CHECK(r <= 4.8);
  }
  SUBCASE("right-hand side is the determinant ratio and positive") {
    const ReducedGrid g(FiberKind::periodic_x, 16, 17, 0.0, 1.0, -2.0);
    const BackgroundGeometry bg = make_flat_torus_background(g, 1.0, 0.5, 4.0, 0.0);
    const Manufactured m = manufactured(ms, bg, 1.0);
    for (int j = 1; j + 1 < g.nt(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        const Mat2 gp = bg.omega_s_at({i, j}, 1.0) + manufactured_hessian(ms, g, g.x(i), g.t(j));
        CHECK(m.rhs(i, j) > 0.0);
        CHECK(m.rhs(i, j) == doctest::Approx(gp.determinant() / bg.omega_eps_at({i, j}).determinant()));
      }
  }
  SUBCASE("a large amplitude is rejected") {
    const ReducedGrid g(FiberKind::periodic_x, 16, 17, 0.0, 1.0, -2.0);
    const BackgroundGeometry bg = make_flat_torus_background(g, 1.0, 0.5, 4.0, 0.0);
    CHECK_THROWS_AS(manufactured({5.0, 3, 0.0, 0.0}, bg, 1.0), PositivityError);
  }
}

TEST_CASE("oracle inputs are validated") {
  const ReducedGrid torus(FiberKind::periodic_x, 16, 17, 0.0, 1.0, -2.0);
  CHECK_THROWS_AS(product_ray(1, torus), InvalidInput);
  CHECK_THROWS_AS(product_ray(-1, p1(17)), InvalidInput);
  CHECK_THROWS_AS(toric_segment({-2.5, 0.0}, {}, p1(17)), InvalidInput);
}

TEST_CASE("refined grid halves the spacings") {
  const ReducedGrid g = p1(17);
  const ReducedGrid f = refined(g);
  CHECK(f.nx() == 33);
  CHECK(f.hx() == doctest::Approx(0.5 * g.hx()));
  CHECK(f.ht() == doctest::Approx(0.5 * g.ht()));
  const ReducedGrid t(FiberKind::periodic_x, 16, 17, 0.0, 1.0, -2.0);
  CHECK(refined(t).nx() == 32);
}

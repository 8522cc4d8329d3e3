#include <doctest.h>

#include "mage/continuation.hpp"
#include "mage/error.hpp"
#include "mage/monitors.hpp"
#include "mage/oracles.hpp"
#include "mage/solvers.hpp"

#include <cmath>
#include <limits>

using namespace mage;

namespace {

ReducedGrid torus(int n) { return ReducedGrid(FiberKind::periodic_x, n, n + 1, 0.0, 1.0, -2.0); }

BackgroundGeometry torus_bg(const ReducedGrid& g) {
  return make_flat_torus_background(g, 1.0, 0.5, 4.0, 0.0);
}

Field solved_manufactured(const BackgroundGeometry& bg) {
  const Manufactured m = manufactured(ManufacturedSpec{0.05, 1, 0.2, 0.0}, bg, 1.0);
  return m.phi.phi;
}

}  // namespace

TEST_CASE("node stencils are exact on quadratics, including edges") {
  const ReducedGrid g(FiberKind::truncated_rho, 17, 17, -3.0, 3.0, -6.0);
  const double d1 = g.fiber_scale();
  const Field f = Field::sample(g, [](double x, double t) { return 0.3 * x * x - 0.2 * x * t + 0.7 * t * t + x - t; });
  for (int j = 0; j < g.nt(); j += 4)
    for (int i = 0; i < g.nx(); i += 4) {
      const double x = g.x(i), t = g.t(j);
      const Mat2 h = node_hessian(f, {i, j});
      CHECK(h(0, 0) == doctest::Approx(d1 * d1 * 0.6).epsilon(1e-9));
      CHECK(h(1, 1) == doctest::Approx(1.4).epsilon(1e-9));
      CHECK(h(0, 1) == doctest::Approx(-0.2 * d1).epsilon(1e-9));
      const Vec2 v = node_gradient(f, {i, j});
      CHECK(v(0) == doctest::Approx(d1 * (0.6 * x - 0.2 * t + 1.0)).epsilon(1e-9));
      CHECK(v(1) == doctest::Approx(-0.2 * x + 1.4 * t - 1.0).epsilon(1e-9));
    }
}

TEST_CASE("node_hessian agrees with the solver stencil inside a centered grid") {
  const ReducedGrid g = torus(16);
  const Field f = Field::sample(g, [](double x, double t) { return std::sin(2 * M_PI * x) * std::exp(t); });
  for (int j = 1; j + 1 < g.nt(); j += 3)
    for (int i = 0; i < g.nx(); i += 3)
      CHECK((node_hessian(f, {i, j}) - reduced_hessian(f, {i, j})).norm() <= 1e-12);
}

TEST_CASE("closed-form constants") {
  const ReducedGrid g = torus(16);
  const BackgroundGeometry bg = make_flat_torus_background(g, 1.0, 0.5, 4.0, 0.25);
  CHECK(gradient_slope_bound(bg, 0.0) == doctest::Approx(0.25 * 5.0));
  CHECK(gradient_slope_bound(bg, 2.0) == doctest::Approx(0.25 * 7.0));
  CHECK(yau_aubin_constant(bg, 0.0) == doctest::Approx(8.5));
  CHECK(yau_aubin_constant(bg, 1.0) == doctest::Approx(10.5));
}

TEST_CASE("rhs bounds") {
  const ReducedGrid g = torus(16);
  const BackgroundGeometry bg = torus_bg(g);
  SUBCASE("constant F: F1 = L = 0") {
    const RhsBounds b = rhs_bounds(bg, 0.5, Field(g, 0.3));
    CHECK(b.constant);
    CHECK(b.F1 == 0.0);
    CHECK(b.L == 0.0);
    CHECK(b.sup_dlog_F == 0.0);
    CHECK(b.sup_F == doctest::Approx(0.3));
  }
  SUBCASE("nonconstant F: positive F1, sup matches") {
    const Field F = Field::sample(g, [](double x, double) { return 1.0 + 0.2 * std::cos(2 * M_PI * x); });
    const RhsBounds b = rhs_bounds(bg, 1.0, F);
    CHECK_FALSE(b.constant);
    CHECK(b.sup_F == doctest::Approx(1.2));
    CHECK(b.F1 > 0.0);
    CHECK(b.L >= 0.0);
  }
  SUBCASE("nonpositive F is rejected") {
    CHECK_THROWS_AS(rhs_bounds(bg, 1.0, Field(g, 0.0)), InvalidInput);
  }
}

TEST_CASE("zero potential at s = 1: flat trace and trivial scans") {
  const ReducedGrid g = torus(32);
  const BackgroundGeometry bg = torus_bg(g);
  const Field zero(g, 0.0);
  const GrowthFit lap = laplacian_growth_fit(zero, bg, 1.0);
  CHECK(std::abs(lap.slope) <= 1e-12);
  CHECK(lap.intercept == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const GrowthFit grad = gradient_growth_fit(zero, bg, 1.0);
  CHECK(grad.slope == 0.0);
  CHECK(grad.slices == 0);

  const RhsBounds f = rhs_bounds(bg, 1.0, Field(g, 1.0));
  const ScanResult ya = yau_aubin_scan(zero, bg, 1.0, f);
  CHECK(ya.interior_max == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(ya.boundary_max == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(ya.trace_h_inv_at_max == doctest::Approx(2.0).epsilon(1e-12));

  const BoundaryC2 b = boundary_c2_check(zero, bg, 1.0, f);
  CHECK(b.lhs == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b.holds);
}

TEST_CASE("Yau-Aubin scan matches a brute-force maximum and argmax") {
  const ReducedGrid g = torus(32);
  const BackgroundGeometry bg = torus_bg(g);
  const Field phi = solved_manufactured(bg);
  const RhsBounds f = rhs_bounds(bg, 1.0, Field(g, 1.0));
  const ScanResult ya = yau_aubin_scan(phi, bg, 1.0, f);
  const double A = yau_aubin_constant(bg, f.L);

  double in_max = -std::numeric_limits<double>::infinity(), bd_max = in_max;
  GridIndex in_loc{}, bd_loc{};
  for (int j = 0; j < g.nt(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const Mat2 gp = bg.omega_s_at({i, j}, 1.0) + node_hessian(phi, {i, j});
      const double v = std::log((bg.omega_eps_at({i, j}).inverse() * gp).trace()) - A * phi(i, j);
      if (g.interior(i, j) && v > in_max) { in_max = v; in_loc = {i, j}; }
      if (!g.interior(i, j) && v > bd_max) { bd_max = v; bd_loc = {i, j}; }
    }
  CHECK(ya.interior_max == doctest::Approx(in_max).epsilon(1e-12));
  CHECK(ya.interior_loc.i == in_loc.i);
  CHECK(ya.interior_loc.j == in_loc.j);
  CHECK(ya.boundary_max == doctest::Approx(bd_max).epsilon(1e-12));
  CHECK(ya.boundary_loc.i == bd_loc.i);
  CHECK(ya.boundary_loc.j == bd_loc.j);
}

TEST_CASE("pluriharmonic potential: gradient slope from an independent fit") {
  const ReducedGrid g(FiberKind::truncated_rho, 33, 33, -3.0, 3.0, -6.0);
  const BackgroundGeometry bg = make_p1_background(g, 0.5, 4.0, 0.0);
  const double c = 0.4;
  const Field phi = pluriharmonic_ray(c, g).phi;
  const GrowthFit fit = gradient_growth_fit(phi, bg, 1.0);

  // d Phi = (0, c) exactly; sup over x of c / sqrt(g_tt), regressed on -log||sigma||^2
  std::vector<double> xs, ys;
  for (int j = 2; j <= g.nt() - 2; ++j) {
    if (g.t(j) > 0.5 * g.t_min()) continue;
    double sup = 0.0;
    for (int i = 1; i + 1 < g.nx(); ++i) {
      const Mat2 gi = bg.omega_eps_at({i, j}).inverse();
      sup = std::max(sup, c * std::sqrt(gi(1, 1)));
    }
    xs.push_back(-std::log(bg.sigma_norm_sq(g.t(j))));
    ys.push_back(std::log(sup));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (size_t k = 0; k < xs.size(); ++k) { mx += xs[k] / n; my += ys[k] / n; }
  double sxx = 0, sxy = 0;
  for (size_t k = 0; k < xs.size(); ++k) { sxx += (xs[k] - mx) * (xs[k] - mx); sxy += (xs[k] - mx) * (ys[k] - my); }
  CHECK(fit.slices == static_cast<int>(xs.size()));
  CHECK(fit.slope == doctest::Approx(sxy / sxx).epsilon(1e-10));
  // bounded growth: below the t-only model slope 1/2
  CHECK(fit.slope > 0.0);
  CHECK(fit.slope <= 0.5 + 1e-12);
}

TEST_CASE("manufactured potential: Laplacian slope from the exact Hessian") {
  const ReducedGrid g = torus(64);
  const BackgroundGeometry bg = torus_bg(g);
  const ManufacturedSpec ms{0.05, 1, 0.2, 0.0};
  const Field phi = manufactured(ms, bg, 1.0).phi.phi;
  std::vector<double> xs, ys;
  for (int j = 2; j <= g.nt() - 2; ++j) {
    if (g.t(j) > 0.5 * g.t_min()) continue;
    double sup = 0.0;
    for (int i = 0; i < g.nx(); ++i) {
      const Mat2 gp = bg.omega_s_at({i, j}, 1.0) + manufactured_hessian(ms, g, g.x(i), g.t(j));
      sup = std::max(sup, (bg.omega_eps_at({i, j}).inverse() * gp).trace());
    }
    xs.push_back(-std::log(bg.sigma_norm_sq(g.t(j))));
    ys.push_back(std::log(sup));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (size_t k = 0; k < xs.size(); ++k) { mx += xs[k] / n; my += ys[k] / n; }
  double sxx = 0, sxy = 0;
  for (size_t k = 0; k < xs.size(); ++k) { sxx += (xs[k] - mx) * (xs[k] - mx); sxy += (xs[k] - mx) * (ys[k] - my); }
  CHECK(std::abs(laplacian_growth_fit(phi, bg, 1.0).slope - sxy / sxx) <= 1e-3);
}

TEST_CASE("evaluate_monitors is deterministic and gates the boundary check") {
  const ReducedGrid g = torus(32);
  const BackgroundGeometry bg = torus_bg(g);
  const FsChoice fs = choose_fs(bg, 0.5);
  const PotentialField sol = newton_solve(bg, 0.5, fs.c, Field(g, 0.0));
  const MonitorReport a = evaluate_monitors(sol.phi, bg, 0.5, fs.F);
  const MonitorReport b = evaluate_monitors(sol.phi, bg, 0.5, fs.F);
  CHECK(a.grad_fit.slope == b.grad_fit.slope);
  CHECK(a.alpha_scan.interior_max == b.alpha_scan.interior_max);
  CHECK(a.ya_scan.interior_max == b.ya_scan.interior_max);
  REQUIRE(a.boundary_c2);
  CHECK(a.boundary_c2->lhs == b.boundary_c2->lhs);
  CHECK(a.boundary_c2->holds);
  CHECK(a.profile.size() == static_cast<size_t>(g.nt()));

  Field lifted = sol.phi;
  for (double& v : lifted.values) v += 0.1;
  CHECK_FALSE(evaluate_monitors(lifted, bg, 0.5, fs.F).boundary_c2.has_value());
}

#include <doctest.h>

#include "mage/error.hpp"
#include "mage/geometry.hpp"

#include <cmath>
#include <random>

using namespace mage;

namespace {

ReducedGrid torus_grid(int n = 32) { return ReducedGrid(FiberKind::periodic_x, n, n, 0.0, 1.0, -2.0); }
ReducedGrid p1_grid(int n = 33) { return ReducedGrid(FiberKind::truncated_rho, n, n, -3.0, 3.0, -6.0); }

double softplus(double x) { return std::log1p(std::exp(x)); }

}  // namespace

TEST_CASE("grid spacings and the t = 0 row") {
  const ReducedGrid g = torus_grid(32);
  CHECK(g.hx() == doctest::Approx(1.0 / 32));
  CHECK(g.ht() == doctest::Approx(2.0 / 31));
  CHECK(g.t(g.nt() - 1) == 0.0);
  CHECK(g.t(0) == doctest::Approx(-2.0));

  const ReducedGrid p = p1_grid(33);
  CHECK(p.hx() == doctest::Approx(6.0 / 32));
  CHECK(p.ht() == doctest::Approx(6.0 / 32));
  CHECK(p.x(0) == doctest::Approx(-3.0));
  CHECK(p.x(32) == doctest::Approx(3.0));
}

TEST_CASE("interior classification") {
  const ReducedGrid g = torus_grid(16);
  CHECK(g.interior(0, 1));  // periodic in x
  CHECK_FALSE(g.interior(3, 0));
  CHECK_FALSE(g.interior(3, g.nt() - 1));
  const ReducedGrid p = p1_grid(17);
  CHECK_FALSE(p.interior(0, 5));
  CHECK_FALSE(p.interior(16, 5));
  CHECK(p.interior(1, 1));
}

TEST_CASE("Omega_s endpoints and midpoint") {
  const ReducedGrid g = torus_grid();
  const BackgroundGeometry bg = make_flat_torus_background(g, 1.0, 0.5, 4.0, 0.0);

  const FamilyForm one = build_omega_s(bg, 1.0);
  const FamilyForm zero = build_omega_s(bg, 0.0);
  const FamilyForm half = build_omega_s(bg, 0.5);
  for (int j = 0; j < g.nt(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const int q = g.flat(i, j);
      CHECK((one.coeffs[q] - bg.omega_eps_at({i, j})).norm() == 0.0);
      // s = 0: fiber pullback, t-direction eigenvalue 0
      CHECK(min_eigenvalue(zero.coeffs[q]) == doctest::Approx(0.0));
      // independent evaluation: diag(1, eps kappa e^t) averaged with diag(1, 0)
      const double base = 0.5 * bg.kappa * std::exp(g.t(j));
      CHECK(half.coeffs[q](0, 0) == doctest::Approx(1.0));
      CHECK(half.coeffs[q](1, 1) == doctest::Approx(0.5 * base));
      CHECK(half.coeffs[q](0, 1) == 0.0);
    }
  CHECK(one.min_eigenvalue > 0.0);
  CHECK_THROWS_AS(build_omega_s(bg, 1.5), InvalidInput);
  CHECK_THROWS_AS(build_omega_s(bg, -0.1), InvalidInput);
}

TEST_CASE("property: interpolation identity between two s values") {
  const ReducedGrid g = p1_grid();
  const BackgroundGeometry bg = make_p1_background(g, 0.5, 4.0, 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double s = u(rng), sp = u(rng);
    const FamilyForm a = build_omega_s(bg, s);
    const FamilyForm b = build_omega_s(bg, sp);
    for (int j = 0; j < g.nt(); j += 3)
      for (int i = 0; i < g.nx(); i += 3) {
        const Mat2 lhs = a.coeffs[g.flat(i, j)] - b.coeffs[g.flat(i, j)];
        const Mat2 rhs = (sp - s) * (bg.omega0_at({i, j}) - bg.omega_eps_at({i, j}));
        CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + bg.omega_eps_at({i, j}).norm()));
      }
  }
}

TEST_CASE("regularization floor: min eigenvalue of Omega^eps is 0.1 min lambda") {
  const ReducedGrid g = torus_grid();
  const BackgroundGeometry bg = make_flat_torus_background(g, 2.0, 0.5, 4.0, 0.0);
  double mn = 1e300;
  for (int j = 0; j < g.nt(); ++j)
    for (int i = 0; i < g.nx(); ++i) mn = std::min(mn, min_eigenvalue(bg.omega_eps_at({i, j})));
  CHECK(mn == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_NOTHROW(bg.validate());
}

TEST_CASE("validate enforces B epsilon > 1") {
  const ReducedGrid g = torus_grid();
  CHECK_THROWS_AS(make_flat_torus_background(g, 1.0, 0.5, 2.0, 0.0).validate(), InvalidInput);
  CHECK_NOTHROW(make_flat_torus_background(g, 1.0, 0.5, 2.5, 0.0).validate());
}

TEST_CASE("divisor norm: boundary value, monotonicity, limit, log-derivative") {
  const ReducedGrid g = torus_grid();
  const BackgroundGeometry bg = make_flat_torus_background(g, 1.0, 0.5, 4.0, 0.0);
  // |w| = 1: only the H factor exp(kappa) remains
  CHECK(divisor_norm(bg, 0.0) * std::exp(-bg.kappa) == doctest::Approx(1.0));
  double prev = 0.0;
  for (double t = -40.0; t <= 0.0; t += 0.25) {
    const double v = divisor_norm(bg, t);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(divisor_norm(bg, -60.0) < 1e-25);
  const double h = 1e-5;
  const double fd = (std::log(divisor_norm(bg, -2.0 + h)) - std::log(divisor_norm(bg, -2.0 - h))) / (2 * h);
  CHECK(std::abs(fd - bg.dlog_sigma_norm_sq(-2.0)) <= 1e-8);
}

TEST_CASE("discrete Fubini-Study fiber form is the second difference of log(1 + e^rho)") {
  const double h = 0.1875;
  const Profile p = discrete_fubini_study_profile(h);
  for (double rho : {-3.0, -1.2, 0.0, 0.7, 2.9}) {
    const double d2 = (softplus(rho + h) - 2 * softplus(rho) + softplus(rho - h)) / (h * h);
    CHECK(p(rho)[0] == doctest::Approx(d2).epsilon(1e-12));
    // O(h^2) close to the analytic coefficient
    CHECK(std::abs(p(rho)[0] - fubini_study_profile()(rho)[0]) <= h * h);
  }
}

TEST_CASE("test configuration: cutoff radii") {
  TestConfigModel m;
  const double t_in = 2 * std::log(1.0 / 3.0), t_out = 2 * std::log(2.0 / 3.0);
  CHECK(cutoff_eta(m, t_in - 0.01)[0] == 1.0);
  CHECK(cutoff_eta(m, t_out + 0.01)[0] == 0.0);
  const double mid = cutoff_eta(m, 0.5 * (t_in + t_out))[0];
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  // derivative consistent with a centered difference
  const double t = 0.3 * t_in + 0.7 * t_out, h = 1e-5;
  const double fd = (cutoff_eta(m, t + h)[0] - cutoff_eta(m, t - h)[0]) / (2 * h);
  CHECK(std::abs(fd - cutoff_eta(m, t)[1]) <= 1e-6);
}

TEST_CASE("test configuration: positivity properties on the grid") {
  const ReducedGrid g(FiberKind::truncated_rho, 33, 65, -3.0, 3.0, -12.0);

  SUBCASE("trivial gluing restricts to the fiber form at t = 0") {
    TestConfigModel m;
    m.trivial_gluing = true;
    const BackgroundGeometry bg = build_test_config_form(m, g);
    for (int i = 0; i < g.nx(); ++i)
      CHECK(bg.omega0_at({i, g.nt() - 1})(0, 0) ==
            doctest::Approx(fubini_study_profile()(g.x(i))[0]).epsilon(1e-14));
  }
  SUBCASE("weight 0 is positive on every fiber") {
    TestConfigModel m;
    m.weight = 0;
    m.alpha_h = std::max(m.alpha_h, 1.01 * required_alpha(m, g));
    const BackgroundGeometry bg = build_test_config_form(m, g);
    for (int j = 0; j < g.nt(); ++j)
      for (int i = 0; i < g.nx(); ++i) CHECK(bg.omega0_at({i, j})(0, 0) > 0.0);
  }
  SUBCASE("weight 1 above the required alpha: semipositive, fiber form at t = 0") {
    TestConfigModel m;
    m.weight = 1;
    m.alpha_h = std::max(4.0, 1.01 * required_alpha(m, g));
    const BackgroundGeometry bg = build_test_config_form(m, g);
    for (int j = 0; j < g.nt(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        const double ev = min_eigenvalue(bg.omega0_at({i, j}));
        CHECK(ev >= -1e-13);
      }
    for (int i = 0; i < g.nx(); ++i)
      CHECK(bg.omega0_at({i, g.nt() - 1})(0, 0) ==
            doctest::Approx(fubini_study_profile()(g.x(i))[0]).epsilon(1e-12));
  }
  SUBCASE("too small alpha is rejected with the required minimum") {
    TestConfigModel m;
    m.weight = 2;
    const double need = required_alpha(m, g);
    REQUIRE(need > 0.0);
    m.alpha_h = 0.5 * need;
    CHECK_THROWS_AS(build_test_config_form(m, g), PositivityError);
    m.alpha_h = 1.01 * need;
    CHECK_NOTHROW(build_test_config_form(m, g));
  }
}

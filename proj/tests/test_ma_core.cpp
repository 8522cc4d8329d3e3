#include <doctest.h>

#include "mage/error.hpp"
#include "mage/ma_core.hpp"

#include <cmath>
#include <random>

using namespace mage;

namespace {

ReducedGrid torus(int n = 32) { return ReducedGrid(FiberKind::periodic_x, n, n + 1, 0.0, 1.0, -2.0); }

HMat random_spd(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> nd;
  HMat a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = {nd(rng), nd(rng)};
  return a * a.adjoint() + 0.2 * HMat::Identity(m, m);
}

HMat random_hermitian(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> nd;
  HMat a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = {nd(rng), nd(rng)};
  return 0.5 * (a + a.adjoint());
}

// Explicit sum over an eigenbasis of g': sum_k <v_k, f v_k> / mu_k.
double laplacian_by_eigenbasis(const HMat& gp, const HMat& f) {
  Eigen::SelfAdjointEigenSolver<HMat> es(gp);
  double out = 0.0;
  for (int k = 0; k < gp.rows(); ++k) {
    const Eigen::VectorXcd v = es.eigenvectors().col(k);
    out += (v.adjoint() * f * v)(0, 0).real() / es.eigenvalues()(k);
  }
  return out;
}

}  // namespace

TEST_CASE("reduced Hessian annihilates affine functions of t and x") {
  const ReducedGrid g = torus();
  for (auto stencil : {MixedStencil::centered, MixedStencil::antidiagonal}) {
    const ReducedGrid gs = g.with_mixed_stencil(stencil);
    const Field f = Field::sample(gs, [](double x, double t) { return 3.0 * t - 0.5 + 0.0 * x; });
    const Field z(gs, 0.0);
    for (int j = 1; j + 1 < gs.nt(); j += 5)
      for (int i = 0; i < gs.nx(); i += 5) {
        CHECK(reduced_hessian(f, {i, j}).norm() <= 1e-10);
        CHECK(reduced_hessian(z, {i, j}).norm() == 0.0);
      }
  }
}

TEST_CASE("t-entry equals |w|^2 times a quarter of the flat w-Laplacian") {
  // f(w) = (log |w|^2)^2: the reduced entry is f''(t) = 2 exactly, and the
  // discrete quadratic is reproduced exactly by the second difference.
  const ReducedGrid g = torus();
  const Field f = Field::sample(g, [](double, double t) { return t * t; });
  const GridIndex p{3, g.nt() / 2};
  const double t = g.t(p.j);
  CHECK(reduced_hessian(f, p)(1, 1) == doctest::Approx(2.0).epsilon(1e-10));

  const double r = std::exp(0.5 * t), h = 1e-4;
  auto fw = [](double a, double b) {
    const double l = std::log(a * a + b * b);
    return l * l;
  };
  const double lap = (fw(r + h, 0) + fw(r - h, 0) + fw(r, h) + fw(r, -h) - 4 * fw(r, 0)) / (h * h);
  CHECK(r * r * lap / 4.0 == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("reduced Hessian is linear") {
  const ReducedGrid g = torus();
  const Field a = Field::sample(g, [](double x, double t) { return std::sin(2 * M_PI * x) * std::exp(t); });
  const Field b = Field::sample(g, [](double x, double t) { return std::cos(2 * M_PI * x) * t * t; });
  Field c(g);
  for (size_t q = 0; q < c.values.size(); ++q) c.values[q] = 2.5 * a.values[q] - 0.75 * b.values[q];
  for (int j = 1; j + 1 < g.nt(); j += 3)
    for (int i = 0; i < g.nx(); i += 3) {
      const Mat2 lhs = reduced_hessian(c, {i, j});
      const Mat2 rhs = 2.5 * reduced_hessian(a, {i, j}) - 0.75 * reduced_hessian(b, {i, j});
      CHECK((lhs - rhs).norm() <= 1e-10 * (1 + rhs.norm()));
    }
}

TEST_CASE("zero potential gives the identity endomorphism") {
  const ReducedGrid g = torus();
  const BackgroundGeometry bg = make_flat_torus_background(g, 1.0, 0.5, 4.0, 0.0);
  const Field zero(g, 0.0);
  for (double s : {0.3, 1.0}) {
    const HermitianPair pair = assemble_pair(bg, s, zero, {4, 7});
    CHECK(pair.trace_h() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(pair.det_h() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pair.trace_h_inv() == doctest::Approx(2.0).epsilon(1e-14));
  }
}

TEST_CASE("property: trace, inverse trace and Laplacian identities on random pairs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 2 + trial % 3;
    const HMat g = random_spd(rng, m), gp = random_spd(rng, m), f = random_hermitian(rng, m);
    // Laplacian against an independent eigenbasis evaluation
    CHECK(laplacian_prime(gp, f) == doctest::Approx(laplacian_by_eigenbasis(gp, f)).epsilon(1e-9));
    // Tr h = g^{jk} g'_{jk}, Tr h^{-1} = g'^{jk} g_{jk}
    CHECK(trace_h(g, gp) == doctest::Approx(laplacian_by_eigenbasis(g, gp)).epsilon(1e-9));
    CHECK(trace_h_inverse(g, gp) == doctest::Approx(laplacian_by_eigenbasis(gp, g)).epsilon(1e-9));
    // eigenvalues of h multiply to det g' / det g and are positive
    const Eigen::VectorXd ev = relative_eigenvalues(g, gp);
    const double det_ratio = (gp.determinant() / g.determinant()).real();
    CHECK(ev.prod() == doctest::Approx(det_ratio).epsilon(1e-9));
    CHECK(ev.minCoeff() > 0.0);
    for (int k = 1; k < m; ++k) CHECK(ev(k - 1) <= ev(k));
  }
}

TEST_CASE("make_hermitian_pair rejects a non-positive background") {
  HMat g = HMat::Identity(2, 2);
  g(1, 1) = -1.0;
  CHECK_THROWS_AS(make_hermitian_pair(g, HMat::Identity(2, 2)), PositivityError);
  const HermitianPair ok = make_hermitian_pair(HMat::Identity(2, 2), 2.0 * HMat::Identity(2, 2));
  CHECK(ok.g_prime_positive);
  CHECK(ok.det_h() == doctest::Approx(4.0));
}

TEST_CASE("property: gamma is increasing and concave") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ub(0.0, 10.0), uc(0.5, 5.0), ux(0.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const GammaParams p{ub(rng), ub(rng), uc(rng)};
    // x ranges over (-C, -C + 50]
    const double x = -p.C + 1e-3 + 50.0 * ux(rng);
    const GammaValue v = gamma_fn(x, p);
    CHECK(v.first > 0.0);
    CHECK(v.second < 0.0);
  }
}

TEST_CASE("gamma derivatives agree with finite differences") {
  const GammaParams p{4.0, 1.5, 2.0};
  for (double x : {-1.5, -0.3, 0.0, 0.7, 3.0}) {
    const double h = 1e-4;
    const double d1 = (gamma_fn(x + h, p).value - gamma_fn(x - h, p).value) / (2 * h);
    const double d2 = (gamma_fn(x + h, p).first - gamma_fn(x - h, p).first) / (2 * h);
    CHECK(std::abs(d1 - gamma_fn(x, p).first) <= 1e-6);
    CHECK(std::abs(d2 - gamma_fn(x, p).second) <= 1e-6 * (1 + std::abs(d2)));
  }
  // closed form at x = 0: (B + F1 + 1) * 0 - 1 / C
  CHECK(gamma_fn(0.0, p).value == doctest::Approx(-0.5));
  CHECK_THROWS_AS(gamma_fn(-2.0, p), InvalidInput);
  CHECK_THROWS_AS(gamma_fn(-3.0, p), InvalidInput);
}

TEST_CASE("basic bracket is zero when h is constant") {
  std::mt19937_64 rng(9);
  const HMat g = random_spd(rng, 3), gp = random_spd(rng, 3);
  std::vector<HMat> dh(3, HMat::Zero(3, 3));
  CHECK(std::abs(yau_basic_quantity(gp, g.inverse() * gp, dh)) <= 1e-14);
}

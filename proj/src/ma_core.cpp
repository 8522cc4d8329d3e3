#include "mage/ma_core.hpp"

#include "mage/error.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace mage {

HMat endomorphism(const HMat& g, const HMat& g_prime) {
  return g.lu().solve(g_prime);
}

Eigen::VectorXd relative_eigenvalues(const HMat& g, const HMat& g_prime) {
  Eigen::GeneralizedSelfAdjointEigenSolver<HMat> solver(g_prime, g,
                                                        Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double trace_h(const HMat& g, const HMat& g_prime) {
  return endomorphism(g, g_prime).trace().real();
}

double trace_h_inverse(const HMat& g, const HMat& g_prime) {
  return endomorphism(g_prime, g).trace().real();
}

double laplacian_prime(const HMat& g_prime, const HMat& f_hessian) {
  return g_prime.lu().solve(f_hessian).trace().real();
}

double yau_basic_quantity(const HMat& g_prime, const HMat& h,
                          const std::vector<HMat>& dh) {
  const auto m = static_cast<Eigen::Index>(dh.size());
  const HMat w = g_prime.inverse();
  const HMat h_inv = h.inverse();
  const HMat gp_inv = w;
  const double tr_h = h.trace().real();
  std::complex<double> quad = 0.0, lin = 0.0;
  for (Eigen::Index p = 0; p < m; ++p) {
    for (Eigen::Index q = 0; q < m; ++q) {
      // g'-adjoint of Y_q
      const HMat yq_adj = gp_inv * dh[q].adjoint() * g_prime;
      quad += w(q, p) * (dh[p] * h_inv * yq_adj).trace();
      lin += w(q, p) * dh[p].trace() * std::conj(dh[q].trace());
    }
  }
  return quad.real() / tr_h - lin.real() / (tr_h * tr_h);
}

HermitianPair make_hermitian_pair(const HMat& g, const HMat& g_prime) {
  Eigen::SelfAdjointEigenSolver<HMat> gs(g, Eigen::EigenvaluesOnly);
  if (!(gs.eigenvalues().minCoeff() > 0.0))
    throw PositivityError("background metric g is not positive definite");
  HermitianPair pair;
  pair.g = g;
  pair.g_prime = g_prime;
  pair.h = endomorphism(g, g_prime);
  const Eigen::VectorXd ev = relative_eigenvalues(g, g_prime);
  pair.lambda1 = ev(0);
  pair.lambda2 = ev(ev.size() - 1);
  pair.g_prime_positive = ev.minCoeff() > 0.0;
  return pair;
}

namespace {

using Sampler = std::function<double(int, int)>;

void require_interior(const ReducedGrid& grid, GridIndex p) {
  if (!grid.interior(p.i, p.j)) {
    std::ostringstream os;
    os << "point (" << p.i << ", " << p.j << ") has no centered stencil";
    throw InvalidInput(os.str());
  }
}

void require_deep_interior(const ReducedGrid& grid, GridIndex p) {
  if (!grid.deep_interior(p.i, p.j)) {
    std::ostringstream os;
    os << "point (" << p.i << ", " << p.j
       << ") is too close to the boundary for nested stencils";
    throw InvalidInput(os.str());
  }
}

Mat2 stencil_hessian(const ReducedGrid& grid, const Sampler& f, GridIndex p) {
  const int i = p.i, j = p.j;
  const double hx = grid.hx(), ht = grid.ht(), d1 = grid.fiber_scale();
  const double c = f(i, j);
  Mat2 m;
  m(0, 0) = d1 * d1 * (f(i + 1, j) - 2.0 * c + f(i - 1, j)) / (hx * hx);
  m(1, 1) = (f(i, j + 1) - 2.0 * c + f(i, j - 1)) / (ht * ht);
  if (grid.mixed_stencil() == MixedStencil::centered) {
    m(0, 1) = d1 *
              (f(i + 1, j + 1) - f(i + 1, j - 1) - f(i - 1, j + 1) +
               f(i - 1, j - 1)) /
              (4.0 * hx * ht);
  } else {
    m(0, 1) = -d1 *
              (f(i + 1, j - 1) + f(i - 1, j + 1) - f(i + 1, j) - f(i - 1, j) -
               f(i, j + 1) - f(i, j - 1) + 2.0 * c) /
              (2.0 * hx * ht);
  }
  m(1, 0) = m(0, 1);
  return m;
}

Vec2 stencil_gradient(const ReducedGrid& grid, const Sampler& f, GridIndex p) {
  const int i = p.i, j = p.j;
  return {grid.fiber_scale() * (f(i + 1, j) - f(i - 1, j)) / (2.0 * grid.hx()),
          (f(i, j + 1) - f(i, j - 1)) / (2.0 * grid.ht())};
}

HMat to_complex(const Mat2& m) { return m.cast<std::complex<double>>(); }

}  // namespace

Mat2 reduced_hessian(const Field& phi, GridIndex p) {
  require_interior(phi.grid, p);
  return stencil_hessian(phi.grid, [&](int i, int j) { return phi(i, j); }, p);
}

Vec2 reduced_gradient(const Field& phi, GridIndex p) {
  require_interior(phi.grid, p);
  return stencil_gradient(phi.grid, [&](int i, int j) { return phi(i, j); }, p);
}

HermitianPair assemble_pair(const BackgroundGeometry& bg, double s,
                            const Field& phi, GridIndex p,
                            BackgroundChoice choice) {
  const Mat2 g = choice == BackgroundChoice::family ? bg.omega_s_at(p, s)
                                                    : bg.omega_eps_at(p);
  if (!(min_eigenvalue(g) > 0.0))
    throw PositivityError("background metric g is not positive definite");
  const Mat2 gp = g + reduced_hessian(phi, p);
  return make_hermitian_pair(to_complex(g), to_complex(gp));
}

double laplacian_prime(const HermitianPair& pair, const Mat2& f_hessian) {
  if (!pair.g_prime_positive)
    throw PositivityError("g' is not positive definite");
  return laplacian_prime(pair.g_prime, to_complex(f_hessian));
}

double ProductMetricJet::scalar_curvature() const {
  return curvature(0) / (g(0, 0) * g(0, 0)) + curvature(1) / (g(1, 1) * g(1, 1));
}

ProductMetricJet product_metric_jet(const BackgroundGeometry& bg, double s,
                                    double r1, double t) {
  if (!bg.product_diagonal())
    throw InvalidInput("closed-form curvature needs a product background");
  const double d1 = bg.grid.fiber_scale();
  const auto l = bg.lambda(r1);
  const auto psi = bg.reg_potential(t);
  ProductMetricJet jet;
  jet.g = Mat2::Zero();
  jet.g(0, 0) = l[0];
  jet.g(1, 1) = s * psi[2];
  const double dl1 = l[1] / l[0];
  const double dl2 = l[2] / l[0] - dl1 * dl1;
  const double dp1 = psi[3] / psi[2];
  const double dp2 = psi[4] / psi[2] - dp1 * dp1;
  jet.christoffel = {d1 * dl1, dp1};
  jet.dlog_det = jet.christoffel;
  jet.curvature = {-jet.g(0, 0) * d1 * d1 * dl2, -jet.g(1, 1) * dp2};
  jet.dg[0] = Mat2::Zero();
  jet.dg[0](0, 0) = d1 * l[1];
  jet.dg[1] = Mat2::Zero();
  jet.dg[1](1, 1) = s * psi[3];
  return jet;
}

GammaValue gamma_fn(double x, const GammaParams& prm) {
  if (!(x > -prm.C)) throw InvalidInput("gamma is undefined for x <= -C");
  const double k = prm.B + prm.F1 + 1.0;
  const double y = x + prm.C;
  return {k * x - 1.0 / y, k + 1.0 / (y * y), -2.0 / (y * y * y)};
}

namespace {

struct LocalData {
  const Field& phi;
  const BackgroundGeometry& bg;
  double s;

  Mat2 g(int i, int j) const {
    return bg.omega_s(bg.grid.x(bg.grid.wrap(i)), bg.grid.t(j), s);
  }
  Mat2 hess(int i, int j) const {
    return stencil_hessian(phi.grid, [&](int a, int c) { return phi(a, c); },
                           {i, j});
  }
  Vec2 grad(int i, int j) const {
    return stencil_gradient(phi.grid, [&](int a, int c) { return phi(a, c); },
                            {i, j});
  }
  Mat2 gp(int i, int j) const { return g(i, j) + hess(i, j); }
  double log_f(int i, int j) const {
    return std::log(gp(i, j).determinant()) - std::log(g(i, j).determinant());
  }
};

void require_background(const BackgroundGeometry& bg, double s) {
  if (!bg.product_diagonal())
    throw InvalidInput("identities need a product-diagonal background");
  if (!(s > 0.0 && s <= 1.0)) throw InvalidInput("identities need 0 < s <= 1");
}

}  // namespace

BlockiSides blocki_sides(const Field& phi, const BackgroundGeometry& bg,
                         double s, GridIndex p, const GammaParams& gamma) {
  require_background(bg, s);
  require_deep_interior(phi.grid, p);
  const ReducedGrid& grid = phi.grid;
  const LocalData loc{phi, bg, s};
  const int m = 2;

  const auto jet = product_metric_jet(bg, s, grid.x(p.i), grid.t(p.j));
  const Mat2 g = jet.g;
  const Mat2 g_inv = g.inverse();
  const Mat2 hess = loc.hess(p.i, p.j);
  const Mat2 gp = g + hess;
  if (!(min_eigenvalue(gp) > 0.0)) throw PositivityError("g' is not positive");
  const Mat2 gp_inv = gp.inverse();
  const Vec2 dphi = loc.grad(p.i, p.j);
  const double beta = dphi.dot(g_inv * dphi);
  if (!(beta > 0.0)) throw InvalidInput("beta = |grad phi|^2 vanishes");

  auto alpha_at = [&](int i, int j) {
    const Mat2 gi = loc.g(i, j).inverse();
    const Vec2 d = loc.grad(i, j);
    return std::log(d.dot(gi * d)) - gamma_fn(phi(i, j), gamma).value;
  };

  BlockiSides out;
  out.beta = beta;
  out.alpha = alpha_at(p.i, p.j);
  out.lhs = (gp_inv * stencil_hessian(grid, alpha_at, p)).trace();

  // holomorphic covariant Hessian: d_j d_k phi - Gamma^k_{jk} d_k phi delta_jk
  Mat2 holo = hess;
  holo(0, 0) -= jet.christoffel(0) * dphi(0);
  holo(1, 1) -= jet.christoffel(1) * dphi(1);

  out.mixed_norm_holo = (gp_inv * holo * g_inv * holo).trace();
  out.mixed_norm_cplx = (gp_inv * hess * g_inv * hess).trace();

  const Vec2 dlog_f = stencil_gradient(
      grid, [&](int i, int j) { return loc.log_f(i, j); }, p);
  const double cross = 2.0 * dlog_f.dot(g_inv * dphi);
  double curv = 0.0;
  for (int k = 0; k < m; ++k)
    curv += gp_inv(k, k) * dphi(k) * dphi(k) * jet.curvature(k) /
            (g(k, k) * g(k, k));

  const Vec2 dbeta = holo * (g_inv * dphi) + hess * (g_inv * dphi);
  const double dbeta_sq = dbeta.dot(gp_inv * dbeta);
  const double grad_prime_sq = dphi.dot(gp_inv * dphi);
  const double lap_prime_phi = (gp_inv * hess).trace();
  const double tr_h_inv = (gp_inv * g).trace();
  const auto gm = gamma_fn(phi(p.i, p.j), gamma);

  out.rhs = (out.mixed_norm_holo + out.mixed_norm_cplx + cross + curv) / beta -
            dbeta_sq / (beta * beta) - gm.second * grad_prime_sq -
            gm.first * lap_prime_phi;

  out.critical_lower_bound =
      out.mixed_norm_cplx / beta +
      (gm.first - gamma.B - gamma.F1 / std::sqrt(beta)) * tr_h_inv +
      (-gm.second + 2.0 * gm.first / beta) * grad_prime_sq -
      (m + 2) * gm.first - 2.0 / beta;
  return out;
}

YauAubinSides yau_aubin_sides(const Field& phi, const BackgroundGeometry& bg,
                              double s, GridIndex p, double A) {
  require_background(bg, s);
  require_deep_interior(phi.grid, p);
  const ReducedGrid& grid = phi.grid;
  const LocalData loc{phi, bg, s};
  const int m = 2;

  const auto jet = product_metric_jet(bg, s, grid.x(p.i), grid.t(p.j));
  const Mat2 g = jet.g;
  const Mat2 g_inv = g.inverse();
  const Mat2 hess = loc.hess(p.i, p.j);
  const Mat2 gp = g + hess;
  if (!(min_eigenvalue(gp) > 0.0)) throw PositivityError("g' is not positive");
  const Mat2 gp_inv = gp.inverse();

  auto h_at = [&](int i, int j) -> Mat2 {
    return loc.g(i, j).inverse() * loc.gp(i, j);
  };
  const Mat2 h = g_inv * gp;
  const double tr_h = h.trace();
  if (!(tr_h > 0.0)) throw InvalidInput("Tr h must be positive");
  const Mat2 h_inv = h.inverse();

  YauAubinSides out;
  out.trace_h = tr_h;
  out.trace_h_inv = h_inv.trace();
  out.lhs = (gp_inv * stencil_hessian(
                          grid,
                          [&](int i, int j) { return std::log(h_at(i, j).trace()); },
                          p))
                .trace();

  const double d1 = grid.fiber_scale();
  const double steps[2] = {grid.hx(), grid.ht()};
  const double scales[2] = {d1, 1.0};
  const int di[2] = {1, 0}, dj[2] = {0, 1};
  Mat2 dh[2], dgp[2], cov_dh[2];
  for (int k = 0; k < 2; ++k) {
    const double f = scales[k] / (2.0 * steps[k]);
    dh[k] = f * (h_at(p.i + di[k], p.j + dj[k]) - h_at(p.i - di[k], p.j - dj[k]));
    dgp[k] = f * (loc.gp(p.i + di[k], p.j + dj[k]) -
                  loc.gp(p.i - di[k], p.j - dj[k]));
    const Mat2 christoffel = gp_inv * dgp[k];
    cov_dh[k] = dh[k] + christoffel * h - h * christoffel;
  }

  double quad = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c)
      quad += gp_inv(a, c) * (cov_dh[a] * h_inv * dh[c]).trace();
  const Vec2 dtr{dh[0].trace(), dh[1].trace()};
  out.basic_ineq = quad / tr_h - dtr.dot(gp_inv * dtr) / (tr_h * tr_h);

  const double lap_log_f =
      (g_inv * stencil_hessian(
                   grid, [&](int i, int j) { return loc.log_f(i, j); }, p))
          .trace();
  double curv = 0.0;
  for (int k = 0; k < m; ++k)
    curv += gp_inv(k, k) * h(k, k) * jet.curvature(k) / g(k, k);
  out.rhs = (-jet.scalar_curvature() + lap_log_f + curv) / tr_h + out.basic_ineq;

  out.ya_lhs = out.lhs - A * (gp_inv * hess).trace();
  out.ya_bound = 0.5 * A * out.trace_h_inv - m * A;
  return out;
}

}  // namespace mage

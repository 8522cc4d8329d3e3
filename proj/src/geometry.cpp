#include "mage/geometry.hpp"

#include "mage/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mage {

std::string to_string(FiberKind kind) {
  return kind == FiberKind::periodic_x ? "periodic_x" : "truncated_rho";
}

std::string to_string(MixedStencil kind) {
  return kind == MixedStencil::centered ? "centered" : "antidiagonal";
}

MixedStencil mixed_stencil_from_string(const std::string& name) {
  if (name == "centered") return MixedStencil::centered;
  if (name == "antidiagonal") return MixedStencil::antidiagonal;
  throw InvalidInput("unknown mixed stencil '" + name + "'");
}

FiberKind fiber_kind_from_string(const std::string& name) {
  if (name == "periodic_x" || name == "torus") return FiberKind::periodic_x;
  if (name == "truncated_rho" || name == "p1") return FiberKind::truncated_rho;
  throw InvalidInput("unknown fiber kind '" + name + "'");
}

ReducedGrid::ReducedGrid(FiberKind fiber, int nx, int nt, double x_lo,
                         double x_hi, double t_min)
    : fiber_(fiber), nx_(nx), nt_(nt), x_lo_(x_lo), x_hi_(x_hi), t_min_(t_min) {
  if (nx < 8 || nt < 8) throw InvalidInput("grid needs nx, nt >= 8");
  if (!(t_min < 0.0)) throw InvalidInput("t_min must be negative");
  if (!(x_hi > x_lo)) throw InvalidInput("empty fiber range");
  hx_ = periodic() ? (x_hi - x_lo) / nx : (x_hi - x_lo) / (nx - 1);
  ht_ = -t_min / (nt - 1);
}

int ReducedGrid::wrap(int i) const {
  if (!periodic()) return i;
  i %= nx_;
  return i < 0 ? i + nx_ : i;
}

bool ReducedGrid::interior(int i, int j) const {
  if (j < 1 || j > nt_ - 2) return false;
  return periodic() || (i >= 1 && i <= nx_ - 2);
}

bool ReducedGrid::deep_interior(int i, int j) const {
  if (j < 2 || j > nt_ - 3) return false;
  return periodic() || (i >= 2 && i <= nx_ - 3);
}

Profile constant_profile(double c) {
  return [c](double) { return std::array<double, 5>{c, 0.0, 0.0, 0.0, 0.0}; };
}

Profile exponential_profile(double a) {
  return [a](double t) {
    const double v = a * std::exp(t);
    return std::array<double, 5>{v, v, v, v, v};
  };
}

Profile quadratic_profile(double a) {
  return [a](double t) {
    return std::array<double, 5>{0.5 * a * t * t, a * t, a, 0.0, 0.0};
  };
}

namespace {

double logistic(double r) {
  return r >= 0 ? 1.0 / (1.0 + std::exp(-r)) : std::exp(r) / (1.0 + std::exp(r));
}

}  // namespace

Profile fubini_study_profile() {
  // lambda = sig (1 - sig) with sig the logistic function; sig' = lambda.
  return [](double r) {
    const double sg = logistic(r);
    const double l = sg * (1.0 - sg);
    const double u = 1.0 - 2.0 * sg;
    const double d1 = l * u;
    const double d2 = d1 * u - 2.0 * l * l;
    // d3, d4 by differentiating d2 = l u^2 - 2 l^2 with u' = -2 l.
    const double d3 = d2 * u + d1 * (-2.0 * l) - 4.0 * l * d1;
    const double d4 = d3 * u + d2 * (-2.0 * l) - 2.0 * d1 * d1 - 2.0 * l * d2 -
                      4.0 * d1 * d1 - 4.0 * l * d2;
    return std::array<double, 5>{l, d1, d2, d3, d4};
  };
}

Profile discrete_fubini_study_profile(double h) {
  if (!(h > 0.0)) throw InvalidInput("spacing must be positive");
  const Profile fs = fubini_study_profile();
  // k-th derivative of L = log(1 + e^rho), k = 0..6.
  auto jet = [fs](double r) {
    const auto d = fs(r);
    const double l0 = r > 0.0 ? r + std::log1p(std::exp(-r)) : std::log1p(std::exp(r));
    return std::array<double, 7>{l0, logistic(r), d[0], d[1], d[2], d[3], d[4]};
  };
  return [jet, h](double r) {
    const auto a = jet(r + h), c = jet(r), b = jet(r - h);
    std::array<double, 5> out{};
    for (int k = 0; k < 5; ++k) out[k] = (a[k] - 2.0 * c[k] + b[k]) / (h * h);
    return out;
  };
}

Mat2 BackgroundGeometry::omega0(double r1, double t) const {
  Mat2 m = Mat2::Zero();
  m(0, 0) = lambda(r1)[0];
  if (omega0_extra) m += omega0_extra(r1, t);
  return m;
}

Mat2 BackgroundGeometry::omega_eps(double r1, double t) const {
  return omega_s(r1, t, 1.0);
}

Mat2 BackgroundGeometry::omega_s(double r1, double t, double s) const {
  Mat2 m = omega0(r1, t);
  m(1, 1) += s * reg_potential(t)[2];
  return m;
}

double BackgroundGeometry::sigma_norm_sq(double t) const {
  return std::exp(t + reg_potential(t)[0] / epsilon);
}

double BackgroundGeometry::dlog_sigma_norm_sq(double t) const {
  return 1.0 + reg_potential(t)[1] / epsilon;
}

double min_eigenvalue(const Mat2& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double diff = m(0, 0) - m(1, 1);
  const double off = 0.5 * (m(0, 1) + m(1, 0));
  return 0.5 * (tr - std::sqrt(diff * diff + 4.0 * off * off));
}

void BackgroundGeometry::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw InvalidInput("epsilon must lie in (0, 1]");
  if (B < 0.0 || b < 0.0) throw InvalidInput("curvature bounds must be >= 0");
  if (!(B * epsilon > 1.0)) throw InvalidInput("need B * epsilon > 1");
  for (int j = 0; j < grid.nt(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      if (!(lambda(grid.x(i))[0] > 0.0))
        throw PositivityError("lambda is not positive on the grid");
      const double ev = min_eigenvalue(omega_eps_at({i, j}));
      if (!(ev > 0.0)) {
        std::ostringstream os;
        os << "Omega^eps not positive at (" << i << ", " << j
           << "), min eigenvalue " << ev;
        throw PositivityError(os.str());
      }
    }
  }
}

BackgroundGeometry make_product_background(const ReducedGrid& grid,
                                           Profile lambda, double epsilon,
                                           double B, double b,
                                           double floor_fraction) {
  double min_lambda = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.nx(); ++i)
    min_lambda = std::min(min_lambda, lambda(grid.x(i))[0]);
  // Omega^eps = diag(lambda, eps kappa e^t); its smallest base entry is at t_min.
  const double kappa =
      floor_fraction * min_lambda * std::exp(-grid.t_min()) / epsilon;
  BackgroundGeometry bg{grid,  std::move(lambda),
                        {},    epsilon,
                        exponential_profile(epsilon * kappa),
                        kappa, B,
                        b};
  bg.validate();
  return bg;
}

BackgroundGeometry make_flat_torus_background(const ReducedGrid& grid,
                                              double lambda, double epsilon,
                                              double B, double b) {
  if (!grid.periodic()) throw InvalidInput("flat torus needs a periodic grid");
  return make_product_background(grid, constant_profile(lambda), epsilon, B, b);
}

BackgroundGeometry make_p1_background(const ReducedGrid& grid, double epsilon,
                                      double B, double b) {
  if (grid.periodic()) throw InvalidInput("P^1 model needs a truncated grid");
  return make_product_background(grid, discrete_fubini_study_profile(grid.hx()),
                                 epsilon, B, b);
}

FamilyForm build_omega_s(const BackgroundGeometry& bg, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput("s must lie in [0, 1]");
  FamilyForm form{s, bg.grid, {}, std::numeric_limits<double>::infinity()};
  form.coeffs.resize(bg.grid.size());
  for (int j = 0; j < bg.grid.nt(); ++j) {
    for (int i = 0; i < bg.grid.nx(); ++i) {
      const Mat2 m0 = bg.omega0_at({i, j});
      const Mat2 me = bg.omega_eps_at({i, j});
      const Mat2 m = (1.0 - s) * m0 + s * me;
      form.coeffs[bg.grid.flat(i, j)] = m;
      form.min_eigenvalue = std::min(form.min_eigenvalue, min_eigenvalue(m));
    }
  }
  if (s > 0.0 && !(form.min_eigenvalue > 0.0)) {
    std::ostringstream os;
    os << "Omega_s not positive for s = " << s << " (min eigenvalue "
       << form.min_eigenvalue << ")";
    throw PositivityError(os.str());
  }
  return form;
}

double divisor_norm(const BackgroundGeometry& bg, double t) {
  return bg.sigma_norm_sq(t);
}

namespace {

// Smooth step S(u) = f(u) / (f(u) + f(1 - u)), f(u) = exp(-1/u) for u > 0.
std::array<double, 3> smooth_step(double u) {
  if (u <= 0.0) return {0.0, 0.0, 0.0};
  if (u >= 1.0) return {1.0, 0.0, 0.0};
  auto f = [](double v) {
    const double e = std::exp(-1.0 / v);
    return std::array<double, 3>{e, e / (v * v),
                                 e * (1.0 / (v * v * v * v) - 2.0 / (v * v * v))};
  };
  const auto a = f(u);
  const auto c = f(1.0 - u);
  const double A = a[0], A1 = a[1], A2 = a[2];
  const double C = c[0], C1 = -c[1], C2 = c[2];
  const double D = A + C, D1 = A1 + C1, D2 = A2 + C2;
  const double S = A / D;
  const double N1 = A1 * D - A * D1;
  const double S1 = N1 / (D * D);
  const double S2 = (A2 * D - A * D2) / (D * D) - 2.0 * D1 * N1 / (D * D * D);
  return {S, S1, S2};
}

struct ProductConfigPotential {
  int a;
  bool trivial;
  // Psi and derivatives: value, rho, t, rho rho, rho t, t t
  std::array<double, 6> eval(double rho, double t) const {
    if (trivial) return {0, 0, 0, 0, 0, 0};
    const double r = rho + a * t;
    const double lr = std::log1p(std::exp(-std::abs(r))) + std::max(r, 0.0);
    const double l0 = std::log1p(std::exp(-std::abs(rho))) + std::max(rho, 0.0);
    const double sr = logistic(r), s0 = logistic(rho);
    const double lam_r = sr * (1 - sr), lam_0 = s0 * (1 - s0);
    const double et = std::exp(t);
    return {lr - l0 + et, sr - s0, a * sr + et, lam_r - lam_0, a * lam_r,
            a * a * lam_r + et};
  }
};

Mat2 test_config_matrix(const TestConfigModel& model, double rho, double t,
                        double alpha) {
  const ProductConfigPotential psi{model.weight, model.trivial_gluing};
  const auto p = psi.eval(rho, t);
  const auto eta = cutoff_eta(model, t);
  const double sg = logistic(rho);
  Mat2 m;
  m(0, 0) = sg * (1 - sg) + eta[0] * p[3];
  m(0, 1) = eta[1] * p[1] + eta[0] * p[4];
  m(1, 0) = m(0, 1);
  m(1, 1) = eta[2] * p[0] + 2.0 * eta[1] * p[2] + eta[0] * p[5] +
            alpha * std::exp(t);
  return m;
}

}  // namespace

std::array<double, 3> cutoff_eta(const TestConfigModel& model, double t) {
  const double r = std::exp(0.5 * t);
  const double width = model.eta_outer - model.eta_inner;
  const double u = (model.eta_outer - r) / width;
  const double ut = -0.5 * r / width;
  const double utt = -0.25 * r / width;
  const auto s = smooth_step(u);
  return {s[0], s[1] * ut, s[2] * ut * ut + s[1] * utt};
}

double required_alpha(const TestConfigModel& model, const ReducedGrid& grid) {
  double need = 0.0;
  for (int j = 0; j < grid.nt(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const Mat2 m = test_config_matrix(model, grid.x(i), grid.t(j), 0.0);
      if (m(0, 0) <= 0.0) return std::numeric_limits<double>::infinity();
      // det(m + alpha e^t E22) = det m + alpha e^t m11 >= 0
      need = std::max(need, -m.determinant() / (std::exp(grid.t(j)) * m(0, 0)));
    }
  }
  return need;
}

BackgroundGeometry build_test_config_form(const TestConfigModel& model,
                                          const ReducedGrid& grid) {
  if (grid.periodic())
    throw InvalidInput("test configurations live on the P^1 model grid");
  if (model.weight < 0) throw InvalidInput("weight must be nonnegative");
  if (model.k < 1) throw InvalidInput("k must be a positive integer");
  if (!(model.alpha_h > 0.0)) throw InvalidInput("alpha_H must be positive");
  if (!(model.eta_inner > 0.0 && model.eta_inner < model.eta_outer &&
        model.eta_outer < 1.0))
    throw InvalidInput("cutoff radii must satisfy 0 < inner < outer < 1");

  const double tol = 1e-13;
  for (int j = 0; j < grid.nt(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const Mat2 m =
          test_config_matrix(model, grid.x(i), grid.t(j), model.alpha_h);
      if (min_eigenvalue(m) < -tol) {
        std::ostringstream os;
        os << "Omega_0 has a negative eigenvalue at (" << i << ", " << j
           << "); alpha_H = " << model.alpha_h << " is below the required "
           << required_alpha(model, grid);
        throw PositivityError(os.str());
      }
    }
  }

  const Profile fs = fubini_study_profile();
  const TestConfigModel captured = model;
  auto extra = [captured, fs](double rho, double t) {
    Mat2 m = test_config_matrix(captured, rho, t, captured.alpha_h);
    m(0, 0) -= fs(rho)[0];
    return m;
  };

  const double epsilon = 1.0 / model.k;
  // Smallest kappa with Omega^eps >= 0.1 min lambda, found by doubling then
  // bisection on the grid scan; Omega_0 + c e^t E22 is monotone in c.
  // The fiber coefficient of Omega_0 drops below the FS one where the weighted
  // action moves mass, so the floor is taken from Omega_0 itself.
  double min_lambda = std::numeric_limits<double>::infinity();
  for (int j = 0; j < grid.nt(); ++j)
    for (int i = 0; i < grid.nx(); ++i)
      min_lambda = std::min(
          min_lambda, test_config_matrix(model, grid.x(i), grid.t(j), model.alpha_h)(0, 0));
  const double target = 0.1 * min_lambda;
  auto min_eig_with = [&](double c) {
    double ev = std::numeric_limits<double>::infinity();
    for (int j = 0; j < grid.nt(); ++j)
      for (int i = 0; i < grid.nx(); ++i) {
        Mat2 m = test_config_matrix(model, grid.x(i), grid.t(j), model.alpha_h);
        m(1, 1) += c * std::exp(grid.t(j));
        ev = std::min(ev, min_eigenvalue(m));
      }
    return ev;
  };
  double hi = 1.0;
  while (min_eig_with(hi) < target) {
    hi *= 2.0;
    if (hi > 1e12) throw PositivityError("cannot regularize the test configuration on this grid");
  }
  double lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (min_eig_with(mid) < target ? lo : hi) = mid;
  }
  const double kappa = hi / epsilon;

  BackgroundGeometry bg{grid,    fs,     extra,   epsilon,
                        exponential_profile(epsilon * kappa),
                        kappa,   model.B, model.b};
  bg.validate();
  return bg;
}

}  // namespace mage

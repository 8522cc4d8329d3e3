#include "mage/oracles.hpp"

#include "mage/error.hpp"
#include "mage/ma_core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mage {

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

PotentialField as_potential(Field phi) {
  PotentialField out(phi.grid);
  out.s = 0.0;
  out.boundary = boundary_from(phi);
  out.phi = std::move(phi);
  out.converged = true;
  out.final_residual = 0.0;
  return out;
}

void require_p1(const ReducedGrid& grid) {
  if (grid.periodic()) throw InvalidInput("oracle needs the P^1 (truncated rho) grid");
}

}  // namespace

PotentialField pluriharmonic_ray(double c, const ReducedGrid& grid) {
  return as_potential(Field::sample(grid, [c](double, double t) { return c * t; }));
}

double product_ray_value(int a, double rho, double t) {
  return softplus(rho + a * t) - softplus(rho);
}

PotentialField product_ray(int a, const ReducedGrid& grid) {
  require_p1(grid);
  if (a < 0) throw InvalidInput("product ray weight must be >= 0");
  return as_potential(Field::sample(
      grid, [a](double rho, double t) { return product_ray_value(a, rho, t); }));
}

double toric_segment_value(const ToricEndpoint& u0, const ToricEndpoint& u1,
                           double t_min, double rho, double t) {
  const double theta = t / t_min;  // weight of u0
  const double q = (1.0 - theta) * u1.quad + theta * u0.quad;
  const double l = (1.0 - theta) * u1.lin + theta * u0.lin;
  // rho = logit(y) + 2 q (y - 1/2) + l, solved in z = logit(y); monotone
  // with slope in [min(1, 1 + q/2), max(1, 1 + q/2)].
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  auto g = [&](double z) { return z + 2.0 * q * (sig(z) - 0.5) + l - rho; };
  const double reach = std::abs(q) + std::abs(l) + std::abs(rho) + 1.0;
  double lo = -reach - 2.0 * std::abs(q), hi = reach + 2.0 * std::abs(q);
  double z = rho - l;
  for (int it = 0; it < 200; ++it) {
    const double gz = g(z);
    if (gz > 0.0) hi = z; else lo = z;
    const double y = sig(z);
    const double dz = gz / (1.0 + 2.0 * q * y * (1.0 - y));
    double zn = z - dz;
    if (!(zn > lo && zn < hi)) zn = 0.5 * (lo + hi);
    if (std::abs(zn - z) <= 1e-15 * (1.0 + std::abs(z))) { z = zn; break; }
    z = zn;
  }
  const double y = sig(z);
  const double log_y = -softplus(-z), log_1my = -softplus(z);
  const double u = y * log_y + (1.0 - y) * log_1my + q * (y - 0.5) * (y - 0.5) + l * y;
  return rho * y - u - softplus(rho);
}

PotentialField toric_segment(const ToricEndpoint& u0, const ToricEndpoint& u1,
                             const ReducedGrid& grid) {
  require_p1(grid);
  if (!(u0.quad > -2.0) || !(u1.quad > -2.0))
    throw InvalidInput("toric endpoint not strictly convex (need quad > -2)");
  const double tm = grid.t_min();
  return as_potential(Field::sample(grid, [&](double rho, double t) {
    return toric_segment_value(u0, u1, tm, rho, t);
  }));
}

namespace {

struct ManufacturedJet {
  double f, fx, ft, fxx, fxt, ftt;
};

ManufacturedJet manufactured_jet(const ManufacturedSpec& m, double t_min,
                                 double x, double t) {
  const double w = 2.0 * std::numbers::pi * m.freq;
  const double arg = w * x + m.phase;
  const double S = m.amp * std::sin(arg) + m.radial;
  const double S1 = m.amp * w * std::cos(arg);
  const double S2 = -m.amp * w * w * std::sin(arg);
  const double et = std::exp(t);
  const double q = (et - 1.0) * (t - t_min);
  const double q1 = et * (t - t_min) + (et - 1.0);
  const double q2 = et * (t - t_min) + 2.0 * et;
  return {S * q, S1 * q, S * q1, S2 * q, S1 * q1, S * q2};
}

}  // namespace

double manufactured_value(const ManufacturedSpec& m, double t_min, double x,
                          double t) {
  return manufactured_jet(m, t_min, x, t).f;
}

Mat2 manufactured_hessian(const ManufacturedSpec& m, const ReducedGrid& grid,
                          double x, double t) {
  const auto j = manufactured_jet(m, grid.t_min(), x, t);
  const double d1 = grid.fiber_scale();
  Mat2 h;
  h << d1 * d1 * j.fxx, d1 * j.fxt, d1 * j.fxt, j.ftt;
  return h;
}

Vec2 manufactured_gradient(const ManufacturedSpec& m, const ReducedGrid& grid,
                           double x, double t) {
  const auto j = manufactured_jet(m, grid.t_min(), x, t);
  return {grid.fiber_scale() * j.fx, j.ft};
}

Manufactured manufactured(const ManufacturedSpec& m,
                          const BackgroundGeometry& bg, double s) {
  const ReducedGrid& grid = bg.grid;
  const double tm = grid.t_min();
  Manufactured out{
      as_potential(Field::sample(grid, [&](double x, double t) {
        return manufactured_value(m, tm, x, t);
      })),
      Field(grid, 1.0)};
  out.phi.s = s;
  for (int j = 0; j < grid.nt(); ++j)
    for (int i = 0; i < grid.nx(); ++i) {
      const double x = grid.x(i), t = grid.t(j);
      const Mat2 gp = bg.omega_s(x, t, s) + manufactured_hessian(m, grid, x, t);
      if (!(min_eigenvalue(gp) > 0.0)) {
        if (!grid.interior(i, j)) continue;
        std::ostringstream os;
        os << "manufactured solution: g' not positive at (" << x << ", " << t << ")";
        throw PositivityError(os.str());
      }
      out.rhs(i, j) = gp.determinant() / bg.omega_eps(x, t).determinant();
    }
  return out;
}

double max_hma_determinant(const Field& phi, const BackgroundGeometry& bg) {
  double out = 0.0;
  for (int j = 0; j < phi.grid.nt(); ++j)
    for (int i = 0; i < phi.grid.nx(); ++i)
      if (phi.grid.interior(i, j))
        out = std::max(out, std::abs((bg.omega0_at({i, j}) +
                                      reduced_hessian(phi, {i, j}))
                                         .determinant()));
  return out;
}

ReducedGrid refined(const ReducedGrid& g) {
  const int nx = g.periodic() ? 2 * g.nx() : 2 * g.nx() - 1;
  return ReducedGrid(g.fiber(), nx, 2 * g.nt() - 1, g.x_lo(), g.x_hi(),
                     g.t_min())
      .with_mixed_stencil(g.mixed_stencil());
}

RefinementCheck refinement_check(
    const ReducedGrid& coarse,
    const std::function<double(const ReducedGrid&)>& error_on) {
  RefinementCheck out;
  out.coarse = error_on(coarse);
  out.fine = error_on(refined(coarse));
  out.ratio = out.coarse / out.fine;
  out.ok = out.ratio >= 3.2 && out.ratio <= 4.8;
  return out;
}

namespace {

constexpr double kExactHma = 1e-11;

RefinementCheck verify_hma(const ReducedGrid& coarse,
                           const std::function<Field(const ReducedGrid&)>& make,
                           const char* name) {
  require_p1(coarse);
  auto err = [&](const ReducedGrid& g) {
    const BackgroundGeometry bg = make_p1_background(g, 0.5, 4.0, 0.0);
    return max_hma_determinant(make(g), bg);
  };
  RefinementCheck out = refinement_check(coarse, err);
  // A stencil for which the oracle is an exact discrete solution leaves
  // only rounding on both grids; that passes as well.
  if (out.coarse <= kExactHma && out.fine <= kExactHma) out.ok = true;
  if (!out.ok) {
    std::ostringstream os;
    os << "oracle rejected: " << name << " HMA residual ratio " << out.ratio
       << " (" << out.coarse << " -> " << out.fine << ")";
    throw InvalidInput(os.str());
  }
  return out;
}

}  // namespace

RefinementCheck verify_product_ray(int a, const ReducedGrid& coarse) {
  return verify_hma(
      coarse, [a](const ReducedGrid& g) { return product_ray(a, g).phi; },
      "product_ray");
}

RefinementCheck verify_toric_segment(const ToricEndpoint& u0,
                                     const ToricEndpoint& u1,
                                     const ReducedGrid& coarse) {
  return verify_hma(
      coarse,
      [&](const ReducedGrid& g) { return toric_segment(u0, u1, g).phi; },
      "toric_segment");
}

}  // namespace mage

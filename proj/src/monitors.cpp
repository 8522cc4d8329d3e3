#include "mage/monitors.hpp"

#include "mage/error.hpp"
#include "mage/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace mage {

namespace {

using Weights = std::vector<std::pair<int, double>>;  // (offset, weight)

Weights first_weights(int k, int n, bool periodic) {
  if (periodic || (k > 0 && k < n - 1)) return {{-1, -0.5}, {1, 0.5}};
  if (k == 0) return {{0, -1.5}, {1, 2.0}, {2, -0.5}};
  return {{0, 1.5}, {-1, -2.0}, {-2, 0.5}};
}

Weights second_weights(int k, int n, bool periodic) {
  if (periodic || (k > 0 && k < n - 1)) return {{-1, 1.0}, {0, -2.0}, {1, 1.0}};
  if (k == 0) return {{0, 2.0}, {1, -5.0}, {2, 4.0}, {3, -1.0}};
  return {{0, 2.0}, {-1, -5.0}, {-2, 4.0}, {-3, -1.0}};
}

Field eps_potential(const Field& phi_s, const BackgroundGeometry& bg, double s) {
  PotentialField pf(phi_s.grid);
  pf.phi = phi_s;
  return shift_to_epsilon_background(pf, bg, s).phi;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

GrowthFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n < 4) throw InvalidInput("growth fit needs at least 4 t-slices");
  double mx = 0.0, my = 0.0;
  for (int k = 0; k < n; ++k) { mx += x[k]; my += y[k]; }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  GrowthFit fit;
  fit.slices = n;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (int k = 0; k < n; ++k) {
    const double r = y[k] - fit.intercept - fit.slope * x[k];
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

std::vector<int> fit_rows(const ReducedGrid& g, const MonitorOptions& opts) {
  std::vector<int> rows;
  for (int j = 2; j <= g.nt() - 2; ++j)
    if (g.t(j) <= opts.fit_fraction * g.t_min()) rows.push_back(j);
  return rows;
}

bool row_interior(const ReducedGrid& g, int i) {
  return g.periodic() || (i >= 1 && i <= g.nx() - 2);
}

// Omega' at any node: the solver's stencil inside, one-sided at the edge.
Mat2 g_prime_at(const Field& phi_s, const BackgroundGeometry& bg, double s,
                GridIndex p) {
  const Mat2 h = phi_s.grid.interior(p.i, p.j) ? reduced_hessian(phi_s, p)
                                               : node_hessian(phi_s, p);
  return bg.omega_s_at(p, s) + h;
}

}  // namespace

Vec2 node_gradient(const Field& f, GridIndex p) {
  const ReducedGrid& g = f.grid;
  double dx = 0.0, dt = 0.0;
  for (auto [o, w] : first_weights(p.i, g.nx(), g.periodic()))
    dx += w * f(p.i + o, p.j);
  for (auto [o, w] : first_weights(p.j, g.nt(), false)) dt += w * f(p.i, p.j + o);
  return {g.fiber_scale() * dx / g.hx(), dt / g.ht()};
}

Mat2 node_hessian(const Field& f, GridIndex p) {
  const ReducedGrid& g = f.grid;
  const double d1 = g.fiber_scale();
  const auto wx1 = first_weights(p.i, g.nx(), g.periodic());
  const auto wt1 = first_weights(p.j, g.nt(), false);
  double xx = 0.0, tt = 0.0, xt = 0.0;
  for (auto [o, w] : second_weights(p.i, g.nx(), g.periodic()))
    xx += w * f(p.i + o, p.j);
  for (auto [o, w] : second_weights(p.j, g.nt(), false)) tt += w * f(p.i, p.j + o);
  for (auto [ox, wx] : wx1)
    for (auto [ot, wt] : wt1) xt += wx * wt * f(p.i + ox, p.j + ot);
  Mat2 h;
  h(0, 0) = d1 * d1 * xx / (g.hx() * g.hx());
  h(1, 1) = tt / (g.ht() * g.ht());
  h(0, 1) = h(1, 0) = d1 * xt / (g.hx() * g.ht());
  return h;
}

GrowthFit gradient_growth_fit(const Field& phi_s, const BackgroundGeometry& bg,
                              double s, const MonitorOptions& opts) {
  const Field pe = eps_potential(phi_s, bg, s);
  const ReducedGrid& g = phi_s.grid;
  std::vector<double> xs, ys;
  for (int j : fit_rows(g, opts)) {
    double sup = 0.0;
    for (int i = 0; i < g.nx(); ++i) {
      if (!row_interior(g, i)) continue;
      const Vec2 v = reduced_gradient(pe, {i, j});
      sup = std::max(sup, std::sqrt(v.dot(bg.omega_eps_at({i, j}).inverse() * v)));
    }
    if (!(sup > 0.0)) continue;
    xs.push_back(-std::log(bg.sigma_norm_sq(g.t(j))));
    ys.push_back(std::log(sup));
  }
  if (xs.empty() && fit_rows(g, opts).size() >= 4) {
    // Phi^eps constant in x on every fitted slice: no growth at all
    GrowthFit flat;
    flat.intercept = -std::numeric_limits<double>::infinity();
    return flat;
  }
  return least_squares(xs, ys);
}

GrowthFit laplacian_growth_fit(const Field& phi_s, const BackgroundGeometry& bg,
                               double s, const MonitorOptions& opts) {
  const ReducedGrid& g = phi_s.grid;
  std::vector<double> xs, ys;
  for (int j : fit_rows(g, opts)) {
    double sup = 0.0;
    for (int i = 0; i < g.nx(); ++i) {
      if (!row_interior(g, i)) continue;
      const Mat2 gp = bg.omega_s_at({i, j}, s) + reduced_hessian(phi_s, {i, j});
      sup = std::max(sup, (bg.omega_eps_at({i, j}).inverse() * gp).trace());
    }
    if (!(sup > 0.0)) continue;
    xs.push_back(-std::log(bg.sigma_norm_sq(g.t(j))));
    ys.push_back(std::log(sup));
  }
  return least_squares(xs, ys);
}

RhsBounds rhs_bounds(const BackgroundGeometry& bg, double s, const Field& F) {
  RhsBounds out;
  const auto [lo, hi] = std::minmax_element(F.values.begin(), F.values.end());
  out.sup_F = *hi;
  if (!(*lo > 0.0)) throw InvalidInput("F must be positive");
  out.constant = (*hi - *lo) <= 1e-12 * *hi;
  if (out.constant) return out;  // F1, L, |d log F| exactly 0
  const ReducedGrid& g = F.grid;
  Field root(g), logf(g);
  for (size_t q = 0; q < F.values.size(); ++q) {
    root.values[q] = std::sqrt(F.values[q]);
    logf.values[q] = std::log(F.values[q]);
  }
  double f1 = 0.0, neg_lap = -std::numeric_limits<double>::infinity(), dl = 0.0;
  for (int j = 0; j < g.nt(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const Mat2 ge_inv = bg.omega_eps_at({i, j}).inverse();
      const Mat2 gs_inv = bg.omega_s_at({i, j}, s).inverse();
      const Vec2 dr = node_gradient(root, {i, j});
      const Vec2 dlf = node_gradient(logf, {i, j});
      f1 = std::max(f1, std::sqrt(dr.dot(ge_inv * dr)));
      dl = std::max(dl, std::sqrt(dlf.dot(gs_inv * dlf)));
      if (g.interior(i, j))
        neg_lap = std::max(neg_lap, -(ge_inv * reduced_hessian(logf, {i, j})).trace());
    }
  out.F1 = 2.0 * f1;
  out.L = std::max(0.0, neg_lap);
  out.sup_dlog_F = dl;
  return out;
}

double gradient_slope_bound(const BackgroundGeometry& bg, double F1) {
  const double a1 = 2.0 * bg.epsilon * (bg.B + F1 + 1.0);
  return 0.5 * bg.epsilon * a1;
}

double yau_aubin_constant(const BackgroundGeometry& bg, double L) {
  return 2.0 * (bg.B + bg.b + L);
}

ScanResult blocki_alpha_scan(const Field& phi_s, const BackgroundGeometry& bg,
                             double s, const RhsBounds& f,
                             const MonitorOptions& opts) {
  const Field pe = eps_potential(phi_s, bg, s);
  const ReducedGrid& g = pe.grid;
  const double inf_phi = *std::min_element(pe.values.begin(), pe.values.end());
  const GammaParams gp{bg.B, f.F1, 1.0 - inf_phi};
  ScanResult out;
  out.constant = gp.C;
  out.interior_max = out.boundary_max = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (int j = 0; j < g.nt(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const bool inner = g.interior(i, j);
      const Vec2 v = inner ? reduced_gradient(pe, {i, j}) : node_gradient(pe, {i, j});
      const double beta = v.dot(bg.omega_eps_at({i, j}).inverse() * v);
      if (!(beta > opts.beta_floor)) {
        ++out.skipped;
        continue;
      }
      any = true;
      const double alpha = std::log(beta) - gamma_fn(pe(i, j), gp).value;
      if (inner && alpha > out.interior_max) {
        out.interior_max = alpha;
        out.interior_loc = {i, j};
      } else if (!inner && alpha > out.boundary_max) {
        out.boundary_max = alpha;
        out.boundary_loc = {i, j};
      }
    }
  if (!any) throw InvalidInput("alpha scan: beta vanishes at every node");
  return out;
}

ScanResult yau_aubin_scan(const Field& phi_s, const BackgroundGeometry& bg,
                          double s, const RhsBounds& f) {
  const Field pe = eps_potential(phi_s, bg, s);
  const ReducedGrid& g = pe.grid;
  ScanResult out;
  out.constant = yau_aubin_constant(bg, f.L);
  out.interior_max = out.boundary_max = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.nt(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const bool inner = g.interior(i, j);
      const Mat2 gp = g_prime_at(phi_s, bg, s, {i, j});
      const Mat2 ge = bg.omega_eps_at({i, j});
      const double tr = (ge.inverse() * gp).trace();
      if (!(tr > 0.0) || !(min_eigenvalue(gp) > 0.0)) {
        if (inner) throw PositivityError("Yau-Aubin scan: g' not positive");
        ++out.skipped;
        continue;
      }
      const double v = std::log(tr) - out.constant * pe(i, j);
      if (inner && v > out.interior_max) {
        out.interior_max = v;
        out.interior_loc = {i, j};
        out.trace_h_inv_at_max = (gp.inverse() * ge).trace();
      } else if (!inner && v > out.boundary_max) {
        out.boundary_max = v;
        out.boundary_loc = {i, j};
      }
    }
  return out;
}

BoundaryC2 boundary_c2_check(const Field& phi_s, const BackgroundGeometry& bg,
                             double s, const RhsBounds& f,
                             const MonitorOptions& opts) {
  const ReducedGrid& g = phi_s.grid;
  const int m = 2;
  const int top = g.nt() - 1;
  auto on_dm = [&](int i) { return row_interior(g, i); };
  for (int i = 0; i < g.nx(); ++i)
    if (on_dm(i) && std::abs(phi_s(i, top)) > 1e-12)
      throw InvalidInput("boundary barrier needs phi = 0 on t = 0");
  if (!(f.sup_F > 0.0)) throw InvalidInput("boundary barrier needs sup F > 0");

  BoundaryC2 out;
  // p: maximizer of m + Delta phi on the boundary t = 0.
  int ip = -1;
  out.lhs = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.nx(); ++i) {
    if (!on_dm(i)) continue;
    const Mat2 gs = bg.omega_s_at({i, top}, s);
    const double v = m + (gs.inverse() * node_hessian(phi_s, {i, top})).trace();
    if (v > out.lhs) {
      out.lhs = v;
      ip = i;
    }
  }
  const Mat2 gpnt = bg.omega_s_at({ip, top}, s);
  const double g11p = gpnt(0, 0), g22p = gpnt(1, 1);
  const double d1 = g.fiber_scale();
  const double dscale = 2.0 * d1 / std::sqrt(g11p);  // D = dscale * d/dr1

  auto dr1 = [&](int i) {  // signed fiber offset from p
    double d = g.x(i) - g.x(ip);
    if (g.periodic()) {
      const double w = g.x_hi() - g.x_lo();
      d -= w * std::round(d / w);
    }
    return d;
  };
  auto radius_sq = [&](int i, int j) {
    const double u = dr1(i) / (2.0 * d1), t = g.t(j);
    return g11p * u * u + g22p * t * t / 4.0;
  };

  // Metric comparison 1/2 <= g_norm <= 2: delta below the first bad node.
  const Eigen::DiagonalMatrix<double, 2> P(1.0 / std::sqrt(g11p), 1.0 / std::sqrt(g22p));
  double delta_metric = g22p * g.t_min() * g.t_min() / 4.0;
  for (int j = 0; j <= top; ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const Mat2 gn = P * bg.omega_s_at({i, j}, s) * P;
      const Eigen::SelfAdjointEigenSolver<Mat2> es(gn);
      if (es.eigenvalues()(0) < 0.5 || es.eigenvalues()(1) > 2.0)
        delta_metric = std::min(delta_metric, radius_sq(i, j));
    }
  const double n0 = std::pow(2.0 * m * f.sup_F * std::pow(2.0, m), m);
  out.N = 2.0 * n0;
  out.delta = std::min(delta_metric, 1.0 / (out.N * out.N));
  out.collar_t = -2.0 * std::sqrt(out.delta / g22p);

  auto in_collar = [&](int i, int j) { return radius_sq(i, j) < out.delta; };

  // K from D g, D log det g and D log F on the collar (normalized frame).
  double k1 = 0.0, k2 = 0.0;
  for (int j = 0; j <= top; ++j)
    for (int i = 0; i < g.nx(); ++i) {
      if (!in_collar(i, j)) continue;
      if (!g.periodic() && (i == 0 || i == g.nx() - 1)) continue;
      const double h2 = 2.0 * g.hx();
      const Mat2 dg = dscale * P *
                      (bg.omega_s_at({i + 1, j}, s) - bg.omega_s_at({i - 1, j}, s)) *
                      P / h2;
      const double dlogdet =
          dscale *
          (std::log(bg.omega_s_at({i + 1, j}, s).determinant()) -
           std::log(bg.omega_s_at({i - 1, j}, s).determinant())) / h2;
      double dlogf = 0.0;
      if (!f.constant) {
        // F itself is not stored here; sup |d log F| bounds |D log F| up to
        // the normalization, which is <= 2 on the collar.
        dlogf = 2.0 * f.sup_dlog_F;
      }
      const Eigen::SelfAdjointEigenSolver<Mat2> es(dg);
      const double op = es.eigenvalues().cwiseAbs().maxCoeff();
      k1 = std::max(k1, std::abs(dlogdet) + dlogf);
      k2 = std::max(k2, 2.0 * op);
    }
  out.K = std::max(k1, k2);
  const double c_bar = out.K + 2.0 / out.delta;
  out.constant = (m - 1 + f.sup_F) + 64.0 * (m - 1) * c_bar * c_bar;

  auto grad_sq = [&](int i, int j) {
    const Vec2 v = node_gradient(phi_s, {i, j});
    return v.dot(bg.omega_s_at({i, j}, s).inverse() * v);
  };
  double sup_bd = 0.0, sup_u = 0.0, min_phi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.nx(); ++i)
    if (on_dm(i)) sup_bd = std::max(sup_bd, grad_sq(i, top));
  for (int j = 0; j <= top; ++j) {
    if (g.t(j) < out.collar_t) continue;
    for (int i = 0; i < g.nx(); ++i) {
      sup_u = std::max(sup_u, grad_sq(i, j));
      min_phi = std::min(min_phi, phi_s(i, j));
    }
  }
  out.rhs = out.constant * (1.0 + sup_bd) * (1.0 + sup_u);
  out.holds = out.lhs <= out.rhs;

  // theta = C a Phi + (a/delta)|z|^2 + C a (x - N x^2) - |D Phi| on U_delta.
  const double h = std::max(g.hx(), g.ht());
  out.theta_tol = 10.0 * h * h;
  if (opts.barrier_theta && min_phi >= -1e-12) {
    out.theta_checked = true;
    const double a = std::sqrt(sup_u) + 1.0;
    out.theta_min = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= top; ++j)
      for (int i = 0; i < g.nx(); ++i) {
        if (!in_collar(i, j)) continue;
        const double x = -std::sqrt(g22p) * g.t(j) / 2.0;
        const double dphi = 2.0 * node_gradient(phi_s, {i, j})(0) / std::sqrt(g11p);
        const double theta = c_bar * a * phi_s(i, j) + a / out.delta * radius_sq(i, j) +
                             c_bar * a * (x - out.N * x * x) - std::abs(dphi);
        out.theta_min = std::min(out.theta_min, theta);
      }
    out.theta_ok = out.theta_min >= -out.theta_tol;
  }
  return out;
}

MonitorReport evaluate_monitors(const Field& phi_s, const BackgroundGeometry& bg,
                                double s, const Field& F, const Field* barrier,
                                const MonitorOptions& opts) {
  MonitorReport r;
  r.s = s;
  r.f = rhs_bounds(bg, s, F);
  r.grad_fit = gradient_growth_fit(phi_s, bg, s, opts);
  r.grad_slope_bound = gradient_slope_bound(bg, r.f.F1);
  r.lap_fit = laplacian_growth_fit(phi_s, bg, s, opts);
  r.alpha_scan = blocki_alpha_scan(phi_s, bg, s, r.f, opts);
  r.ya_scan = yau_aubin_scan(phi_s, bg, s, r.f);
  if (barrier) {
    double mn = std::numeric_limits<double>::infinity();
    double ex = -std::numeric_limits<double>::infinity();
    for (size_t q = 0; q < phi_s.values.size(); ++q) {
      mn = std::min(mn, phi_s.values[q]);
      ex = std::max(ex, phi_s.values[q] - barrier->values[q]);
    }
    r.sandwich_min = mn;
    r.sandwich_excess = ex;
  }
  bool zero_top = true;
  const int top = phi_s.grid.nt() - 1;
  for (int i = 0; i < phi_s.grid.nx(); ++i)
    if (row_interior(phi_s.grid, i) && std::abs(phi_s(i, top)) > 1e-12) zero_top = false;
  if (zero_top) r.boundary_c2 = boundary_c2_check(phi_s, bg, s, r.f, opts);

  const ReducedGrid& g = phi_s.grid;
  const Field pe = eps_potential(phi_s, bg, s);
  const double inf_phi = *std::min_element(pe.values.begin(), pe.values.end());
  const GammaParams gam{bg.B, r.f.F1, 1.0 - inf_phi};
  Field det(g);
  for (int j = 0; j < g.nt(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (g.interior(i, j))
        det(i, j) = g_prime_at(phi_s, bg, s, {i, j}).determinant();
  for (int j = 0; j < g.nt(); ++j) {
    SliceProfile sp;
    sp.t = g.t(j);
    sp.sigma_sq = bg.sigma_norm_sq(sp.t);
    sp.alpha_max = kNaN;
    double mass = 0.0;
    for (int i = 0; i < g.nx(); ++i) {
      const GridIndex p{i, j};
      const bool inner = g.interior(i, j);
      const Vec2 v = inner ? reduced_gradient(pe, p) : node_gradient(pe, p);
      const Mat2 ge_inv = bg.omega_eps_at(p).inverse();
      const double beta = v.dot(ge_inv * v);
      sp.grad_sup = std::max(sp.grad_sup, std::sqrt(std::max(0.0, beta)));
      const Mat2 gp = g_prime_at(phi_s, bg, s, p);
      sp.lap_sup = std::max(sp.lap_sup, (ge_inv * gp).trace());
      if (beta > opts.beta_floor) {
        const double alpha = std::log(beta) - gamma_fn(pe(i, j), gam).value;
        sp.alpha_max = std::isnan(sp.alpha_max) ? alpha : std::max(sp.alpha_max, alpha);
      }
      const double w = (!g.periodic() && (i == 0 || i == g.nx() - 1)) ? 0.5 : 1.0;
      mass += w * gp.determinant();
    }
    sp.mass_density = mass * g.hx();
    r.profile.push_back(sp);
  }
  (void)det;
  return r;
}

}  // namespace mage

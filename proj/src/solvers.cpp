#include "mage/solvers.hpp"

#include "mage/error.hpp"
#include "mage/ma_core.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mage {

void SolveOptions::validate() const {
  if (!(newton_tol > 0.0)) throw InvalidInput("newton_tol must be positive");
  if (max_iters < 1) throw InvalidInput("max_iters must be >= 1");
  if (!(line_search_shrink > 0.0 && line_search_shrink < 1.0))
    throw InvalidInput("line_search_shrink must lie in (0, 1)");
  if (!(min_eig_floor > 0.0)) throw InvalidInput("min_eig_floor must be positive");
  if (!(roundoff_factor >= 0.0)) throw InvalidInput("roundoff_factor must be >= 0");
}

bool is_boundary_node(const ReducedGrid& grid, int i, int j) {
  return !grid.interior(i, j);
}

Field boundary_from(const Field& data) {
  Field out(data.grid);
  for (int j = 0; j < data.grid.nt(); ++j)
    for (int i = 0; i < data.grid.nx(); ++i)
      if (is_boundary_node(data.grid, i, j)) out(i, j) = data(i, j);
  return out;
}

std::string to_string(SolverFailure kind) {
  switch (kind) {
    case SolverFailure::line_search_stall: return "line_search_stall";
    case SolverFailure::max_iters: return "max_iters";
    case SolverFailure::singular_jacobian: return "singular_jacobian";
    case SolverFailure::linear_solve: return "linear_solve";
  }
  return "unknown";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Interior nodes numbered row by row.
struct UnknownMap {
  std::vector<int> index;  // grid flat -> unknown, -1 on the boundary
  std::vector<GridIndex> nodes;

  explicit UnknownMap(const ReducedGrid& grid) : index(grid.size(), -1) {
    for (int j = 0; j < grid.nt(); ++j)
      for (int i = 0; i < grid.nx(); ++i)
        if (grid.interior(i, j)) {
          index[grid.flat(i, j)] = static_cast<int>(nodes.size());
          nodes.push_back({i, j});
        }
  }
  int at(const ReducedGrid& grid, int i, int j) const {
    if (!grid.periodic() && (i < 0 || i >= grid.nx())) return -1;
    if (j < 0 || j >= grid.nt()) return -1;
    return index[grid.flat(grid.wrap(i), j)];
  }
};

// Adds the linearization of sum_ab A_ab H_ab(delta) for row `row`.
void add_operator_row(const ReducedGrid& grid, const UnknownMap& map, int row,
                      GridIndex p, const Mat2& a, std::vector<Triplet>& out) {
  const double d1 = grid.fiber_scale();
  const double cx = a(0, 0) * d1 * d1 / (grid.hx() * grid.hx());
  const double ct = a(1, 1) / (grid.ht() * grid.ht());
  const double cm = 2.0 * a(0, 1) * d1 / (4.0 * grid.hx() * grid.ht());
  auto put = [&](int di, int dj, double v) {
    const int col = map.at(grid, p.i + di, p.j + dj);
    if (col >= 0 && v != 0.0) out.emplace_back(row, col, v);
  };
  if (grid.mixed_stencil() == MixedStencil::centered) {
    put(0, 0, -2.0 * cx - 2.0 * ct);
    put(1, 0, cx);
    put(-1, 0, cx);
    put(0, 1, ct);
    put(0, -1, ct);
    put(1, 1, cm);
    put(-1, -1, cm);
    put(1, -1, -cm);
    put(-1, 1, -cm);
  } else {
    // mixed part: -(2 a01 d1 / (2 hx ht)) * [corners - axis + 2 center]
    const double cd = 2.0 * cm;
    put(0, 0, -2.0 * cx - 2.0 * ct - 2.0 * cd);
    put(1, 0, cx + cd);
    put(-1, 0, cx + cd);
    put(0, 1, ct + cd);
    put(0, -1, ct + cd);
    put(1, -1, -cd);
    put(-1, 1, -cd);
  }
}

struct Evaluation {
  Eigen::VectorXd residual;
  double min_eig = 0.0;
  double noise = 0.0;  // roundoff bound of the log-det evaluation
  std::vector<Mat2> gp_inv;
};

// First-order bound on the rounding error of log det g' at p: stencil
// rounding of phi and of the background entries, plus the determinant's own
// cancellation.
double log_det_noise(const ReducedGrid& grid, const Field& phi, GridIndex p,
                     const Mat2& omega, const Mat2& gp, const Mat2& gp_inv) {
  constexpr double u = std::numeric_limits<double>::epsilon();
  double m = 0.0;
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di)
      m = std::max(m, std::abs(phi(p.i + di, p.j + dj)));
  const double d1 = grid.fiber_scale(), hx = grid.hx(), ht = grid.ht();
  const double w00 = 4.0 * m * d1 * d1 / (hx * hx) + std::abs(omega(0, 0));
  const double w11 = 4.0 * m / (ht * ht) + std::abs(omega(1, 1));
  const double w01 = 4.0 * m * d1 / (hx * ht) + std::abs(omega(0, 1));
  const double stencil = std::abs(gp_inv(0, 0)) * w00 +
                         std::abs(gp_inv(1, 1)) * w11 +
                         2.0 * std::abs(gp_inv(0, 1)) * w01;
  const double cancel = (std::abs(gp(0, 0) * gp(1, 1)) + gp(0, 1) * gp(0, 1)) /
                        std::abs(gp.determinant());
  return u * (stencil + cancel);
}

Evaluation evaluate(const BackgroundGeometry& bg, double s, const Field& phi,
                    const Eigen::VectorXd& target, const UnknownMap& map,
                    bool want_inverse) {
  Evaluation ev;
  const auto n = static_cast<Eigen::Index>(map.nodes.size());
  ev.residual.resize(n);
  ev.min_eig = std::numeric_limits<double>::infinity();
  if (want_inverse) ev.gp_inv.resize(map.nodes.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const GridIndex p = map.nodes[k];
    const Mat2 omega = bg.omega_s_at(p, s);
    const Mat2 gp = omega + reduced_hessian(phi, p);
    const double e = min_eigenvalue(gp);
    ev.min_eig = std::min(ev.min_eig, e);
    if (!(e > 0.0)) {
      ev.residual(k) = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    ev.residual(k) = std::log(gp.determinant()) - target(k);
    const Mat2 inv = gp.inverse();
    ev.noise = std::max(ev.noise, log_det_noise(phi.grid, phi, p, omega, gp, inv));
    if (want_inverse) ev.gp_inv[k] = inv;
  }
  return ev;
}

Eigen::VectorXd make_target(const BackgroundGeometry& bg, const Field& rhs,
                            const UnknownMap& map) {
  Eigen::VectorXd target(static_cast<Eigen::Index>(map.nodes.size()));
  for (size_t k = 0; k < map.nodes.size(); ++k) {
    const GridIndex p = map.nodes[k];
    const double f = rhs(p.i, p.j);
    if (!(f > 0.0)) throw InvalidInput("right-hand side must be positive");
    target(static_cast<Eigen::Index>(k)) =
        std::log(bg.omega_eps_at(p).determinant()) + std::log(f);
  }
  return target;
}

}  // namespace

double barrier_constant(const BackgroundGeometry& bg, double s_lo, double s_hi) {
  double c = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < bg.grid.nt(); ++j)
    for (int i = 0; i < bg.grid.nx(); ++i) {
      const Mat2 ge_inv = bg.omega_eps_at({i, j}).inverse();
      for (double s : {s_lo, s_hi})
        c = std::max(c, (ge_inv * bg.omega_s_at({i, j}, s)).trace());
    }
  return c;
}

double laplacian_eps(const BackgroundGeometry& bg, const Field& f, GridIndex p) {
  return (bg.omega_eps_at(p).inverse() * reduced_hessian(f, p)).trace();
}

PotentialField solve_poisson_hat(const BackgroundGeometry& bg, double s_lo,
                                 double s_hi, double* c_used,
                                 const double* c_override) {
  if (!(0.0 <= s_lo && s_lo <= s_hi && s_hi <= 1.0))
    throw InvalidInput("invalid s range for the barrier");
  const ReducedGrid& grid = bg.grid;
  const double c = c_override ? *c_override : barrier_constant(bg, s_lo, s_hi);
  if (c_used) *c_used = c;

  const UnknownMap map(grid);
  const auto n = static_cast<Eigen::Index>(map.nodes.size());
  std::vector<Triplet> trips;
  trips.reserve(map.nodes.size() * 9);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const GridIndex p = map.nodes[k];
    add_operator_row(grid, map, static_cast<int>(k), p,
                     bg.omega_eps_at(p).inverse(), trips);
    rhs(k) = -c;
  }
  SpMat mat(n, n);
  mat.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<SpMat> lu;
  lu.compute(mat);
  PotentialField out(grid);
  out.s = s_lo;
  if (lu.info() != Eigen::Success)
    throw SolverError(SolverFailure::linear_solve,
                      "barrier Laplacian factorization failed", out);
  const Eigen::VectorXd sol = lu.solve(rhs);
  for (Eigen::Index k = 0; k < n; ++k)
    out.phi(map.nodes[k].i, map.nodes[k].j) = sol(k);
  out.converged = true;
  double res = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    res = std::max(res, std::abs(laplacian_eps(bg, out.phi, map.nodes[k]) + c));
  out.final_residual = res;
  return out;
}

Field ma_residual(const BackgroundGeometry& bg, double s, const Field& phi,
                  const Field& rhs) {
  Field out(phi.grid);
  for (int j = 0; j < phi.grid.nt(); ++j)
    for (int i = 0; i < phi.grid.nx(); ++i) {
      if (!phi.grid.interior(i, j)) continue;
      const Mat2 gp = bg.omega_s_at({i, j}, s) + reduced_hessian(phi, {i, j});
      out(i, j) = std::log(gp.determinant()) -
                  std::log(bg.omega_eps_at({i, j}).determinant()) -
                  std::log(rhs(i, j));
    }
  return out;
}

PotentialField newton_solve_field(const BackgroundGeometry& bg, double s,
                                  const Field& rhs, const Field& phi_init,
                                  const SolveOptions& opts) {
  opts.validate();
  if (!(s > 0.0 && s <= 1.0)) throw InvalidInput("newton_solve needs 0 < s <= 1");
  if (!(phi_init.grid == bg.grid) || !(rhs.grid == bg.grid))
    throw InvalidInput("field grid does not match the background grid");
  const ReducedGrid& grid = bg.grid;
  const UnknownMap map(grid);
  const Eigen::VectorXd target = make_target(bg, rhs, map);
  const auto n = static_cast<Eigen::Index>(map.nodes.size());

  PotentialField out(grid);
  out.s = s;
  out.phi = phi_init;
  out.boundary = boundary_from(phi_init);

  Evaluation ev = evaluate(bg, s, out.phi, target, map, true);
  if (!(ev.min_eig > opts.min_eig_floor))
    throw InvalidInput("initial potential does not give a positive g'");

  Eigen::SparseLU<SpMat> lu;
  bool pattern_ready = false;

  for (int iter = 0;; ++iter) {
    const double rmax = ev.residual.lpNorm<Eigen::Infinity>();
    const double rl2 = ev.residual.norm();
    out.history.push_back({rmax, rl2, iter == 0 ? 0.0 : out.history.back().step_length,
                           ev.min_eig});
    out.final_residual = rmax;
    out.tolerance = std::max(opts.newton_tol, opts.roundoff_factor * ev.noise);
    if (rmax <= out.tolerance) {
      out.converged = true;
      return out;
    }
    if (iter >= opts.max_iters) {
      std::ostringstream os;
      os << "Newton did not converge in " << opts.max_iters
         << " iterations (residual " << rmax << ")";
      throw SolverError(SolverFailure::max_iters, os.str(), out);
    }

    std::vector<Triplet> trips;
    trips.reserve(map.nodes.size() * 9);
    for (Eigen::Index k = 0; k < n; ++k)
      add_operator_row(grid, map, static_cast<int>(k), map.nodes[k],
                       ev.gp_inv[k], trips);
    SpMat jac(n, n);
    jac.setFromTriplets(trips.begin(), trips.end());

    // Direction from the determinant form det g' = target, written with the
    // log-form Jacobian: right side target/det - 1 instead of -r. Identical
    // to Newton near the solution, but a node whose determinant must shrink
    // asks for at most a unit relative decrease, so steps keep g' > 0.
    const Eigen::VectorXd rhs_vec = ev.residual.unaryExpr(
        [](double r) { return std::expm1(-r); });
    Eigen::VectorXd delta;
    if (opts.linear_solver == LinearSolverKind::direct_sparse) {
      if (!pattern_ready) {
        lu.analyzePattern(jac);
        pattern_ready = true;
      }
      lu.factorize(jac);
      if (lu.info() != Eigen::Success)
        throw SolverError(SolverFailure::singular_jacobian,
                          "Jacobian factorization failed: " + lu.lastErrorMessage(),
                          out);
      delta = lu.solve(rhs_vec);
    } else {
      Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> it;
      it.setTolerance(1e-13);
      it.setMaxIterations(20 * static_cast<int>(n));
      it.compute(jac);
      delta = it.solve(rhs_vec);
      if (it.info() != Eigen::Success)
        throw SolverError(SolverFailure::linear_solve,
                          "iterative linear solve did not converge", out);
    }
    if (!delta.allFinite())
      throw SolverError(SolverFailure::singular_jacobian,
                        "Newton direction is not finite", out);

    double tau = 1.0;
    bool accepted = false;
    Field trial = out.phi;
    Evaluation trial_ev;
    for (int shrink = 0; shrink < 60; ++shrink) {
      for (Eigen::Index k = 0; k < n; ++k) {
        const GridIndex p = map.nodes[k];
        trial(p.i, p.j) = out.phi(p.i, p.j) + tau * delta(k);
      }
      trial_ev = evaluate(bg, s, trial, target, map, true);
      if (trial_ev.min_eig > opts.min_eig_floor) {
        const double new_l2 = trial_ev.residual.norm();
        if (new_l2 <= (1.0 - 1e-4 * tau) * rl2 ||
            trial_ev.residual.lpNorm<Eigen::Infinity>() <= out.tolerance) {
          accepted = true;
          break;
        }
      }
      tau *= opts.line_search_shrink;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "line search stalled at iteration " << iter << " (residual " << rmax
         << ")";
      throw SolverError(SolverFailure::line_search_stall, os.str(), out);
    }
    out.phi = std::move(trial);
    ev = std::move(trial_ev);
    out.history.back().step_length = tau;
  }
}

PotentialField newton_solve_homotopy(const BackgroundGeometry& bg, double s,
                                     const Field& rhs, const Field& phi_init,
                                     const SolveOptions& opts, int stages) {
  if (stages < 1) throw InvalidInput("homotopy needs at least one stage");
  const Field r0 = ma_residual(bg, s, phi_init, rhs);
  const double min_step = 1.0 / (16.0 * stages);
  Field phi = phi_init;
  std::vector<NewtonStep> history;
  double theta = 0.0, step = 1.0 / stages;
  while (true) {
    const double next = std::min(1.0, theta + step);
    Field f = rhs;
    for (int j = 0; j < f.grid.nt(); ++j)
      for (int i = 0; i < f.grid.nx(); ++i)
        if (f.grid.interior(i, j)) f(i, j) *= std::exp((1.0 - next) * r0(i, j));
    try {
      PotentialField stage = newton_solve_field(bg, s, f, phi, opts);
      history.insert(history.end(), stage.history.begin(), stage.history.end());
      phi = stage.phi;
      theta = next;
      if (theta >= 1.0) {
        stage.history = std::move(history);
        return stage;
      }
    } catch (const SolverError& e) {
      if (step * 0.5 < min_step) throw;
      step *= 0.5;
    }
  }
}

PotentialField newton_solve(const BackgroundGeometry& bg, double s, double c,
                            const Field& phi_init, const SolveOptions& opts) {
  if (!(c > 0.0)) throw InvalidInput("right-hand side constant must be positive");
  return newton_solve_field(bg, s, Field(bg.grid, c), phi_init, opts);
}

PotentialField shift_to_epsilon_background(const PotentialField& phi_s,
                                           const BackgroundGeometry& bg,
                                           double s) {
  PotentialField out = phi_s;
  const ReducedGrid& grid = phi_s.phi.grid;
  for (int j = 0; j < grid.nt(); ++j) {
    const double t = grid.t(j);
    const double shift =
        (s - 1.0) * (bg.epsilon * t + bg.reg_potential(t)[0]);  // (s-1) eps log||sigma||^2
    for (int i = 0; i < grid.nx(); ++i) {
      out.phi(i, j) += shift;
      out.boundary(i, j) += is_boundary_node(grid, i, j) ? shift : 0.0;
    }
  }
  out.s = 1.0;
  return out;
}

}  // namespace mage

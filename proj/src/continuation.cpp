#include "mage/continuation.hpp"

#include "mage/error.hpp"
#include "mage/ma_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mage {

FsChoice choose_fs(const BackgroundGeometry& bg, double s) {
  if (!(s > 0.0 && s <= 1.0)) throw InvalidInput("choose_fs needs 0 < s <= 1");
  const ReducedGrid& grid = bg.grid;
  FsChoice out{s, 0.0, 0.0, Field(grid)};
  double max_ratio = 0.0;
  for (int j = 0; j < grid.nt(); ++j)
    for (int i = 0; i < grid.nx(); ++i) {
      const Mat2 ge = bg.omega_eps_at({i, j});
      const Mat2 gs = bg.omega_s_at({i, j}, s);
      if (!(min_eigenvalue(ge) > 0.0) || !(min_eigenvalue(gs) > 0.0)) {
        std::ostringstream os;
        os << "choose_fs: background not positive at node (" << i << ", " << j
           << ") for s = " << s;
        throw PositivityError(os.str());
      }
      const double r = ge.determinant() / gs.determinant();
      out.F(i, j) = r;
      max_ratio = std::max(max_ratio, r);
    }
  out.c = s / max_ratio;
  for (double& v : out.F.values) v *= out.c;
  out.sup_F = *std::max_element(out.F.values.begin(), out.F.values.end());
  return out;
}

ContinuationSchedule ContinuationSchedule::geometric(double s_first,
                                                     double s_last, int steps,
                                                     const SolveOptions& opts) {
  if (steps < 1) throw InvalidInput("schedule needs at least one step");
  if (!(s_first > 0.0 && s_first <= 1.0 && s_last > 0.0 && s_last <= s_first))
    throw InvalidInput("schedule endpoints must satisfy 0 < s_last <= s_first <= 1");
  ContinuationSchedule out;
  if (steps == 1) {
    out.s_values = {s_first};
  } else {
    const double ratio = std::log(s_last / s_first) / (steps - 1);
    for (int k = 0; k < steps; ++k)
      out.s_values.push_back(k == steps - 1 ? s_last
                                            : s_first * std::exp(ratio * k));
  }
  out.options.assign(out.s_values.size(), opts);
  out.validate();
  return out;
}

void ContinuationSchedule::validate() const {
  if (s_values.empty()) throw InvalidInput("empty schedule");
  if (options.size() != s_values.size())
    throw InvalidInput("schedule needs one SolveOptions per step");
  for (size_t k = 0; k < s_values.size(); ++k) {
    if (!(s_values[k] > 0.0 && s_values[k] <= 1.0))
      throw InvalidInput("schedule s values must lie in (0, 1]");
    if (k > 0 && !(s_values[k] < s_values[k - 1]))
      throw InvalidInput("schedule s values must be strictly decreasing");
    options[k].validate();
  }
  if (!(compact_fraction > 0.0 && compact_fraction <= 1.0))
    throw InvalidInput("compact_fraction must lie in (0, 1]");
  if (first_step_stages < 1) throw InvalidInput("first_step_stages must be >= 1");
}

namespace {

// Trapezoid weights along one axis of n nodes (rectangle rule if periodic).
std::vector<double> axis_weights(int n, bool periodic) {
  std::vector<double> w(n, 1.0);
  if (!periodic) w.front() = w.back() = 0.5;
  return w;
}

bool compact(const ReducedGrid& grid, int j, double frac) {
  return grid.t(j) >= frac * grid.t_min();
}

}  // namespace

double interior_quadrature(const Field& values) {
  const ReducedGrid& g = values.grid;
  Field f = values;
  const int nx = g.nx(), nt = g.nt();
  // rows first, then columns (corners get both)
  for (int i = 0; i < nx; ++i) {
    f(i, 0) = 3.0 * f(i, 1) - 3.0 * f(i, 2) + f(i, 3);
    f(i, nt - 1) = 3.0 * f(i, nt - 2) - 3.0 * f(i, nt - 3) + f(i, nt - 4);
  }
  if (!g.periodic()) {
    for (int j = 0; j < nt; ++j) {
      f(0, j) = 3.0 * f(1, j) - 3.0 * f(2, j) + f(3, j);
      f(nx - 1, j) = 3.0 * f(nx - 2, j) - 3.0 * f(nx - 3, j) + f(nx - 4, j);
    }
  }
  const auto wx = axis_weights(nx, g.periodic());
  const auto wt = axis_weights(nt, false);
  double sum = 0.0;
  for (int j = 0; j < nt; ++j) {
    double row = 0.0;
    for (int i = 0; i < nx; ++i) row += wx[i] * f(i, j);
    sum += wt[j] * row;
  }
  return sum * g.hx() * g.ht();
}

double grid_volume(const ReducedGrid& grid) {
  return interior_quadrature(Field(grid, 1.0));
}

double ma_mass(const Field& phi, const BackgroundGeometry& bg, double s) {
  Field d(phi.grid);
  for (int j = 0; j < phi.grid.nt(); ++j)
    for (int i = 0; i < phi.grid.nx(); ++i)
      if (phi.grid.interior(i, j))
        d(i, j) = (bg.omega_s_at({i, j}, s) + reduced_hessian(phi, {i, j}))
                      .determinant();
  return interior_quadrature(d);
}

double fs_mass(const BackgroundGeometry& bg, const FsChoice& fs) {
  Field d(bg.grid);
  for (int j = 0; j < bg.grid.nt(); ++j)
    for (int i = 0; i < bg.grid.nx(); ++i)
      if (bg.grid.interior(i, j))
        d(i, j) = fs.F(i, j) * bg.omega_s_at({i, j}, fs.s).determinant();
  return interior_quadrature(d);
}

double max_gradient_norm(const Field& phi, const BackgroundGeometry& bg,
                         double compact_fraction) {
  double out = 0.0;
  for (int j = 0; j < phi.grid.nt(); ++j) {
    if (!compact(phi.grid, j, compact_fraction)) continue;
    for (int i = 0; i < phi.grid.nx(); ++i) {
      if (!phi.grid.interior(i, j)) continue;
      const Vec2 v = reduced_gradient(phi, {i, j});
      const double n2 = v.dot(bg.omega_eps_at({i, j}).inverse() * v);
      out = std::max(out, std::sqrt(std::max(0.0, n2)));
    }
  }
  return out;
}

ContinuationResult run_continuation(const BackgroundGeometry& bg,
                                    const ContinuationSchedule& schedule,
                                    const Field& reference,
                                    const Field* oracle) {
  schedule.validate();
  const ReducedGrid& grid = bg.grid;
  if (!(reference.grid == grid)) throw InvalidInput("reference grid mismatch");
  if (oracle && !(oracle->grid == grid)) throw InvalidInput("oracle grid mismatch");

  ContinuationResult result;
  bool zero_data = true;
  for (int j = 0; j < grid.nt(); ++j)
    for (int i = 0; i < grid.nx(); ++i)
      if (is_boundary_node(grid, i, j) && reference(i, j) != 0.0) zero_data = false;
  if (zero_data) {
    result.barrier = solve_poisson_hat(bg, schedule.s_values.back(),
                                       schedule.s_values.front(),
                                       &result.barrier_c);
  }

  // Dirichlet data from the reference, interior anchored at it.
  Field phi = reference;
  double s_prev = 0.0;
  const double frac = schedule.compact_fraction;

  for (size_t k = 0; k < schedule.s_values.size(); ++k) {
    const double s = schedule.s_values[k];
    const SolveOptions& opts = schedule.options[k];
    const FsChoice fs = choose_fs(bg, s);
    // The solver's right side is relative to det g_eps: F det g_s / det g_eps.
    const Field rhs(grid, fs.c);

    PotentialField solved(grid);
    if (k == 0) {
      solved = newton_solve_homotopy(bg, s, rhs, phi, opts,
                                     schedule.first_step_stages);
    } else {
      Field init = phi;
      for (size_t q = 0; q < init.values.size(); ++q)
        init.values[q] = reference.values[q] +
                         (s / s_prev) * (phi.values[q] - reference.values[q]);
      try {
        solved = newton_solve_field(bg, s, rhs, init, opts);
      } catch (const SolverError&) {
        solved = newton_solve_homotopy(bg, s, rhs, init, opts,
                                       schedule.first_step_stages);
      }
    }

    StepRecord rec;
    rec.s = s;
    rec.c = fs.c;
    rec.sup_F = fs.sup_F;
    rec.iterations = static_cast<int>(solved.history.size()) - 1;
    rec.final_residual = solved.final_residual;
    rec.tolerance = solved.tolerance;
    rec.mass = ma_mass(solved.phi, bg, s);
    rec.mass_expected = fs_mass(bg, fs);
    rec.mass_over_c = rec.mass / fs.c;
    rec.sandwich_applicable = result.barrier.has_value();
    if (rec.sandwich_applicable) {
      rec.sandwich_min = std::numeric_limits<double>::infinity();
      rec.sandwich_excess = -std::numeric_limits<double>::infinity();
      for (size_t q = 0; q < solved.phi.values.size(); ++q) {
        rec.sandwich_min = std::min(rec.sandwich_min, solved.phi.values[q]);
        rec.sandwich_excess =
            std::max(rec.sandwich_excess,
                     solved.phi.values[q] - result.barrier->phi.values[q]);
      }
    }
    double cauchy = 0.0, oerr = 0.0;
    for (int j = 0; j < grid.nt(); ++j) {
      if (!compact(grid, j, frac)) continue;
      for (int i = 0; i < grid.nx(); ++i) {
        if (k > 0) cauchy = std::max(cauchy, std::abs(solved.phi(i, j) - phi(i, j)));
        if (oracle) oerr = std::max(oerr, std::abs(solved.phi(i, j) - (*oracle)(i, j)));
      }
    }
    if (k > 0) rec.cauchy = cauchy;
    if (oracle) rec.oracle_error = oerr;
    rec.grad_max = max_gradient_norm(
        shift_to_epsilon_background(solved, bg, s).phi, bg, frac);

    phi = solved.phi;
    s_prev = s;
    result.steps.push_back(rec);
    result.fields.push_back(std::move(solved));
  }
  return result;
}

}  // namespace mage

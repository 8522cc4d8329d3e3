#pragma once

#include "mage/field.hpp"
#include "mage/geometry.hpp"

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mage {

enum class LinearSolverKind { direct_sparse, iterative_diagonal };

struct SolveOptions {
  double newton_tol = 1e-10;
  int max_iters = 50;
  double line_search_shrink = 0.5;
  double min_eig_floor = 1e-14;
  /// The stopping tolerance is max(newton_tol, roundoff_factor * noise), noise
  /// being a first-order bound on the rounding error of the evaluated log det.
  /// Only nearly degenerate g' (small s) lifts it above newton_tol. 0 disables.
  double roundoff_factor = 1.0;
  LinearSolverKind linear_solver = LinearSolverKind::direct_sparse;

  void validate() const;
};

struct NewtonStep {
  double residual_max = 0.0;
  double residual_l2 = 0.0;
  double step_length = 0.0;       // accepted damping factor, 0 for the start
  double min_eigenvalue = 0.0;    // min over interior points of g'
};

/// Grid potential together with the Dirichlet data it was solved with.
/// Boundary nodes are the ones without a centered stencil.
struct PotentialField {
  Field phi;
  double s = 1.0;
  Field boundary;
  bool converged = false;
  double final_residual = std::numeric_limits<double>::infinity();
  double tolerance = 0.0;  // stopping tolerance actually applied
  std::vector<NewtonStep> history;

  explicit PotentialField(const ReducedGrid& g)
      : phi(g), boundary(g) {}
};

bool is_boundary_node(const ReducedGrid& grid, int i, int j);

/// Copies boundary values of `data` into a boundary spec (interior zeroed).
Field boundary_from(const Field& data);

enum class SolverFailure { line_search_stall, max_iters, singular_jacobian,
                           linear_solve };

std::string to_string(SolverFailure kind);

class SolverError : public std::runtime_error {
 public:
  SolverError(SolverFailure kind, const std::string& what,
              PotentialField partial)
      : std::runtime_error(what), kind_(kind), partial_(std::move(partial)) {}
  SolverFailure kind() const { return kind_; }
  const PotentialField& partial() const { return partial_; }

 private:
  SolverFailure kind_;
  PotentialField partial_;
};

/// max over the grid of (Omega^eps)^{j kbar} (Omega_s)_{kbar j} for s in
/// [s_lo, s_hi]; the trace is affine in s so the endpoints suffice.
double barrier_constant(const BackgroundGeometry& bg, double s_lo, double s_hi);

/// Solves Delta_{Omega^eps} Phi_hat = -C with zero Dirichlet data, C from
/// barrier_constant unless `c_override` is given. The 5-point discretization
/// of a diagonal metric is an M-matrix, so Phi_hat >= 0.
PotentialField solve_poisson_hat(const BackgroundGeometry& bg, double s_lo,
                                 double s_hi, double* c_used = nullptr,
                                 const double* c_override = nullptr);

/// Discrete Delta_{Omega^eps} f at an interior point.
double laplacian_eps(const BackgroundGeometry& bg, const Field& f, GridIndex p);

/// Damped Newton on log det(Omega_s + ddbar phi) - log det Omega^eps - log F.
/// `rhs` holds F at interior nodes; boundary values of `phi_init` are kept.
/// Throws SolverError on failure.
PotentialField newton_solve_field(const BackgroundGeometry& bg, double s,
                                  const Field& rhs, const Field& phi_init,
                                  const SolveOptions& opts = {});

/// Same equation reached through right-hand sides F exp((1 - theta) r0),
/// theta = 1/stages, ..., 1, with r0 the residual of `phi_init`; a failed
/// stage is retried with the remaining interval split in two (up to `stages`
/// times 16 stages in total). For starting points far from the solution.
PotentialField newton_solve_homotopy(const BackgroundGeometry& bg, double s,
                                     const Field& rhs, const Field& phi_init,
                                     const SolveOptions& opts = {},
                                     int stages = 4);

/// Constant right-hand side c = F_s^{(eps)}.
PotentialField newton_solve(const BackgroundGeometry& bg, double s, double c,
                            const Field& phi_init,
                            const SolveOptions& opts = {});

/// Pointwise log det g'(phi) - log det Omega^eps - log F at interior nodes
/// (zero at boundary nodes).
Field ma_residual(const BackgroundGeometry& bg, double s, const Field& phi,
                  const Field& rhs);

/// Potential relative to Omega^eps: Omega_s + ddbar phi_s = Omega^eps +
/// ddbar(shifted), shifted = phi_s + (s - 1) epsilon log ||sigma||^2.
PotentialField shift_to_epsilon_background(const PotentialField& phi_s,
                                           const BackgroundGeometry& bg,
                                           double s);

}  // namespace mage

#pragma once

// Decreasing-s continuation of (Omega_s + ddbar phi)^m = F_s Omega_s^m with
// F_s = c_s det(Omega^eps) / det(Omega_s), c_s normalized so sup F_s = s.

#include "mage/field.hpp"
#include "mage/geometry.hpp"
#include "mage/solvers.hpp"

#include <optional>
#include <vector>

namespace mage {

struct FsChoice {
  double s = 0.0;
  double c = 0.0;      // F_s = c * det g_eps / det g_s
  double sup_F = 0.0;  // == s by construction
  Field F;             // pointwise F_s, all nodes
};

/// Throws PositivityError if Omega_s or Omega^eps is not positive somewhere.
FsChoice choose_fs(const BackgroundGeometry& bg, double s);

struct ContinuationSchedule {
  std::vector<double> s_values;       // strictly decreasing in (0, 1]
  std::vector<SolveOptions> options;  // one per step
  /// Compact subset for the Cauchy tail and gradient stats: t >= frac * t_min.
  double compact_fraction = 0.5;
  /// Homotopy stages used for the first solve (and as fallback).
  int first_step_stages = 4;

  /// Geometric schedule from s_first to s_last with `steps` entries.
  static ContinuationSchedule geometric(double s_first = 1e-1,
                                        double s_last = 1e-4, int steps = 7,
                                        const SolveOptions& opts = {});
  void validate() const;
};

/// Trapezoidal quadrature over the grid of a quantity known at interior
/// nodes; boundary rows/columns are filled by quadratic extrapolation
/// (3 f1 - 3 f2 + f3). The periodic direction uses the rectangle rule.
double interior_quadrature(const Field& interior_values);

/// Quadrature of det g'(phi) against Omega_s.
double ma_mass(const Field& phi, const BackgroundGeometry& bg, double s);
/// Quadrature of F_s det g_s = c_s det g_eps, same rule as ma_mass.
double fs_mass(const BackgroundGeometry& bg, const FsChoice& fs);
/// Sum of quadrature weights times the cell area (the "volume").
double grid_volume(const ReducedGrid& grid);

/// max over the compact subset t >= frac * t_min of |d phi|_{Omega^eps}.
double max_gradient_norm(const Field& phi, const BackgroundGeometry& bg,
                         double compact_fraction);

struct StepRecord {
  double s = 0.0;
  double c = 0.0;
  double sup_F = 0.0;
  int iterations = 0;
  double final_residual = 0.0;
  double tolerance = 0.0;
  double mass = 0.0;
  double mass_expected = 0.0;
  double mass_over_c = 0.0;
  bool sandwich_applicable = false;
  double sandwich_min = 0.0;     // min phi_s
  double sandwich_excess = 0.0;  // max(phi_s - Phi_hat)
  std::optional<double> cauchy;  // sup |phi_s - phi_prev| on the compact set
  double grad_max = 0.0;         // max_gradient_norm of the shifted potential
  std::optional<double> oracle_error;  // sup |phi_s - oracle| on the compact set
};

struct ContinuationResult {
  std::vector<PotentialField> fields;  // ordered by decreasing s
  std::vector<StepRecord> steps;
  std::optional<PotentialField> barrier;  // Phi_hat, zero boundary data only
  double barrier_c = 0.0;
  const PotentialField& limit() const { return fields.back(); }
};

/// `reference`: its boundary values are the Dirichlet data; the whole field is
/// the s -> 0 anchor of the warm start phi_init = ref + (s/s_prev)(phi_prev -
/// ref), which stays positive whenever Omega_0 + ddbar ref >= 0. Use the zero
/// field for zero data and the oracle itself for ray runs. `oracle`, if given,
/// is compared on the compact subset at every step. Throws SolverError (with
/// the partial field) when a step fails.
ContinuationResult run_continuation(const BackgroundGeometry& bg,
                                    const ContinuationSchedule& schedule,
                                    const Field& reference,
                                    const Field* oracle = nullptr);

}  // namespace mage

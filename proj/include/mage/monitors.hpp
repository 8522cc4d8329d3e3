#pragma once

// Diagnostics on solved fields: weighted growth fits toward the divisor end,
// maximum-principle scans and the boundary second-derivative barrier.
// All scans take phi_s (the potential against Omega_s); Phi^eps is formed
// internally with shift_to_epsilon_background.

#include "mage/field.hpp"
#include "mage/geometry.hpp"
#include "mage/ma_core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mage {

/// Gradient with one-sided second-order differences where the centered one is
/// unavailable (any node).
Vec2 node_gradient(const Field& f, GridIndex p);
/// Reduced Hessian with one-sided second-order stencils at the boundary.
/// Agrees with reduced_hessian at interior nodes of a centered-stencil grid.
Mat2 node_hessian(const Field& f, GridIndex p);

struct GrowthFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the fit
  int slices = 0;
};

struct MonitorOptions {
  /// Slices with t <= fit_fraction * t_min enter the growth fits (rows next to
  /// the t_min boundary are always excluded).
  double fit_fraction = 0.5;
  double beta_floor = 1e-14;
  bool barrier_theta = true;  // evaluate theta on the collar when Phi >= 0
};

/// log sup_x |d Phi^eps|_{Omega^eps} against log(1/||sigma||^2).
/// Throws InvalidInput with fewer than 4 slices. A potential with vanishing
/// gradient on every slice gives slope 0, intercept -inf and 0 slices.
GrowthFit gradient_growth_fit(const Field& phi_s, const BackgroundGeometry& bg,
                              double s, const MonitorOptions& opts = {});
/// Same for m + Delta Phi^eps = Tr_{Omega^eps} Omega'.
GrowthFit laplacian_growth_fit(const Field& phi_s, const BackgroundGeometry& bg,
                               double s, const MonitorOptions& opts = {});

/// F_s data entering the constants: F1 = 2 sup |d F^{1/m}| and
/// L = max(0, sup(-Delta log F)), both exactly 0 for constant F.
struct RhsBounds {
  bool constant = false;
  double sup_F = 0.0;
  double F1 = 0.0;
  double L = 0.0;
  double sup_dlog_F = 0.0;  // sup |d log F|_{Omega_s}
};
RhsBounds rhs_bounds(const BackgroundGeometry& bg, double s, const Field& F);

/// Slope bound eps * A1 / 2 with A1 = 2 eps (B + F1 + 1).
double gradient_slope_bound(const BackgroundGeometry& bg, double F1);
/// A = 2 (B + b + L).
double yau_aubin_constant(const BackgroundGeometry& bg, double L);

struct ScanResult {
  double interior_max = 0.0;
  GridIndex interior_loc;
  double boundary_max = 0.0;
  GridIndex boundary_loc;
  int skipped = 0;
  double trace_h_inv_at_max = 0.0;  // Yau-Aubin scan only
  double constant = 0.0;            // C of gamma, or A
};

/// alpha = log beta - gamma(Phi^eps), beta = |d Phi^eps|^2_{Omega^eps},
/// C = 1 - inf Phi^eps. Ties resolved to the lowest flat index.
ScanResult blocki_alpha_scan(const Field& phi_s, const BackgroundGeometry& bg,
                             double s, const RhsBounds& f,
                             const MonitorOptions& opts = {});
/// log Tr h - A Phi^eps, h = g_eps^{-1} g'.
ScanResult yau_aubin_scan(const Field& phi_s, const BackgroundGeometry& bg,
                          double s, const RhsBounds& f);

struct BoundaryC2 {
  double lhs = 0.0;  // sup over t = 0 of m + Delta phi (against Omega_s)
  double rhs = 0.0;
  double constant = 0.0;  // C of the inequality
  double K = 0.0;
  double delta = 0.0;
  double N = 0.0;  // twice the lower bound (2 m sup F 2^m)^m
  double collar_t = 0.0;  // collar is t >= collar_t
  bool holds = false;
  bool theta_checked = false;
  double theta_min = 0.0;
  double theta_tol = 0.0;  // 10 h^2
  bool theta_ok = true;
};

/// Requires Dirichlet data phi_s = 0 on t = 0. The barrier theta is only
/// meaningful for phi_s >= 0 (its boundary positivity uses it); otherwise
/// theta_checked stays false.
BoundaryC2 boundary_c2_check(const Field& phi_s, const BackgroundGeometry& bg,
                             double s, const RhsBounds& f,
                             const MonitorOptions& opts = {});

struct SliceProfile {
  double t = 0.0;
  double sigma_sq = 0.0;
  double grad_sup = 0.0;
  double lap_sup = 0.0;
  double alpha_max = 0.0;
  double mass_density = 0.0;  // x-quadrature of det g' on the slice
};

struct MonitorReport {
  double s = 0.0;
  RhsBounds f;
  GrowthFit grad_fit;
  double grad_slope_bound = 0.0;
  GrowthFit lap_fit;
  ScanResult alpha_scan;
  ScanResult ya_scan;
  std::optional<double> sandwich_min;
  std::optional<double> sandwich_excess;
  std::optional<BoundaryC2> boundary_c2;  // absent unless phi_s = 0 on t = 0
  std::vector<SliceProfile> profile;
};

/// Everything above for one solved step. `F` is F_s (all nodes), `barrier`
/// Phi_hat when the sandwich applies.
MonitorReport evaluate_monitors(const Field& phi_s, const BackgroundGeometry& bg,
                                double s, const Field& F,
                                const Field* barrier = nullptr,
                                const MonitorOptions& opts = {});

}  // namespace mage

#pragma once

// Symmetry-reduced domain and background forms.
//
// Everything lives on X x {annulus} reduced by the S^1 actions: the fiber is
// described by one real coordinate r1 (x on the flat torus, rho = log|z1/z0|^2
// on the P^1 model) and the base by t = log|w|^2, so the boundary |w| = 1 is
// t = 0 and the central fiber sits at t = -infinity.
//
// Reduced (1,1)-forms are written in the holomorphic frame (u1, zeta) with
// Re u1 = r1 / (2 d1) and zeta = log w, which turns the complex Hessian of an
// invariant function f(r1, t) into the real symmetric matrix
//
//     [ d1^2 f_11   d1 f_1t ]
//     [ d1 f_1t     f_tt    ]
//
// with d1 = 1/2 on the torus and d1 = 1 on the P^1 model.

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace mage {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

enum class FiberKind { periodic_x, truncated_rho };

std::string to_string(FiberKind kind);
FiberKind fiber_kind_from_string(const std::string& name);

struct GridIndex {
  int i = 0;  // fiber
  int j = 0;  // base, j = nt - 1 is t = 0
};

/// Mixed-derivative stencil. `centered` is the 4-corner average; `antidiagonal`
/// uses the (+1,-1)/(-1,+1) corners and axis neighbors (7 points). When hx = ht
/// a function of r1 + t is constant along the anti-diagonal, so its discrete
/// Hessian is exactly rank one (the product-ray model needs this).
enum class MixedStencil { centered, antidiagonal };

std::string to_string(MixedStencil kind);
MixedStencil mixed_stencil_from_string(const std::string& name);

class ReducedGrid {
 public:
  /// `x_lo`, `x_hi`: [0,1) for the periodic fiber, [-R, R] for the truncated
  /// one. Throws InvalidInput on nx, nt < 8 or t_min >= 0.
  ReducedGrid(FiberKind fiber, int nx, int nt, double x_lo, double x_hi,
              double t_min);

  FiberKind fiber() const { return fiber_; }
  int nx() const { return nx_; }
  int nt() const { return nt_; }
  int size() const { return nx_ * nt_; }
  double x_lo() const { return x_lo_; }
  double x_hi() const { return x_hi_; }
  double t_min() const { return t_min_; }
  double hx() const { return hx_; }
  double ht() const { return ht_; }

  double x(int i) const { return x_lo_ + i * hx_; }
  /// Rows are laid out so that the last row is exactly t = 0.
  double t(int j) const { return j == nt_ - 1 ? 0.0 : t_min_ + j * ht_; }

  /// d1 of the reduced frame: dz/dx factor of the fiber coordinate.
  double fiber_scale() const {
    return fiber_ == FiberKind::periodic_x ? 0.5 : 1.0;
  }
  bool periodic() const { return fiber_ == FiberKind::periodic_x; }
  MixedStencil mixed_stencil() const { return mixed_; }
  ReducedGrid with_mixed_stencil(MixedStencil m) const {
    ReducedGrid g = *this;
    g.mixed_ = m;
    return g;
  }

  int flat(int i, int j) const { return j * nx_ + i; }
  int wrap(int i) const;

  /// Interior means the centered 9-point stencil is available.
  bool interior(int i, int j) const;
  /// Points whose stencil neighbors are themselves interior (nested stencils).
  bool deep_interior(int i, int j) const;

  bool operator==(const ReducedGrid&) const = default;

 private:
  FiberKind fiber_;
  int nx_, nt_;
  double x_lo_, x_hi_, t_min_;
  double hx_, ht_;
  MixedStencil mixed_ = MixedStencil::centered;
};

/// A scalar profile returning the value and its first four derivatives.
using Profile = std::function<std::array<double, 5>(double)>;

Profile constant_profile(double c);
/// a * e^t
Profile exponential_profile(double a);
/// a * t^2 / 2
Profile quadratic_profile(double a);
/// Fubini-Study coefficient e^rho / (1 + e^rho)^2 of the P^1 model.
Profile fubini_study_profile();
/// Second difference of log(1 + e^rho) with spacing h: the fiber form the
/// discrete Hessian actually sees, so pullbacks of Fubini-Study potentials stay
/// exactly semipositive on the grid. Entries 1..4 are exact derivatives.
Profile discrete_fubini_study_profile(double h);

struct BackgroundGeometry {
  ReducedGrid grid;
  /// Fiber coefficient of Omega_0 as a function of r1.
  Profile lambda;
  /// Optional non-pullback part of Omega_0 (reduced matrix at (r1, t)).
  std::function<Mat2(double, double)> omega0_extra;
  double epsilon = 1.0;
  /// psi(t) = epsilon * log H, so Omega^eps = Omega_0 + (i/2) ddbar psi.
  Profile reg_potential;
  double kappa = 0.0;
  double B = 0.0;  // lower bisectional curvature bound is -B
  double b = 0.0;  // scalar curvature upper bound

  Mat2 omega0(double r1, double t) const;
  Mat2 omega_eps(double r1, double t) const;
  Mat2 omega_s(double r1, double t, double s) const;

  Mat2 omega0_at(GridIndex p) const { return omega0(grid.x(p.i), grid.t(p.j)); }
  Mat2 omega_eps_at(GridIndex p) const {
    return omega_eps(grid.x(p.i), grid.t(p.j));
  }
  Mat2 omega_s_at(GridIndex p, double s) const {
    return omega_s(grid.x(p.i), grid.t(p.j), s);
  }

  /// True when Omega_0 = lambda(r1) dz dzbar and psi depends on t only, so
  /// every Omega_s is a product of two one-dimensional metrics.
  bool product_diagonal() const { return !omega0_extra; }

  /// ||sigma||^2 = |w|^2 H = exp(t + psi(t) / epsilon).
  double sigma_norm_sq(double t) const;
  /// d/dt log ||sigma||^2.
  double dlog_sigma_norm_sq(double t) const;

  /// Throws InvalidInput / PositivityError when an invariant fails.
  void validate() const;
};

/// Builds the product background with Omega_0 = lambda dz dzbar, a
/// regularization psi = epsilon * kappa * e^t and kappa chosen so that the
/// minimum eigenvalue of Omega^eps on the grid is at least `floor_fraction`
/// times min lambda.
BackgroundGeometry make_product_background(const ReducedGrid& grid,
                                           Profile lambda, double epsilon,
                                           double B, double b,
                                           double floor_fraction = 0.1);

/// Background flat-torus fiber with constant lambda.
BackgroundGeometry make_flat_torus_background(const ReducedGrid& grid,
                                              double lambda, double epsilon,
                                              double B, double b);

/// Background P^1 model; the fiber form is discrete_fubini_study_profile(hx).
BackgroundGeometry make_p1_background(const ReducedGrid& grid, double epsilon,
                                      double B, double b);

/// Minimum eigenvalue of a symmetric 2x2 matrix.
double min_eigenvalue(const Mat2& m);

/// Coefficients of Omega_s on the grid.
struct FamilyForm {
  double s = 0.0;
  ReducedGrid grid;
  std::vector<Mat2> coeffs;  // flat grid index
  double min_eigenvalue = 0.0;
};

/// Omega_s = (1 - s) Omega_0 + s Omega^eps, checked positive for s > 0.
FamilyForm build_omega_s(const BackgroundGeometry& bg, double s);

/// ||sigma||^2(t); total on t <= 0.
double divisor_norm(const BackgroundGeometry& bg, double t);

/// Test-configuration model: product configuration of P^1 with C^* acting with
/// weight `a`, glued to the trivial one by a cutoff in |w|.
struct TestConfigModel {
  int weight = 1;
  double eta_inner = 1.0 / 3.0;
  double eta_outer = 2.0 / 3.0;
  double alpha_h = 4.0;
  int k = 2;  // epsilon = 1 / k
  double B = 4.0;
  double b = 0.0;
  /// Psi == 0 (trivial gluing) regardless of the weight.
  bool trivial_gluing = false;
};

/// Smooth cutoff eta(t): 1 for |w| <= inner, 0 for |w| >= outer.
/// Returns value, d/dt, d^2/dt^2.
std::array<double, 3> cutoff_eta(const TestConfigModel& model, double t);

/// Required minimal alpha_H for nonnegativity on the grid, reported in the
/// error raised by build_test_config_form.
double required_alpha(const TestConfigModel& model, const ReducedGrid& grid);

/// Omega_0 = ddbar[ log(1 + e^rho) + eta Psi + alpha (e^t - 1) ] on the
/// P^1 model grid.
BackgroundGeometry build_test_config_form(const TestConfigModel& model,
                                          const ReducedGrid& grid);

}  // namespace mage

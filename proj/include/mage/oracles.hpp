#pragma once

// Reference solutions. Geodesic oracles solve the homogeneous equation
// against Omega_0 (s = 0); manufactured ones carry their own right side.

#include "mage/field.hpp"
#include "mage/geometry.hpp"
#include "mage/solvers.hpp"

#include <functional>

namespace mage {

/// phi = c t. Pluriharmonic, so its reduced Hessian vanishes identically.
PotentialField pluriharmonic_ray(double c, const ReducedGrid& grid);

/// phi = log(1 + e^{rho + a t}) - log(1 + e^rho) on the P^1 model.
/// Throws InvalidInput for a periodic grid or a < 0.
PotentialField product_ray(int a, const ReducedGrid& grid);
double product_ray_value(int a, double rho, double t);

/// Endpoint symplectic potential on (0, 1):
///   u(y) = y log y + (1 - y) log(1 - y) + quad (y - 1/2)^2 + lin y.
/// Strictly convex iff quad > -2.
struct ToricEndpoint {
  double quad = 0.0;
  double lin = 0.0;
};

/// Legendre transform of the affine path u_t = (1 + t/T) u1 - (t/T) u0,
/// T = -t_min, minus log(1 + e^rho): u_0 at t = 0 is u1 and at t_min is u0.
PotentialField toric_segment(const ToricEndpoint& u0, const ToricEndpoint& u1,
                             const ReducedGrid& grid);
double toric_segment_value(const ToricEndpoint& u0, const ToricEndpoint& u1,
                           double t_min, double rho, double t);

/// phi* = (amp sin(2 pi freq x + phase) + radial) (e^t - 1)(t - t_min);
/// zero at both t-ends, periodic in x for integer freq.
struct ManufacturedSpec {
  double amp = 0.1;
  int freq = 1;
  double phase = 0.0;
  double radial = 0.0;
};

double manufactured_value(const ManufacturedSpec& m, double t_min, double x,
                          double t);
/// Exact reduced Hessian and gradient of phi*.
Mat2 manufactured_hessian(const ManufacturedSpec& m, const ReducedGrid& grid,
                          double x, double t);
Vec2 manufactured_gradient(const ManufacturedSpec& m, const ReducedGrid& grid,
                           double x, double t);

struct Manufactured {
  PotentialField phi;
  Field rhs;  // det(Omega_s + exact Hessian) / det Omega^eps
};

/// Throws PositivityError if g'(phi*) is not positive at some interior node.
Manufactured manufactured(const ManufacturedSpec& m,
                          const BackgroundGeometry& bg, double s);

/// max over interior nodes of |det(Omega_0 + ddbar phi)|.
double max_hma_determinant(const Field& phi, const BackgroundGeometry& bg);

struct RefinementCheck {
  double coarse = 0.0;
  double fine = 0.0;
  double ratio = 0.0;
  bool ok = false;  // ratio in [3.2, 4.8]
};

/// Error quantity on `coarse` and on the grid with halved spacings.
RefinementCheck refinement_check(
    const ReducedGrid& coarse,
    const std::function<double(const ReducedGrid&)>& error_on);

/// The halved-spacing grid (2n - 1 nodes when truncated, 2n when periodic).
ReducedGrid refined(const ReducedGrid& grid);

/// HMA residual refinement of product_ray / toric_segment against the P^1
/// background; throws InvalidInput ("oracle rejected") if the two-grid ratio
/// leaves [3.2, 4.8], unless both residuals are at rounding level (<= 1e-11,
/// an exact discrete solution).
RefinementCheck verify_product_ray(int a, const ReducedGrid& coarse);
RefinementCheck verify_toric_segment(const ToricEndpoint& u0,
                                     const ToricEndpoint& u1,
                                     const ReducedGrid& coarse);

}  // namespace mage

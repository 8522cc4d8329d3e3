#pragma once

// Pointwise Monge-Ampere algebra on the reduced grid.
//
// Conventions: Omega = (i/2) g_{k bar j} dz^j ^ dzbar^k, Omega' = Omega +
// (i/2) ddbar Phi, h = g^{-1} g'. The reduced frame is described in
// geometry.hpp; every matrix produced from grid data is real symmetric, while
// the generic algebra below accepts complex Hermitian m x m input.

#include "mage/field.hpp"
#include "mage/geometry.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace mage {

using HMat = Eigen::MatrixXcd;

// ---------------------------------------------------------------------------
// Generic m x m algebra

/// h = g^{-1} g'.
HMat endomorphism(const HMat& g, const HMat& g_prime);
/// Eigenvalues of h, i.e. of g' relative to g, ascending. Real because h is
/// similar to a Hermitian matrix.
Eigen::VectorXd relative_eigenvalues(const HMat& g, const HMat& g_prime);
double trace_h(const HMat& g, const HMat& g_prime);
double trace_h_inverse(const HMat& g, const HMat& g_prime);
/// (g')^{j kbar} f_{j kbar}.
double laplacian_prime(const HMat& g_prime, const HMat& f_hessian);

/// The bracketed quantity of Yau's inequality,
///   sum_{pq} W_{pq} Tr(Y_p h^{-1} Y_q^*) / Tr h - |Tr Y|_W^2 / (Tr h)^2,
/// where W = (g')^{-1}, Y_p = nabla'_p h and Y^* is the g'-adjoint of Y.
double yau_basic_quantity(const HMat& g_prime, const HMat& h,
                          const std::vector<HMat>& dh);

struct HermitianPair {
  HMat g;
  HMat g_prime;
  HMat h;
  double lambda1 = 0.0;  // ascending eigenvalues of h
  double lambda2 = 0.0;
  bool g_prime_positive = false;

  double det_h() const { return lambda1 * lambda2; }
  double trace_h() const { return lambda1 + lambda2; }
  double trace_h_inv() const { return 1.0 / lambda1 + 1.0 / lambda2; }
};

/// Throws PositivityError if g is not positive definite.
HermitianPair make_hermitian_pair(const HMat& g, const HMat& g_prime);

// ---------------------------------------------------------------------------
// Grid stencils

/// Centered-difference reduced complex Hessian; interior points only.
Mat2 reduced_hessian(const Field& phi, GridIndex p);
/// (d_u1 phi, d_zeta phi) by centered differences; interior points only.
Vec2 reduced_gradient(const Field& phi, GridIndex p);

enum class BackgroundChoice { family, epsilon };

/// g from Omega_s (or Omega^eps), g' = g + reduced Hessian of phi.
HermitianPair assemble_pair(const BackgroundGeometry& bg, double s,
                            const Field& phi, GridIndex p,
                            BackgroundChoice choice = BackgroundChoice::family);

/// Laplacian of f with respect to g' for the reduced pair.
double laplacian_prime(const HermitianPair& pair, const Mat2& f_hessian);

// ---------------------------------------------------------------------------
// Closed-form geometry of product backgrounds

/// Christoffel symbols and curvature of a product-diagonal metric
/// g = diag(g1(r1), g2(t)); only Gamma^k_{kk} and R_{k kbar k kbar} survive.
struct ProductMetricJet {
  Mat2 g;
  Vec2 christoffel;   // Gamma^k_{kk} = d_k log g_kk
  Vec2 dlog_det;      // d_k log det g
  Vec2 curvature;     // R_{k kbar k kbar} = -g_kk d_k dkbar log g_kk
  Mat2 dg[2];         // d_k g
  double scalar_curvature() const;
};

ProductMetricJet product_metric_jet(const BackgroundGeometry& bg, double s,
                                    double r1, double t);

// ---------------------------------------------------------------------------
// gamma(x) = (B + F1 + 1) x - 1/(x + C)

struct GammaParams {
  double B = 0.0;
  double F1 = 0.0;
  double C = 1.0;
};

struct GammaValue {
  double value, first, second;
};

/// Requires x >= 1 - C (throws InvalidInput for x <= -C).
GammaValue gamma_fn(double x, const GammaParams& params);

// ---------------------------------------------------------------------------
// Identities

struct BlockiSides {
  double lhs = 0.0;   // Delta' alpha by nested differences
  double rhs = 0.0;   // full right side of the direct calculation
  /// Right side of the critical-point inequality; lhs >= this at interior
  /// critical points of alpha.
  double critical_lower_bound = 0.0;
  double beta = 0.0;
  double alpha = 0.0;
  double mixed_norm_holo = 0.0;  // |nabla nabla Phi|^2_{Omega Omega'}
  double mixed_norm_cplx = 0.0;  // |nabla-bar nabla Phi|^2_{Omega Omega'}
};

/// Both sides of Blocki's identity for the equation (Omega_s + ddbar phi)^m =
/// F Omega_s^m, F := det g' / det g. Needs a product-diagonal background,
/// s > 0, a deep interior point, beta > 0 and g' > 0.
BlockiSides blocki_sides(const Field& phi, const BackgroundGeometry& bg,
                         double s, GridIndex p, const GammaParams& gamma);

struct YauAubinSides {
  double lhs = 0.0;          // Delta' log Tr h by nested differences
  double rhs = 0.0;          // curvature, Delta log F and bracket terms
  double basic_ineq = 0.0;   // bracket, >= 0
  double trace_h = 0.0;
  double trace_h_inv = 0.0;
  double ya_lhs = 0.0;       // Delta'(log Tr h - A phi)
  double ya_bound = 0.0;     // (A/2) Tr h^{-1} - m A
};

YauAubinSides yau_aubin_sides(const Field& phi, const BackgroundGeometry& bg,
                              double s, GridIndex p, double A);

}  // namespace mage

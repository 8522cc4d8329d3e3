#pragma once

// Identity suite: discrete checks of the pointwise identities behind the
// maximum-principle estimates, on manufactured fields over the flat torus.

#include "mage/oracles.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mage {

enum class SuiteField { manufactured, random };

struct IdentitySuiteOptions {
  int n = 128;           // coarse grid: n x (n + 1) nodes; fine grid halves both
  int cases = 10;
  double s = 0.5;
  double lambda = 1.0, epsilon = 0.5, B = 4.0, b = 0.0, t_min = -2.0;
  int stride = 8;        // sample every stride-th coarse node
  double beta_fraction = 0.1;  // Blocki samples need beta >= this * sup beta
  int pairs = 1000000;   // random Hermitian pairs for the basic inequality
  std::uint64_t seed = 1;
  SuiteField field = SuiteField::manufactured;
  std::vector<std::string> only;  // check names to run; empty = all
};

struct IdentityCheck {
  std::string name;
  bool applicable = true;
  bool pass = false;
  double coarse = 0.0;  // error on the coarse grid (or the worst value)
  double fine = 0.0;
  double ratio = 0.0;
  std::string note;
};

/// Parameters of case k; amplitudes stay small enough for g' > 0 at s = 0.5.
ManufacturedSpec suite_case(int k, SuiteField field, std::uint64_t seed);

/// min of the basic-inequality bracket over random pairs with m in {2, 3}
/// and derivatives carrying the Kahler symmetry.
double basic_inequality_min(int pairs, std::uint64_t seed);

/// Check names: blocki, yau_aubin, delta_prime, basic_inequality.
/// Blocki is reported not applicable on random (non-solution) fields.
std::vector<IdentityCheck> run_identity_suite(const IdentitySuiteOptions& opts);

}  // namespace mage

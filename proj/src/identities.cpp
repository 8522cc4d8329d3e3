#include "mage/identities.hpp"

#include "mage/error.hpp"
#include "mage/ma_core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mage {

ManufacturedSpec suite_case(int k, SuiteField field, std::uint64_t seed) {
  if (field == SuiteField::manufactured)
    return {0.02 + 0.003 * k, 1, 0.6 * k, 0.01 * (k % 3)};
  std::mt19937_64 rng(seed + 7919u * static_cast<std::uint64_t>(k));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {0.02 + 0.03 * u(rng), 1, 6.283185307179586 * u(rng), 0.03 * u(rng)};
}

double basic_inequality_min(int pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  auto rnd = [&](int m) {
    HMat a(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) a(i, j) = {nd(rng), nd(rng)};
    return a;
  };
  double out = std::numeric_limits<double>::infinity();
  for (int k = 0; k < pairs; ++k) {
    const int m = 2 + k % 2;
    const HMat a = rnd(m), b = rnd(m);
    const HMat g = a * a.adjoint() + 0.1 * HMat::Identity(m, m);
    const HMat gp = b * b.adjoint() + 0.1 * HMat::Identity(m, m);
    const HMat g_inv = g.inverse();
    // T_{i jbar p} symmetric in (i, p), as for derivatives of a Kahler metric
    std::vector<HMat> t;
    for (int p = 0; p < m; ++p) t.push_back(rnd(m));
    std::vector<HMat> dh;
    for (int p = 0; p < m; ++p) {
      HMat d(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) d(i, j) = t[p](i, j) + t[i](p, j);
      dh.push_back(g_inv * d);
    }
    out = std::min(out, yau_basic_quantity(gp, g_inv * gp, dh));
  }
  return out;
}

namespace {

struct CaseErrors {
  double blocki = 0.0;
  double ya = 0.0;
  double delta_prime = 0.0;
  int blocki_points = 0;
};

CaseErrors case_errors(const ReducedGrid& g, int scale, const ManufacturedSpec& ms,
                       const IdentitySuiteOptions& o, int coarse_n) {
  const BackgroundGeometry bg = make_flat_torus_background(g, o.lambda, o.epsilon, o.B, o.b);
  const Manufactured man = manufactured(ms, bg, o.s);
  const Field& phi = man.phi.phi;
  const double inf_phi = *std::min_element(phi.values.begin(), phi.values.end());
  const GammaParams gam{o.B, 0.0, 2.0 - inf_phi};
  const double A = 2.0 * (o.B + o.b);

  std::vector<GridIndex> pts;
  for (int J = o.stride; J < coarse_n; J += o.stride)
    for (int I = 0; I < coarse_n; I += o.stride) pts.push_back({I * scale, J * scale});

  std::vector<BlockiSides> bs;
  double beta_sup = 0.0;
  for (const GridIndex& p : pts) {
    bs.push_back(blocki_sides(phi, bg, o.s, p, gam));
    beta_sup = std::max(beta_sup, bs.back().beta);
  }
  CaseErrors e;
  for (size_t k = 0; k < pts.size(); ++k) {
    if (bs[k].beta >= o.beta_fraction * beta_sup) {
      e.blocki = std::max(e.blocki, std::abs(bs[k].lhs - bs[k].rhs));
      ++e.blocki_points;
    }
    const YauAubinSides ya = yau_aubin_sides(phi, bg, o.s, pts[k], A);
    e.ya = std::max(e.ya, std::abs(ya.lhs - ya.rhs));
    const HermitianPair pair = assemble_pair(bg, o.s, phi, pts[k]);
    const double lap = laplacian_prime(pair, reduced_hessian(phi, pts[k]));
    e.delta_prime = std::max(e.delta_prime, std::abs(lap - (2.0 - pair.trace_h_inv())));
  }
  return e;
}

bool wanted(const IdentitySuiteOptions& o, const std::string& name) {
  return o.only.empty() || std::find(o.only.begin(), o.only.end(), name) != o.only.end();
}

IdentityCheck ratio_check(std::string name, double c, double f) {
  IdentityCheck out;
  out.name = std::move(name);
  out.coarse = c;
  out.fine = f;
  out.ratio = c / f;
  out.pass = out.ratio >= 3.2 && out.ratio <= 4.8;
  return out;
}

}  // namespace

std::vector<IdentityCheck> run_identity_suite(const IdentitySuiteOptions& o) {
  if (o.n < 16 || o.cases < 1 || o.stride < 1 || o.pairs < 0)
    throw InvalidInput("identity suite: bad sizes");
  for (const auto& name : o.only)
    if (name != "blocki" && name != "yau_aubin" && name != "delta_prime" &&
        name != "basic_inequality")
      throw InvalidInput("identity suite: unknown check '" + name + "'");

  std::vector<IdentityCheck> out;
  const bool need_fields =
      wanted(o, "blocki") || wanted(o, "yau_aubin") || wanted(o, "delta_prime");
  if (need_fields) {
    const ReducedGrid gc(FiberKind::periodic_x, o.n, o.n + 1, 0.0, 1.0, o.t_min);
    const ReducedGrid gf(FiberKind::periodic_x, 2 * o.n, 2 * o.n + 1, 0.0, 1.0, o.t_min);
    double dp_worst = 0.0;
    for (int k = 0; k < o.cases; ++k) {
      const ManufacturedSpec ms = suite_case(k, o.field, o.seed);
      const CaseErrors c = case_errors(gc, 1, ms, o, o.n);
      const CaseErrors f = case_errors(gf, 2, ms, o, o.n);
      const std::string tag = "[" + std::to_string(k) + "]";
      if (wanted(o, "blocki")) {
        if (o.field == SuiteField::random) {
          IdentityCheck na;
          na.name = "blocki" + tag;
          na.applicable = false;
          na.note = "equality needs a Monge-Ampere solution";
          out.push_back(na);
        } else {
          out.push_back(ratio_check("blocki" + tag, c.blocki, f.blocki));
          out.back().note = std::to_string(c.blocki_points) + " points";
        }
      }
      if (wanted(o, "yau_aubin")) out.push_back(ratio_check("yau_aubin" + tag, c.ya, f.ya));
      dp_worst = std::max({dp_worst, c.delta_prime, f.delta_prime});
    }
    if (wanted(o, "delta_prime")) {
      IdentityCheck dp;
      dp.name = "delta_prime";
      dp.coarse = dp_worst;
      dp.pass = dp_worst <= 1e-12;
      out.push_back(dp);
    }
  }
  if (wanted(o, "basic_inequality")) {
    IdentityCheck bi;
    bi.name = "basic_inequality";
    bi.coarse = basic_inequality_min(o.pairs, o.seed);
    bi.pass = bi.coarse >= -1e-12;
    bi.note = std::to_string(o.pairs) + " pairs";
    out.push_back(bi);
  }
  return out;
}

}  // namespace mage

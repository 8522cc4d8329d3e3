#include "mage/config.hpp"

#include "mage/error.hpp"

#include <algorithm>
#include <cmath>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mage {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"model.fiber", "torus", "torus (periodic x, d1 = 1/2) or p1 (rho in [-R, R])"},
      {"model.lambda", "1", "torus fiber metric constant"},
      {"model.rho_max", "3", "p1 truncation R"},
      {"model.t_min", "-2", "inner end of the annulus in t = log|w|^2"},
      {"model.epsilon", "0.5", "regularization epsilon = 1/k"},
      {"model.B", "4", "bisectional curvature bound"},
      {"model.b", "0", "scalar curvature bound"},
      {"model.mixed_stencil", "auto", "auto | centered | antidiagonal"},
      {"grid.nx", "64", "fiber nodes (power of two, 16..1024)"},
      {"grid.nt", "64", "t nodes (power of two, 16..1024)"},
      {"schedule.s", "1", "s for the single solve"},
      {"schedule.s_first", "0.1", "first continuation s"},
      {"schedule.s_last", "1e-4", "last continuation s"},
      {"schedule.steps", "7", "geometric schedule length"},
      {"schedule.first_step_stages", "4", "right-side homotopy stages for step one"},
      {"schedule.compact_fraction", "0.5", "compact subset t >= fraction * t_min"},
      {"solver.newton_tol", "1e-10", "max-norm log-residual tolerance"},
      {"solver.max_iters", "50", "Newton iteration cap"},
      {"solver.line_search_shrink", "0.5", "damping factor per rejected step"},
      {"solver.min_eig_floor", "1e-14", "positivity floor for g'"},
      {"solver.roundoff_factor", "1", "multiplier on the rounding-noise floor; 0 disables"},
      {"solver.linear_solver", "direct", "direct | iterative"},
      {"boundary.source", "zero", "zero | oracle | file | manufactured"},
      {"boundary.oracle", "product_ray", "product_ray | pluriharmonic | toric"},
      {"boundary.weight", "1", "product ray weight a"},
      {"boundary.pluriharmonic_c", "1", "slope c of phi = c t"},
      {"boundary.toric_u0_quad", "0", "toric endpoint at t_min"},
      {"boundary.toric_u0_lin", "0", ""},
      {"boundary.toric_u1_quad", "0.5", "toric endpoint at t = 0"},
      {"boundary.toric_u1_lin", "0.3", ""},
      {"boundary.manufactured_amp", "0.1", "phi* amplitude"},
      {"boundary.manufactured_freq", "1", ""},
      {"boundary.manufactured_phase", "0", ""},
      {"boundary.manufactured_radial", "0", ""},
      {"boundary.file", "", "field CSV (i,j,x,t,value) for source = file"},
      {"monitors.enabled", "true", "evaluate monitors after each step"},
      {"monitors.fit_fraction", "0.5", "growth fits use t <= fraction * t_min"},
      {"monitors.beta_floor", "1e-14", "alpha scan skips beta below this"},
      {"monitors.barrier_theta", "true", "evaluate the boundary barrier theta"},
      {"monitors.barrier_offset", "0", "subtracted from the barrier (test hook)"},
      {"verify.checks", "all", "comma list of blocki, yau_aubin, delta_prime, basic_inequality"},
      {"verify.field", "manufactured", "manufactured | random"},
      {"verify.n", "128", "coarse grid of the two-grid study"},
      {"verify.cases", "10", "manufactured fields"},
      {"verify.s", "0.5", "family parameter for the identity fields"},
      {"verify.pairs", "1000000", "random Hermitian pairs"},
      {"compare.tolerance", "5e-3", "final sup error allowed against the oracle"},
      {"run.seed", "1", "seed for randomized checks"},
  };
  return keys;
}

namespace {

bool known_key(const std::string& name) {
  const auto& keys = config_keys();
  return std::any_of(keys.begin(), keys.end(),
                     [&](const ConfigKey& k) { return k.name == name; });
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigValues::ConfigValues() {
  for (const auto& k : config_keys()) entries_[k.name] = {k.default_value, "default"};
}

void ConfigValues::set(const std::string& name, const std::string& value,
                       const std::string& where) {
  if (!known_key(name)) throw ConfigError(where + ": unknown key '" + name + "'");
  entries_[name] = {value, where};
}

void ConfigValues::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      const std::string prefix = section + ".";
      const auto& keys = config_keys();
      if (!std::any_of(keys.begin(), keys.end(), [&](const ConfigKey& k) {
            return k.name.rfind(prefix, 0) == 0;
          }))
        throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside a [section]");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    set(section + "." + key, trim(line.substr(eq + 1)), where);
  }
}

void ConfigValues::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path);
}

void ConfigValues::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "': expected section.key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), "override");
}

const std::string& ConfigValues::get(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown key '" + name + "'");
  return it->second.value;
}

const std::string& ConfigValues::where(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown key '" + name + "'");
  return it->second.where;
}

std::vector<std::pair<std::string, std::string>> ConfigValues::resolved() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : config_keys()) out.emplace_back(k.name, get(k.name));
  return out;
}

namespace {

class Reader {
 public:
  explicit Reader(const ConfigValues& v) : v_(v) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(v_.where(key) + ": " + key + ": " + msg);
  }
  const std::string& str(const std::string& key) const { return v_.get(key); }
  double real(const std::string& key) const {
    const std::string& s = str(key);
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(x))
      fail(key, "expected a finite number, got '" + s + "'");
    return x;
  }
  long long integer(const std::string& key) const {
    const std::string& s = str(key);
    char* end = nullptr;
    errno = 0;
    const long long x = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || errno == ERANGE)
      fail(key, "expected an integer, got '" + s + "'");
    return x;
  }
  int small_int(const std::string& key, long long lo, long long hi) const {
    const long long x = integer(key);
    if (x < lo || x > hi)
      fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(x);
  }
  bool boolean(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    fail(key, "expected true or false, got '" + s + "'");
  }
  template <class E>
  E choice(const std::string& key,
           const std::vector<std::pair<std::string, E>>& options) const {
    const std::string& s = str(key);
    for (const auto& [name, e] : options)
      if (name == s) return e;
    std::string list;
    for (const auto& o : options) list += (list.empty() ? "" : " | ") + o.first;
    fail(key, "expected " + list + ", got '" + s + "'");
  }

 private:
  const ConfigValues& v_;
};

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

}  // namespace

RunConfig resolve_config(const ConfigValues& values) {
  const Reader r(values);
  RunConfig c;
  c.fiber = r.choice<FiberKind>("model.fiber", {{"torus", FiberKind::periodic_x},
                                               {"p1", FiberKind::truncated_rho}});
  c.lambda = r.real("model.lambda");
  c.rho_max = r.real("model.rho_max");
  c.t_min = r.real("model.t_min");
  c.epsilon = r.real("model.epsilon");
  c.B = r.real("model.B");
  c.b = r.real("model.b");
  if (!(c.lambda > 0.0)) r.fail("model.lambda", "must be > 0");
  if (!(c.rho_max > 0.0)) r.fail("model.rho_max", "must be > 0");
  if (!(c.t_min < 0.0)) r.fail("model.t_min", "must be < 0");
  if (!(c.epsilon > 0.0 && c.epsilon <= 1.0)) r.fail("model.epsilon", "must lie in (0, 1]");
  const std::string mixed = r.str("model.mixed_stencil");
  if (mixed == "auto")
    c.mixed = c.fiber == FiberKind::truncated_rho ? MixedStencil::antidiagonal
                                                  : MixedStencil::centered;
  else
    c.mixed = r.choice<MixedStencil>("model.mixed_stencil",
                                     {{"centered", MixedStencil::centered},
                                      {"antidiagonal", MixedStencil::antidiagonal}});

  c.nx = r.small_int("grid.nx", 16, 1024);
  c.nt = r.small_int("grid.nt", 16, 1024);
  if (!power_of_two(c.nx)) r.fail("grid.nx", "must be a power of two");
  if (!power_of_two(c.nt)) r.fail("grid.nt", "must be a power of two");

  c.s_solve = r.real("schedule.s");
  c.s_first = r.real("schedule.s_first");
  c.s_last = r.real("schedule.s_last");
  c.steps = r.small_int("schedule.steps", 1, 1000);
  c.first_step_stages = r.small_int("schedule.first_step_stages", 1, 1000);
  c.compact_fraction = r.real("schedule.compact_fraction");
  if (!(c.s_solve > 0.0 && c.s_solve <= 1.0)) r.fail("schedule.s", "must lie in (0, 1]");
  if (!(c.s_first > 0.0 && c.s_first <= 1.0)) r.fail("schedule.s_first", "must lie in (0, 1]");
  if (!(c.s_last > 0.0 && c.s_last <= c.s_first))
    r.fail("schedule.s_last", "must lie in (0, s_first]");
  if (c.steps > 1 && !(c.s_last < c.s_first))
    r.fail("schedule.s_last", "must be < s_first for more than one step");
  if (!(c.compact_fraction > 0.0 && c.compact_fraction <= 1.0))
    r.fail("schedule.compact_fraction", "must lie in (0, 1]");

  c.solve.newton_tol = r.real("solver.newton_tol");
  c.solve.max_iters = r.small_int("solver.max_iters", 1, 100000);
  c.solve.line_search_shrink = r.real("solver.line_search_shrink");
  c.solve.min_eig_floor = r.real("solver.min_eig_floor");
  c.solve.roundoff_factor = r.real("solver.roundoff_factor");
  c.solve.linear_solver = r.choice<LinearSolverKind>(
      "solver.linear_solver", {{"direct", LinearSolverKind::direct_sparse},
                               {"iterative", LinearSolverKind::iterative_diagonal}});
  try {
    c.solve.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("[solver]: ") + e.what());
  }

  c.source = r.choice<BoundarySource>("boundary.source",
                                      {{"zero", BoundarySource::zero},
                                       {"oracle", BoundarySource::oracle},
                                       {"file", BoundarySource::file},
                                       {"manufactured", BoundarySource::manufactured}});
  c.oracle = r.choice<OracleKind>("boundary.oracle",
                                  {{"product_ray", OracleKind::product_ray},
                                   {"pluriharmonic", OracleKind::pluriharmonic},
                                   {"toric", OracleKind::toric}});
  c.weight = r.small_int("boundary.weight", 0, 64);
  c.pluriharmonic_c = r.real("boundary.pluriharmonic_c");
  c.toric_u0 = {r.real("boundary.toric_u0_quad"), r.real("boundary.toric_u0_lin")};
  c.toric_u1 = {r.real("boundary.toric_u1_quad"), r.real("boundary.toric_u1_lin")};
  c.manufactured = {r.real("boundary.manufactured_amp"),
                    r.small_int("boundary.manufactured_freq", 0, 1024),
                    r.real("boundary.manufactured_phase"),
                    r.real("boundary.manufactured_radial")};
  c.file = r.str("boundary.file");
  if (c.source == BoundarySource::file) {
    if (c.file.empty()) r.fail("boundary.file", "required for source = file");
    if (!std::filesystem::exists(c.file)) r.fail("boundary.file", "no such file '" + c.file + "'");
  }
  if (c.source == BoundarySource::oracle && c.oracle != OracleKind::pluriharmonic &&
      c.fiber != FiberKind::truncated_rho)
    r.fail("boundary.oracle", to_string(c.oracle) + " needs model.fiber = p1");

  c.monitors = r.boolean("monitors.enabled");
  c.monitor.fit_fraction = r.real("monitors.fit_fraction");
  c.monitor.beta_floor = r.real("monitors.beta_floor");
  c.monitor.barrier_theta = r.boolean("monitors.barrier_theta");
  c.barrier_offset = r.real("monitors.barrier_offset");
  if (!(c.monitor.fit_fraction > 0.0 && c.monitor.fit_fraction < 1.0))
    r.fail("monitors.fit_fraction", "must lie in (0, 1)");

  const std::string checks = r.str("verify.checks");
  if (checks != "all") c.verify.only = split_list(checks);
  for (const auto& name : c.verify.only)
    if (name != "blocki" && name != "yau_aubin" && name != "delta_prime" &&
        name != "basic_inequality")
      r.fail("verify.checks", "unknown check '" + name + "'");
  c.verify.field = r.choice<SuiteField>(
      "verify.field", {{"manufactured", SuiteField::manufactured}, {"random", SuiteField::random}});
  c.verify.n = r.small_int("verify.n", 16, 1024);
  if (!power_of_two(c.verify.n)) r.fail("verify.n", "must be a power of two");
  c.verify.cases = r.small_int("verify.cases", 1, 1000);
  c.verify.s = r.real("verify.s");
  if (!(c.verify.s > 0.0 && c.verify.s <= 1.0)) r.fail("verify.s", "must lie in (0, 1]");
  c.verify.pairs = r.small_int("verify.pairs", 0, 100000000);
  c.verify.lambda = c.lambda;
  c.verify.epsilon = c.epsilon;
  c.verify.B = c.B;
  c.verify.b = c.b;
  c.verify.t_min = c.t_min;

  c.compare_tolerance = r.real("compare.tolerance");
  if (!(c.compare_tolerance > 0.0)) r.fail("compare.tolerance", "must be > 0");
  const long long seed = r.integer("run.seed");
  if (seed < 0) r.fail("run.seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  c.verify.seed = c.seed;
  return c;
}

ReducedGrid RunConfig::grid() const {
  if (fiber == FiberKind::periodic_x)
    return ReducedGrid(fiber, nx, nt, 0.0, 1.0, t_min).with_mixed_stencil(mixed);
  return ReducedGrid(fiber, nx, nt, -rho_max, rho_max, t_min).with_mixed_stencil(mixed);
}

BackgroundGeometry RunConfig::background() const {
  const ReducedGrid g = grid();
  if (fiber == FiberKind::periodic_x)
    return make_flat_torus_background(g, lambda, epsilon, B, b);
  return make_p1_background(g, epsilon, B, b);
}

ContinuationSchedule RunConfig::schedule() const {
  ContinuationSchedule out = ContinuationSchedule::geometric(s_first, s_last, steps, solve);
  out.compact_fraction = compact_fraction;
  out.first_step_stages = first_step_stages;
  return out;
}

std::string to_string(BoundarySource s) {
  switch (s) {
    case BoundarySource::zero: return "zero";
    case BoundarySource::oracle: return "oracle";
    case BoundarySource::file: return "file";
    case BoundarySource::manufactured: return "manufactured";
  }
  return "?";
}

std::string to_string(OracleKind k) {
  switch (k) {
    case OracleKind::product_ray: return "product_ray";
    case OracleKind::pluriharmonic: return "pluriharmonic";
    case OracleKind::toric: return "toric";
  }
  return "?";
}

}  // namespace mage

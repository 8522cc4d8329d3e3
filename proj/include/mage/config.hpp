#pragma once

// Run configuration: flat `key = value` text grouped under [section] headers,
// '#' comments. Every key has a default; unknown sections or keys are errors.
// Keys are addressed as section.key on the command line (--override).

#include "mage/continuation.hpp"
#include "mage/geometry.hpp"
#include "mage/identities.hpp"
#include "mage/monitors.hpp"
#include "mage/oracles.hpp"
#include "mage/solvers.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mage {

/// Carries "origin:line: message" when the offending text has a line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  std::string name;  // section.key
  std::string default_value;
  std::string doc;
};

/// The documented key table, in output order.
const std::vector<ConfigKey>& config_keys();

/// Raw values after defaults, file and overrides; remembers where each came from.
class ConfigValues {
 public:
  ConfigValues();  // all defaults

  /// Parses config text; `origin` names it in diagnostics.
  void merge_text(const std::string& text, const std::string& origin);
  void merge_file(const std::string& path);
  /// "section.key=value".
  void apply_override(const std::string& assignment);
  void set(const std::string& name, const std::string& value,
           const std::string& where);

  const std::string& get(const std::string& name) const;
  /// "origin:line" or "default" / "override"; used in diagnostics.
  const std::string& where(const std::string& name) const;
  /// All keys with their final values, sorted by the key table.
  std::vector<std::pair<std::string, std::string>> resolved() const;

 private:
  struct Entry {
    std::string value;
    std::string where;
  };
  std::map<std::string, Entry> entries_;
};

enum class BoundarySource { zero, oracle, file, manufactured };
enum class OracleKind { product_ray, pluriharmonic, toric };

struct RunConfig {
  // [model]
  FiberKind fiber = FiberKind::periodic_x;
  double lambda = 1.0;
  double rho_max = 3.0;
  double t_min = -2.0;
  double epsilon = 0.5;
  double B = 4.0;
  double b = 0.0;
  MixedStencil mixed = MixedStencil::centered;
  // [grid]
  int nx = 64;
  int nt = 64;
  // [schedule]
  double s_solve = 1.0;
  double s_first = 1e-1;
  double s_last = 1e-4;
  int steps = 7;
  int first_step_stages = 4;
  double compact_fraction = 0.5;
  // [solver]
  SolveOptions solve;
  // [boundary]
  BoundarySource source = BoundarySource::zero;
  OracleKind oracle = OracleKind::product_ray;
  int weight = 1;
  double pluriharmonic_c = 1.0;
  ToricEndpoint toric_u0, toric_u1;
  ManufacturedSpec manufactured;
  std::string file;
  // [monitors]
  bool monitors = true;
  MonitorOptions monitor;
  double barrier_offset = 0.0;  // subtracted from the barrier (test hook)
  // [verify]
  IdentitySuiteOptions verify;
  // [compare]
  double compare_tolerance = 5e-3;
  // [run]
  std::uint64_t seed = 1;

  ReducedGrid grid() const;
  BackgroundGeometry background() const;
  ContinuationSchedule schedule() const;
};

/// Typed view; throws ConfigError naming the key's origin on bad values or
/// violated invariants (grid sizes powers of two in [16, 1024], files exist).
RunConfig resolve_config(const ConfigValues& values);

std::string to_string(BoundarySource s);
std::string to_string(OracleKind k);

}  // namespace mage

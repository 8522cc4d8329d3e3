#pragma once

// Run orchestration behind the command-line tool. Each command resolves the
// configuration, takes the output directory's lock, writes its files and
// returns the process exit code.

#include "mage/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mage {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,     // bad config, bad input, busy output directory
  kExitSolver = 2,     // solver failure or failed numerical check
  kExitSandwich = 3,   // continuation converged but the sandwich is violated
};

struct CommandRequest {
  std::string command;  // solve | continue | verify | compare
  std::optional<std::string> config_path;
  std::string out_dir = "out";
  std::optional<int> grid;  // sets grid.nx and grid.nt
  std::vector<std::string> overrides;
  std::optional<std::string> threads;  // MAGE_THREADS as read from the environment
};

/// Sandwich tolerances used by the continue command.
inline constexpr double kSandwichMinTol = 1e-8;
inline constexpr double kSandwichExcessTol = 1e-6;

/// Defaults, then the file, then --grid, then overrides in order.
ConfigValues load_config(const CommandRequest& req);

/// Boundary data (and interior start) for the configured source.
Field reference_field(const RunConfig& cfg, const ReducedGrid& grid);

int run_command(const CommandRequest& req, std::ostream& out, std::ostream& err);

}  // namespace mage

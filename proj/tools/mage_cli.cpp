// mage: solve | continue | verify | compare
#include "mage/commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Finite-difference solver for the regularized complex Monge-Ampere family"};
  app.require_subcommand(1, 1);

  mage::CommandRequest req;
  std::string config;
  int grid = 0;
  for (const char* name : {"solve", "continue", "verify", "compare"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", req.out_dir, "output directory")->capture_default_str();
    sub->add_option("--grid", grid, "set grid.nx = grid.nt = N");
    sub->add_option("--override", req.overrides, "section.key=value (repeatable)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mage::kExitConfig;
  }
  req.command = app.get_subcommands().front()->get_name();
  if (!config.empty()) req.config_path = config;
  if (grid != 0) req.grid = grid;
  if (const char* t = std::getenv("MAGE_THREADS")) req.threads = t;
  return mage::run_command(req, std::cout, std::cerr);
}

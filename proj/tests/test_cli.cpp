#include <doctest.h>

#include "mage/commands.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace mage;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mage_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(const std::string& command, const fs::path& dir, std::vector<std::string> overrides,
            std::optional<std::string> threads = std::nullopt) {
  CommandRequest req;
  req.command = command;
  req.out_dir = dir.string();
  req.overrides = std::move(overrides);
  req.threads = std::move(threads);
  std::ostringstream out, err;
  const int code = run_command(req, out, err);
  return {code, out.str(), err.str()};
}

const std::vector<std::string> kSmallTorus = {"grid.nx=16", "grid.nt=16", "schedule.steps=3",
                                             "schedule.s_first=0.1", "schedule.s_last=0.001"};

}  // namespace

TEST_CASE("continue writes deterministic outputs") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const Outcome ra = run("continue", a, kSmallTorus, "1");
  const Outcome rb = run("continue", b, kSmallTorus, "1");
  INFO(ra.err);
  REQUIRE(ra.code == kExitOk);
  REQUIRE(rb.code == kExitOk);
  for (const char* f : {"report.json", "steps.csv", "field.csv", "profile.csv"}) {
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK_FALSE(fs::exists(a / ".mage.lock"));
  const auto doc = nlohmann::json::parse(slurp(a / "report.json"));
  CHECK(doc["schema_version"] == 1);
  CHECK(doc["command"] == "continue");
  CHECK(doc["threads"] == "1");
}

TEST_CASE("manufactured solve succeeds and reports its history") {
  const fs::path d = scratch("solve");
  const Outcome r = run("solve", d, {"grid.nx=32", "grid.nt=32", "boundary.source=manufactured"});
  INFO(r.err);
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(d / "error.csv"));
  const auto doc = nlohmann::json::parse(slurp(d / "report.json"));
  CHECK(doc["threads"] == "unset");
}

TEST_CASE("solve equals continue with a single step") {
  const fs::path a = scratch("one_a"), b = scratch("one_b");
  const std::vector<std::string> o = {"grid.nx=16", "grid.nt=16", "schedule.s=0.5", "schedule.steps=1",
                                      "schedule.s_first=0.5", "schedule.s_last=0.5"};
  REQUIRE(run("solve", a, o).code == kExitOk);
  REQUIRE(run("continue", b, o).code == kExitOk);
  CHECK(slurp(a / "field.csv") == slurp(b / "field.csv"));
}

TEST_CASE("a violated sandwich exits with code 3") {
  std::vector<std::string> o = kSmallTorus;
  o.push_back("monitors.barrier_offset=0.5");
  const Outcome r = run("continue", scratch("sandwich"), o);
  CHECK(r.code == kExitSandwich);
}

TEST_CASE("configuration errors exit with code 1") {
  CHECK(run("continue", scratch("bad_key"), {"grid.bogus=1"}).code == kExitConfig);
  CHECK(run("continue", scratch("bad_val"), {"grid.nx=48"}).code == kExitConfig);
  CHECK(run("nonsense", scratch("bad_cmd"), {}).code == kExitConfig);
  CHECK(run("continue", scratch("bad_threads"), kSmallTorus, "zero").code == kExitConfig);
  CHECK(run("continue", scratch("neg_threads"), kSmallTorus, "-2").code == kExitConfig);
  // compare needs oracle boundary data
  const Outcome c = run("compare", scratch("no_oracle"), kSmallTorus);
  CHECK(c.code == kExitConfig);
  CHECK(c.err.find("oracle") != std::string::npos);

  const fs::path d = scratch("file_line");
  fs::create_directories(d);
  std::ofstream(d / "x.cfg") << "[grid]\nnx = 16\nwat = 2\n";
  CommandRequest req;
  req.command = "continue";
  req.config_path = (d / "x.cfg").string();
  req.out_dir = (d / "out").string();
  std::ostringstream out, err;
  CHECK(run_command(req, out, err) == kExitConfig);
  CHECK(err.str().find("x.cfg:3") != std::string::npos);
}

TEST_CASE("a busy output directory is refused") {
  const fs::path d = scratch("busy");
  fs::create_directories(d);
  std::ofstream(d / ".mage.lock") << "";
  const Outcome r = run("continue", d, kSmallTorus);
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("locked") != std::string::npos);
  CHECK(fs::exists(d / ".mage.lock"));
  CHECK_FALSE(fs::exists(d / "report.json"));
}

TEST_CASE("compare exit code follows the tolerance") {
  const std::vector<std::string> base = {"model.fiber=p1", "model.t_min=-6", "grid.nx=32", "grid.nt=32",
                                         "boundary.source=oracle", "schedule.steps=3",
                                         "schedule.s_first=0.1", "schedule.s_last=0.001"};
  auto with = [&](const std::string& tol) {
    auto o = base;
    o.push_back("compare.tolerance=" + tol);
    return o;
  };
  const Outcome loose = run("compare", scratch("cmp_loose"), with("1"));
  INFO(loose.err);
  CHECK(loose.code == kExitOk);
  CHECK(run("compare", scratch("cmp_tight"), with("1e-14")).code == kExitSolver);
}

TEST_CASE("verify prints one line per check") {
  const Outcome r = run("verify", scratch("verify"), {"verify.checks=basic_inequality", "verify.pairs=100"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("PASS") != std::string::npos);
  CHECK(r.out.find("basic_inequality") != std::string::npos);
}

TEST_CASE("the executable maps parse errors to exit code 1") {
  const std::string exe = MAGE_CLI_PATH;
  const fs::path d = scratch("exe");
  auto code = [](const std::string& cmd) {
    const int st = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  };
  CHECK(code(exe + " --no-such-flag") == 1);
  CHECK(code(exe + " solve --config /no/such/file.cfg") == 1);
  CHECK(code(exe + " verify --out " + d.string() +
             " --override verify.checks=basic_inequality --override verify.pairs=50") == 0);
}

#include "mage/commands.hpp"

#include "mage/error.hpp"
#include "mage/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>

namespace mage {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

ConfigValues load_config(const CommandRequest& req) {
  ConfigValues v;
  if (req.config_path) v.merge_file(*req.config_path);
  if (req.grid) {
    v.set("grid.nx", std::to_string(*req.grid), "--grid");
    v.set("grid.nt", std::to_string(*req.grid), "--grid");
  }
  for (const auto& o : req.overrides) v.apply_override(o);
  return v;
}

Field reference_field(const RunConfig& cfg, const ReducedGrid& grid) {
  switch (cfg.source) {
    case BoundarySource::zero:
      return Field(grid);
    case BoundarySource::file:
      return read_field_csv(cfg.file, grid);
    case BoundarySource::manufactured: {
      const double tm = grid.t_min();
      return Field::sample(grid, [&](double x, double t) {
        return manufactured_value(cfg.manufactured, tm, x, t);
      });
    }
    case BoundarySource::oracle:
      switch (cfg.oracle) {
        case OracleKind::product_ray:
          verify_product_ray(cfg.weight, grid);
          return product_ray(cfg.weight, grid).phi;
        case OracleKind::pluriharmonic:
          return pluriharmonic_ray(cfg.pluriharmonic_c, grid).phi;
        case OracleKind::toric:
          verify_toric_segment(cfg.toric_u0, cfg.toric_u1, grid);
          return toric_segment(cfg.toric_u0, cfg.toric_u1, grid).phi;
      }
  }
  throw InvalidInput("unknown boundary source");
}

namespace {

class DirectoryLock {
 public:
  explicit DirectoryLock(const std::string& dir) : path_(dir + "/.mage.lock") {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) throw ConfigError(dir + ": output directory is locked by another run");
    std::fclose(f);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::string path_;
};

struct Run {
  const CommandRequest& req;
  const ConfigValues& values;
  const RunConfig& cfg;
  std::ostream& out;
  std::string threads;

  std::string path(const std::string& name) const { return req.out_dir + "/" + name; }
  ordered_json header() const { return report_header(req.command, values, threads); }
  void write_report(const ordered_json& doc) const {
    write_text_file(path("report.json"), dump_json(doc));
  }
};

Field difference(const Field& a, const Field& b) {
  Field d = a;
  for (size_t q = 0; q < d.values.size(); ++q) d.values[q] -= b.values[q];
  return d;
}

double sup_abs(const Field& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

int cmd_solve(const Run& run) {
  const RunConfig& cfg = run.cfg;
  const BackgroundGeometry bg = cfg.background();
  const ReducedGrid& g = bg.grid;
  const double s = cfg.s_solve;
  ordered_json doc = run.header();

  if (cfg.source == BoundarySource::manufactured) {
    const Manufactured man = manufactured(cfg.manufactured, bg, s);
    Field init(g);
    for (int j = 0; j < g.nt(); ++j)
      for (int i = 0; i < g.nx(); ++i)
        if (is_boundary_node(g, i, j)) init(i, j) = man.phi.phi(i, j);
    PotentialField sol(g);
    try {
      sol = newton_solve_field(bg, s, man.rhs, init, cfg.solve);
    } catch (const SolverError&) {
      sol = newton_solve_homotopy(bg, s, man.rhs, init, cfg.solve, cfg.first_step_stages);
    }
    const Field err = difference(sol.phi, man.phi.phi);
    write_text_file(run.path("field.csv"), field_csv(sol.phi, "phi"));
    write_text_file(run.path("error.csv"), field_csv(err, "error"));
    doc["solve"] = to_json(sol);
    doc["manufactured_error_max"] = sup_abs(err);
    run.write_report(doc);
    run.out << "solve: converged, residual " << format_double(sol.final_residual)
            << ", max error vs manufactured " << format_double(sup_abs(err)) << '\n';
    return kExitOk;
  }

  // Other sources: one continuation step at s, so that a length-one schedule
  // of `continue` reproduces this field exactly.
  const Field ref = reference_field(cfg, g);
  ContinuationSchedule sched;
  sched.s_values = {s};
  sched.options = {cfg.solve};
  sched.compact_fraction = cfg.compact_fraction;
  sched.first_step_stages = cfg.first_step_stages;
  const ContinuationResult res = run_continuation(bg, sched, ref, nullptr);
  const PotentialField& sol = res.fields.front();
  write_text_file(run.path("field.csv"), field_csv(sol.phi, "phi"));
  doc["solve"] = to_json(sol);
  doc["step"] = to_json(res.steps.front());
  run.write_report(doc);
  run.out << "solve: converged, residual " << format_double(sol.final_residual) << '\n';
  return kExitOk;
}

std::vector<std::vector<double>> step_rows(const ContinuationResult& res, double offset) {
  const double nan = std::nan("");
  std::vector<std::vector<double>> rows;
  for (const auto& r : res.steps)
    rows.push_back({r.s, r.c, static_cast<double>(r.iterations), r.final_residual,
                    r.tolerance, r.mass, r.mass_expected, r.mass_over_c,
                    r.sandwich_applicable ? r.sandwich_min : nan,
                    r.sandwich_applicable ? r.sandwich_excess + offset : nan,
                    r.cauchy.value_or(nan), r.grad_max, r.oracle_error.value_or(nan)});
  return rows;
}

const std::vector<std::string> kStepHeader = {
    "s", "c", "iterations", "final_residual", "tolerance", "mass", "mass_expected",
    "mass_over_c", "sandwich_min", "sandwich_excess", "cauchy", "grad_max", "oracle_error"};

// Step records plus monitors; returns whether the sandwich held throughout.
bool steps_json(const Run& run, const BackgroundGeometry& bg,
                const ContinuationResult& res, ordered_json& doc) {
  const RunConfig& cfg = run.cfg;
  std::optional<Field> barrier;
  if (res.barrier) {
    barrier = res.barrier->phi;
    for (double& v : barrier->values) v -= cfg.barrier_offset;
    doc["barrier"] = {{"c", res.barrier_c}, {"offset", cfg.barrier_offset}};
  } else {
    doc["barrier"] = nullptr;
  }
  bool sandwich_ok = true;
  ordered_json steps = ordered_json::array();
  for (size_t k = 0; k < res.steps.size(); ++k) {
    StepRecord rec = res.steps[k];
    if (rec.sandwich_applicable) {
      rec.sandwich_excess += cfg.barrier_offset;
      if (rec.sandwich_min < -kSandwichMinTol || rec.sandwich_excess > kSandwichExcessTol)
        sandwich_ok = false;
    }
    ordered_json j = to_json(rec);
    if (cfg.monitors) {
      const FsChoice fsc = choose_fs(bg, rec.s);
      try {
        const MonitorReport m = evaluate_monitors(res.fields[k].phi, bg, rec.s, fsc.F,
                                                  barrier ? &*barrier : nullptr, cfg.monitor);
        j["monitors"] = to_json(m);
        if (k + 1 == res.steps.size())
          write_text_file(run.path("profile.csv"), profile_csv(m.profile));
      } catch (const InvalidInput& e) {
        j["monitors"] = {{"error", e.what()}};
      }
    }
    steps.push_back(j);
  }
  doc["steps"] = steps;
  write_text_file(run.path("steps.csv"), table_csv(kStepHeader, step_rows(res, cfg.barrier_offset)));
  return sandwich_ok;
}

int cmd_continue(const Run& run) {
  const RunConfig& cfg = run.cfg;
  const BackgroundGeometry bg = cfg.background();
  const Field ref = reference_field(cfg, bg.grid);
  const bool with_oracle = cfg.source == BoundarySource::oracle;
  const ContinuationResult res =
      run_continuation(bg, cfg.schedule(), ref, with_oracle ? &ref : nullptr);
  ordered_json doc = run.header();
  const bool ok = steps_json(run, bg, res, doc);
  doc["sandwich_ok"] = ok;
  write_text_file(run.path("field.csv"), field_csv(res.limit().phi, "phi"));
  run.write_report(doc);
  run.out << "continue: " << res.steps.size() << " steps converged, final s "
          << format_double(res.steps.back().s) << ", sandwich "
          << (res.barrier ? (ok ? "holds" : "VIOLATED") : "n/a") << '\n';
  return ok ? kExitOk : kExitSandwich;
}

int cmd_compare(const Run& run) {
  const RunConfig& cfg = run.cfg;
  if (cfg.source != BoundarySource::oracle)
    throw ConfigError(run.values.where("boundary.source") +
                      ": boundary.source: compare needs an oracle source");
  const BackgroundGeometry bg = cfg.background();
  const Field oracle = reference_field(cfg, bg.grid);
  const ContinuationResult res = run_continuation(bg, cfg.schedule(), oracle, &oracle);
  ordered_json doc = run.header();
  steps_json(run, bg, res, doc);

  std::vector<std::vector<double>> rows;
  for (const auto& r : res.steps) rows.push_back({r.s, *r.oracle_error});
  write_text_file(run.path("errors.csv"), table_csv({"s", "sup_error"}, rows));
  write_text_file(run.path("error_map.csv"),
                  field_csv(difference(res.limit().phi, oracle), "error"));
  write_text_file(run.path("field.csv"), field_csv(res.limit().phi, "phi"));

  bool monotone = true;
  for (size_t k = 1; k < res.steps.size(); ++k)
    if (!(*res.steps[k].oracle_error < *res.steps[k - 1].oracle_error)) monotone = false;
  const double final_error = *res.steps.back().oracle_error;
  const bool pass = final_error <= cfg.compare_tolerance;
  doc["compare"] = {{"oracle", to_string(cfg.oracle)}, {"final_error", final_error},
                    {"tolerance", cfg.compare_tolerance}, {"monotone", monotone},
                    {"pass", pass}};
  run.write_report(doc);
  run.out << "compare: final sup error " << format_double(final_error) << " (tolerance "
          << format_double(cfg.compare_tolerance) << "), "
          << (monotone ? "monotone" : "not monotone") << '\n';
  return pass ? kExitOk : kExitSolver;
}

int cmd_verify(const Run& run) {
  const std::vector<IdentityCheck> checks = run_identity_suite(run.cfg.verify);
  ordered_json doc = run.header();
  ordered_json arr = ordered_json::array();
  bool all = true;
  for (const auto& c : checks) {
    arr.push_back(to_json(c));
    const char* verdict = !c.applicable ? "N/A " : (c.pass ? "PASS" : "FAIL");
    if (c.applicable && !c.pass) all = false;
    run.out << verdict << ' ' << c.name;
    if (c.applicable) {
      run.out << "  value " << format_double(c.coarse);
      if (c.fine != 0.0) run.out << "  fine " << format_double(c.fine) << "  ratio " << format_double(c.ratio);
    }
    if (!c.note.empty()) run.out << "  (" << c.note << ")";
    run.out << '\n';
  }
  doc["checks"] = arr;
  doc["pass"] = all;
  run.write_report(doc);
  return all ? kExitOk : kExitSolver;
}

std::string resolve_threads(const CommandRequest& req) {
  if (!req.threads) return "unset";
  const std::string& t = *req.threads;
  char* end = nullptr;
  const long n = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || *end != '\0' || n < 1)
    throw ConfigError("MAGE_THREADS: expected a positive integer, got '" + t + "'");
  return std::to_string(n);
}

}  // namespace

int run_command(const CommandRequest& req, std::ostream& out, std::ostream& err) {
  using Handler = int (*)(const Run&);
  Handler handler = nullptr;
  if (req.command == "solve") handler = cmd_solve;
  else if (req.command == "continue") handler = cmd_continue;
  else if (req.command == "verify") handler = cmd_verify;
  else if (req.command == "compare") handler = cmd_compare;
  else {
    err << "error: unknown command '" << req.command << "'\n";
    return kExitConfig;
  }

  ConfigValues values;
  RunConfig cfg;
  std::string threads;
  try {
    values = load_config(req);
    cfg = resolve_config(values);
    threads = resolve_threads(req);
    fs::create_directories(req.out_dir);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const DirectoryLock lock(req.out_dir);
    const Run run{req, values, cfg, out, threads};
    return handler(run);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidInput& e) {
    err << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SolverError& e) {
    err << "solver failure (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return kExitSolver;
  } catch (const PositivityError& e) {
    err << "positivity failure: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace mage

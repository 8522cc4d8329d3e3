#include "mage/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mage {

using nlohmann::ordered_json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

ordered_json num(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(); }

ordered_json num(const std::optional<double>& x) {
  return x ? num(*x) : ordered_json();
}

ordered_json loc(GridIndex p) { return ordered_json::array({p.i, p.j}); }

}  // namespace

std::string field_csv(const Field& f, const std::string& name) {
  std::ostringstream os;
  os << "i,j,x,t," << name << '\n';
  const ReducedGrid& g = f.grid;
  for (int j = 0; j < g.nt(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      os << i << ',' << j << ',' << format_double(g.x(i)) << ','
         << format_double(g.t(j)) << ',' << format_double(f(i, j)) << '\n';
  return os.str();
}

Field read_field_csv(const std::string& path, const ReducedGrid& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open field file");
  Field out(grid);
  std::vector<char> seen(out.values.size(), 0);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) continue;  // header
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw ConfigError(where + "expected 5 columns");
    int i = 0, j = 0;
    double v = 0.0;
    try {
      i = std::stoi(cells[0]);
      j = std::stoi(cells[1]);
      v = std::stod(cells[4]);
    } catch (const std::exception&) {
      throw ConfigError(where + "malformed number");
    }
    if (i < 0 || i >= grid.nx() || j < 0 || j >= grid.nt())
      throw ConfigError(where + "node outside the configured grid");
    if (!std::isfinite(v)) throw ConfigError(where + "non-finite value");
    const size_t q = static_cast<size_t>(grid.flat(i, j));
    if (seen[q]) throw ConfigError(where + "duplicate node");
    seen[q] = 1;
    out.values[q] = v;
  }
  for (char c : seen)
    if (!c) throw ConfigError(path + ": field does not cover the configured grid");
  return out;
}

std::string table_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
  os << '\n';
  for (const auto& row : rows) {
    for (size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_double(row[k]);
    os << '\n';
  }
  return os.str();
}

std::string profile_csv(const std::vector<SliceProfile>& profile) {
  std::vector<std::vector<double>> rows;
  for (const auto& p : profile)
    rows.push_back({p.t, p.sigma_sq, p.grad_sup, p.lap_sup, p.alpha_max, p.mass_density});
  return table_csv({"t", "sigma_sq", "grad_sup", "lap_sup", "alpha_max", "mass_density"}, rows);
}

ordered_json to_json(const StepRecord& r) {
  ordered_json j;
  j["s"] = num(r.s);
  j["c"] = num(r.c);
  j["sup_F"] = num(r.sup_F);
  j["iterations"] = r.iterations;
  j["final_residual"] = num(r.final_residual);
  j["tolerance"] = num(r.tolerance);
  j["mass"] = num(r.mass);
  j["mass_expected"] = num(r.mass_expected);
  j["mass_over_c"] = num(r.mass_over_c);
  if (r.sandwich_applicable) {
    j["sandwich"] = {{"min_phi", num(r.sandwich_min)}, {"max_excess", num(r.sandwich_excess)}};
  } else {
    j["sandwich"] = nullptr;
  }
  j["cauchy"] = num(r.cauchy);
  j["grad_max"] = num(r.grad_max);
  j["oracle_error"] = num(r.oracle_error);
  return j;
}

namespace {

ordered_json fit_json(const GrowthFit& f) {
  return {{"slope", num(f.slope)}, {"intercept", num(f.intercept)},
          {"residual", num(f.residual)}, {"slices", f.slices}};
}

ordered_json scan_json(const ScanResult& s) {
  return {{"interior_max", num(s.interior_max)}, {"interior_loc", loc(s.interior_loc)},
          {"boundary_max", num(s.boundary_max)}, {"boundary_loc", loc(s.boundary_loc)},
          {"skipped", s.skipped}, {"trace_h_inv_at_max", num(s.trace_h_inv_at_max)},
          {"constant", num(s.constant)}};
}

}  // namespace

ordered_json to_json(const MonitorReport& m) {
  ordered_json j;
  j["s"] = num(m.s);
  j["rhs"] = {{"constant", m.f.constant}, {"sup_F", num(m.f.sup_F)}, {"F1", num(m.f.F1)},
              {"L", num(m.f.L)}, {"sup_dlog_F", num(m.f.sup_dlog_F)}};
  j["gradient_fit"] = fit_json(m.grad_fit);
  j["gradient_slope_bound"] = num(m.grad_slope_bound);
  j["laplacian_fit"] = fit_json(m.lap_fit);
  j["alpha_scan"] = scan_json(m.alpha_scan);
  j["yau_aubin_scan"] = scan_json(m.ya_scan);
  if (!m.boundary_c2) {
    j["boundary_c2"] = nullptr;
    return j;
  }
  const BoundaryC2& b = *m.boundary_c2;
  j["boundary_c2"] = {{"lhs", num(b.lhs)}, {"rhs", num(b.rhs)}, {"constant", num(b.constant)},
                      {"K", num(b.K)}, {"delta", num(b.delta)}, {"N", num(b.N)},
                      {"collar_t", num(b.collar_t)}, {"holds", b.holds},
                      {"theta_checked", b.theta_checked},
                      {"theta_min", b.theta_checked ? num(b.theta_min) : ordered_json()},
                      {"theta_tol", num(b.theta_tol)}, {"theta_ok", b.theta_ok}};
  return j;
}

ordered_json to_json(const IdentityCheck& c) {
  ordered_json j;
  j["name"] = c.name;
  j["applicable"] = c.applicable;
  j["pass"] = c.pass;
  j["coarse"] = num(c.coarse);
  j["fine"] = num(c.fine);
  j["ratio"] = num(c.ratio);
  j["note"] = c.note;
  return j;
}

ordered_json to_json(const PotentialField& p) {
  ordered_json hist = ordered_json::array();
  for (const auto& h : p.history)
    hist.push_back({{"residual_max", num(h.residual_max)},
                    {"residual_l2", num(h.residual_l2)},
                    {"step_length", num(h.step_length)},
                    {"min_eigenvalue", num(h.min_eigenvalue)}});
  return {{"s", num(p.s)}, {"converged", p.converged},
          {"final_residual", num(p.final_residual)}, {"tolerance", num(p.tolerance)},
          {"iterations", static_cast<int>(p.history.size()) - 1}, {"history", hist}};
}

ordered_json report_header(const std::string& command, const ConfigValues& values,
                           const std::string& threads) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = command;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : values.resolved()) cfg[k] = v;
  j["config"] = cfg;
  j["threads"] = threads;
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string dump_json(const ordered_json& doc) { return doc.dump(2) + "\n"; }

}  // namespace mage

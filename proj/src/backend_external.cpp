// Adapter for external MILP engines: model out as LP text, solver run as a
// subprocess, solution file read back and re-priced against the instance.
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "bioproc/common.hpp"
#include "bioproc/lp_text.hpp"
#include "bioproc/solver.hpp"

namespace bioproc {

namespace fs = std::filesystem;

namespace {

std::string substitute(const std::string& tmpl, const std::string& key,
                       const std::string& value, int& hits) {
  std::string out;
  size_t pos = 0;
  while (true) {
    size_t at = tmpl.find(key, pos);
    if (at == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      return out;
    }
    out.append(tmpl, pos, at - pos);
    out.append(value);
    pos = at + key.size();
    ++hits;
  }
}

struct TempDir {
  fs::path path;
  ~TempDir() {
    if (path.empty()) return;
    std::error_code ec;
    fs::remove_all(path, ec);  // best effort
  }
};

}  // namespace

SolveResult solve_external(const MilpInstance& mi, const ExternalBackend& backend,
                           const SolveRequest& req) {
  (void)req;  // limits are the external engine's own business
  if (backend.command.empty())
    throw BackendError("external backend command is empty");

  static std::atomic<unsigned> counter{0};
  fs::path base = backend.workdir.empty() ? fs::temp_directory_path()
                                          : fs::path(backend.workdir);
  TempDir dir;
  dir.path = base / ("milp-ext-" + std::to_string((unsigned)::getpid()) + "-" +
                     std::to_string(counter.fetch_add(1)));
  std::error_code ec;
  fs::create_directories(dir.path, ec);
  if (ec)
    throw BackendError("cannot create work directory " + dir.path.string() +
                       ": " + ec.message());

  fs::path lp_path = dir.path / "model.lp";
  fs::path sol_path = dir.path / "model.sol";
  write_file(lp_path.string(), export_lp_text(mi));

  int lp_hits = 0, sol_hits = 0;
  std::string cmd = substitute(backend.command, "{lp}", lp_path.string(), lp_hits);
  cmd = substitute(cmd, "{sol}", sol_path.string(), sol_hits);
  if (lp_hits == 0 || sol_hits == 0)
    throw BackendError("backend command template must contain {lp} and {sol}");

  int rc = std::system(cmd.c_str());
  if (rc != 0)
    throw BackendError("external solver exited with status " +
                       std::to_string(rc));
  if (!fs::exists(sol_path))
    throw BackendError("external solver wrote no solution file");

  ParsedSolution sol = parse_solution_text(read_file(sol_path.string()));

  SolveResult res;
  if (sol.status == "infeasible") {
    res.status = SolveStatus::Infeasible;
    return res;
  }
  if (sol.status == "unbounded") {
    res.status = SolveStatus::Unbounded;
    return res;
  }
  if (sol.status == "time_limit" || sol.status == "timeout")
    res.status = SolveStatus::TimeLimit;
  else if (sol.status == "iter_limit" || sol.status == "node_limit")
    res.status = SolveStatus::IterLimit;
  else if (sol.status == "optimal")
    res.status = SolveStatus::Optimal;
  else
    throw BackendError("external solver reported unknown status '" +
                       sol.status + "'");

  res.values.assign(mi.vars.size(), 0.0);
  int unknown = 0, missing = 0;
  std::vector<char> seen(mi.vars.size(), 0);
  for (const auto& [name, value] : sol.values) {
    int j = mi.var_index(name);
    if (j < 0) { ++unknown; continue; }
    res.values[j] = value;
    seen[j] = 1;
  }
  for (char s : seen)
    if (!s) ++missing;
  double obj = mi.obj_constant;
  for (size_t j = 0; j < mi.vars.size(); ++j)
    obj += mi.vars[j].obj * res.values[j];
  res.objective = obj;
  res.has_solution = true;
  if (sol.has_objective &&
      std::fabs(sol.objective - obj) > 1e-6 * std::max(1.0, std::fabs(obj)))
    res.message += "reported objective " + format_double(sol.objective) +
                   " re-priced to " + format_double(obj) + "; ";
  if (unknown > 0)
    res.message += std::to_string(unknown) + " unknown variable names ignored; ";
  if (missing > 0)
    res.message += std::to_string(missing) + " variables absent, taken as 0; ";
  return res;
}

}  // namespace bioproc

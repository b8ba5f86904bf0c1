// MILP solving facade: the branch-and-bound backend over the sparse
// simplex, a fully independent exact reference solver (DFS with unit
// propagation plus a dense LP at the leaves), an arithmetic row checker,
// and an adapter that shells out to an external solver binary.
#pragma once

#include <string>
#include <vector>

#include "bioproc/milp.hpp"
#include "bioproc/simplex.hpp"

namespace bioproc {

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit, TimeLimit, Error };

const char* solve_status_name(SolveStatus s);

struct SolveRequest {
  double time_limit_sec = 0.0;  // 0 = no wall-clock limit (deterministic runs)
  double gap_abs = 1e-9;
  double gap_rel = 1e-9;
  double int_tol = 1e-6;
  long max_nodes = 50000000;
  bool log = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Error;
  double objective = 0.0;
  double best_bound = 0.0;
  bool has_solution = false;
  std::vector<double> values;  // one per instance variable when has_solution
  long nodes = 0;
  long lp_iterations = 0;
  std::string message;
};

// One-shot solve with the internal backend.
SolveResult solve(const MilpInstance& mi, const SolveRequest& req = {});

// Reusable solving session: keeps the simplex basis across calls so that
// objective-only updates (penalty reweighting) restart warm.
class MilpSession {
 public:
  explicit MilpSession(const MilpInstance& mi);
  ~MilpSession();
  MilpSession(const MilpSession&) = delete;
  MilpSession& operator=(const MilpSession&) = delete;

  void set_objective(int var, double coeff);
  SolveResult solve(const SolveRequest& req = {});

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct OracleOptions {
  long max_leaves = 200000;      // enumeration guard
  double prop_tol = 1e-9;
  double obj_tie_tol = 1e-12;
};

// Exact reference: monotone fixing, then depth-first enumeration of the
// remaining binaries with unit propagation over all-binary rows, and the
// dense LP on each completed assignment. Independent of solve()'s machinery.
SolveResult oracle_solve(const MilpInstance& mi, const OracleOptions& opt = {});

struct RowCheckReport {
  double max_row_violation = 0.0;
  std::string worst_row;
  double max_bound_violation = 0.0;
  std::string worst_bound_var;
  double max_integrality_gap = 0.0;
  std::string worst_integrality_var;
  double recomputed_objective = 0.0;

  bool within(double tol) const {
    return max_row_violation <= tol && max_bound_violation <= tol &&
           max_integrality_gap <= tol;
  }
};

// Substitutes the values into every row/bound independently of any solver
// state. The parallel version splits rows across threads; per-row invariant
// arithmetic is identical, so both return bit-equal reports.
RowCheckReport check_solution_serial(const MilpInstance& mi,
                                     const std::vector<double>& x);
RowCheckReport check_solution_parallel(const MilpInstance& mi,
                                       const std::vector<double>& x);

struct ExternalBackend {
  // Command template; {lp} and {sol} are replaced with file paths.
  std::string command;
  std::string workdir;  // empty = system temp dir
};

// Exports the instance, runs the command, reads the solution file back,
// maps values by variable name, and recomputes the objective. Throws
// BackendError on process or protocol failures.
SolveResult solve_external(const MilpInstance& mi, const ExternalBackend& backend,
                           const SolveRequest& req = {});

}  // namespace bioproc

// Bounded-variable revised primal simplex over a sparse LP, with
// LU-factorized basis (refreshed periodically) and product-form updates
// between refreshes. Supports warm starts across bound and objective
// changes, which the branch-and-bound layer and the penalty search lean on.
#pragma once

#include <memory>
#include <vector>

#include "bioproc/milp.hpp"

namespace bioproc {

// Computational form: minimize c'x subject to row senses and variable
// bounds. Column-compressed matrix over the structural variables.
struct LpProblem {
  int n = 0;  // structural variables
  int m = 0;  // rows
  std::vector<double> c, lb, ub;       // size n
  std::vector<RowSense> sense;         // size m
  std::vector<double> rhs;             // size m
  std::vector<int> col_start;          // size n+1
  std::vector<int> row_index;          // nnz
  std::vector<double> value;           // nnz
  double obj_constant = 0.0;
};

// Relaxes integrality: binaries become [lb,ub] continuous columns.
LpProblem make_lp(const MilpInstance& mi);

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit, Numerical };

const char* lp_status_name(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::Numerical;
  double objective = 0.0;
  std::vector<double> x;      // structural values
  std::vector<double> duals;  // one per row
  int iterations = 0;
};

struct SimplexOptions {
  double feas_tol = 1e-7;
  double opt_tol = 1e-7;
  int max_iter = 0;          // 0 = automatic from problem size
  int refactor_every = 96;
};

class SimplexSolver {
 public:
  SimplexSolver(const LpProblem& lp, SimplexOptions opt = {});
  ~SimplexSolver();
  SimplexSolver(const SimplexSolver&) = delete;
  SimplexSolver& operator=(const SimplexSolver&) = delete;

  // Structural-variable bound override (branch-and-bound node setup).
  void set_bounds(int j, double lo, double hi);
  void reset_bounds();  // back to the problem's own bounds
  double lower_bound_of(int j) const;
  double upper_bound_of(int j) const;

  // Objective coefficient override (penalty reweighting). Keeps the basis.
  void set_objective(int j, double c);

  // Solves from the current basis (first call starts on the logical basis).
  LpResult solve();

  long total_iterations() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bioproc

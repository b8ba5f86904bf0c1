// Self-contained dense bounded-variable simplex, used by the exact
// reference solver. Deliberately independent of the sparse engine: explicit
// dense basis inverse, first-blocking ratio tests, no warm starts.
#pragma once

#include "bioproc/simplex.hpp"

namespace bioproc {

struct DenseLpOptions {
  double feas_tol = 1e-8;
  double opt_tol = 1e-9;
  int max_iter = 200000;
  // Guard against accidentally huge instances: (n+m)*m must stay under this.
  size_t max_cells = 40000000;
};

LpResult dense_lp_solve(const LpProblem& lp, const DenseLpOptions& opt = {});

}  // namespace bioproc

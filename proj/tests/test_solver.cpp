// The branch-and-bound backend against the exhaustive reference solver:
// hand-built integer programs with known optima, a seeded paired sweep,
// propagation structure checks, and the arithmetic row checker in both
// its serial and parallel form.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "bioproc/common.hpp"
#include "bioproc/milp.hpp"
#include "bioproc/solver.hpp"
#include "tiny_instances.hpp"

using namespace bioproc;

namespace {

MilpInstance knapsack() {
  // max 4a+5b+6c+7d st 3a+4b+5c+6d <= 10 -> pick {a:4? } best b+d = 12
  MilpInstance mi;
  const double v[4] = {4, 5, 6, 7};
  const double w[4] = {3, 4, 5, 6};
  int cap = mi.add_row("cap", RowSense::LE, 10, RowFamily::Plumbing);
  for (int i = 0; i < 4; ++i) {
    int j = mi.add_var("item" + std::to_string(i), 0, 1, true, {}, -v[i]);
    mi.add_term(cap, j, w[i]);
  }
  return mi;
}

}  // namespace

TEST_CASE("knapsack optimum found by both solvers") {
  MilpInstance mi = knapsack();
  SolveResult bb = solve(mi);
  REQUIRE(bb.status == SolveStatus::Optimal);
  CHECK(bb.objective == doctest::Approx(-12.0).epsilon(1e-9));
  REQUIRE(bb.has_solution);
  RowCheckReport rep = check_solution_serial(mi, bb.values);
  CHECK(rep.within(1e-6));
  CHECK(rep.recomputed_objective == doctest::Approx(bb.objective));

  SolveResult ex = oracle_solve(mi);
  REQUIRE(ex.status == SolveStatus::Optimal);
  CHECK(ex.objective == doctest::Approx(-12.0).epsilon(1e-9));
}

TEST_CASE("integer-infeasible model rejected by both solvers") {
  // 2x + 2y = 3 has fractional-only solutions; x,y binary.
  MilpInstance mi;
  int x = mi.add_var("x", 0, 1, true, {}, 1);
  int y = mi.add_var("y", 0, 1, true, {}, 1);
  int r = mi.add_row("odd", RowSense::EQ, 3, RowFamily::Plumbing);
  mi.add_term(r, x, 2);
  mi.add_term(r, y, 2);
  CHECK(solve(mi).status == SolveStatus::Infeasible);
  CHECK(oracle_solve(mi).status == SolveStatus::Infeasible);
}

TEST_CASE("integral relaxation short-circuits to the relaxation value") {
  // Interval structure keeps the relaxation integral: x1+x2 >= 1, x2+x3 >= 1
  // with costs 1, 1.5, 1 -> x1 = x3 = 1 cost 2 (x2=1 alone costs 1.5 but
  // covers both: optimal is x2 = 1, cost 1.5).
  MilpInstance mi;
  int x1 = mi.add_var("x1", 0, 1, true, {}, 1);
  int x2 = mi.add_var("x2", 0, 1, true, {}, 1.5);
  int x3 = mi.add_var("x3", 0, 1, true, {}, 1);
  int r1 = mi.add_row("cov1", RowSense::GE, 1, RowFamily::Plumbing);
  mi.add_term(r1, x1, 1);
  mi.add_term(r1, x2, 1);
  int r2 = mi.add_row("cov2", RowSense::GE, 1, RowFamily::Plumbing);
  mi.add_term(r2, x2, 1);
  mi.add_term(r2, x3, 1);
  SolveResult bb = solve(mi);
  REQUIRE(bb.status == SolveStatus::Optimal);
  CHECK(bb.objective == doctest::Approx(1.5));
  SolveResult ex = oracle_solve(mi);
  REQUIRE(ex.status == SolveStatus::Optimal);
  CHECK(ex.objective == doctest::Approx(1.5));
}

TEST_CASE("reference solver enforces its size preconditions") {
  {
    MilpInstance mi;
    int r = mi.add_row("r", RowSense::LE, 20, RowFamily::Plumbing);
    for (int i = 0; i < 25; ++i) {
      int j = mi.add_var("b" + std::to_string(i), 0, 1, true, {}, -1);
      mi.add_term(r, j, 1);
    }
    SolveResult res = oracle_solve(mi);
    CHECK(res.status == SolveStatus::Error);
    CHECK(res.message.find("limit") != std::string::npos);
  }
  {
    MilpInstance mi;
    for (int i = 0; i < 2001; ++i)
      mi.add_var("x" + std::to_string(i), 0, 1, false, {}, 1);
    SolveResult res = oracle_solve(mi);
    CHECK(res.status == SolveStatus::Error);
  }
}

TEST_CASE("chained binaries collapse to linear enumeration") {
  // z_t <= z_{t-1} over 20 binaries plus one coupling row. Propagation
  // must reduce 2^20 assignments to the 21 monotone prefixes.
  MilpInstance mi;
  const int T = 20;
  std::vector<int> z(T);
  for (int t = 0; t < T; ++t)
    z[t] = mi.add_var("z" + std::to_string(t), 0, 1, true, {}, 1.0);
  for (int t = 1; t < T; ++t) {
    int r = mi.add_row("chain" + std::to_string(t), RowSense::LE, 0,
                       RowFamily::RunMonotone);
    mi.add_term(r, z[t], 1);
    mi.add_term(r, z[t - 1], -1);
  }
  // Require at least 5 active periods through a continuous link.
  int load = mi.add_var("load", 0, 100, false, {}, 0.0);
  int cap = mi.add_row("cap", RowSense::LE, 0, RowFamily::Plumbing);
  mi.add_term(cap, load, 1);
  for (int t = 0; t < T; ++t) mi.add_term(cap, z[t], -3.0);
  int need = mi.add_row("need", RowSense::GE, 15, RowFamily::Plumbing);
  mi.add_term(need, load, 1);

  SolveResult ex = oracle_solve(mi);
  REQUIRE(ex.status == SolveStatus::Optimal);
  CHECK(ex.objective == doctest::Approx(5.0));  // 5 periods of 3 units cover 15
  CHECK(ex.nodes <= T + 1);

  SolveResult bb = solve(mi);
  REQUIRE(bb.status == SolveStatus::Optimal);
  CHECK(bb.objective == doctest::Approx(5.0));
}

TEST_CASE("seeded paired sweep: backend equals reference") {
  int optimal = 0, infeasible = 0;
  for (uint64_t seed = 1; seed <= 250; ++seed) {
    CAPTURE(seed);
    MilpInstance mi = testgen::random_milp(seed, seed > 125);

    SolveResult ex = oracle_solve(mi);
    if (ex.status == SolveStatus::Unbounded || ex.status == SolveStatus::Error)
      continue;  // open rays and blown budgets carry no comparison value

    SolveResult bb = solve(mi);
    REQUIRE(bb.status == ex.status);
    if (ex.status == SolveStatus::Optimal) {
      ++optimal;
      const double scale = std::max(1.0, std::fabs(ex.objective));
      REQUIRE_MESSAGE(std::fabs(bb.objective - ex.objective) <= 1e-6 * scale,
                      "backend ", bb.objective, " vs reference ", ex.objective);
      REQUIRE(bb.has_solution);
      RowCheckReport rep = check_solution_serial(mi, bb.values);
      REQUIRE(rep.max_row_violation <= 1e-6);
      REQUIRE(rep.max_bound_violation <= 1e-6);
      REQUIRE(rep.max_integrality_gap <= 1e-6);
      RowCheckReport rex = check_solution_serial(mi, ex.values);
      REQUIRE(rex.max_row_violation <= 1e-6);
    } else if (ex.status == SolveStatus::Infeasible) {
      ++infeasible;
    }
  }
  CHECK(optimal >= 100);
  CHECK(infeasible >= 20);
}

TEST_CASE("serial and parallel checkers return identical reports") {
  for (uint64_t seed = 1; seed <= 40; ++seed) {
    CAPTURE(seed);
    MilpInstance mi = testgen::random_milp(seed, true);
    SolveResult bb = solve(mi);
    if (!bb.has_solution) continue;
    RowCheckReport a = check_solution_serial(mi, bb.values);
    RowCheckReport b = check_solution_parallel(mi, bb.values);
    CHECK(a.max_row_violation == b.max_row_violation);
    CHECK(a.worst_row == b.worst_row);
    CHECK(a.max_bound_violation == b.max_bound_violation);
    CHECK(a.max_integrality_gap == b.max_integrality_gap);
    CHECK(a.recomputed_objective == b.recomputed_objective);
  }
}

TEST_CASE("checker flags a deliberately broken point") {
  MilpInstance mi = knapsack();
  SolveResult bb = solve(mi);
  REQUIRE(bb.has_solution);
  std::vector<double> bad = bb.values;
  bad[0] = 0.5;  // fractional binary
  RowCheckReport rep = check_solution_serial(mi, bad);
  CHECK(rep.max_integrality_gap == doctest::Approx(0.5));
  CHECK_FALSE(rep.within(1e-6));
}

TEST_CASE("session keeps answers consistent through objective swaps") {
  MilpInstance mi = testgen::random_milp(777, true);
  MilpSession session(mi);
  SolveResult first = session.solve();
  REQUIRE(first.status == SolveStatus::Optimal);

  // Shift a few coefficients, warm-resolve, compare to a cold solve of the
  // modified instance.
  MilpInstance modified = mi;
  for (int j = 0; j < (int)mi.vars.size() && j < 3; ++j) {
    double c = mi.vars[j].obj + 1.0 + j;
    modified.vars[j].obj = c;
    session.set_objective(j, c);
  }
  SolveResult warm = session.solve();
  SolveResult cold = solve(modified);
  REQUIRE(warm.status == cold.status);
  if (warm.status == SolveStatus::Optimal)
    CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-7));

  // And back: restoring the original coefficients restores the original answer.
  for (int j = 0; j < (int)mi.vars.size() && j < 3; ++j)
    session.set_objective(j, mi.vars[j].obj);
  SolveResult again = session.solve();
  REQUIRE(again.status == first.status);
  CHECK(again.objective == doctest::Approx(first.objective).epsilon(1e-9));
}

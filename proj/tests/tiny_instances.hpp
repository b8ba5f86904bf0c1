// Seeded random instance makers shared by the solver-level suites.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "bioproc/common.hpp"
#include "bioproc/milp.hpp"

namespace testgen {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = (double)(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

// anchored=true pins each right-hand side around a random interior point,
// guaranteeing feasibility; anchored=false leaves the rhs free so the
// infeasible path gets exercised too.
inline bioproc::MilpInstance random_lp(uint64_t seed, bool anchored) {
  using namespace bioproc;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(mix_seed(seed, anchored ? 18 : 17));
  MilpInstance mi;
  const int n = 1 + (int)(rng() % 14);
  const int m = (int)(rng() % 13);
  std::vector<double> x0(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double lb, ub;
    const int kind = (int)(rng() % 10);
    if (kind == 0) lb = -kInf;
    else if (kind <= 4) lb = 0.0;
    else lb = -uniform(rng, 0.0, 5.0);
    const int ukind = (int)(rng() % 10);
    if (ukind <= 1) ub = kInf;
    else ub = (lb == -kInf ? 0.0 : lb) + uniform(rng, 0.0, 10.0);
    const double c = uniform(rng, -5.0, 5.0);
    mi.add_var("v" + std::to_string(j), lb, ub, false, {}, c);
    const double a = lb == -kInf ? std::min(0.0, ub) - 2.0 : lb;
    const double b = ub == kInf ? a + 4.0 : ub;
    x0[j] = a + uniform(rng, 0.1, 0.9) * (b - a);
  }
  for (int r = 0; r < m; ++r) {
    const RowSense sense =
        rng() % 3 == 0 ? RowSense::LE : (rng() % 2 == 0 ? RowSense::GE : RowSense::EQ);
    double rhs = uniform(rng, -10.0, 10.0);
    const int row = mi.add_row("c" + std::to_string(r), sense, rhs, RowFamily::Plumbing);
    const int k = 1 + (int)(rng() % std::min(n, 5));
    double activity = 0.0;
    for (int t = 0; t < k; ++t) {
      const int j = (int)(rng() % n);
      double a = uniform(rng, -4.0, 4.0);
      if (std::fabs(a) < 0.1) a = a < 0 ? -0.1 : 0.1;
      mi.add_term(row, j, a);
      activity += a * x0[j];
    }
    if (anchored) {
      double slack = uniform(rng, 0.0, 3.0);
      if (sense == RowSense::LE) rhs = activity + slack;
      else if (sense == RowSense::GE) rhs = activity - slack;
      else rhs = activity;
      mi.rows[row].rhs = rhs;
    }
  }
  return mi;
}

// Mixed-integer variant: a subset of the variables becomes binary; the
// anchor point uses 0/1 coordinates there so anchored instances stay
// integer-feasible by construction.
inline bioproc::MilpInstance random_milp(uint64_t seed, bool anchored) {
  using namespace bioproc;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(mix_seed(seed, anchored ? 29 : 28));
  MilpInstance mi;
  const int n = 2 + (int)(rng() % 10);
  const int m = 1 + (int)(rng() % 8);
  std::vector<double> x0(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const bool binary = rng() % 3 != 0;  // two thirds binary
    double lb = 0.0, ub;
    if (binary) ub = 1.0;
    else {
      lb = rng() % 4 == 0 ? -uniform(rng, 0.0, 3.0) : 0.0;
      ub = rng() % 8 == 0 ? kInf : lb + uniform(rng, 0.5, 8.0);
    }
    const double c = uniform(rng, -5.0, 5.0);
    mi.add_var("v" + std::to_string(j), lb, ub, binary, {}, c);
    if (binary) x0[j] = (double)(rng() & 1);
    else {
      const double b = ub == kInf ? lb + 4.0 : ub;
      x0[j] = lb + uniform(rng, 0.1, 0.9) * (b - lb);
    }
  }
  for (int r = 0; r < m; ++r) {
    const RowSense sense =
        rng() % 2 == 0 ? RowSense::LE : (rng() % 3 == 0 ? RowSense::EQ : RowSense::GE);
    double rhs = uniform(rng, -8.0, 8.0);
    const int row = mi.add_row("c" + std::to_string(r), sense, rhs, RowFamily::Plumbing);
    const int k = 1 + (int)(rng() % std::min(n, 5));
    double activity = 0.0;
    for (int t = 0; t < k; ++t) {
      const int j = (int)(rng() % n);
      double a = uniform(rng, -4.0, 4.0);
      if (std::fabs(a) < 0.1) a = a < 0 ? -0.1 : 0.1;
      mi.add_term(row, j, a);
      activity += a * x0[j];
    }
    if (anchored) {
      double slack = uniform(rng, 0.0, 2.0);
      if (sense == RowSense::LE) rhs = activity + slack;
      else if (sense == RowSense::GE) rhs = activity - slack;
      else rhs = activity;
      mi.rows[row].rhs = rhs;
    }
  }
  return mi;
}

}  // namespace testgen

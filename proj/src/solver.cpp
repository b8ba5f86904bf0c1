#include "bioproc/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

#include "bioproc/common.hpp"

namespace bioproc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BinaryInfo {
  int var = -1;
  bool up_safe = false;    // raising to 1 cannot break any row or worsen the objective
  bool down_safe = false;  // same for lowering to 0
};

// Column-wise safety scan: a binary whose objective coefficient and row
// coefficients all pull in one direction never needs branching; its
// fractional LP value can be rounded that way after the continuous
// variables are re-polished.
std::vector<BinaryInfo> binary_safety(const LpProblem& lp,
                                      const MilpInstance& mi) {
  std::vector<BinaryInfo> out;
  for (int j = 0; j < lp.n; ++j) {
    if (!mi.vars[j].binary) continue;
    BinaryInfo bi;
    bi.var = j;
    bool up = lp.c[j] <= 0.0;
    bool down = lp.c[j] >= 0.0;
    for (int k = lp.col_start[j]; k < lp.col_start[j + 1]; ++k) {
      int r = lp.row_index[k];
      double a = lp.value[k];
      switch (lp.sense[r]) {
        case RowSense::LE:
          if (a > 0.0) up = false;
          if (a < 0.0) down = false;
          break;
        case RowSense::GE:
          if (a < 0.0) up = false;
          if (a > 0.0) down = false;
          break;
        case RowSense::EQ:
          if (a != 0.0) { up = false; down = false; }
          break;
      }
      if (!up && !down) break;
    }
    bi.up_safe = up;
    bi.down_safe = down;
    out.push_back(bi);
  }
  return out;
}

struct BnbNode {
  double bound = -kInf;  // parent LP objective (root: -inf)
  long seq = 0;
  std::vector<std::pair<int, double>> fixes;  // (var, value) along the path
};

struct NodeOrder {
  bool operator()(const BnbNode& a, const BnbNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
    return a.seq > b.seq;                              // then FIFO
  }
};

struct BnbContext {
  LpProblem* lp = nullptr;  // costs are swapped out during feasibility probes
  const MilpInstance* mi = nullptr;
  SimplexSolver* solver = nullptr;
  std::vector<BinaryInfo> binaries;
};

void apply_node(const BnbContext& cx, const BnbNode& node) {
  cx.solver->reset_bounds();
  for (const auto& [var, val] : node.fixes) cx.solver->set_bounds(var, val, val);
}

double evaluate_objective(const LpProblem& lp, const std::vector<double>& x) {
  double s = lp.obj_constant;
  for (int j = 0; j < lp.n; ++j) s += lp.c[j] * x[j];
  return s;
}

// Rounds safe binaries, fixes every binary at its rounded value, and
// re-solves the continuous part so coupled variables land exactly on the
// values the integral point implies.
bool polish_candidate(const BnbContext& cx, const BnbNode& node,
                      std::vector<double>& x, double int_tol, double& obj_out,
                      long& lp_iters, int& branch_fallback) {
  branch_fallback = -1;
  int first_rounded = -1;
  for (const auto& bi : cx.binaries) {
    double v = x[bi.var];
    double r = std::round(v);
    if (std::fabs(v - r) > int_tol) {
      if (bi.up_safe) r = 1.0;
      else if (bi.down_safe) r = 0.0;
      else return false;  // caller branches on it
      if (first_rounded < 0) first_rounded = bi.var;
    }
    x[bi.var] = r;
  }
  apply_node(cx, node);
  for (const auto& bi : cx.binaries)
    cx.solver->set_bounds(bi.var, x[bi.var], x[bi.var]);
  long before = cx.solver->total_iterations();
  LpResult polished = cx.solver->solve();
  lp_iters += cx.solver->total_iterations() - before;
  if (polished.status != LpStatus::Optimal) {
    // Sign-safe rounding keeps every row satisfied, so this only triggers
    // on numerical trouble; branching on the first rounded binary makes
    // progress instead of silently pruning.
    branch_fallback = first_rounded;
    return false;
  }
  x = polished.x;
  for (const auto& bi : cx.binaries) x[bi.var] = std::round(x[bi.var]);
  obj_out = evaluate_objective(*cx.lp, x);
  return true;
}

SolveResult branch_and_bound(BnbContext& cx, const SolveRequest& req,
                             bool probe_allowed = true) {
  SolveResult res;
  const auto t0 = std::chrono::steady_clock::now();
  auto out_of_time = [&]() {
    if (req.time_limit_sec <= 0.0) return false;
    std::chrono::duration<double> el = std::chrono::steady_clock::now() - t0;
    return el.count() > req.time_limit_sec;
  };

  std::priority_queue<BnbNode, std::vector<BnbNode>, NodeOrder> open;
  long seq = 0;
  open.push(BnbNode{-kInf, seq++, {}});

  double incumbent_obj = kInf;
  std::vector<double> incumbent;
  bool root_done = false;

  while (!open.empty()) {
    double cutoff = incumbent_obj == kInf
                        ? kInf
                        : incumbent_obj -
                              std::max(req.gap_abs,
                                       req.gap_rel * std::fabs(incumbent_obj));
    if (open.top().bound >= cutoff) break;  // best-first: queue min proves optimality
    if (res.nodes >= req.max_nodes) {
      res.status = SolveStatus::IterLimit;
      res.message = "node limit reached";
      break;
    }
    if (out_of_time()) {
      res.status = SolveStatus::TimeLimit;
      res.message = "time limit reached";
      break;
    }

    BnbNode node = open.top();
    open.pop();
    ++res.nodes;

    apply_node(cx, node);
    long before = cx.solver->total_iterations();
    LpResult rel = cx.solver->solve();
    res.lp_iterations += cx.solver->total_iterations() - before;

    if (rel.status == LpStatus::Infeasible) {
      if (!root_done) {
        res.status = SolveStatus::Infeasible;
        res.best_bound = kInf;
        res.message = "relaxation infeasible";
        return res;
      }
      continue;
    }
    if (rel.status == LpStatus::Unbounded) {
      if (!root_done && probe_allowed) {
        // An unbounded relaxation leaves two possibilities: a genuinely
        // unbounded model, or one with no integral point at all. Every
        // integer variable is a bounded binary, so any recession ray is
        // purely continuous and feasibility decides between the two.
        std::vector<double> saved_cost = cx.lp->c;
        for (int j = 0; j < cx.lp->n; ++j) {
          cx.lp->c[j] = 0.0;
          cx.solver->set_objective(j, 0.0);
        }
        std::vector<BinaryInfo> saved_bins = std::move(cx.binaries);
        cx.binaries = binary_safety(*cx.lp, *cx.mi);
        SolveResult probe = branch_and_bound(cx, req, false);
        cx.lp->c = saved_cost;
        for (int j = 0; j < cx.lp->n; ++j)
          cx.solver->set_objective(j, cx.lp->c[j]);
        cx.binaries = std::move(saved_bins);
        if (probe.status == SolveStatus::Infeasible) return probe;
        if (probe.status == SolveStatus::Optimal) {
          res.status = SolveStatus::Unbounded;
          res.message = "integral point exists on an unbounded relaxation";
          res.nodes += probe.nodes;
          res.lp_iterations += probe.lp_iterations;
          return res;
        }
        return probe;  // node or time limit hit during the probe
      }
      res.status = SolveStatus::Unbounded;
      res.message = "relaxation unbounded";
      return res;
    }
    if (rel.status != LpStatus::Optimal) {
      res.status = SolveStatus::Error;
      res.message = std::string("node relaxation ended with status ") +
                    lp_status_name(rel.status);
      return res;
    }
    root_done = true;

    double bound = rel.objective;
    if (bound >= cutoff) continue;

    // Branch on the most fractional unsafe binary.
    int branch_var = -1;
    double worst = req.int_tol;
    for (const auto& bi : cx.binaries) {
      double v = rel.x[bi.var];
      double frac = std::fabs(v - std::round(v));
      if (frac <= req.int_tol) continue;
      if (bi.up_safe || bi.down_safe) continue;
      if (frac > worst) { worst = frac; branch_var = bi.var; }
    }

    if (branch_var < 0) {
      std::vector<double> cand = rel.x;
      double cand_obj = 0.0;
      int fallback = -1;
      if (polish_candidate(cx, node, cand, req.int_tol, cand_obj,
                           res.lp_iterations, fallback)) {
        if (cand_obj < incumbent_obj) {
          incumbent_obj = cand_obj;
          incumbent = std::move(cand);
        }
        continue;
      }
      if (fallback < 0) continue;  // rounded point infeasible and nothing fractional left
      branch_var = fallback;
    }

    double v = rel.x[branch_var];
    double preferred = std::round(std::min(1.0, std::max(0.0, v)));
    BnbNode first{bound, seq++, node.fixes};
    first.fixes.emplace_back(branch_var, preferred);
    BnbNode second{bound, seq++, node.fixes};
    second.fixes.emplace_back(branch_var, 1.0 - preferred);
    open.push(std::move(first));
    open.push(std::move(second));
  }

  cx.solver->reset_bounds();

  if (incumbent.empty()) {
    if (res.status == SolveStatus::IterLimit || res.status == SolveStatus::TimeLimit)
      return res;
    res.status = SolveStatus::Infeasible;
    res.best_bound = kInf;
    res.message = "no integral point found";
    return res;
  }
  res.objective = incumbent_obj;
  res.values = std::move(incumbent);
  res.has_solution = true;
  res.best_bound = open.empty() ? incumbent_obj
                                : std::min(incumbent_obj, open.top().bound);
  if (res.status != SolveStatus::IterLimit && res.status != SolveStatus::TimeLimit)
    res.status = SolveStatus::Optimal;
  return res;
}

}  // namespace

const char* solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterLimit: return "iter_limit";
    case SolveStatus::TimeLimit: return "time_limit";
    case SolveStatus::Error: return "error";
  }
  return "error";
}

struct MilpSession::Impl {
  LpProblem lp;
  SimplexSolver solver;
  BnbContext cx;
  const MilpInstance* mi;

  Impl(const MilpInstance& m) : lp(make_lp(m)), solver(lp), mi(&m) {
    cx.lp = &lp;
    cx.mi = &m;
    cx.solver = &solver;
    cx.binaries = binary_safety(lp, m);
  }
};

MilpSession::MilpSession(const MilpInstance& mi) : impl_(new Impl(mi)) {}
MilpSession::~MilpSession() = default;

void MilpSession::set_objective(int var, double coeff) {
  if (var < 0 || var >= impl_->lp.n)
    throw ValidationError("set_objective: variable index out of range");
  impl_->lp.c[var] = coeff;
  impl_->solver.set_objective(var, coeff);
  // Objective changes can flip a binary's safe rounding direction.
  impl_->cx.binaries = binary_safety(impl_->lp, *impl_->mi);
}

SolveResult MilpSession::solve(const SolveRequest& req) {
  return branch_and_bound(impl_->cx, req);
}

SolveResult solve(const MilpInstance& mi, const SolveRequest& req) {
  MilpSession session(mi);
  return session.solve(req);
}

RowCheckReport check_solution_serial(const MilpInstance& mi,
                                     const std::vector<double>& x) {
  if ((int)x.size() != (int)mi.vars.size())
    throw ValidationError("check_solution: value vector size mismatch");
  RowCheckReport rep;
  const int m = (int)mi.rows.size();
  std::vector<double> viol(m, 0.0);
  for (int r = 0; r < m; ++r) {
    const Row& row = mi.rows[r];
    double s = 0.0, comp = 0.0;  // Kahan accumulation
    for (const auto& [j, a] : row.terms) {
      double y = a * x[j] - comp;
      double t = s + y;
      comp = (t - s) - y;
      s = t;
    }
    double v = 0.0;
    switch (row.sense) {
      case RowSense::LE: v = std::max(0.0, s - row.rhs); break;
      case RowSense::GE: v = std::max(0.0, row.rhs - s); break;
      case RowSense::EQ: v = std::fabs(s - row.rhs); break;
    }
    viol[r] = v;
  }
  for (int r = 0; r < m; ++r) {
    if (viol[r] > rep.max_row_violation) {
      rep.max_row_violation = viol[r];
      rep.worst_row = mi.rows[r].name;
    }
  }
  double obj = mi.obj_constant, comp = 0.0;
  for (int j = 0; j < (int)mi.vars.size(); ++j) {
    const Variable& v = mi.vars[j];
    double bv = std::max(0.0, std::max(v.lb - x[j], x[j] - v.ub));
    if (bv > rep.max_bound_violation) {
      rep.max_bound_violation = bv;
      rep.worst_bound_var = v.name;
    }
    if (v.binary) {
      double g = std::fabs(x[j] - std::round(x[j]));
      if (g > rep.max_integrality_gap) {
        rep.max_integrality_gap = g;
        rep.worst_integrality_var = v.name;
      }
    }
    double y = v.obj * x[j] - comp;
    double t = obj + y;
    comp = (t - obj) - y;
    obj = t;
  }
  rep.recomputed_objective = obj;
  return rep;
}

RowCheckReport check_solution_parallel(const MilpInstance& mi,
                                       const std::vector<double>& x) {
  if ((int)x.size() != (int)mi.vars.size())
    throw ValidationError("check_solution: value vector size mismatch");
  RowCheckReport rep;
  const int m = (int)mi.rows.size();
  std::vector<double> viol(m, 0.0);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < m; ++r) {
    const Row& row = mi.rows[r];
    double s = 0.0, comp = 0.0;
    for (const auto& [j, a] : row.terms) {
      double y = a * x[j] - comp;
      double t = s + y;
      comp = (t - s) - y;
      s = t;
    }
    double v = 0.0;
    switch (row.sense) {
      case RowSense::LE: v = std::max(0.0, s - row.rhs); break;
      case RowSense::GE: v = std::max(0.0, row.rhs - s); break;
      case RowSense::EQ: v = std::fabs(s - row.rhs); break;
    }
    viol[r] = v;
  }
  // Serial reduction keeps the worst-row tie-breaking order-independent of
  // the thread schedule.
  for (int r = 0; r < m; ++r) {
    if (viol[r] > rep.max_row_violation) {
      rep.max_row_violation = viol[r];
      rep.worst_row = mi.rows[r].name;
    }
  }
  double obj = mi.obj_constant, comp = 0.0;
  for (int j = 0; j < (int)mi.vars.size(); ++j) {
    const Variable& v = mi.vars[j];
    double bv = std::max(0.0, std::max(v.lb - x[j], x[j] - v.ub));
    if (bv > rep.max_bound_violation) {
      rep.max_bound_violation = bv;
      rep.worst_bound_var = v.name;
    }
    if (v.binary) {
      double g = std::fabs(x[j] - std::round(x[j]));
      if (g > rep.max_integrality_gap) {
        rep.max_integrality_gap = g;
        rep.worst_integrality_var = v.name;
      }
    }
    double y = v.obj * x[j] - comp;
    double t = obj + y;
    comp = (t - obj) - y;
    obj = t;
  }
  rep.recomputed_objective = obj;
  return rep;
}

}  // namespace bioproc

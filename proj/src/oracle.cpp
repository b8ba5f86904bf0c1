// Exact reference solver. Deliberately shares no machinery with the
// branch-and-bound backend: depth-first enumeration of the binary
// variables with unit propagation over all-binary rows, and the dense
// simplex on every completed assignment.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bioproc/common.hpp"
#include "bioproc/dense_lp.hpp"
#include "bioproc/solver.hpp"

namespace bioproc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BinOcc {
  int logical_row;  // index into logical row arrays
  double coeff;
};

struct Propagator {
  // Static shape
  const MilpInstance* mi = nullptr;
  std::vector<int> binaries;              // variable ids, ascending
  std::vector<int> bin_slot;              // var id -> slot in binaries, -1 otherwise
  std::vector<int> logical_rows;          // row ids whose terms are all binary
  std::vector<std::vector<BinOcc>> occ;   // per binary slot
  double tol = 1e-9;

  // Search state, copied on branch
  struct State {
    std::vector<int8_t> assign;   // per binary slot: -1 free, 0, 1
    std::vector<double> fixed;    // per logical row: assigned contribution
    std::vector<double> sum_min;  // per logical row: min over free binaries
    std::vector<double> sum_max;
    int n_free = 0;
  };

  State root_state() const {
    State st;
    st.assign.assign(binaries.size(), -1);
    st.fixed.assign(logical_rows.size(), 0.0);
    st.sum_min.assign(logical_rows.size(), 0.0);
    st.sum_max.assign(logical_rows.size(), 0.0);
    st.n_free = (int)binaries.size();
    for (size_t s = 0; s < binaries.size(); ++s) {
      for (const BinOcc& o : occ[s]) {
        st.sum_min[o.logical_row] += std::min(0.0, o.coeff);
        st.sum_max[o.logical_row] += std::max(0.0, o.coeff);
      }
    }
    return st;
  }

  bool row_consistent(const State& st, int lr) const {
    const Row& row = mi->rows[logical_rows[lr]];
    double lo = st.fixed[lr] + st.sum_min[lr];
    double hi = st.fixed[lr] + st.sum_max[lr];
    switch (row.sense) {
      case RowSense::LE: return lo <= row.rhs + tol;
      case RowSense::GE: return hi >= row.rhs - tol;
      case RowSense::EQ: return lo <= row.rhs + tol && hi >= row.rhs - tol;
    }
    return true;
  }

  // Appends (slot, value) pairs a row forces onto the worklist; false on conflict.
  bool scan_row(const State& st, int lr, std::vector<std::pair<int, int>>& forced) const {
    if (!row_consistent(st, lr)) return false;
    const Row& row = mi->rows[logical_rows[lr]];
    for (const auto& [var, a] : row.terms) {
      int slot = bin_slot[var];
      if (st.assign[slot] != -1) continue;
      bool ok0 = true, ok1 = true;
      double base_min = st.fixed[lr] + st.sum_min[lr] - std::min(0.0, a);
      double base_max = st.fixed[lr] + st.sum_max[lr] - std::max(0.0, a);
      for (int v = 0; v <= 1; ++v) {
        double lo = base_min + a * v;
        double hi = base_max + a * v;
        bool ok = true;
        switch (row.sense) {
          case RowSense::LE: ok = lo <= row.rhs + tol; break;
          case RowSense::GE: ok = hi >= row.rhs - tol; break;
          case RowSense::EQ: ok = lo <= row.rhs + tol && hi >= row.rhs - tol; break;
        }
        (v == 0 ? ok0 : ok1) = ok;
      }
      if (!ok0 && !ok1) return false;
      if (!ok0) forced.emplace_back(slot, 1);
      if (!ok1) forced.emplace_back(slot, 0);
    }
    return true;
  }

  // Assigns slot=value and runs unit propagation to a fixpoint. False on conflict.
  bool assign(State& st, int slot, int value) const {
    std::vector<std::pair<int, int>> work{{slot, value}};
    while (!work.empty()) {
      auto [s, v] = work.back();
      work.pop_back();
      if (st.assign[s] != -1) {
        if (st.assign[s] != v) return false;
        continue;
      }
      st.assign[s] = (int8_t)v;
      --st.n_free;
      for (const BinOcc& o : occ[s]) {
        st.fixed[o.logical_row] += o.coeff * v;
        st.sum_min[o.logical_row] -= std::min(0.0, o.coeff);
        st.sum_max[o.logical_row] -= std::max(0.0, o.coeff);
      }
      for (const BinOcc& o : occ[s])
        if (!scan_row(st, o.logical_row, work)) return false;
    }
    return true;
  }
};

struct LeafSolver {
  const MilpInstance* mi = nullptr;
  LpProblem lp;                    // continuous columns only; rhs rewritten per leaf
  std::vector<int> cont_vars;      // column -> original variable id
  std::vector<std::vector<std::pair<int, double>>> row_bin_terms;  // per row
  std::vector<double> base_rhs;
  DenseLpOptions opt;

  void build(const MilpInstance& m) {
    mi = &m;
    const int n_all = (int)m.vars.size();
    std::vector<int> col_of(n_all, -1);
    for (int j = 0; j < n_all; ++j) {
      if (m.vars[j].binary) continue;
      col_of[j] = (int)cont_vars.size();
      cont_vars.push_back(j);
    }
    lp.n = (int)cont_vars.size();
    lp.m = (int)m.rows.size();
    lp.obj_constant = m.obj_constant;
    lp.c.resize(lp.n);
    lp.lb.resize(lp.n);
    lp.ub.resize(lp.n);
    for (int k = 0; k < lp.n; ++k) {
      const Variable& v = m.vars[cont_vars[k]];
      lp.c[k] = v.obj;
      lp.lb[k] = v.lb;
      lp.ub[k] = v.ub;
    }
    lp.sense.resize(lp.m);
    lp.rhs.resize(lp.m);
    row_bin_terms.resize(lp.m);
    std::vector<int> count(lp.n, 0);
    for (int r = 0; r < lp.m; ++r) {
      lp.sense[r] = m.rows[r].sense;
      lp.rhs[r] = m.rows[r].rhs;
      for (const auto& [var, a] : m.rows[r].terms) {
        if (col_of[var] >= 0) ++count[col_of[var]];
        else row_bin_terms[r].emplace_back(var, a);
      }
    }
    lp.col_start.assign(lp.n + 1, 0);
    for (int k = 0; k < lp.n; ++k) lp.col_start[k + 1] = lp.col_start[k] + count[k];
    lp.row_index.resize(lp.col_start[lp.n]);
    lp.value.resize(lp.col_start[lp.n]);
    std::vector<int> cursor(lp.col_start.begin(), lp.col_start.end() - 1);
    for (int r = 0; r < lp.m; ++r) {
      for (const auto& [var, a] : m.rows[r].terms) {
        int k = col_of[var];
        if (k < 0) continue;
        lp.row_index[cursor[k]] = r;
        lp.value[cursor[k]] = a;
        ++cursor[k];
      }
    }
    base_rhs = lp.rhs;
  }

  // values indexed by original variable id; binaries must be set already.
  LpResult solve_leaf(const std::vector<double>& bin_value, double& obj_constant_out) {
    double cshift = mi->obj_constant;
    for (int j = 0; j < (int)mi->vars.size(); ++j)
      if (mi->vars[j].binary) cshift += mi->vars[j].obj * bin_value[j];
    for (int r = 0; r < lp.m; ++r) {
      double off = 0.0;
      for (const auto& [var, a] : row_bin_terms[r]) off += a * bin_value[var];
      lp.rhs[r] = base_rhs[r] - off;
    }
    lp.obj_constant = cshift;
    obj_constant_out = cshift;
    return dense_lp_solve(lp, opt);
  }
};

struct Search {
  const MilpInstance* mi = nullptr;
  Propagator prop;
  LeafSolver leaf;
  OracleOptions opt;

  long leaves = 0;
  bool budget_blown = false;
  bool unbounded = false;
  bool leaf_error = false;
  std::string leaf_error_msg;
  double best_obj = kInf;
  std::vector<double> best_values;

  void evaluate_leaf(const Propagator::State& st) {
    ++leaves;
    if (leaves > opt.max_leaves) {
      budget_blown = true;
      return;
    }
    std::vector<double> binval(mi->vars.size(), 0.0);
    for (size_t s = 0; s < prop.binaries.size(); ++s)
      binval[prop.binaries[s]] = (double)st.assign[s];
    double shift = 0.0;
    LpResult lr = leaf.solve_leaf(binval, shift);
    if (lr.status == LpStatus::Infeasible) return;
    if (lr.status == LpStatus::Unbounded) {
      unbounded = true;
      return;
    }
    if (lr.status != LpStatus::Optimal) {
      leaf_error = true;
      leaf_error_msg = std::string("leaf relaxation ended with status ") +
                       lp_status_name(lr.status);
      return;
    }
    if (lr.objective < best_obj - opt.obj_tie_tol) {
      best_obj = lr.objective;
      best_values = binval;
      for (size_t k = 0; k < leaf.cont_vars.size(); ++k)
        best_values[leaf.cont_vars[k]] = lr.x[k];
    }
  }

  void dfs(const Propagator::State& st) {
    if (budget_blown || unbounded || leaf_error) return;
    int slot = -1;
    for (size_t s = 0; s < prop.binaries.size(); ++s)
      if (st.assign[s] == -1) { slot = (int)s; break; }
    if (slot < 0) {
      evaluate_leaf(st);
      return;
    }
    for (int v = 0; v <= 1; ++v) {
      Propagator::State child = st;
      if (prop.assign(child, slot, v)) dfs(child);
      if (budget_blown || unbounded || leaf_error) return;
    }
  }
};

}  // namespace

SolveResult oracle_solve(const MilpInstance& mi, const OracleOptions& opt) {
  SolveResult res;

  int n_bin = 0, n_cont = 0;
  for (const Variable& v : mi.vars) (v.binary ? n_bin : n_cont)++;
  if (n_bin > 24 || n_cont > 2000) {
    res.status = SolveStatus::Error;
    res.message = "instance exceeds oracle limits (" + std::to_string(n_bin) +
                  " binary, " + std::to_string(n_cont) + " continuous)";
    return res;
  }

  Search search;
  search.mi = &mi;
  search.opt = opt;
  Propagator& prop = search.prop;
  prop.mi = &mi;
  prop.tol = opt.prop_tol;
  prop.bin_slot.assign(mi.vars.size(), -1);
  for (int j = 0; j < (int)mi.vars.size(); ++j) {
    if (!mi.vars[j].binary) continue;
    prop.bin_slot[j] = (int)prop.binaries.size();
    prop.binaries.push_back(j);
  }
  for (int r = 0; r < (int)mi.rows.size(); ++r) {
    const Row& row = mi.rows[r];
    if (row.terms.empty()) continue;
    bool all_bin = true;
    for (const auto& [var, a] : row.terms) {
      (void)a;
      if (!mi.vars[var].binary) { all_bin = false; break; }
    }
    if (all_bin) prop.logical_rows.push_back(r);
  }
  prop.occ.resize(prop.binaries.size());
  for (int lr = 0; lr < (int)prop.logical_rows.size(); ++lr)
    for (const auto& [var, a] : mi.rows[prop.logical_rows[lr]].terms)
      prop.occ[prop.bin_slot[var]].push_back({lr, a});

  search.leaf.build(mi);

  // Directional safety over every row: a binary whose objective coefficient
  // and matrix coefficients all favor one value can be fixed there without
  // discarding every optimum.
  std::vector<char> up_ok(prop.binaries.size()), down_ok(prop.binaries.size());
  for (size_t s = 0; s < prop.binaries.size(); ++s) {
    const Variable& v = mi.vars[prop.binaries[s]];
    up_ok[s] = v.obj <= 0.0;
    down_ok[s] = v.obj >= 0.0;
  }
  for (const Row& row : mi.rows) {
    for (const auto& [var, a] : row.terms) {
      int s = prop.bin_slot[var];
      if (s < 0) continue;
      switch (row.sense) {
        case RowSense::LE:
          if (a > 0.0) up_ok[s] = 0;
          if (a < 0.0) down_ok[s] = 0;
          break;
        case RowSense::GE:
          if (a < 0.0) up_ok[s] = 0;
          if (a > 0.0) down_ok[s] = 0;
          break;
        case RowSense::EQ:
          if (a != 0.0) { up_ok[s] = 0; down_ok[s] = 0; }
          break;
      }
    }
  }

  Propagator::State root = prop.root_state();
  // Bound-fixed binaries first, then the monotone pass.
  for (size_t s = 0; s < prop.binaries.size(); ++s) {
    const Variable& v = mi.vars[prop.binaries[s]];
    int forced = v.lb > 0.5 ? 1 : (v.ub < 0.5 ? 0 : -1);
    if (forced < 0) continue;
    if (!prop.assign(root, (int)s, forced)) {
      res.status = SolveStatus::Infeasible;
      res.message = "binary bounds conflict";
      return res;
    }
  }
  for (size_t s = 0; s < prop.binaries.size(); ++s) {
    if (root.assign[s] != -1) continue;
    int pick = up_ok[s] ? 1 : (down_ok[s] ? 0 : -1);
    if (pick < 0) continue;
    if (!prop.assign(root, (int)s, pick)) {
      res.status = SolveStatus::Infeasible;
      res.message = "propagation conflict from monotone fixing";
      return res;
    }
  }

  search.dfs(root);

  res.nodes = search.leaves;
  if (search.unbounded) {
    res.status = SolveStatus::Unbounded;
    res.message = "a completed assignment has an unbounded relaxation";
    return res;
  }
  if (search.budget_blown) {
    res.status = SolveStatus::Error;
    res.message = "leaf budget exhausted (" + std::to_string(opt.max_leaves) + ")";
    return res;
  }
  if (search.leaf_error) {
    res.status = SolveStatus::Error;
    res.message = search.leaf_error_msg;
    return res;
  }
  if (search.best_values.empty()) {
    res.status = SolveStatus::Infeasible;
    res.best_bound = kInf;
    return res;
  }
  res.status = SolveStatus::Optimal;
  res.objective = search.best_obj;
  res.best_bound = search.best_obj;
  res.values = std::move(search.best_values);
  res.has_solution = true;
  return res;
}

}  // namespace bioproc

#include "bioproc/simplex.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bioproc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

LpProblem make_lp(const MilpInstance& mi) {
  LpProblem lp;
  lp.n = mi.n_vars();
  lp.m = mi.n_rows();
  lp.obj_constant = mi.obj_constant;
  lp.c.resize(lp.n);
  lp.lb.resize(lp.n);
  lp.ub.resize(lp.n);
  for (int j = 0; j < lp.n; ++j) {
    lp.c[j] = mi.vars[j].obj;
    lp.lb[j] = mi.vars[j].lb;
    lp.ub[j] = mi.vars[j].ub;
  }
  lp.sense.resize(lp.m);
  lp.rhs.resize(lp.m);
  std::vector<int> count(lp.n, 0);
  size_t nnz = 0;
  for (int i = 0; i < lp.m; ++i) {
    lp.sense[i] = mi.rows[i].sense;
    lp.rhs[i] = mi.rows[i].rhs;
    nnz += mi.rows[i].terms.size();
    for (const auto& [j, v] : mi.rows[i].terms) count[j]++;
  }
  lp.col_start.assign(lp.n + 1, 0);
  for (int j = 0; j < lp.n; ++j) lp.col_start[j + 1] = lp.col_start[j] + count[j];
  lp.row_index.resize(nnz);
  lp.value.resize(nnz);
  std::vector<int> fill(lp.col_start.begin(), lp.col_start.end() - 1);
  for (int i = 0; i < lp.m; ++i) {
    for (const auto& [j, v] : mi.rows[i].terms) {
      lp.row_index[fill[j]] = i;
      lp.value[fill[j]] = v;
      fill[j]++;
    }
  }
  return lp;
}

const char* lp_status_name(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterLimit: return "iteration_limit";
    case LpStatus::Numerical: return "numerical";
  }
  return "?";
}

struct SimplexSolver::Impl {
  enum VStat : signed char { AT_LOWER, AT_UPPER, FREE_NB, BASIC };

  const LpProblem* lp;
  SimplexOptions opt;
  int n, m, total;  // total = n + m (logicals appended)

  // Equilibration factors, powers of two so scaled entries stay exact.
  // Internally the solver works on A' = Dr A Dc with x' = Dc^{-1} x; the
  // row factor of each logical column is folded into that column's own
  // factor, which keeps logical columns unit in the scaled matrix.
  std::vector<double> rscale, cscale;

  std::vector<double> cost, lb, ub, xval;
  std::vector<VStat> vstat;
  std::vector<int> basic;         // var index per basis position
  std::vector<int> basis_pos;     // var -> basis position or -1

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool factor_ok = false;
  struct Eta {
    int r;
    double wr;
    std::vector<std::pair<int, double>> w;  // nonzeros excluding r
  };
  std::vector<Eta> etas;
  int pivots_since_refactor = 0;
  long iterations_total = 0;
  bool basis_started = false;

  static double pow2_near(double s) {
    if (!(s > 0.0) || !std::isfinite(s)) return 1.0;
    return std::exp2(std::round(std::log2(s)));
  }

  // Two rounds of geometric-mean equilibration over the structural matrix.
  void compute_scaling(const LpProblem& p) {
    rscale.assign(m, 1.0);
    cscale.assign(total, 1.0);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < n; ++j) {
        double lo = kInf, hi = 0.0;
        for (int k = p.col_start[j]; k < p.col_start[j + 1]; ++k) {
          const double a = std::fabs(p.value[k]) * rscale[p.row_index[k]];
          if (a == 0.0) continue;
          lo = std::min(lo, a);
          hi = std::max(hi, a);
        }
        if (hi > 0.0) cscale[j] = pow2_near(1.0 / std::sqrt(lo * hi));
      }
      std::vector<double> rlo(m, kInf), rhi(m, 0.0);
      for (int j = 0; j < n; ++j) {
        for (int k = p.col_start[j]; k < p.col_start[j + 1]; ++k) {
          const double a = std::fabs(p.value[k]) * cscale[j];
          if (a == 0.0) continue;
          const int i = p.row_index[k];
          rlo[i] = std::min(rlo[i], a);
          rhi[i] = std::max(rhi[i], a);
        }
      }
      for (int i = 0; i < m; ++i)
        if (rhi[i] > 0.0) rscale[i] = pow2_near(1.0 / std::sqrt(rlo[i] * rhi[i]));
    }
    for (int i = 0; i < m; ++i) cscale[n + i] = 1.0 / rscale[i];
  }

  explicit Impl(const LpProblem& p, SimplexOptions o) : lp(&p), opt(o) {
    n = p.n;
    m = p.m;
    total = n + m;
    compute_scaling(p);
    cost.assign(total, 0.0);
    lb.assign(total, 0.0);
    ub.assign(total, 0.0);
    for (int j = 0; j < n; ++j) {
      cost[j] = p.c[j] * cscale[j];
      lb[j] = p.lb[j] / cscale[j];
      ub[j] = p.ub[j] / cscale[j];
    }
    for (int i = 0; i < m; ++i) {
      switch (p.sense[i]) {
        case RowSense::LE: lb[n + i] = 0.0; ub[n + i] = kInf; break;
        case RowSense::GE: lb[n + i] = -kInf; ub[n + i] = 0.0; break;
        case RowSense::EQ: lb[n + i] = 0.0; ub[n + i] = 0.0; break;
      }
    }
    xval.assign(total, 0.0);
    vstat.assign(total, AT_LOWER);
    basic.assign(m, -1);
    basis_pos.assign(total, -1);
    if (opt.max_iter <= 0) opt.max_iter = 50000 + 25 * (n + m);
  }

  // Column of variable j in the scaled matrix as (row, value) pairs.
  template <class F>
  void for_col(int j, F&& f) const {
    if (j < n) {
      const double cj = cscale[j];
      for (int k = lp->col_start[j]; k < lp->col_start[j + 1]; ++k) {
        const int r = lp->row_index[k];
        f(r, lp->value[k] * rscale[r] * cj);
      }
    } else {
      f(j - n, 1.0);
    }
  }

  void init_nonbasic(int j) {
    if (lb[j] > -kInf) {
      vstat[j] = AT_LOWER;
      xval[j] = lb[j];
    } else if (ub[j] < kInf) {
      vstat[j] = AT_UPPER;
      xval[j] = ub[j];
    } else {
      vstat[j] = FREE_NB;
      xval[j] = 0.0;
    }
  }

  void start_basis() {
    for (int j = 0; j < n; ++j) init_nonbasic(j);
    for (int i = 0; i < m; ++i) {
      const int j = n + i;
      basic[i] = j;
      basis_pos[j] = i;
      vstat[j] = BASIC;
    }
    basis_started = true;
  }

  bool refactor() {
    etas.clear();
    pivots_since_refactor = 0;
    if (m == 0) {  // row-free model: the basis is the empty matrix
      factor_ok = true;
      return true;
    }
    Eigen::SparseMatrix<double> B(m, m);
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < m; ++i)
      for_col(basic[i], [&](int r, double v) { trip.emplace_back(r, i, v); });
    B.setFromTriplets(trip.begin(), trip.end());
    lu.compute(B);
    factor_ok = (lu.info() == Eigen::Success);
    return factor_ok;
  }

  void ftran(Eigen::VectorXd& v) const {
    if (m == 0) return;
    v = lu.solve(v);
    for (const Eta& e : etas) {
      const double vr = v[e.r] / e.wr;
      v[e.r] = vr;
      if (vr != 0.0)
        for (const auto& [i, wi] : e.w) v[i] -= wi * vr;
    }
  }

  void btran(Eigen::VectorXd& v) {
    if (m == 0) return;
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      double s = v[it->r];
      for (const auto& [i, wi] : it->w) s -= wi * v[i];
      v[it->r] = s / it->wr;
    }
    v = lu.transpose().solve(v);
  }

  // Recompute basic values from the nonbasic ones.
  void recompute_basics() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) rhs[i] = lp->rhs[i] * rscale[i];
    for (int j = 0; j < total; ++j) {
      if (vstat[j] == BASIC || xval[j] == 0.0) continue;
      const double xj = xval[j];
      for_col(j, [&](int r, double v) { rhs[r] -= v * xj; });
    }
    ftran(rhs);
    for (int i = 0; i < m; ++i) xval[basic[i]] = rhs[i];
  }

  double objective() const {
    double s = lp->obj_constant;
    for (int j = 0; j < total; ++j)
      if (cost[j] != 0.0 && xval[j] != 0.0) s += cost[j] * xval[j];
    return s;
  }

  double infeas_of(int j) const {
    if (xval[j] < lb[j]) return lb[j] - xval[j];
    if (xval[j] > ub[j]) return xval[j] - ub[j];
    return 0.0;
  }

  double total_infeasibility() const {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += infeas_of(basic[i]);
    return s;
  }

  // Reduced costs for all nonbasic variables given dual vector y and the
  // phase's cost function (phase 1: zero costs outside the basis).
  // d_j = cost_j - y' a_j.
  double reduced_cost(int j, const Eigen::VectorXd& y, bool phase1) const {
    double d = phase1 ? 0.0 : cost[j];
    for_col(j, [&](int r, double v) { d -= y[r] * v; });
    return d;
  }

  struct Candidate {
    int j = -1;
    double d = 0.0;
    int dir = 0;  // +1 entering increases, -1 decreases
    double score = 0.0;
  };

  // Entering-variable choice. Bland mode picks the lowest-index candidate.
  // Columns in `banned` offered no stable pivot from the current basis and
  // sit out until the basis changes.
  Candidate price(const Eigen::VectorXd& y, bool phase1, bool bland,
                  const std::vector<char>& banned) const {
    Candidate best;
    for (int j = 0; j < total; ++j) {
      if (vstat[j] == BASIC || banned[j]) continue;
      if (ub[j] - lb[j] <= 1e-14) continue;  // fixed
      const double d = reduced_cost(j, y, phase1);
      int dir = 0;
      if (vstat[j] == AT_LOWER) {
        if (d < -opt.opt_tol) dir = 1;
      } else if (vstat[j] == AT_UPPER) {
        if (d > opt.opt_tol) dir = -1;
      } else {  // free
        if (d < -opt.opt_tol) dir = 1;
        else if (d > opt.opt_tol) dir = -1;
      }
      if (dir == 0) continue;
      const double score = std::fabs(d);
      if (bland) {
        best = {j, d, dir, score};
        return best;  // first (lowest index) candidate
      }
      if (score > best.score) best = {j, d, dir, score};
    }
    return best;
  }

  struct Step {
    enum Kind { PIVOT, FLIP, NONE, UNBOUNDED } kind = NONE;
    int leave_pos = -1;
    bool leave_to_upper = false;
    double theta = 0.0;
  };

  // Phase-1 ratio test: piecewise-linear line search over breakpoints where
  // the infeasibility slope changes. In Bland mode falls back to the first
  // blocking breakpoint.
  Step ratio_phase1(const Eigen::VectorXd& w, int q, int dir, double slope0,
                    bool bland) const {
    struct Ev {
      double theta;
      double dslope;
      int pos;
      bool to_upper;
    };
    std::vector<Ev> evs;
    const double eps = opt.feas_tol;
    for (int i = 0; i < m; ++i) {
      const double wi = w[i];
      if (std::fabs(wi) < 1e-11) continue;
      const double delta = -dir * wi;  // basic value change per unit step
      const int bj = basic[i];
      const double x = xval[bj], l = lb[bj], u = ub[bj];
      if (delta > 0) {
        if (x < l - eps) evs.push_back({(l - x) / delta, delta, i, false});
        if (u < kInf && x <= u + eps) {
          double th = (u - x) / delta;
          if (th < 0) th = 0;
          evs.push_back({th, delta, i, true});
        }
      } else {
        if (x > u + eps) evs.push_back({(x - u) / (-delta), -delta, i, true});
        if (l > -kInf && x >= l - eps) {
          double th = (x - l) / (-delta);
          if (th < 0) th = 0;
          evs.push_back({th, -delta, i, false});
        }
      }
    }
    const double theta_flip =
        (lb[q] > -kInf && ub[q] < kInf) ? ub[q] - lb[q] : kInf;

    Step st;
    if (evs.empty()) {
      if (theta_flip < kInf) {
        st.kind = Step::FLIP;
        st.theta = theta_flip;
      }
      return st;  // NONE signals numerical trouble to the caller
    }
    std::sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
      if (a.theta != b.theta) return a.theta < b.theta;
      return a.pos < b.pos;
    });
    if (bland) {
      const Ev& e = evs.front();
      if (theta_flip <= e.theta) {
        st.kind = Step::FLIP;
        st.theta = theta_flip;
      } else {
        st.kind = Step::PIVOT;
        st.leave_pos = e.pos;
        st.leave_to_upper = e.to_upper;
        st.theta = e.theta;
      }
      return st;
    }
    // Among breakpoints tied (within roundoff) with the crossing one,
    // leaving on the largest pivot element keeps the basis well conditioned
    // through long degenerate stretches.
    auto pick_stable = [&](size_t crossing) {
      size_t pick = crossing;
      const double cap = evs[crossing].theta + 1e-9;
      for (size_t k = 0; k < evs.size(); ++k) {
        if (evs[k].theta > cap) break;
        if (std::fabs(w[evs[k].pos]) > std::fabs(w[evs[pick].pos])) pick = k;
      }
      st.kind = Step::PIVOT;
      st.leave_pos = evs[pick].pos;
      st.leave_to_upper = evs[pick].to_upper;
      st.theta = evs[pick].theta;
    };

    double slope = slope0;  // negative
    for (size_t k = 0; k < evs.size(); ++k) {
      const Ev& e = evs[k];
      if (theta_flip <= e.theta) {
        st.kind = Step::FLIP;
        st.theta = theta_flip;
        return st;
      }
      slope += e.dslope;
      if (slope >= -1e-12) {
        pick_stable(k);
        return st;
      }
    }
    if (theta_flip < kInf) {
      st.kind = Step::FLIP;
      st.theta = theta_flip;
      return st;
    }
    // Slope stayed negative past every breakpoint: only possible through
    // accumulated roundoff. Take the last breakpoint.
    pick_stable(evs.size() - 1);
    return st;
  }

  // Phase-2 ratio test, Harris style: a relaxed first pass fixes the step
  // ceiling, the second pass picks the biggest pivot under it.
  Step ratio_phase2(const Eigen::VectorXd& w, int q, int dir) const {
    const double eps = opt.feas_tol;
    double theta_max = kInf;
    const double theta_flip =
        (lb[q] > -kInf && ub[q] < kInf) ? ub[q] - lb[q] : kInf;
    for (int i = 0; i < m; ++i) {
      const double wi = w[i];
      if (std::fabs(wi) < 1e-11) continue;
      const double delta = -dir * wi;
      const int bj = basic[i];
      const double x = xval[bj], l = lb[bj], u = ub[bj];
      if (delta > 0 && u < kInf) {
        const double t = (u - x + eps) / delta;
        if (t < theta_max) theta_max = t;
      } else if (delta < 0 && l > -kInf) {
        const double t = (x - l + eps) / (-delta);
        if (t < theta_max) theta_max = t;
      }
    }
    Step st;
    if (theta_max == kInf) {
      if (theta_flip < kInf) {
        st.kind = Step::FLIP;
        st.theta = theta_flip;
      } else {
        st.kind = Step::UNBOUNDED;
      }
      return st;
    }
    int best = -1;
    bool best_upper = false;
    double best_theta = 0.0, best_piv = 0.0;
    for (int i = 0; i < m; ++i) {
      const double wi = w[i];
      if (std::fabs(wi) < 1e-11) continue;
      const double delta = -dir * wi;
      const int bj = basic[i];
      const double x = xval[bj], l = lb[bj], u = ub[bj];
      double t;
      bool to_upper;
      if (delta > 0 && u < kInf) {
        t = (u - x) / delta;
        to_upper = true;
      } else if (delta < 0 && l > -kInf) {
        t = (x - l) / (-delta);
        to_upper = false;
      } else {
        continue;
      }
      if (t < 0) t = 0;
      if (t <= theta_max && std::fabs(wi) > best_piv) {
        best_piv = std::fabs(wi);
        best = i;
        best_theta = t;
        best_upper = to_upper;
      }
    }
    if (best < 0) {
      // Everything was pushed past theta_max by the tolerance; retake min.
      for (int i = 0; i < m; ++i) {
        const double wi = w[i];
        if (std::fabs(wi) < 1e-11) continue;
        const double delta = -dir * wi;
        const int bj = basic[i];
        const double x = xval[bj], l = lb[bj], u = ub[bj];
        double t;
        bool to_upper;
        if (delta > 0 && u < kInf) {
          t = (u - x) / delta;
          to_upper = true;
        } else if (delta < 0 && l > -kInf) {
          t = (x - l) / (-delta);
          to_upper = false;
        } else {
          continue;
        }
        if (t < 0) t = 0;
        if (best < 0 || t < best_theta) {
          best = i;
          best_theta = t;
          best_upper = to_upper;
        }
      }
    }
    if (theta_flip <= best_theta) {
      st.kind = Step::FLIP;
      st.theta = theta_flip;
      return st;
    }
    st.kind = Step::PIVOT;
    st.leave_pos = best;
    st.leave_to_upper = best_upper;
    st.theta = best_theta;
    return st;
  }

  void apply_step(const Eigen::VectorXd& w, int q, int dir, const Step& st) {
    const double theta = st.theta;
    if (theta != 0.0) {
      for (int i = 0; i < m; ++i) {
        const double wi = w[i];
        if (wi != 0.0) xval[basic[i]] -= dir * theta * wi;
      }
    }
    if (st.kind == Step::FLIP) {
      if (vstat[q] == AT_LOWER) {
        vstat[q] = AT_UPPER;
        xval[q] = ub[q];
      } else {
        vstat[q] = AT_LOWER;
        xval[q] = lb[q];
      }
      return;
    }
    // Pivot: q enters at its stepped value, the blocker leaves at a bound.
    xval[q] += dir * theta;
    const int r = st.leave_pos;
    const int lv = basic[r];
    xval[lv] = st.leave_to_upper ? ub[lv] : lb[lv];
    vstat[lv] = st.leave_to_upper ? AT_UPPER : AT_LOWER;
    basis_pos[lv] = -1;
    basic[r] = q;
    basis_pos[q] = r;
    vstat[q] = BASIC;

    Eta e;
    e.r = r;
    e.wr = w[r];
    for (int i = 0; i < m; ++i) {
      if (i == r) continue;
      const double wi = w[i];
      if (std::fabs(wi) > 1e-13) e.w.emplace_back(i, wi);
    }
    etas.push_back(std::move(e));
    ++pivots_since_refactor;
  }

  LpResult run() {
    LpResult res;
    if (!basis_started) start_basis();
    // Snap nonbasic variables into their (possibly updated) bounds.
    for (int j = 0; j < total; ++j) {
      if (vstat[j] == BASIC) continue;
      if (vstat[j] == AT_LOWER && lb[j] > -kInf) xval[j] = lb[j];
      else if (vstat[j] == AT_UPPER && ub[j] < kInf) xval[j] = ub[j];
      else init_nonbasic(j);
    }
    if (!refactor()) {
      // Singular carried-over basis: restart from the logical basis.
      start_basis();
      if (!refactor()) {
        res.status = LpStatus::Numerical;
        return res;
      }
    }
    recompute_basics();

    bool phase1 = total_infeasibility() > opt.feas_tol;
    int iter = 0;
    int degen_run = 0;
    bool bland = false;
    Eigen::VectorXd y(m), w(m);
    std::vector<char> banned(total, 0);
    int banned_count = 0;
    auto clear_bans = [&]() {
      if (banned_count > 0) {
        std::fill(banned.begin(), banned.end(), 0);
        banned_count = 0;
      }
    };

    // Rebuilds the factorization; a singular basis falls back to a fresh
    // logical start instead of giving up, within a small restart budget.
    int restarts = 0;
    auto refactor_or_restart = [&]() -> bool {
      if (refactor()) {
        recompute_basics();
        return true;
      }
      if (++restarts > 5) return false;
      start_basis();
      if (!refactor()) return false;
      recompute_basics();
      clear_bans();
      phase1 = true;
      degen_run = 0;
      bland = false;
      return true;
    };

    while (iter < opt.max_iter) {
      ++iter;
      ++iterations_total;

      // Dual vector for the current phase.
      if (phase1) {
        double F = 0.0;
        for (int i = 0; i < m; ++i) F += infeas_of(basic[i]);
        if (F <= opt.feas_tol) {
          phase1 = false;
          degen_run = 0;
          bland = false;
          continue;
        }
        for (int i = 0; i < m; ++i) {
          const int bj = basic[i];
          if (xval[bj] < lb[bj] - opt.feas_tol) y[i] = -1.0;
          else if (xval[bj] > ub[bj] + opt.feas_tol) y[i] = 1.0;
          else y[i] = 0.0;
        }
        btran(y);
      } else {
        for (int i = 0; i < m; ++i) y[i] = cost[basic[i]];
        btran(y);
      }

      const Candidate cand = price(y, phase1, bland, banned);
      if (cand.j < 0) {
        if (banned_count > 0) {
          // Every attractive column was set aside for pivot instability.
          // A rebuilt factorization may rehabilitate them; if the basis is
          // already fresh there is nothing sound left to do.
          if (pivots_since_refactor > 0) {
            clear_bans();
            if (!refactor_or_restart()) {
              res.status = LpStatus::Numerical;
              finalize(res, y, iter);
              return res;
            }
            continue;
          }
          res.status = LpStatus::Numerical;
          finalize(res, y, iter);
          return res;
        }
        if (phase1) {
          res.status = LpStatus::Infeasible;
          res.objective = total_infeasibility();
          finalize(res, y, iter);
          return res;
        }
        res.status = LpStatus::Optimal;
        res.objective = objective();
        finalize(res, y, iter);
        return res;
      }

      // Entering column through the current basis inverse.
      w.setZero();
      for_col(cand.j, [&](int r, double v) { w[r] = v; });
      ftran(w);

      Step st = phase1 ? ratio_phase1(w, cand.j, cand.dir,
                                      -std::fabs(cand.d), bland)
                       : ratio_phase2(w, cand.j, cand.dir);
      if (st.kind == Step::UNBOUNDED) {
        res.status = LpStatus::Unbounded;
        res.objective = -kInf;
        finalize(res, y, iter);
        return res;
      }
      if (st.kind == Step::NONE) {
        // The entering column came through the basis numerically zero.
        if (pivots_since_refactor > 0) {
          refactor();
          recompute_basics();
        } else {
          banned[cand.j] = 1;
          ++banned_count;
        }
        continue;
      }
      if (st.kind == Step::PIVOT && std::fabs(w[st.leave_pos]) < 1e-7) {
        // Never exchange on a pivot element this small: one such pivot
        // leaves the basis near singular and poisons everything after it.
        // Through a stale factorization the number may simply be wrong, so
        // rebuild and retry; from a fresh one the column genuinely offers
        // no stable exchange here and sits out until the basis changes.
        if (pivots_since_refactor > 0) {
          refactor();
          recompute_basics();
        } else {
          banned[cand.j] = 1;
          ++banned_count;
        }
        continue;
      }

      apply_step(w, cand.j, cand.dir, st);
      clear_bans();

      if (st.theta <= 1e-12) {
        if (++degen_run > 200) bland = true;
      } else {
        degen_run = 0;
        bland = false;
      }

      if (pivots_since_refactor >= opt.refactor_every) {
        if (!refactor_or_restart()) {
          res.status = LpStatus::Numerical;
          return res;
        }
      }
      // In phase 2, drifting out of feasibility sends us back to phase 1.
      if (!phase1 && (iter & 63) == 0 &&
          total_infeasibility() > opt.feas_tol * 16) {
        phase1 = true;
      }
    }
    res.status = LpStatus::IterLimit;
    res.objective = objective();
    Eigen::VectorXd yfin = Eigen::VectorXd::Zero(m);
    finalize(res, yfin, iter);
    return res;
  }

  void finalize(LpResult& res, const Eigen::VectorXd& y, int iter) {
    res.iterations = iter;
    res.x.assign(lp->n, 0.0);
    for (int j = 0; j < lp->n; ++j) res.x[j] = xval[j] * cscale[j];
    res.duals.assign(m, 0.0);
    for (int i = 0; i < m; ++i) res.duals[i] = y[i] * rscale[i];
  }
};

SimplexSolver::SimplexSolver(const LpProblem& lp, SimplexOptions opt)
    : impl_(std::make_unique<Impl>(lp, opt)) {}

SimplexSolver::~SimplexSolver() = default;

void SimplexSolver::set_bounds(int j, double lo, double hi) {
  Impl& im = *impl_;
  im.lb[j] = lo / im.cscale[j];
  im.ub[j] = hi / im.cscale[j];
  if (im.basis_started && im.vstat[j] != Impl::BASIC) {
    if (im.vstat[j] == Impl::AT_LOWER && lo > -kInf) im.xval[j] = im.lb[j];
    else if (im.vstat[j] == Impl::AT_UPPER && hi < kInf) im.xval[j] = im.ub[j];
    else im.init_nonbasic(j);
  }
}

void SimplexSolver::reset_bounds() {
  Impl& im = *impl_;
  for (int j = 0; j < im.n; ++j) {
    im.lb[j] = im.lp->lb[j] / im.cscale[j];
    im.ub[j] = im.lp->ub[j] / im.cscale[j];
    if (im.basis_started && im.vstat[j] != Impl::BASIC) {
      if (im.vstat[j] == Impl::AT_LOWER) im.xval[j] = im.lb[j];
      else if (im.vstat[j] == Impl::AT_UPPER) im.xval[j] = im.ub[j];
    }
  }
}

double SimplexSolver::lower_bound_of(int j) const {
  return impl_->lb[j] * impl_->cscale[j];
}
double SimplexSolver::upper_bound_of(int j) const {
  return impl_->ub[j] * impl_->cscale[j];
}

void SimplexSolver::set_objective(int j, double c) {
  impl_->cost[j] = c * impl_->cscale[j];
}

LpResult SimplexSolver::solve() { return impl_->run(); }

long SimplexSolver::total_iterations() const { return impl_->iterations_total; }

}  // namespace bioproc

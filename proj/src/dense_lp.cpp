#include "bioproc/dense_lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bioproc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Dense {
  const LpProblem* lp;
  DenseLpOptions opt;
  int n, m, total;
  Eigen::MatrixXd A;       // m x total, logicals appended as identity
  std::vector<double> c, lb, ub, x;
  enum St : signed char { LO, UP, FR, BS };
  std::vector<St> stat;
  std::vector<int> basic;
  Eigen::MatrixXd Binv;
  long iters = 0;

  explicit Dense(const LpProblem& p, const DenseLpOptions& o) : lp(&p), opt(o) {
    n = p.n;
    m = p.m;
    total = n + m;
    A = Eigen::MatrixXd::Zero(m, total);
    for (int j = 0; j < n; ++j)
      for (int k = p.col_start[j]; k < p.col_start[j + 1]; ++k)
        A(p.row_index[k], j) = p.value[k];
    for (int i = 0; i < m; ++i) A(i, n + i) = 1.0;
    c.assign(total, 0.0);
    lb.assign(total, 0.0);
    ub.assign(total, 0.0);
    for (int j = 0; j < n; ++j) {
      c[j] = p.c[j];
      lb[j] = p.lb[j];
      ub[j] = p.ub[j];
    }
    for (int i = 0; i < m; ++i) {
      switch (p.sense[i]) {
        case RowSense::LE: lb[n + i] = 0.0; ub[n + i] = kInf; break;
        case RowSense::GE: lb[n + i] = -kInf; ub[n + i] = 0.0; break;
        case RowSense::EQ: lb[n + i] = 0.0; ub[n + i] = 0.0; break;
      }
    }
    x.assign(total, 0.0);
    stat.assign(total, LO);
    for (int j = 0; j < total; ++j) set_nonbasic_start(j);
    basic.resize(m);
    for (int i = 0; i < m; ++i) {
      basic[i] = n + i;
      stat[n + i] = BS;
    }
    Binv = Eigen::MatrixXd::Identity(m, m);
    compute_basics();
  }

  void set_nonbasic_start(int j) {
    if (lb[j] > -kInf) {
      stat[j] = LO;
      x[j] = lb[j];
    } else if (ub[j] < kInf) {
      stat[j] = UP;
      x[j] = ub[j];
    } else {
      stat[j] = FR;
      x[j] = 0.0;
    }
  }

  void compute_basics() {
    Eigen::VectorXd r(m);
    for (int i = 0; i < m; ++i) r[i] = lp->rhs[i];
    for (int j = 0; j < total; ++j)
      if (stat[j] != BS && x[j] != 0.0) r -= A.col(j) * x[j];
    Eigen::VectorXd xb = Binv * r;
    for (int i = 0; i < m; ++i) x[basic[i]] = xb[i];
  }

  void reinvert() {
    Eigen::MatrixXd B(m, m);
    for (int i = 0; i < m; ++i) B.col(i) = A.col(basic[i]);
    Binv = B.partialPivLu().inverse();
    compute_basics();
  }

  double infeas(int j) const {
    if (x[j] < lb[j]) return lb[j] - x[j];
    if (x[j] > ub[j]) return x[j] - ub[j];
    return 0.0;
  }

  double total_infeas() const {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += infeas(basic[i]);
    return s;
  }

  LpResult run() {
    LpResult res;
    bool phase1 = total_infeas() > opt.feas_tol;
    int degen = 0;
    bool bland = false;
    Eigen::VectorXd y(m), w(m);
    int since_reinvert = 0;

    for (int iter = 0; iter < opt.max_iter; ++iter) {
      ++iters;
      if (phase1 && total_infeas() <= opt.feas_tol) {
        phase1 = false;
        bland = false;
        degen = 0;
      }

      // Dual vector for the phase.
      if (phase1) {
        Eigen::VectorXd sig(m);
        for (int i = 0; i < m; ++i) {
          const int bj = basic[i];
          sig[i] = (x[bj] < lb[bj] - opt.feas_tol)
                       ? -1.0
                       : (x[bj] > ub[bj] + opt.feas_tol ? 1.0 : 0.0);
        }
        y = Binv.transpose() * sig;
      } else {
        Eigen::VectorXd cb(m);
        for (int i = 0; i < m; ++i) cb[i] = c[basic[i]];
        y = Binv.transpose() * cb;
      }

      // Pricing.
      int q = -1, dir = 0;
      double best = 0.0;
      for (int j = 0; j < total; ++j) {
        if (stat[j] == BS || ub[j] - lb[j] <= 1e-14) continue;
        const double cj = phase1 ? 0.0 : c[j];
        const double d = cj - y.dot(A.col(j));
        int dj = 0;
        if (stat[j] == LO && d < -opt.opt_tol) dj = 1;
        else if (stat[j] == UP && d > opt.opt_tol) dj = -1;
        else if (stat[j] == FR && std::fabs(d) > opt.opt_tol) dj = d < 0 ? 1 : -1;
        if (dj == 0) continue;
        if (bland) { q = j; dir = dj; break; }
        if (std::fabs(d) > best) { best = std::fabs(d); q = j; dir = dj; }
      }
      if (q < 0) {
        if (phase1) {
          res.status = LpStatus::Infeasible;
          res.objective = total_infeas();
        } else {
          res.status = LpStatus::Optimal;
          res.objective = lp->obj_constant;
          for (int j = 0; j < total; ++j)
            if (c[j] != 0.0) res.objective += c[j] * x[j];
        }
        extract(res, y);
        return res;
      }

      w = Binv * A.col(q);

      // First-blocking ratio test (phase 1 also blocks when an infeasible
      // basic reaches the bound it violates).
      double theta = (lb[q] > -kInf && ub[q] < kInf) ? ub[q] - lb[q] : kInf;
      int leave = -1;
      bool to_upper = false;
      bool flip = theta < kInf;
      for (int i = 0; i < m; ++i) {
        const double wi = w[i];
        if (std::fabs(wi) < 1e-11) continue;
        const double delta = -dir * wi;
        const int bj = basic[i];
        double t = kInf;
        bool up = false;
        if (delta > 0) {
          if (x[bj] < lb[bj] - opt.feas_tol) { t = (lb[bj] - x[bj]) / delta; up = false; }
          else if (ub[bj] < kInf && x[bj] <= ub[bj] + opt.feas_tol) {
            t = (ub[bj] - x[bj]) / delta;
            up = true;
          }
        } else {
          if (x[bj] > ub[bj] + opt.feas_tol) { t = (x[bj] - ub[bj]) / (-delta); up = true; }
          else if (lb[bj] > -kInf && x[bj] >= lb[bj] - opt.feas_tol) {
            t = (x[bj] - lb[bj]) / (-delta);
            up = false;
          }
        }
        if (t == kInf) continue;
        if (t < 0) t = 0;
        if (t < theta - 1e-12 ||
            (t < theta + 1e-12 && leave >= 0 &&
             std::fabs(wi) > std::fabs(w[leave]))) {
          theta = t;
          leave = i;
          to_upper = up;
          flip = false;
        }
      }
      if (theta == kInf) {
        res.status = phase1 ? LpStatus::Numerical : LpStatus::Unbounded;
        res.objective = phase1 ? total_infeas() : -kInf;
        extract(res, y);
        return res;
      }

      // Move.
      for (int i = 0; i < m; ++i)
        if (w[i] != 0.0) x[basic[i]] -= dir * theta * w[i];
      if (flip) {
        stat[q] = (stat[q] == LO) ? UP : LO;
        x[q] = (stat[q] == LO) ? lb[q] : ub[q];
      } else {
        x[q] += dir * theta;
        const int lv = basic[leave];
        x[lv] = to_upper ? ub[lv] : lb[lv];
        stat[lv] = to_upper ? UP : LO;
        basic[leave] = q;
        stat[q] = BS;
        // Rank-one update of the explicit inverse.
        const double piv = w[leave];
        Eigen::RowVectorXd row = Binv.row(leave) / piv;
        for (int i = 0; i < m; ++i) {
          if (i == leave) continue;
          const double wi = w[i];
          if (wi != 0.0) Binv.row(i) -= wi * row;
        }
        Binv.row(leave) = row;
        if (++since_reinvert >= 400) {
          reinvert();
          since_reinvert = 0;
        }
      }

      if (theta <= 1e-12) {
        if (++degen > 300) bland = true;
      } else {
        degen = 0;
        bland = false;
      }
    }
    res.status = LpStatus::IterLimit;
    res.objective = lp->obj_constant;
    for (int j = 0; j < total; ++j)
      if (c[j] != 0.0) res.objective += c[j] * x[j];
    Eigen::VectorXd y0 = Eigen::VectorXd::Zero(m);
    extract(res, y0);
    return res;
  }

  void extract(LpResult& res, const Eigen::VectorXd& y) {
    res.x.assign(n, 0.0);
    for (int j = 0; j < n; ++j) res.x[j] = x[j];
    res.duals.assign(m, 0.0);
    for (int i = 0; i < m; ++i) res.duals[i] = y[i];
    res.iterations = static_cast<int>(iters);
  }
};

}  // namespace

LpResult dense_lp_solve(const LpProblem& lp, const DenseLpOptions& opt) {
  const size_t cells = static_cast<size_t>(lp.m) * (lp.n + lp.m);
  if (cells > opt.max_cells)
    throw BackendError("dense reference solver: instance too large (" +
                       std::to_string(cells) + " cells)");
  Dense d(lp, opt);
  return d.run();
}

}  // namespace bioproc

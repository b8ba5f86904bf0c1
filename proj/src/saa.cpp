#include "bioproc/saa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "bioproc/common.hpp"

namespace bioproc {

namespace {

constexpr double kSlackTol = 1e-7;   // shortfall above this marks a sample violated
constexpr double kWindowTol = 1e-9;  // guard when re-checking windows directly

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

void EmpiricalDist::validate() const {
  if (feedstock < 0) throw ValidationError("distribution has no feedstock id");
  if (support.empty())
    throw ValidationError("distribution for feedstock " + std::to_string(feedstock) +
                          " has empty support");
  if (support.size() != weights.size())
    throw ValidationError("distribution for feedstock " + std::to_string(feedstock) +
                          ": support and weight counts differ");
  double sum = 0.0;
  for (size_t i = 0; i < support.size(); ++i) {
    if (!(support[i] > 0.0) || !(support[i] < 1.0))
      throw ValidationError("distribution for feedstock " + std::to_string(feedstock) +
                            ": fraction " + format_double(support[i]) +
                            " outside (0,1)");
    if (i > 0 && !(support[i] > support[i - 1]))
      throw ValidationError("distribution for feedstock " + std::to_string(feedstock) +
                            ": support values must be strictly increasing");
    if (weights[i] < 0.0)
      throw ValidationError("distribution for feedstock " + std::to_string(feedstock) +
                            ": negative weight");
    sum += weights[i];
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw ValidationError("distribution for feedstock " + std::to_string(feedstock) +
                          ": weights sum to " + format_double(sum));
}

double EmpiricalDist::mean() const {
  double s = 0.0;
  for (size_t i = 0; i < support.size(); ++i) s += support[i] * weights[i];
  return s;
}

double EmpiricalDist::percentile(double level) const {
  if (!(level > 0.0) || level > 1.0)
    throw ValidationError("percentile level " + format_double(level) +
                          " outside (0,1]");
  double cum = 0.0;
  for (size_t i = 0; i < support.size(); ++i) {
    cum += weights[i];
    if (cum >= level - 1e-12) return support[i];
  }
  return support.back();
}

int SampleSet::slot_of(int feedstock) const {
  for (size_t i = 0; i < feedstocks.size(); ++i)
    if (feedstocks[i] == feedstock) return static_cast<int>(i);
  return -1;
}

double SampleSet::value(int feedstock, int n) const {
  int slot = slot_of(feedstock);
  if (slot < 0)
    throw ValidationError("no samples drawn for feedstock " + std::to_string(feedstock));
  return values[static_cast<size_t>(slot) * n_samples + n];
}

SampleSet sample(const std::vector<EmpiricalDist>& dists, int n, uint64_t seed) {
  if (n < 1) throw ValidationError("sample count must be positive");
  if (dists.empty()) throw ValidationError("no distributions to sample");
  SampleSet ss;
  ss.n_samples = n;
  ss.seed = seed;
  ss.values.resize(dists.size() * static_cast<size_t>(n));
  for (size_t k = 0; k < dists.size(); ++k) {
    const EmpiricalDist& d = dists[k];
    d.validate();
    for (int f : ss.feedstocks)
      if (f == d.feedstock)
        throw ValidationError("duplicate distribution for feedstock " +
                              std::to_string(d.feedstock));
    ss.feedstocks.push_back(d.feedstock);
    // Each feedstock gets its own stream so adding one never shifts another.
    std::mt19937_64 rng(mix_seed(seed, static_cast<uint64_t>(k) + 1));
    for (int j = 0; j < n; ++j) {
      double u = unit_draw(rng);
      double cum = 0.0;
      double v = d.support.back();
      for (size_t i = 0; i < d.support.size(); ++i) {
        cum += d.weights[i];
        if (u < cum) {
          v = d.support[i];
          break;
        }
      }
      ss.values[k * static_cast<size_t>(n) + j] = v;
    }
  }
  return ss;
}

VariantSpec variant_with_samples(const VariantSpec& shape, const SampleSet& samples,
                                 const std::vector<BaleClass>& classes) {
  VariantSpec v = shape;
  v.sample_value.assign(samples.n_samples, std::vector<double>(classes.size(), 0.0));
  std::vector<int> slot(classes.size());
  for (size_t c = 0; c < classes.size(); ++c) {
    slot[c] = samples.slot_of(classes[c].feedstock);
    if (slot[c] < 0)
      throw ValidationError("no samples drawn for feedstock " +
                            std::to_string(classes[c].feedstock));
  }
  for (int nIdx = 0; nIdx < samples.n_samples; ++nIdx)
    for (size_t c = 0; c < classes.size(); ++c)
      v.sample_value[nIdx][c] =
          samples.values[static_cast<size_t>(slot[c]) * samples.n_samples + nIdx];
  return v;
}

namespace {

// Shared body of the violation check; the caller decides how samples are
// spread over threads. Window sums use the same left-to-right order in
// both flavors so the reports match bit for bit.
void check_sample(int nIdx, int n_windows, int n_classes, int horizon,
                  const std::vector<std::pair<int, int>>& windows,
                  const std::vector<double>& inflow,  // [cls * horizon + t-1]
                  const std::vector<double>& frac,    // [cls * N + n]
                  int n_samples, double target, char* sample_viol, char* window_viol) {
  bool any = false;
  for (int w = 0; w < n_windows; ++w) {
    double shortfall = 0.0;
    for (int t = windows[w].first; t <= windows[w].second; ++t)
      for (int c = 0; c < n_classes; ++c)
        shortfall += (target - frac[static_cast<size_t>(c) * n_samples + nIdx]) *
                     inflow[static_cast<size_t>(c) * horizon + (t - 1)];
    if (shortfall > kWindowTol) {
      window_viol[static_cast<size_t>(w) * n_samples + nIdx] = 1;
      any = true;
    }
  }
  if (any) sample_viol[nIdx] = 1;
}

}  // namespace

ViolationReport violation_rate(const SolutionRecord& sol, const ProcessNetwork& net,
                               const std::vector<BaleClass>& classes,
                               const SampleSet& samples, double target,
                               int tau_periods, bool parallel) {
  const int N = samples.n_samples;
  const int n_classes = static_cast<int>(classes.size());
  if (N < 1) throw ValidationError("violation check needs at least one sample");
  if (sol.horizon < 1) throw ValidationError("violation check needs a solved schedule");
  auto [windows, truncated] = blend_windows(sol.horizon, tau_periods);
  (void)truncated;
  const int W = static_cast<int>(windows.size());

  std::vector<double> inflow(static_cast<size_t>(n_classes) * sol.horizon, 0.0);
  for (int c = 0; c < n_classes; ++c)
    for (int t = 1; t <= sol.horizon; ++t)
      inflow[static_cast<size_t>(c) * sol.horizon + (t - 1)] =
          sol.reactor_inflow(net, c, t);

  std::vector<double> frac(static_cast<size_t>(n_classes) * N);
  for (int c = 0; c < n_classes; ++c) {
    int slot = samples.slot_of(classes[c].feedstock);
    if (slot < 0)
      throw ValidationError("no samples drawn for feedstock " +
                            std::to_string(classes[c].feedstock));
    for (int nIdx = 0; nIdx < N; ++nIdx)
      frac[static_cast<size_t>(c) * N + nIdx] =
          samples.values[static_cast<size_t>(slot) * N + nIdx];
  }

  std::vector<char> sample_viol(N, 0);
  std::vector<char> window_viol(static_cast<size_t>(W) * N, 0);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int nIdx = 0; nIdx < N; ++nIdx)
      check_sample(nIdx, W, n_classes, sol.horizon, windows, inflow, frac, N, target,
                   sample_viol.data(), window_viol.data());
  } else {
    for (int nIdx = 0; nIdx < N; ++nIdx)
      check_sample(nIdx, W, n_classes, sol.horizon, windows, inflow, frac, N, target,
                   sample_viol.data(), window_viol.data());
  }

  ViolationReport rep;
  rep.n_samples = N;
  for (int nIdx = 0; nIdx < N; ++nIdx)
    if (sample_viol[nIdx]) ++rep.violated_samples;
  rep.per_sample_rate = static_cast<double>(rep.violated_samples) / N;
  rep.per_window_rate.assign(W, 0.0);
  for (int w = 0; w < W; ++w) {
    int cnt = 0;
    for (int nIdx = 0; nIdx < N; ++nIdx)
      if (window_viol[static_cast<size_t>(w) * N + nIdx]) ++cnt;
    rep.per_window_rate[w] = static_cast<double>(cnt) / N;
  }
  return rep;
}

namespace {

double rational7(double r, const double* num, const double* den) {
  double p = num[7];
  for (int i = 6; i >= 0; --i) p = p * r + num[i];
  double q = den[7];
  for (int i = 6; i >= 0; --i) q = q * r + den[i];
  return p / q;
}

}  // namespace

// Rational approximations on three regimes of min(p, 1-p); the central
// branch covers |p - 0.5| <= 0.425 and the tails switch at r = 5.
double inverse_normal_cdf(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw ValidationError("inverse normal cdf argument " + format_double(p) +
                          " outside (0,1)");
  static const double A[8] = {
      3.3871328727963666080e0,  1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4,  4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4,  2.5090809287301226727e3};
  static const double B[8] = {
      1.0,                      4.2313330701600911252e1, 6.8718700749205790830e2,
      5.3941960214247511077e3,  2.1213794301586595867e4, 3.9307895800092710610e4,
      2.8729085735721942674e4,  5.2264952788528545610e3};
  static const double C[8] = {
      1.42343711074968357734e0, 4.63033784615654529590e0,
      5.76949722146069140550e0, 3.64784832476320460504e0,
      1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static const double D[8] = {
      1.0,                      2.05319162663775882187e0,
      1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static const double E[8] = {
      6.65790464350110377720e0, 5.46378491116411436990e0,
      1.78482653991729133580e0, 2.96560571828504891230e-1,
      2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static const double F[8] = {
      1.0,                      5.99832206555887937690e-1,
      1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};
  double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    double r = 0.180625 - q * q;
    return q * rational7(r, A, B);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double z;
  if (r <= 5.0) {
    z = rational7(r - 1.6, C, D);
  } else {
    z = rational7(r - 5.0, E, F);
  }
  return q < 0.0 ? -z : z;
}

int saa_sample_size(double gamma, double gamma_hat, double delta) {
  if (!(delta > 0.0) || !(delta < 1.0))
    throw ValidationError("confidence delta " + format_double(delta) +
                          " outside (0,1)");
  if (!(gamma >= 0.0) || !(gamma < 1.0))
    throw ValidationError("violation level " + format_double(gamma) +
                          " outside [0,1)");
  if (!(gamma_hat < 1.0))
    throw ValidationError("relaxed level " + format_double(gamma_hat) +
                          " must stay below 1");
  if (gamma_hat - gamma < 1e-3)
    throw ValidationError("relaxed level must exceed the violation level by at "
                          "least 1e-3, got margin " +
                          format_double(gamma_hat - gamma));
  double margin = gamma_hat - gamma;
  double raw = std::log(1.0 / delta) / (2.0 * margin * margin);
  long long n = static_cast<long long>(std::ceil(raw - 1e-9));
  if (n < 1) n = 1;
  return static_cast<int>(n);
}

PenaltySearchState solve_penalty(const BuildInputs& in, const VariantSpec& variant,
                                 double gamma_hat, const PenaltySearchOptions& opt) {
  if (variant.kind != BlendVariant::ChanceSlack)
    throw ValidationError("penalty search needs the slack blending variant");
  const int N = static_cast<int>(variant.sample_value.size());
  if (N < 1) throw ValidationError("penalty search needs at least one sample");
  if (!(gamma_hat > 0.0) || !(gamma_hat < 1.0))
    throw ValidationError("relaxed level " + format_double(gamma_hat) +
                          " outside (0,1)");
  if (!(opt.alpha_lo > 0.0) || !(opt.alpha_hi > opt.alpha_lo))
    throw ValidationError("penalty bracket must satisfy 0 < low < high");
  if (!(opt.bracket_phi > 0.0))
    throw ValidationError("bracket tolerance must be positive");

  MilpInstance mi = build_core(in);
  add_blending(mi, in, variant);
  const BlendInfo& bi = *mi.blend;
  const int W = static_cast<int>(bi.windows.size());

  MilpSession session(mi);

  PenaltySearchState st;
  st.alpha_lo = opt.alpha_lo;
  st.alpha_hi = opt.alpha_hi;
  const int allow = static_cast<int>(std::floor(gamma_hat * N + 1e-9));
  const double band = gamma_hat * N;
  // Bisection halves the bracket every step, so the loop cannot run longer
  // than the depth needed to shrink the initial width below the tolerance.
  const int depth_cap =
      static_cast<int>(std::ceil(
          std::log2((opt.alpha_hi - opt.alpha_lo) / opt.bracket_phi))) + 1;

  double lo = opt.alpha_lo;
  double hi = opt.alpha_hi;
  for (int iter = 1;; ++iter) {
    const double alpha = 0.5 * (lo + hi);
    for (int id : bi.slack_minus) session.set_objective(id, alpha);
    SolveResult res = session.solve(opt.request);
    st.iterations = iter;
    st.alpha = alpha;
    if (res.status != SolveStatus::Optimal) {
      st.status = res.status;
      st.alpha_lo = lo;
      st.alpha_hi = hi;
      return st;
    }

    int count = 0;
    double slack_total = 0.0;
    for (int nIdx = 0; nIdx < N; ++nIdx) {
      bool violated = false;
      for (int w = 0; w < W; ++w) {
        double s = res.values[bi.slack_minus[static_cast<size_t>(nIdx) * W + w]];
        slack_total += s;
        if (s > kSlackTol) violated = true;
      }
      if (violated) ++count;
    }
    const double obj_free = res.objective - alpha * slack_total;
    st.violation_count = count;
    if (opt.trace) {
      std::ostringstream line;
      line << iter << '\t' << format_double(alpha) << '\t' << count << '\t'
           << format_double(res.objective);
      st.trace_lines.push_back(line.str());
    }
    if (count <= allow && (!st.feasible || obj_free < st.objective)) {
      st.feasible = true;
      st.objective = obj_free;
      st.objective_with_penalty = res.objective;
      st.incumbent_count = count;
      st.incumbent_alpha = alpha;
      st.values = res.values;
    }
    if (!st.feasible && st.values.empty()) st.values = res.values;

    if (count >= band + opt.count_eps) {
      lo = alpha;  // too many shortfalls: the penalty must rise
    } else {
      hi = alpha;  // acceptable (or over-tight): try a cheaper penalty
    }
    st.alpha_lo = lo;
    st.alpha_hi = hi;
    st.status = SolveStatus::Optimal;
    if (std::fabs(alpha - 0.5 * (lo + hi)) <= opt.bracket_phi) break;
    if (iter >= depth_cap) break;
  }

  if (st.feasible)
    st.solution = extract_solution(mi, in, st.values, st.objective);
  return st;
}

namespace {

void require_problem(const SaaProblem& prob) {
  if (prob.build == nullptr || prob.build->net == nullptr ||
      prob.build->classes == nullptr || prob.build->plan == nullptr)
    throw ValidationError("bound procedure needs a fully wired problem");
  if (prob.dists == nullptr || prob.dists->empty())
    throw ValidationError("bound procedure needs carbohydrate distributions");
  for (const EmpiricalDist& d : *prob.dists) d.validate();
}

VariantSpec chance_shape(const SaaProblem& prob) {
  VariantSpec shape;
  shape.kind = BlendVariant::ChanceSlack;
  shape.target = prob.target;
  shape.tau_periods = prob.tau_periods;
  return shape;
}

}  // namespace

BoundCertificate lower_bound(const SaaProblem& prob, double gamma, double gamma_hat,
                             double delta, int m, uint64_t seed,
                             const PenaltySearchOptions& popt) {
  require_problem(prob);
  if (m < 1) throw ValidationError("replication count must be positive");
  const int N = saa_sample_size(gamma, gamma_hat, delta);

  BoundCertificate cert;
  cert.kind = BoundKind::Lower;
  cert.gamma = gamma;
  cert.gamma_hat = gamma_hat;
  cert.delta = delta;
  cert.n_samples = N;
  cert.m_replications = m;
  cert.objectives.assign(m, std::numeric_limits<double>::quiet_NaN());
  cert.feasible.assign(m, 0);
  std::vector<std::string> errors(m);

#pragma omp parallel for schedule(static)
  for (int j = 0; j < m; ++j) {
    try {
      SampleSet ss = sample(*prob.dists, N, mix_seed(seed, static_cast<uint64_t>(j) + 1));
      VariantSpec v = variant_with_samples(chance_shape(prob), ss, *prob.build->classes);
      PenaltySearchState st = solve_penalty(*prob.build, v, gamma_hat, popt);
      if (st.status == SolveStatus::Optimal && st.feasible) {
        cert.objectives[j] = st.objective;
        cert.feasible[j] = 1;
      }
    } catch (const std::exception& e) {
      errors[j] = e.what();
    }
  }
  for (int j = 0; j < m; ++j)
    if (!errors[j].empty())
      throw BackendError("bound replication " + std::to_string(j + 1) +
                         " failed: " + errors[j]);

  cert.all_feasible = true;
  for (int j = 0; j < m; ++j) {
    if (!cert.feasible[j]) {
      cert.all_feasible = false;
      continue;
    }
    if (!cert.has_value || cert.objectives[j] < cert.value) {
      cert.value = cert.objectives[j];
      cert.has_value = true;
    }
  }
  return cert;
}

BoundCertificate upper_bound(const SaaProblem& prob, double gamma, double gamma_hat,
                             double delta, int n, int n_posterior, int m, int step,
                             uint64_t seed, const PenaltySearchOptions& popt,
                             int max_outer) {
  require_problem(prob);
  if (!(gamma_hat < gamma))
    throw ValidationError("upper bound needs the relaxed level below the "
                          "violation level");
  if (n < 1) throw ValidationError("sample size must be positive");
  if (n_posterior < 2) throw ValidationError("posterior sample size too small");
  if (m < 1) throw ValidationError("replication count must be positive");
  if (step < 1) throw ValidationError("growth step must be positive");
  if (max_outer < 1) throw ValidationError("outer round cap must be positive");
  const double z = inverse_normal_cdf(1.0 - delta);

  BoundCertificate cert;
  cert.kind = BoundKind::Upper;
  cert.gamma = gamma;
  cert.gamma_hat = gamma_hat;
  cert.delta = delta;
  cert.m_replications = m;
  cert.n_posterior = n_posterior;

  for (int outer = 1;; ++outer) {
    cert.objectives.assign(m, std::numeric_limits<double>::quiet_NaN());
    cert.feasible.assign(m, 0);
    cert.posterior_mean.assign(m, std::numeric_limits<double>::quiet_NaN());
    cert.posterior_upper.assign(m, std::numeric_limits<double>::quiet_NaN());
    cert.n_samples = n;
    cert.outer_iterations = outer;
    std::vector<std::string> errors(m);

#pragma omp parallel for schedule(static)
    for (int j = 0; j < m; ++j) {
      try {
        uint64_t rep_stream = static_cast<uint64_t>(outer) * 1000 + j + 1;
        SampleSet ss = sample(*prob.dists, n, mix_seed(seed, rep_stream));
        VariantSpec v =
            variant_with_samples(chance_shape(prob), ss, *prob.build->classes);
        PenaltySearchState st = solve_penalty(*prob.build, v, gamma_hat, popt);
        if (st.status == SolveStatus::Optimal && st.feasible) {
          cert.objectives[j] = st.objective;
          SampleSet posterior =
              sample(*prob.dists, n_posterior,
                     mix_seed(seed, 500000 + static_cast<uint64_t>(outer) * 1000 + j));
          ViolationReport vr =
              violation_rate(st.solution, *prob.build->net, *prob.build->classes,
                             posterior, prob.target, prob.tau_periods, false);
          double hbar = vr.per_sample_rate;
          double u = hbar + z * std::sqrt(hbar * (1.0 - hbar) / n_posterior);
          cert.posterior_mean[j] = hbar;
          cert.posterior_upper[j] = u;
          cert.feasible[j] = (u <= gamma + 1e-12) ? 1 : 0;
        }
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    }
    for (int j = 0; j < m; ++j)
      if (!errors[j].empty())
        throw BackendError("bound replication " + std::to_string(j + 1) +
                           " failed: " + errors[j]);

    bool all = true;
    for (int j = 0; j < m; ++j)
      if (!cert.feasible[j]) all = false;
    cert.all_feasible = all;
    if (all) {
      cert.converged = true;
      break;
    }
    if (outer >= max_outer) {
      cert.converged = false;
      break;
    }
    n += step;
  }

  for (int j = 0; j < m; ++j) {
    if (!cert.feasible[j]) continue;
    if (!cert.has_value || cert.objectives[j] < cert.value) {
      cert.value = cert.objectives[j];
      cert.has_value = true;
    }
  }
  return cert;
}

}  // namespace bioproc

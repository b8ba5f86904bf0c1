// Sample-based machinery for the carbohydrate chance constraint: empirical
// draws, violation counting, the penalty binary search, and the
// lower/upper bound certificates with their confidence arithmetic.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bioproc/core.hpp"
#include "bioproc/milp.hpp"
#include "bioproc/solver.hpp"

namespace bioproc {

// Discrete carbohydrate-fraction distribution for one feedstock.
struct EmpiricalDist {
  int feedstock = -1;
  std::vector<double> support;  // fractions in (0,1)
  std::vector<double> weights;  // nonnegative, sum 1

  void validate() const;  // throws ValidationError
  double mean() const;
  // Nearest-rank percentile: smallest support value whose cumulative
  // weight reaches level.
  double percentile(double level) const;
};

struct SampleSet {
  int n_samples = 0;
  uint64_t seed = 0;
  std::vector<int> feedstocks;  // slot order
  std::vector<double> values;   // [slot * n_samples + n]

  int slot_of(int feedstock) const;
  double value(int feedstock, int n) const;
};

// N independent draws per feedstock; identical seed -> identical values.
SampleSet sample(const std::vector<EmpiricalDist>& dists, int n, uint64_t seed);

// Fills a chance-constraint variant's per-sample fraction table from a
// sample set, mapping each bale class through its feedstock.
VariantSpec variant_with_samples(const VariantSpec& shape, const SampleSet& samples,
                                 const std::vector<BaleClass>& classes);

struct ViolationReport {
  int n_samples = 0;
  int violated_samples = 0;          // samples with any violated window
  double per_sample_rate = 0.0;
  std::vector<double> per_window_rate;
};

// Re-evaluates the blending requirement on reactor inflows for every
// sample and window: a sample is counted once no matter how many of its
// windows fall short. The parallel flavor splits samples across threads
// with identical per-sample arithmetic.
ViolationReport violation_rate(const SolutionRecord& sol, const ProcessNetwork& net,
                               const std::vector<BaleClass>& classes,
                               const SampleSet& samples, double target,
                               int tau_periods, bool parallel = false);

// Inverse standard normal CDF, |Phi(z) - p| <= 1e-9 on (0,1).
double inverse_normal_cdf(double p);

// Smallest N with N >= ln(1/delta) / (2 (gamma_hat - gamma)^2).
// Requires gamma_hat - gamma >= 1e-3.
int saa_sample_size(double gamma, double gamma_hat, double delta);

struct PenaltySearchOptions {
  double alpha_lo = 1e-3;
  double alpha_hi = 1e3;
  double count_eps = 1e-4;    // tolerance around gamma_hat * N
  double bracket_phi = 1e-4;  // bracket collapse tolerance
  SolveRequest request;
  bool trace = false;
};

struct PenaltySearchState {
  double alpha = 0.0;
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
  int violation_count = 0;  // C at the final iterate
  int iterations = 0;
  SolveStatus status = SolveStatus::Error;
  bool feasible = false;        // some iterate reached C <= floor(gamma_hat N)
  double objective = 0.0;       // incumbent makespan objective, penalty removed
  double objective_with_penalty = 0.0;
  int incumbent_count = 0;      // C of the incumbent
  double incumbent_alpha = 0.0;
  std::vector<double> values;   // incumbent variable values
  SolutionRecord solution;      // incumbent mapped back to network terms
  std::vector<std::string> trace_lines;  // "iter alpha C objective"
};

// Binary search on the slack penalty: rebuilds nothing, re-prices the
// shortfall variables through a warm solver session each step. The
// returned incumbent satisfies C <= floor(gamma_hat * N) whenever any
// iterate did.
PenaltySearchState solve_penalty(const BuildInputs& in, const VariantSpec& variant,
                                 double gamma_hat, const PenaltySearchOptions& opt);

enum class BoundKind { Lower, Upper };

struct BoundCertificate {
  BoundKind kind = BoundKind::Lower;
  double gamma = 0.0;
  double gamma_hat = 0.0;
  double delta = 0.0;
  int n_samples = 0;   // N per replication (final N for Upper)
  int m_replications = 0;
  int n_posterior = 0; // N' (Upper only)
  double value = 0.0;  // Lower: min objective; Upper: min feasible objective
  bool has_value = false;
  bool all_feasible = false;
  bool converged = true;
  int outer_iterations = 1;
  std::vector<double> objectives;     // per replication
  std::vector<char> feasible;         // per replication
  std::vector<double> posterior_mean; // H-bar per replication (Upper)
  std::vector<double> posterior_upper;// U per replication (Upper)
};

// Shared problem handle for the bound procedures.
struct SaaProblem {
  const BuildInputs* build = nullptr;
  const std::vector<EmpiricalDist>* dists = nullptr;
  double target = 0.0;   // carbohydrate threshold
  int tau_periods = 0;   // blending window length, 0 = single window
};

// M replications at sample size N(gamma, gamma_hat, delta), each solved
// through the penalty search on fresh draws; the certificate's value is
// the smallest replication objective.
BoundCertificate lower_bound(const SaaProblem& prob, double gamma, double gamma_hat,
                             double delta, int m, uint64_t seed,
                             const PenaltySearchOptions& popt);

// Conservative replications (gamma_hat < gamma) checked a posteriori on
// n_posterior fresh draws; N grows by step until every replication's
// posterior upper estimate clears gamma, up to max_outer rounds.
BoundCertificate upper_bound(const SaaProblem& prob, double gamma, double gamma_hat,
                             double delta, int n, int n_posterior, int m, int step,
                             uint64_t seed, const PenaltySearchOptions& popt,
                             int max_outer = 10);

}  // namespace bioproc

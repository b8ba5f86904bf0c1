// End-to-end orchestration: case data ingest, sequencing, replication
// dispatch, performance metrics, and report emission.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bioproc/core.hpp"
#include "bioproc/milp.hpp"
#include "bioproc/saa.hpp"
#include "bioproc/sequencing.hpp"
#include "bioproc/solver.hpp"

namespace bioproc {

// One experiment, parsed from a key = value config file. Paths are stored
// as given; resolve_path() applies the config file's directory to relative
// entries.
struct RunConfig {
  std::string problem_id = "run";

  // Input files.
  std::string network_path;
  std::string equipment_path;
  std::string inventory_path;
  std::string distributions_dir;
  std::string sequence_path;
  // literal | moisture | quality | distance | combined | random
  std::string sequence_rule = "literal";

  // Blending variant.
  BlendVariant variant = BlendVariant::None;
  double tau_minutes = 0.0;  // 0 = one window across the horizon
  double target = 0.0;
  double gamma = 0.10;       // admissible violation probability
  double gamma_hat = 0.05;   // design level inside the sampled model
  double delta = 0.01;       // bound confidence parameter
  int n_samples = 50;        // N per replication
  int n_posterior = 10000;   // N' for posterior feasibility checks
  int m_replications = 1;    // M
  int growth_step = 50;      // sample-size increment between posterior rounds
  int max_outer = 10;        // posterior growth rounds before giving up
  double quality_percentile = 0.95;  // lot classification level for rules 2-4

  ReliabilitySpec rel;

  // Discretization and bale geometry.
  double dt_minutes = 1.0;
  int horizon = 0;
  double bale_mass = 0.391;  // dry Mg
  BaleGeometry geom;

  // Penalty bisection controls; request carries solver limits.
  PenaltySearchOptions penalty;

  // Execution.
  uint64_t seed = 1;
  int pool_size = 1;
  std::string output_dir;
  // "" = built-in branch and bound; "oracle" = enumeration engine for tiny
  // instances; anything else = external command template with {lp} / {sol}.
  std::string backend;

  std::string config_dir;  // directory holding the config file

  std::string resolve_path(const std::string& p) const;
  int tau_periods() const;  // round(tau_minutes / dt_minutes), floored at 0
};

// Parses the file, applies defaults, validates ranges. Unknown keys are
// errors naming the key. BIOPROC_BACKEND and BIOPROC_POOL environment
// variables override the corresponding entries when set.
RunConfig load_run_config(const std::string& path);

// Ingested case files, index-aligned: feedstock f in the inventory table
// owns dists[f], feedstock_labels[f], feedstock_mean[f].
struct CaseData {
  ProcessNetwork net;
  std::vector<BaleClass> classes;         // derived fields filled
  std::vector<std::string> class_labels;  // "S_L" style, unique
  std::vector<std::string> feedstock_labels;
  std::vector<double> feedstock_mean;     // from the inventory table
  std::vector<EmpiricalDist> dists;
  SequenceInventory inventory;            // counts, splits, percentile values
};

// Reads the network, equipment, inventory, and distribution files named by
// the config; builds per-class capacities (dry Mg per period), losses,
// bypass fractions, bin limits, and the sequencing inventory. Errors name
// the offending file, row, and column. Distribution means are checked
// against the inventory table within 1%.
CaseData ingest_case_data(const RunConfig& cfg);

// The feeding order for the configured rule (or the literal pattern file).
std::vector<PlacedBale> make_sequence(const RunConfig& cfg, const CaseData& data);

// Maps placed bales onto class indices; errors on a (feedstock, moisture)
// pairing with no bales in the class table.
std::vector<int> order_to_classes(const std::vector<PlacedBale>& order,
                                  const std::vector<BaleClass>& classes);

// Owns everything the instance builder points at.
struct PreparedCase {
  CaseData data;
  std::vector<PlacedBale> order;
  SequencePlan plan;
  VariantSpec shape;  // kind, target, window length, per-class means
  ReliabilitySpec rel;
  BaleGeometry geom;

  BuildInputs inputs() const;  // assembled from the members' addresses
};

PreparedCase prepare_case(const RunConfig& cfg);

// One row of the results table.
struct MetricsRow {
  std::string problem_id;
  double time_hours = 0.0;
  double rate = 0.0;           // dry Mg per hour at the reactor
  double flow = 0.0;           // dry Mg delivered over the run
  double avg_inventory = 0.0;  // mean total bin holdings over the process span
  double max_inventory = 0.0;  // peak total bin holdings
  double cov = 0.0;            // std of per-period reactor-flow shares
  int feasible_count = 0;
  int total_count = 0;
};

// True when rate * time matches flow within rel_tol (the consistency every
// emitted row must satisfy).
bool metrics_identity_ok(double time_hours, double rate, double flow,
                         double rel_tol = 0.005);

// Aggregates one feasible schedule. Throws ValidationError on zero process
// time and BackendError if the identity check fails on the produced row.
MetricsRow compute_metrics(const SolutionRecord& sol, const ProcessNetwork& net,
                           double dt_minutes);

// Fraction of each class's infeed mass that reaches the reactor feeders,
// found by propagating grinder losses and separator splits along the
// network; independent of the scheduling rows.
std::vector<double> delivery_factors(const ProcessNetwork& net, int n_classes);

// Largest absolute gap, over classes, between scheduled reactor delivery
// and infeed mass times the delivery factor.
double delivery_gap(const SolutionRecord& sol, const ProcessNetwork& net,
                    const std::vector<BaleClass>& classes);

struct ReplicationResult {
  int index = 0;  // 0-based
  SolveStatus status = SolveStatus::Error;
  bool feasible = false;
  double objective = 0.0;        // makespan, periods
  double alpha = 0.0;            // final penalty weight (sampled variants)
  int violation_count = 0;       // violated samples at the incumbent
  double violation_rate = 0.0;   // share of its own sample set
  std::string message;
  SolutionRecord solution;
  MetricsRow metrics;            // valid when feasible
};

struct RunReport {
  std::string problem_id;
  std::vector<ReplicationResult> replications;
  MetricsRow summary;          // averaged over feasible replications
  bool any_feasible = false;
  bool any_error = false;
  std::string status;          // "ok" | "partial" | "infeasible"
};

// Runs M replications round-robin across a pool of pool_size workers and
// aggregates in index order, so the report depends only on (config, seeds).
// Replication errors are captured per slot and leave a partial report.
RunReport run_experiment(const RunConfig& cfg);

// Serialization of solved schedules, reused by the recompute flow.
std::string solution_record_text(const SolutionRecord& sol);
SolutionRecord parse_solution_record(const std::string& text);

// Writes results.tsv, replications.tsv, series.tsv, and one solution file
// per feasible replication under cfg.output_dir.
void write_report(const RunConfig& cfg, const RunReport& report);

// Rebuilds the per-replication metrics from the solution files a previous
// run wrote and re-emits results.tsv / replications.tsv byte-identically.
RunReport recompute_report(const RunConfig& cfg);

// Bound procedures driven by the config (seed, gamma levels, N growth).
BoundCertificate run_lower_bound(const RunConfig& cfg, const PreparedCase& pc);
BoundCertificate run_upper_bound(const RunConfig& cfg, const PreparedCase& pc);
std::string bound_certificate_text(const BoundCertificate& cert);

}  // namespace bioproc

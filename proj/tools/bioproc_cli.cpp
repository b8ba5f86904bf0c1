// Command-line front end: sequence generation, model export, solving,
// bound certificates, and report recomputation, all driven by the same
// config files the library consumes.
//
// Exit codes: 0 success, 2 infeasible, 3 input/validation error,
// 4 backend failure.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bioproc/common.hpp"
#include "bioproc/lp_text.hpp"
#include "bioproc/milp.hpp"
#include "bioproc/runner.hpp"
#include "bioproc/saa.hpp"
#include "bioproc/sequencing.hpp"
#include "bioproc/solver.hpp"

namespace {

using namespace bioproc;

struct Overrides {
  std::string variant;
  std::string backend;
  std::string output_dir;
  std::string rule;
  long seed = -1;
  int pool = 0;
  int reps = 0;
};

RunConfig load_with_overrides(const std::string& path, const Overrides& ov) {
  RunConfig cfg = load_run_config(path);
  if (!ov.variant.empty()) cfg.variant = parse_blend_variant(ov.variant);
  if (!ov.backend.empty()) cfg.backend = ov.backend == "internal" ? "" : ov.backend;
  if (!ov.output_dir.empty()) cfg.output_dir = ov.output_dir;
  if (!ov.rule.empty()) cfg.sequence_rule = ov.rule;
  if (ov.seed >= 0) cfg.seed = static_cast<uint64_t>(ov.seed);
  if (ov.pool > 0) cfg.pool_size = ov.pool;
  if (ov.reps > 0) cfg.m_replications = ov.reps;
  return cfg;
}

void print_summary(const RunReport& rep) {
  std::printf("status %s\n", rep.status.c_str());
  std::printf("feasible %d/%d\n",
              rep.summary.feasible_count, rep.summary.total_count);
  if (rep.any_feasible) {
    std::printf("time_h %.2f\nrate_mg_h %.2f\nflow_mg %.2f\n",
                rep.summary.time_hours, rep.summary.rate, rep.summary.flow);
    std::printf("avg_inv_mg %.2f\nmax_inv_mg %.2f\ncov %.4f\n",
                rep.summary.avg_inventory, rep.summary.max_inventory,
                rep.summary.cov);
  }
  for (const auto& r : rep.replications) {
    if (!r.message.empty())
      std::fprintf(stderr, "replication %d: %s\n", r.index + 1,
                   r.message.c_str());
  }
}

int cmd_sequence(const std::string& config, const Overrides& ov,
                 const std::string& out_path) {
  const RunConfig cfg = load_with_overrides(config, ov);
  const CaseData data = ingest_case_data(cfg);
  const std::vector<PlacedBale> order = make_sequence(cfg, data);
  const std::string text = sequence_text(order, data.inventory.lots);
  if (out_path.empty()) std::fputs(text.c_str(), stdout);
  else write_file(out_path, text);
  std::fprintf(stderr, "%zu bales, rule %s\n", order.size(),
               cfg.sequence_rule.c_str());
  return 0;
}

int cmd_build(const std::string& config, const Overrides& ov,
              const std::string& out_path) {
  const RunConfig cfg = load_with_overrides(config, ov);
  const PreparedCase pc = prepare_case(cfg);
  MilpInstance mi = build_core(pc.inputs());
  VariantSpec variant = pc.shape;
  if (variant.kind == BlendVariant::AllSamples ||
      variant.kind == BlendVariant::ChanceSlack) {
    // Same draw the first replication of a run would use.
    const SampleSet s =
        sample(pc.data.dists, cfg.n_samples, mix_seed(cfg.seed, 1));
    variant = variant_with_samples(pc.shape, s, pc.data.classes);
  }
  add_blending(mi, pc.inputs(), variant);
  write_file(out_path, export_lp_text(mi));
  std::fputs(mi.stats_text().c_str(), stdout);
  std::printf("vars\t%d\nrows\t%d\nbinary\t%d\nnonzeros\t%zu\n", mi.n_vars(),
              mi.n_rows(), mi.n_binary(), mi.n_nonzeros());
  std::fprintf(stderr, "model written to %s\n", out_path.c_str());
  return 0;
}

int run_common(const std::string& config, const Overrides& ov, bool write) {
  const RunConfig cfg = load_with_overrides(config, ov);
  const RunReport rep = run_experiment(cfg);
  if (write) write_report(cfg, rep);
  print_summary(rep);
  if (write)
    std::fprintf(stderr, "report written to %s\n", cfg.output_dir.c_str());
  return rep.any_feasible ? 0 : 2;
}

int cmd_bounds(const std::string& config, const Overrides& ov,
               const std::string& kind, const std::string& out_path) {
  const RunConfig cfg = load_with_overrides(config, ov);
  const PreparedCase pc = prepare_case(cfg);
  const BoundCertificate cert = kind == "lower" ? run_lower_bound(cfg, pc)
                                                : run_upper_bound(cfg, pc);
  const std::string text = bound_certificate_text(cert);
  std::fputs(text.c_str(), stdout);
  if (!out_path.empty()) write_file(out_path, text);
  return cert.has_value ? 0 : 2;
}

int cmd_report(const std::string& config, const Overrides& ov) {
  const RunConfig cfg = load_with_overrides(config, ov);
  const RunReport rep = recompute_report(cfg);
  print_summary(rep);
  return rep.any_feasible ? 0 : 2;
}

// Solver adapter protocol: read an LP-format model, solve with the internal
// backend, write the name/value solution file. The external-backend code
// spawns this same binary in its own tests.
int cmd_lpsolve(const std::string& in_path, const std::string& out_path,
                double time_limit) {
  const MilpInstance mi = parse_lp_text(read_file(in_path));
  SolveRequest req;
  req.time_limit_sec = time_limit;
  const SolveResult res = solve(mi, req);
  write_file(out_path,
             write_solution_text(solve_status_name(res.status), res.objective,
                                 mi, res.has_solution
                                         ? res.values
                                         : std::vector<double>{}));
  if (res.status == SolveStatus::Optimal) return 0;
  if (res.status == SolveStatus::Infeasible) return 2;
  return 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bulk biomass scheduling toolkit"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config, kind = "lower";
  std::string seq_out, build_out, bounds_out;
  std::string lp_in, lp_out;
  double lp_time_limit = 0.0;

  auto add_common = [&](CLI::App* sub, bool with_exec) {
    sub->add_option("config", config, "experiment config file")->required();
    sub->add_option("--variant", ov.variant,
                    "blending variant override (none/det/all/chance)");
    sub->add_option("--seed", ov.seed, "base seed override");
    if (with_exec) {
      sub->add_option("--pool", ov.pool, "worker pool size override");
      sub->add_option("--reps", ov.reps, "replication count override");
      sub->add_option("--backend", ov.backend,
                      "solver backend override (internal/oracle/command)");
      sub->add_option("--output", ov.output_dir, "report directory override");
    }
  };

  CLI::App* seq = app.add_subcommand("sequence", "emit the feeding order");
  add_common(seq, false);
  seq->add_option("--rule", ov.rule,
                  "ordering rule (literal/moisture/quality/distance/combined/random)");
  seq->add_option("--out", seq_out, "write the order here instead of stdout");

  CLI::App* build = app.add_subcommand("build", "export the model in LP format");
  add_common(build, false);
  build->add_option("--out", build_out, "model file")->default_val("model.lp");

  CLI::App* solve_cmd =
      app.add_subcommand("solve", "solve one replication, print metrics");
  add_common(solve_cmd, true);

  CLI::App* run = app.add_subcommand("run", "solve all replications, write report");
  add_common(run, true);

  CLI::App* bounds = app.add_subcommand("bounds", "objective bound certificate");
  add_common(bounds, true);
  bounds->add_option("--kind", kind, "lower or upper")
      ->check(CLI::IsMember({"lower", "upper"}));
  bounds->add_option("--out", bounds_out, "also write the certificate here");

  CLI::App* report =
      app.add_subcommand("report", "recompute tables from stored solutions");
  add_common(report, true);

  CLI::App* lpsolve = app.add_subcommand("lpsolve");
  lpsolve->group("");  // adapter protocol endpoint, hidden from help
  lpsolve->add_option("input", lp_in)->required();
  lpsolve->add_option("output", lp_out)->required();
  lpsolve->add_option("--time-limit", lp_time_limit);

  CLI11_PARSE(app, argc, argv);

  try {
    if (seq->parsed()) return cmd_sequence(config, ov, seq_out);
    if (build->parsed()) return cmd_build(config, ov, build_out);
    if (solve_cmd->parsed()) {
      ov.reps = 1;
      return run_common(config, ov, false);
    }
    if (run->parsed()) return run_common(config, ov, true);
    if (bounds->parsed()) return cmd_bounds(config, ov, kind, bounds_out);
    if (report->parsed()) return cmd_report(config, ov);
    if (lpsolve->parsed()) return cmd_lpsolve(lp_in, lp_out, lp_time_limit);
  } catch (const bioproc::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const bioproc::BackendError& e) {
    std::fprintf(stderr, "backend error: %s\n", e.what());
    return 4;
  }
  return 1;
}

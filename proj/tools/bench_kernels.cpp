// Benchmark for the parallel kernels against their serial references:
// solution row checking and sample violation counting. Both flavors must
// produce identical results; this tool reports timings and verifies that.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bioproc/common.hpp"
#include "bioproc/milp.hpp"
#include "bioproc/runner.hpp"
#include "bioproc/saa.hpp"
#include "bioproc/solver.hpp"

using namespace bioproc;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// A deterministic schedule shape: reactor on everywhere, feeder flows
// cycling over the classes. The kernels only read flows and on-flags, so
// this exercises them exactly like a solved schedule would.
SolutionRecord synth_solution(const ProcessNetwork& net, int n_classes) {
  SolutionRecord sol;
  sol.resize(static_cast<int>(net.nodes.size()), n_classes, net.horizon);
  for (int t = 1; t <= net.horizon; ++t) {
    sol.reactor_on[t - 1] = 1.0;
    sol.window_flow[t - 1] = 0.05;
    for (int i : net.reactor_feeders) {
      const int c = (t + i) % n_classes;
      sol.x(i, c, t) = 0.05;
      if (n_classes > 1) sol.x(i, (c + 1) % n_classes, t) = 0.02;
    }
  }
  return sol;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel benchmark: serial reference vs OpenMP"};
  std::string config;
  int n_samples = 200;
  int rounds = 5;
  int threads = 0;
  app.add_option("config", config, "experiment config file")->required();
  app.add_option("--samples", n_samples, "sample count for the blend kernels");
  app.add_option("--rounds", rounds, "timing repetitions");
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    RunConfig cfg = load_run_config(config);
    cfg.n_samples = n_samples;
    const PreparedCase pc = prepare_case(cfg);
    const int n_classes = static_cast<int>(pc.data.classes.size());

    MilpInstance mi = build_core(pc.inputs());
    VariantSpec variant = pc.shape;
    const SampleSet samples =
        sample(pc.data.dists, n_samples, mix_seed(cfg.seed, 1));
    if (variant.kind == BlendVariant::AllSamples ||
        variant.kind == BlendVariant::ChanceSlack)
      variant = variant_with_samples(pc.shape, samples, pc.data.classes);
    add_blending(mi, pc.inputs(), variant);
    std::printf("model: %d vars, %d rows, %zu nonzeros, %d samples\n",
                mi.n_vars(), mi.n_rows(), mi.n_nonzeros(), n_samples);

    const std::vector<double> x(mi.n_vars(), 0.5);
    const SolutionRecord sol = synth_solution(pc.data.net, n_classes);

    double t_serial = 0.0, t_parallel = 0.0;
    RowCheckReport rep_s, rep_p;
    for (int r = 0; r < rounds; ++r) {
      auto t0 = Clock::now();
      rep_s = check_solution_serial(mi, x);
      t_serial += ms_since(t0);
      t0 = Clock::now();
      rep_p = check_solution_parallel(mi, x);
      t_parallel += ms_since(t0);
    }
    const bool rows_equal =
        rep_s.max_row_violation == rep_p.max_row_violation &&
        rep_s.worst_row == rep_p.worst_row &&
        rep_s.recomputed_objective == rep_p.recomputed_objective;
    std::printf("row_check      serial %8.2f ms   parallel %8.2f ms   x%.2f   %s\n",
                t_serial / rounds, t_parallel / rounds, t_serial / t_parallel,
                rows_equal ? "identical" : "MISMATCH");

    double v_serial = 0.0, v_parallel = 0.0;
    ViolationReport vr_s, vr_p;
    const double target = cfg.target > 0 ? cfg.target : 0.5;
    for (int r = 0; r < rounds; ++r) {
      auto t0 = Clock::now();
      vr_s = violation_rate(sol, pc.data.net, pc.data.classes, samples, target,
                            cfg.tau_periods(), false);
      v_serial += ms_since(t0);
      t0 = Clock::now();
      vr_p = violation_rate(sol, pc.data.net, pc.data.classes, samples, target,
                            cfg.tau_periods(), true);
      v_parallel += ms_since(t0);
    }
    const bool viol_equal =
        vr_s.violated_samples == vr_p.violated_samples &&
        vr_s.per_window_rate == vr_p.per_window_rate;
    std::printf("violation_rate serial %8.2f ms   parallel %8.2f ms   x%.2f   %s\n",
                v_serial / rounds, v_parallel / rounds, v_serial / v_parallel,
                viol_equal ? "identical" : "MISMATCH");
    return (rows_equal && viol_equal) ? 0 : 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

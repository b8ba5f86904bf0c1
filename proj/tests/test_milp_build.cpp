#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "bioproc/core.hpp"
#include "bioproc/milp.hpp"
#include "bioproc/solver.hpp"

using namespace bioproc;

namespace {

// Conveyor -> separator -> {grinder on the oversize branch, conveyor on the
// bypass branch} -> surge bin -> reactor feeder, two classes, one bale each.
struct SepFixture {
  ProcessNetwork net;
  std::vector<BaleClass> classes;
  BaleGeometry geom;
  SequencePlan plan;
  ReliabilitySpec rel;
  std::vector<std::string> labels = {"A", "B"};

  SepFixture() {
    EquipmentNode dc;
    dc.id = "DC";
    dc.kind = NodeKind::Conveyor;
    dc.capacity = {0.1, 0.1};
    EquipmentNode sep;
    sep.id = "S1";
    sep.kind = NodeKind::Separator;
    sep.bypass = {0.45, 0.30};
    EquipmentNode g2;
    g2.id = "G2";
    g2.kind = NodeKind::Grinder;
    g2.branch = BranchRole::Large;
    g2.dry_matter_loss = 0.005;
    EquipmentNode byp;
    byp.id = "BYP";
    byp.kind = NodeKind::Conveyor;
    byp.branch = BranchRole::Small;
    EquipmentNode sb;
    sb.id = "SB";
    sb.kind = NodeKind::SurgeBin;
    sb.mass_cap = 2.0;
    sb.volume_cap = 30.0;
    sb.stored_density = {0.04, 0.04};
    EquipmentNode rf;
    rf.id = "RF";
    rf.kind = NodeKind::ReactorFeeder;
    net.nodes = {dc, sep, g2, byp, sb, rf};
    net.preds = {{}, {0}, {1}, {1}, {2, 3}, {4}};
    net.infeed = 0;
    net.reactor_feeders = {5};
    net.horizon = 20;
    net.big_m = 21.0;

    for (int f = 0; f < 2; ++f) {
      BaleClass c;
      c.feedstock = f;
      c.bale_mass = 0.391;
      c.bale_count = 1;
      c.bale_density = 0.144;
      classes.push_back(derive_bale_parameters(geom, c, 0.1));
    }
    REQUIRE(classes[0].processing_periods == 5);
    plan = expand_sequence({0, 1}, classes, net.horizon);

    rel.q_min = 0.90;
    rel.q_avg = 0.95;
    rel.u_lower = 0.01;
    rel.u_upper = 0.20;
  }

  BuildInputs inputs() const {
    BuildInputs in;
    in.net = &net;
    in.classes = &classes;
    in.plan = &plan;
    in.class_labels = labels;
    in.rel = rel;
    in.geom = geom;
    return in;
  }
};

int family_count(const MilpInstance& mi, const char* name) {
  auto it = mi.row_family_count.find(name);
  return it == mi.row_family_count.end() ? 0 : it->second;
}

}  // namespace

TEST_CASE("blend windows tile the horizon") {
  auto [w1, t1] = blend_windows(10, 3);
  CHECK(w1 == std::vector<std::pair<int, int>>{{1, 3}, {4, 6}, {7, 9}, {10, 10}});
  CHECK(t1);

  auto [w2, t2] = blend_windows(10, 5);
  CHECK(w2 == std::vector<std::pair<int, int>>{{1, 5}, {6, 10}});
  CHECK(!t2);

  auto [w3, t3] = blend_windows(10, 0);
  CHECK(w3 == std::vector<std::pair<int, int>>{{1, 10}});
  CHECK(!t3);

  auto [w4, t4] = blend_windows(6, 12);  // window longer than the horizon
  CHECK(w4 == std::vector<std::pair<int, int>>{{1, 6}});
  CHECK(t4);
}

TEST_CASE("core builder emits the expected constraint families") {
  SepFixture f;
  MilpInstance mi = build_core(f.inputs());
  const int T = f.net.horizon, nc = 2, bales = 2;

  CHECK(family_count(mi, "infeed_gate") == nc * T);
  CHECK(family_count(mi, "belt_couple") == nc * T);
  CHECK(family_count(mi, "whole_bale") == nc);
  CHECK(family_count(mi, "advance_lo") == bales);
  CHECK(family_count(mi, "advance_hi") == bales);
  CHECK(family_count(mi, "window_excl") == bales);
  CHECK(family_count(mi, "run_monotone") == T - 1);
  // separator and feeder pass through; the branch grinder and the bypass
  // conveyor carry the split balances; the bin has its recursion and caps.
  CHECK(family_count(mi, "pass_through") == 2 * nc * T);
  CHECK(family_count(mi, "grind_balance") == nc * T);
  CHECK(family_count(mi, "small_balance") == nc * T);
  CHECK(family_count(mi, "large_balance") == 0);
  CHECK(family_count(mi, "bin_balance") == nc * T);
  CHECK(family_count(mi, "bin_mass") == T);
  CHECK(family_count(mi, "bin_vol") == T);
  CHECK(family_count(mi, "reactor_cap") == T);
  CHECK(family_count(mi, "min_rate") == T);
  CHECK(family_count(mi, "avg_rate") == 1);
  CHECK(family_count(mi, "mcc_a") == T);
  CHECK(family_count(mi, "mcc_b") == T);
  CHECK(family_count(mi, "mcc_c") == T);
  CHECK(family_count(mi, "mcc_d") == T);

  CHECK(mi.bound_family_count.at("binary_domains") == nc * T + T);
  CHECK(mi.bound_family_count.at("feed_rate_range") == 1);
  CHECK(mi.bound_family_count.at("final_inventory_zero") == nc);
  CHECK(mi.bound_family_count.at("flow_caps") == nc * T);  // only DC is capped
  CHECK(mi.n_binary() == nc * T + T);
}

TEST_CASE("branch grinder composes its loss with the separator share") {
  SepFixture f;
  MilpInstance mi = build_core(f.inputs());

  // Balance of the oversize grinder: X_G2 - (1 - loss)(1 - theta) X_S1 = 0.
  const int xg2 = mi.var_index("X_G2_A_t3");
  const int xs1 = mi.var_index("X_S1_A_t3");
  REQUIRE(xg2 >= 0);
  REQUIRE(xs1 >= 0);
  bool found = false;
  for (const Row& r : mi.rows) {
    if (r.family != RowFamily::GrindBalance) continue;
    double cg = 0.0, cs = 0.0;
    bool has_g = false;
    for (const auto& [j, v] : r.terms) {
      if (j == xg2) { cg = v; has_g = true; }
      if (j == xs1) cs = v;
    }
    if (!has_g || cs == 0.0) continue;
    found = true;
    CHECK(r.sense == RowSense::EQ);
    CHECK(r.rhs == 0.0);
    CHECK(cg == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cs == doctest::Approx(-0.995 * 0.55).epsilon(1e-12));
  }
  CHECK(found);

  // Bypass branch: X_BYP - theta X_S1 = 0.
  const int xbyp = mi.var_index("X_BYP_B_t3");
  const int xs1b = mi.var_index("X_S1_B_t3");
  REQUIRE(xbyp >= 0);
  found = false;
  for (const Row& r : mi.rows) {
    if (r.family != RowFamily::SmallBalance) continue;
    double cb = 0.0, cs = 0.0;
    for (const auto& [j, v] : r.terms) {
      if (j == xbyp) cb = v;
      if (j == xs1b) cs = v;
    }
    if (cb == 0.0 || cs == 0.0) continue;
    found = true;
    CHECK(cb == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cs == doctest::Approx(-0.30).epsilon(1e-12));
  }
  CHECK(found);
}

TEST_CASE("solved schedule conserves mass through the split") {
  SepFixture f;
  MilpInstance mi = build_core(f.inputs());
  SolveResult res = solve(mi);
  REQUIRE(res.status == SolveStatus::Optimal);

  SolutionRecord sol = extract_solution(mi, f.inputs(), res.values, res.objective);
  // Each class's delivery is its bale mass through the split of the branch
  // transformations: theta + (1 - theta)(1 - loss).
  for (int c = 0; c < 2; ++c) {
    const double theta = f.net.nodes[1].bypass[c];
    const double factor = theta + (1.0 - theta) * 0.995;
    double delivered = 0.0;
    for (int t = 1; t <= sol.horizon; ++t)
      delivered += sol.reactor_inflow(f.net, c, t);
    CHECK(delivered ==
          doctest::Approx(0.391 * factor).epsilon(1e-9));
  }

  // The linearized window flow tracks U exactly on every on-period.
  for (int t = 1; t <= sol.horizon; ++t) {
    const double on = sol.reactor_on[t - 1];
    CHECK((on == doctest::Approx(0.0).epsilon(1e-9) ||
           on == doctest::Approx(1.0).epsilon(1e-9)));
    CHECK(sol.window_flow[t - 1] ==
          doctest::Approx(on * sol.feed_rate).epsilon(1e-9));
  }

  // Dense record and raw values agree through the variable naming.
  const int xg2 = mi.var_index("X_G2_A_t3");
  CHECK(sol.x(2, 0, 3) == res.values[xg2]);
  const int zr5 = mi.var_index("Zr_t5");
  REQUIRE(zr5 >= 0);
  CHECK(sol.reactor_on[4] == res.values[zr5]);
}

TEST_CASE("blending layers add their rows and slacks") {
  SepFixture f;
  VariantSpec det;
  det.kind = BlendVariant::Deterministic;
  det.target = 0.58;
  det.tau_periods = 5;
  det.class_value = {0.60, 0.65};

  MilpInstance mdet = build_core(f.inputs());
  add_blending(mdet, f.inputs(), det);
  CHECK(family_count(mdet, "blend_det") == 4);  // 20 / 5 windows
  REQUIRE(mdet.blend.has_value());
  CHECK(mdet.blend->windows.size() == 4);
  CHECK(mdet.blend->slack_minus.empty());

  VariantSpec chance = det;
  chance.kind = BlendVariant::ChanceSlack;
  chance.class_value.clear();
  chance.sample_value = {{0.60, 0.65}, {0.55, 0.62}, {0.61, 0.57}};
  chance.penalty_weight = 1.0;

  MilpInstance mch = build_core(f.inputs());
  add_blending(mch, f.inputs(), chance);
  CHECK(family_count(mch, "blend_slack") == 3 * 4);
  REQUIRE(mch.blend.has_value());
  REQUIRE(mch.blend->slack_minus.size() == 3u * 4u);
  REQUIRE(mch.blend->slack_plus.size() == 3u * 4u);

  // Penalty reweighting touches exactly the shortfall columns.
  mch.set_penalty_weight(7.25);
  for (int j : mch.blend->slack_minus) CHECK(mch.vars[j].obj == 7.25);
  for (int j : mch.blend->slack_plus) CHECK(mch.vars[j].obj == 0.0);

  VariantSpec hard = chance;
  hard.kind = BlendVariant::AllSamples;
  MilpInstance mall = build_core(f.inputs());
  add_blending(mall, f.inputs(), hard);
  CHECK(family_count(mall, "blend_hard") == 3 * 4);
  CHECK(mall.n_vars() == mdet.n_vars());  // hard layer adds no variables
}

TEST_CASE("variant names parse to the layer kinds") {
  CHECK(parse_blend_variant("none") == BlendVariant::None);
  CHECK(parse_blend_variant("det") == BlendVariant::Deterministic);
  CHECK(parse_blend_variant("deterministic") == BlendVariant::Deterministic);
  CHECK(parse_blend_variant("all") == BlendVariant::AllSamples);
  CHECK(parse_blend_variant("allsamples") == BlendVariant::AllSamples);
  CHECK(parse_blend_variant("chance") == BlendVariant::ChanceSlack);
  CHECK(parse_blend_variant("chanceslack") == BlendVariant::ChanceSlack);
  CHECK_THROWS_AS(parse_blend_variant("fuzzy"), ValidationError);
  CHECK(std::string(blend_variant_name(BlendVariant::ChanceSlack)) ==
        "chance_slack");
}

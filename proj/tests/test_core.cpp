#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "bioproc/core.hpp"

using namespace bioproc;

namespace {

// Minimal valid chain: conveyor -> grinder -> reactor feeder, one class.
struct ChainFixture {
  ProcessNetwork net;
  std::vector<BaleClass> classes;
  BaleGeometry geom;

  ChainFixture() {
    EquipmentNode dc;
    dc.id = "DC";
    dc.kind = NodeKind::Conveyor;
    dc.capacity = {0.1};
    EquipmentNode gr;
    gr.id = "GR";
    gr.kind = NodeKind::Grinder;
    gr.capacity = {0.1};
    gr.dry_matter_loss = 0.02;
    EquipmentNode rf;
    rf.id = "RF";
    rf.kind = NodeKind::ReactorFeeder;
    net.nodes = {dc, gr, rf};
    net.preds = {{}, {0}, {1}};
    net.infeed = 0;
    net.reactor_feeders = {2};
    net.horizon = 10;
    net.big_m = 12.0;

    BaleClass c;
    c.feedstock = 0;
    c.bale_mass = 0.391;
    c.bale_count = 1;
    c.bale_density = 0.144;
    c.mass_per_meter = 0.20736;
    c.processing_periods = 6;
    classes = {c};
    geom.length = 2.4;
  }
};

bool mentions(const std::vector<std::string>& problems, const std::string& part) {
  for (const auto& p : problems)
    if (p.find(part) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("moisture names parse both ways") {
  CHECK(parse_moisture("L") == Moisture::Low);
  CHECK(parse_moisture("medium") == Moisture::Medium);
  CHECK(parse_moisture(" h ") == Moisture::High);
  CHECK(std::string(moisture_name(Moisture::Low)) == "L");
  CHECK(std::string(moisture_name(Moisture::High)) == "H");
  CHECK_THROWS_AS(parse_moisture("wet"), ValidationError);
}

TEST_CASE("node kinds parse both ways") {
  CHECK(parse_node_kind("surge_bin") == NodeKind::SurgeBin);
  CHECK(parse_node_kind("reactor_feeder") == NodeKind::ReactorFeeder);
  CHECK(std::string(node_kind_name(NodeKind::Pelleter)) == "pelleter");
  CHECK_THROWS_AS(parse_node_kind("shredder"), ValidationError);
  CHECK(is_bin(NodeKind::MeteringBin));
  CHECK(is_bin(NodeKind::SurgeBin));
  CHECK(!is_bin(NodeKind::Grinder));
}

TEST_CASE("bale parameters derive from geometry and infeed capacity") {
  BaleGeometry geom;  // 1.2 x 1.2 x 2.4, dt 1
  BaleClass cls;
  cls.feedstock = 0;
  cls.bale_mass = 0.391;
  cls.bale_count = 4;
  cls.bale_density = 0.144;

  // Cross-section times density; occupancy covers the full bale length at
  // the belt speed the capacity allows.
  BaleClass a = derive_bale_parameters(geom, cls, 5.23 / 60.0);
  CHECK(a.mass_per_meter == doctest::Approx(0.20736).epsilon(1e-12));
  CHECK(a.processing_periods == 6);  // ceil(2.4 * 0.20736 / 0.08717)

  BaleClass b = derive_bale_parameters(geom, cls, 4.53 / 60.0);
  CHECK(b.processing_periods == 7);

  // An exact integer ratio must not round up an extra period.
  BaleClass c = cls;
  c.bale_density = 0.2 / (geom.width * geom.height);
  BaleClass d = derive_bale_parameters(geom, c, 0.12);
  CHECK(d.mass_per_meter == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(d.processing_periods == 4);  // 2.4 / 0.6 exactly

  BaleClass bad = cls;
  bad.bale_density = 0.0;
  CHECK_THROWS_AS(derive_bale_parameters(geom, bad, 0.1), ValidationError);
  CHECK_THROWS_AS(derive_bale_parameters(geom, cls, 0.0), ValidationError);
  BaleGeometry flat;
  flat.height = -1.0;
  CHECK_THROWS_AS(derive_bale_parameters(flat, cls, 0.1), ValidationError);
}

TEST_CASE("sequence expansion is back to back from period one") {
  BaleClass a, b;
  a.processing_periods = 2;
  b.processing_periods = 3;
  std::vector<BaleClass> classes = {a, b};

  SequencePlan plan = expand_sequence({0, 1, 0}, classes, 7);
  REQUIRE(plan.size() == 3);
  CHECK(plan.start_period == std::vector<int>{1, 3, 6});
  CHECK(plan.duration == std::vector<int>{2, 3, 2});
  CHECK(plan.occupied == 7);

  CHECK_THROWS_AS(expand_sequence({0, 1, 0}, classes, 6), ValidationError);
  CHECK_THROWS_AS(expand_sequence({2}, classes, 10), ValidationError);
  CHECK(expand_sequence({}, classes, 1).occupied == 0);
}

TEST_CASE("a valid chain passes network validation") {
  ChainFixture f;
  CHECK(validate_network(f.net, f.classes, &f.geom).empty());
}

TEST_CASE("network validation flags structural defects") {
  SUBCASE("infeed with predecessors") {
    ChainFixture f;
    f.net.preds[0] = {1};  // also creates a cycle
    auto bad = validate_network(f.net, f.classes, &f.geom);
    CHECK(mentions(bad, "must have no predecessors"));
    CHECK(mentions(bad, "cycle"));
  }
  SUBCASE("orphan middle node") {
    ChainFixture f;
    f.net.preds[1] = {};
    CHECK(mentions(validate_network(f.net, f.classes, &f.geom),
                   "has no predecessors"));
  }
  SUBCASE("nonterminal reactor feeder") {
    ChainFixture f;
    EquipmentNode extra;
    extra.id = "X";
    extra.kind = NodeKind::Conveyor;
    f.net.nodes.push_back(extra);
    f.net.preds.push_back({2});
    CHECK(mentions(validate_network(f.net, f.classes, &f.geom), "terminal"));
  }
  SUBCASE("non-positive capacity") {
    ChainFixture f;
    f.net.nodes[1].capacity = {0.0};
    CHECK(mentions(validate_network(f.net, f.classes, &f.geom),
                   "non-positive capacity"));
  }
  SUBCASE("capacity table size mismatch") {
    ChainFixture f;
    f.net.nodes[1].capacity = {0.1, 0.1};
    CHECK(mentions(validate_network(f.net, f.classes, &f.geom),
                   "size mismatch"));
  }
  SUBCASE("loss on a conveyor") {
    ChainFixture f;
    f.net.nodes[0].dry_matter_loss = 0.01;
    CHECK(mentions(validate_network(f.net, f.classes, &f.geom),
                   "not a grinder"));
  }
  SUBCASE("grinder loss out of range") {
    ChainFixture f;
    f.net.nodes[1].dry_matter_loss = 1.0;
    CHECK(mentions(validate_network(f.net, f.classes, &f.geom),
                   "outside [0,1)"));
  }
  SUBCASE("branch role without a separator") {
    ChainFixture f;
    f.net.nodes[1].branch = BranchRole::Large;
    CHECK(mentions(validate_network(f.net, f.classes, &f.geom),
                   "but none feeds it"));
  }
  SUBCASE("bin without caps or density") {
    ChainFixture f;
    f.net.nodes[1].kind = NodeKind::SurgeBin;
    f.net.nodes[1].dry_matter_loss = 0.0;
    auto bad = validate_network(f.net, f.classes, &f.geom);
    CHECK(mentions(bad, "positive mass capacity"));
    CHECK(mentions(bad, "positive volume capacity"));
    CHECK(mentions(bad, "stored density"));
  }
  SUBCASE("lane restricted to an unused feedstock") {
    ChainFixture f;
    f.net.nodes[1].lane_feedstock = 9;
    CHECK(mentions(validate_network(f.net, f.classes, &f.geom),
                   "no class uses"));
  }
  SUBCASE("small big_m") {
    ChainFixture f;
    f.net.big_m = 5.0;  // below the horizon
    CHECK(mentions(validate_network(f.net, f.classes, &f.geom), "big_m"));
  }
}

TEST_CASE("separator validation needs one branch each way") {
  ChainFixture f;
  // conveyor -> separator -> {large grinder, small conveyor} -> feeder via bin
  EquipmentNode sep;
  sep.id = "S1";
  sep.kind = NodeKind::Separator;
  sep.bypass = {0.4};
  EquipmentNode g2;
  g2.id = "G2";
  g2.kind = NodeKind::Grinder;
  g2.branch = BranchRole::Large;
  EquipmentNode byp;
  byp.id = "BYP";
  byp.kind = NodeKind::Conveyor;
  byp.branch = BranchRole::Small;
  EquipmentNode sb;
  sb.id = "SB";
  sb.kind = NodeKind::SurgeBin;
  sb.mass_cap = 2.0;
  sb.volume_cap = 10.0;
  sb.stored_density = {0.04};
  EquipmentNode rf;
  rf.id = "RF";
  rf.kind = NodeKind::ReactorFeeder;

  f.net.nodes = {f.net.nodes[0], sep, g2, byp, sb, rf};
  f.net.preds = {{}, {0}, {1}, {1}, {2, 3}, {4}};
  f.net.reactor_feeders = {5};
  CHECK(validate_network(f.net, f.classes, &f.geom).empty());

  SUBCASE("missing bypass entry") {
    f.net.nodes[1].bypass = {};
    CHECK(mentions(validate_network(f.net, f.classes, &f.geom),
                   "bypass fraction per class"));
  }
  SUBCASE("bypass out of range") {
    f.net.nodes[1].bypass = {1.5};
    CHECK(mentions(validate_network(f.net, f.classes, &f.geom),
                   "outside [0,1]"));
  }
  SUBCASE("two successors on the same branch") {
    f.net.nodes[3].branch = BranchRole::Large;
    CHECK(mentions(validate_network(f.net, f.classes, &f.geom),
                   "exactly one large-branch and one small-branch"));
  }
  SUBCASE("non-separator fan-out breaks the chain rule") {
    // Reroute: the small conveyor also feeds the grinder, giving the
    // conveyor two allowed successors.
    f.net.nodes[1].kind = NodeKind::Conveyor;
    f.net.nodes[1].bypass = {};
    f.net.nodes[2].branch = BranchRole::None;
    f.net.nodes[3].branch = BranchRole::None;
    auto bad = validate_network(f.net, f.classes, &f.geom);
    CHECK(mentions(bad, "must be a chain"));
  }
}

TEST_CASE("reliability parameters are range checked") {
  ReliabilitySpec ok;
  ok.q_min = 0.9;
  ok.q_avg = 0.95;
  ok.u_lower = 0.02;
  ok.u_upper = 0.10;
  CHECK_NOTHROW(validate_reliability(ok));

  ReliabilitySpec bad = ok;
  bad.q_min = 0.0;
  CHECK_THROWS_AS(validate_reliability(bad), ValidationError);
  bad = ok;
  bad.q_avg = 0.85;  // below q_min
  CHECK_THROWS_AS(validate_reliability(bad), ValidationError);
  bad = ok;
  bad.u_upper = 0.02;  // not above u_lower
  CHECK_THROWS_AS(validate_reliability(bad), ValidationError);
  bad = ok;
  bad.u_lower = -0.1;
  CHECK_THROWS_AS(validate_reliability(bad), ValidationError);
}

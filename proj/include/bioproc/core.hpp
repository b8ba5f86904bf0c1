// Model primitives: bale classes, equipment nodes, the flow network,
// feeding sequences, reliability parameters, and solved-schedule records.
#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bioproc/common.hpp"

namespace bioproc {

enum class Moisture { Low, Medium, High };

const char* moisture_name(Moisture m);        // "L" / "M" / "H"
Moisture parse_moisture(const std::string&);  // accepts L/M/H, low/medium/high

// Geometry shared by all bales plus the discretization step.
struct BaleGeometry {
  double width = 1.2;    // m
  double height = 1.2;   // m
  double length = 2.4;   // m
  double period_minutes = 1.0;  // length of one scheduling period
};

// One (feedstock, moisture) bale class. Derived fields are filled by
// derive_bale_parameters once the infeed capacity is known.
struct BaleClass {
  int feedstock = -1;      // index into the case's feedstock table
  Moisture moisture = Moisture::Medium;
  double bale_mass = 0.0;     // dry Mg per bale
  int bale_count = 0;         // bales of this class in inventory
  double bale_density = 0.0;  // dry Mg per m3 on the infeed conveyor

  // Derived:
  double mass_per_meter = 0.0;   // width*height*density
  int processing_periods = 0;    // periods the infeed conveyor is occupied
};

enum class NodeKind {
  Conveyor,
  Grinder,
  Separator,
  MeteringBin,
  SurgeBin,
  Pelleter,
  ReactorFeeder,
};

const char* node_kind_name(NodeKind k);
NodeKind parse_node_kind(const std::string&);

inline bool is_bin(NodeKind k) {
  return k == NodeKind::MeteringBin || k == NodeKind::SurgeBin;
}

// Which branch of a separator a successor node receives.
enum class BranchRole { None, Large, Small };

struct EquipmentNode {
  std::string id;
  NodeKind kind = NodeKind::Conveyor;
  // Per-class throughput cap, dry Mg per period. NaN entries mean
  // "no explicit cap" (transport sized by its neighbors).
  std::vector<double> capacity;
  double dry_matter_loss = 0.0;  // grinders: fraction lost, in [0,1)
  // Separators: fraction of inflow that already meets size spec and
  // bypasses the second grinding stage, per class.
  std::vector<double> bypass;
  double mass_cap = 0.0;    // bins: dry Mg
  double volume_cap = 0.0;  // bins: m3
  // Bins: bulk density of the material held, dry Mg per m3, per class.
  std::vector<double> stored_density;
  BranchRole branch = BranchRole::None;  // set on separator successors
  int lane_feedstock = -1;  // restrict node to one feedstock; -1 = any

  double capacity_for(int cls) const {
    if (cls < 0 || cls >= static_cast<int>(capacity.size())) return nan_;
    return capacity[cls];
  }
  static constexpr double nan_ = std::numeric_limits<double>::quiet_NaN();
};

struct ProcessNetwork {
  std::vector<EquipmentNode> nodes;
  std::vector<std::vector<int>> preds;  // predecessor indices per node
  int infeed = -1;                      // first conveyor, fed by the sequence
  std::vector<int> reactor_feeders;     // terminal nodes feeding the reactor
  int horizon = 0;                      // T, periods
  double big_m = 0.0;                   // disjunction constant, >= max(length, T)

  int node_index(const std::string& id) const;
  std::vector<std::vector<int>> successors() const;
  bool allows(int node, const BaleClass& cls) const {
    const int lane = nodes[node].lane_feedstock;
    return lane < 0 || lane == cls.feedstock;
  }
};

// A feeding order expanded onto the time axis: bale k occupies the infeed
// conveyor for its class's processing_periods, back to back, starting at
// period 1. start_period is 1-based and strictly increasing.
struct SequencePlan {
  std::vector<int> bale_class;    // class index per position
  std::vector<int> start_period;  // per position
  std::vector<int> duration;      // processing_periods per position
  int occupied = 0;               // sum of durations

  int size() const { return static_cast<int>(bale_class.size()); }
};

// Reactor reliability: every running period delivers at least q_min * U and
// the running average delivers at least q_avg * U.
struct ReliabilitySpec {
  double q_min = 0.90;
  double q_avg = 0.95;
  double u_lower = 0.0;   // feed-rate search range, dry Mg per period
  double u_upper = 0.0;
};

// Dense view of one solved schedule. Index layout: [node][class][t] with t
// in 1..horizon stored at t-1.
struct SolutionRecord {
  int horizon = 0;
  int n_nodes = 0;
  int n_classes = 0;
  std::vector<double> flow;          // X, node-class-period
  std::vector<double> inventory;     // bin holdings, node-class-period
  std::vector<double> advance;       // infeed belt advance, class-period (m)
  std::vector<double> infeed_active; // class-period 0/1
  std::vector<double> reactor_on;    // per period 0/1
  std::vector<double> window_flow;   // W, per period
  double feed_rate = 0.0;            // U
  double objective = 0.0;

  double& x(int node, int cls, int t) {
    return flow[(static_cast<size_t>(node) * n_classes + cls) * horizon + (t - 1)];
  }
  double x(int node, int cls, int t) const {
    return flow[(static_cast<size_t>(node) * n_classes + cls) * horizon + (t - 1)];
  }
  double& inv(int node, int cls, int t) {
    return inventory[(static_cast<size_t>(node) * n_classes + cls) * horizon + (t - 1)];
  }
  double inv(int node, int cls, int t) const {
    return inventory[(static_cast<size_t>(node) * n_classes + cls) * horizon + (t - 1)];
  }

  void resize(int nodes, int classes, int T) {
    n_nodes = nodes;
    n_classes = classes;
    horizon = T;
    flow.assign(static_cast<size_t>(nodes) * classes * T, 0.0);
    inventory.assign(static_cast<size_t>(nodes) * classes * T, 0.0);
    advance.assign(static_cast<size_t>(classes) * T, 0.0);
    infeed_active.assign(static_cast<size_t>(classes) * T, 0.0);
    reactor_on.assign(T, 0.0);
    window_flow.assign(T, 0.0);
  }

  // Combined reactor intake of class cls at period t.
  double reactor_inflow(const ProcessNetwork& net, int cls, int t) const {
    double s = 0.0;
    for (int i : net.reactor_feeders) s += x(i, cls, t);
    return s;
  }
};

// Fills mass_per_meter and processing_periods from the geometry and the
// infeed capacity (dry Mg per period). Throws ValidationError on
// non-positive inputs, naming the offending field.
BaleClass derive_bale_parameters(const BaleGeometry& geom, const BaleClass& cls,
                                 double infeed_capacity);

// Expands an ordered list of class indices into a SequencePlan. Classes must
// already carry processing_periods. Throws if the sequence does not fit in
// the horizon or references an unknown class.
SequencePlan expand_sequence(const std::vector<int>& order,
                             const std::vector<BaleClass>& classes, int horizon);

// Structural checks; returns human-readable violations (empty = valid).
// When the geometry is supplied the big_M check also covers the bale length.
std::vector<std::string> validate_network(const ProcessNetwork& net,
                                          const std::vector<BaleClass>& classes,
                                          const BaleGeometry* geom = nullptr);

void validate_reliability(const ReliabilitySpec& rel);  // throws on bad spec

}  // namespace bioproc

#include "bioproc/core.hpp"

#include <algorithm>
#include <cmath>

namespace bioproc {

const char* moisture_name(Moisture m) {
  switch (m) {
    case Moisture::Low: return "L";
    case Moisture::Medium: return "M";
    case Moisture::High: return "H";
  }
  return "?";
}

Moisture parse_moisture(const std::string& s) {
  const std::string t = lower(trim(s));
  if (t == "l" || t == "low") return Moisture::Low;
  if (t == "m" || t == "medium" || t == "med") return Moisture::Medium;
  if (t == "h" || t == "high") return Moisture::High;
  throw ValidationError("unknown moisture class '" + s + "' (expected L/M/H)");
}

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Conveyor: return "conveyor";
    case NodeKind::Grinder: return "grinder";
    case NodeKind::Separator: return "separator";
    case NodeKind::MeteringBin: return "metering_bin";
    case NodeKind::SurgeBin: return "surge_bin";
    case NodeKind::Pelleter: return "pelleter";
    case NodeKind::ReactorFeeder: return "reactor_feeder";
  }
  return "?";
}

NodeKind parse_node_kind(const std::string& s) {
  const std::string t = lower(trim(s));
  if (t == "conveyor") return NodeKind::Conveyor;
  if (t == "grinder") return NodeKind::Grinder;
  if (t == "separator") return NodeKind::Separator;
  if (t == "metering_bin") return NodeKind::MeteringBin;
  if (t == "surge_bin") return NodeKind::SurgeBin;
  if (t == "pelleter") return NodeKind::Pelleter;
  if (t == "reactor_feeder") return NodeKind::ReactorFeeder;
  throw ValidationError("unknown equipment kind '" + s + "'");
}

int ProcessNetwork::node_index(const std::string& id) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<int>(i);
  return -1;
}

std::vector<std::vector<int>> ProcessNetwork::successors() const {
  std::vector<std::vector<int>> succ(nodes.size());
  for (size_t k = 0; k < preds.size(); ++k)
    for (int p : preds[k]) succ[p].push_back(static_cast<int>(k));
  return succ;
}

BaleClass derive_bale_parameters(const BaleGeometry& geom, const BaleClass& cls,
                                 double infeed_capacity) {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0)) throw ValidationError(std::string("bale parameter '") + field +
                                          "' must be positive");
  };
  positive(geom.width, "width");
  positive(geom.height, "height");
  positive(geom.length, "length");
  positive(geom.period_minutes, "period_minutes");
  positive(cls.bale_density, "bale_density");
  positive(cls.bale_mass, "bale_mass");
  positive(infeed_capacity, "infeed_capacity");
  if (cls.bale_count < 0) throw ValidationError("bale parameter 'bale_count' must be >= 0");

  BaleClass out = cls;
  out.mass_per_meter = geom.width * geom.height * cls.bale_density;
  // Belt advance per period at full infeed: capacity / mass-per-meter.
  const double speed = infeed_capacity / out.mass_per_meter;
  // ceil with a hair of slack so exact integer ratios do not round up.
  out.processing_periods = static_cast<int>(std::ceil(geom.length / speed - 1e-9));
  if (out.processing_periods < 1) out.processing_periods = 1;
  return out;
}

SequencePlan expand_sequence(const std::vector<int>& order,
                             const std::vector<BaleClass>& classes, int horizon) {
  SequencePlan plan;
  int t = 1;
  for (size_t k = 0; k < order.size(); ++k) {
    const int c = order[k];
    if (c < 0 || c >= static_cast<int>(classes.size()))
      throw ValidationError("sequence position " + std::to_string(k + 1) +
                            " references unknown bale class " + std::to_string(c));
    const int p = classes[c].processing_periods;
    if (p < 1)
      throw ValidationError("bale class " + std::to_string(c) +
                            " has no derived processing periods");
    plan.bale_class.push_back(c);
    plan.start_period.push_back(t);
    plan.duration.push_back(p);
    t += p;
  }
  plan.occupied = t - 1;
  if (plan.occupied > horizon)
    throw ValidationError("sequence occupies " + std::to_string(plan.occupied) +
                          " periods but the horizon is " + std::to_string(horizon));
  return plan;
}

std::vector<std::string> validate_network(const ProcessNetwork& net,
                                          const std::vector<BaleClass>& classes,
                                          const BaleGeometry* geom) {
  std::vector<std::string> bad;
  const int n = static_cast<int>(net.nodes.size());
  auto name = [&](int i) { return net.nodes[i].id; };

  if (n == 0) {
    bad.push_back("network has no nodes");
    return bad;
  }
  if (static_cast<int>(net.preds.size()) != n)
    bad.push_back("predecessor table size does not match node count");
  if (net.horizon < 1) bad.push_back("horizon must be >= 1");

  if (net.infeed < 0 || net.infeed >= n) {
    bad.push_back("infeed node is not set");
  } else {
    if (!net.preds.empty() && !net.preds[net.infeed].empty())
      bad.push_back("infeed node '" + name(net.infeed) + "' must have no predecessors");
  }
  if (net.reactor_feeders.empty()) bad.push_back("reactor feeder set is empty");

  auto succ = net.successors();
  for (int i : net.reactor_feeders) {
    if (i < 0 || i >= n) {
      bad.push_back("reactor feeder index out of range");
      continue;
    }
    if (!succ[i].empty())
      bad.push_back("reactor feeder '" + name(i) + "' must be terminal");
  }

  // Every non-infeed node needs at least one predecessor; only the infeed
  // may have none.
  for (int i = 0; i < n && i < static_cast<int>(net.preds.size()); ++i) {
    if (i != net.infeed && net.preds[i].empty())
      bad.push_back("node '" + name(i) + "' has no predecessors");
    for (int p : net.preds[i])
      if (p < 0 || p >= n)
        bad.push_back("node '" + name(i) + "' has an out-of-range predecessor");
  }

  // Acyclicity via DFS coloring.
  {
    std::vector<int> color(n, 0);
    std::vector<int> stack;
    bool cyclic = false;
    for (int s = 0; s < n && !cyclic; ++s) {
      if (color[s]) continue;
      stack.push_back(s | 0);
      while (!stack.empty() && !cyclic) {
        int v = stack.back();
        if (color[v] == 0) {
          color[v] = 1;
          for (int w : succ[v]) {
            if (color[w] == 1) { cyclic = true; break; }
            if (color[w] == 0) stack.push_back(w);
          }
        } else {
          if (color[v] == 1) color[v] = 2;
          stack.pop_back();
        }
      }
    }
    if (cyclic) bad.push_back("network contains a cycle");
  }

  const int nc = static_cast<int>(classes.size());
  for (int i = 0; i < n; ++i) {
    const EquipmentNode& nd = net.nodes[i];
    if (!nd.capacity.empty() && static_cast<int>(nd.capacity.size()) != nc)
      bad.push_back("node '" + nd.id + "' capacity table size mismatch");
    for (double c : nd.capacity)
      if (!std::isnan(c) && !(c > 0.0))
        bad.push_back("node '" + nd.id + "' has a non-positive capacity");
    if (nd.kind == NodeKind::Grinder) {
      if (!(nd.dry_matter_loss >= 0.0 && nd.dry_matter_loss < 1.0))
        bad.push_back("grinder '" + nd.id + "' dry matter loss outside [0,1)");
    } else if (nd.dry_matter_loss != 0.0) {
      bad.push_back("node '" + nd.id + "' is not a grinder but has dry matter loss");
    }
    if (nd.kind == NodeKind::Separator) {
      if (static_cast<int>(nd.bypass.size()) != nc)
        bad.push_back("separator '" + nd.id + "' needs a bypass fraction per class");
      for (double b : nd.bypass)
        if (!(b >= 0.0 && b <= 1.0))
          bad.push_back("separator '" + nd.id + "' bypass fraction outside [0,1]");
      // Exactly two successors, one per branch.
      int large = 0, small = 0;
      for (int w : succ[i]) {
        if (net.nodes[w].branch == BranchRole::Large) ++large;
        if (net.nodes[w].branch == BranchRole::Small) ++small;
      }
      if (succ[i].size() != 2 || large != 1 || small != 1)
        bad.push_back("separator '" + nd.id +
                      "' must have exactly one large-branch and one small-branch successor");
    }
    if (nd.branch != BranchRole::None) {
      bool fed_by_sep = false;
      for (int p : net.preds[i])
        if (net.nodes[p].kind == NodeKind::Separator) fed_by_sep = true;
      if (!fed_by_sep)
        bad.push_back("node '" + nd.id + "' declares a separator branch but none feeds it");
    }
    if (is_bin(nd.kind)) {
      if (!(nd.mass_cap > 0.0))
        bad.push_back("bin '" + nd.id + "' needs a positive mass capacity");
      if (!(nd.volume_cap > 0.0))
        bad.push_back("bin '" + nd.id + "' needs a positive volume capacity");
      if (static_cast<int>(nd.stored_density.size()) != nc)
        bad.push_back("bin '" + nd.id + "' needs a stored density per class");
      for (double d : nd.stored_density)
        if (!(d > 0.0)) bad.push_back("bin '" + nd.id + "' has a non-positive stored density");
    }
    if (nd.lane_feedstock >= 0) {
      bool known = false;
      for (const BaleClass& c : classes)
        if (c.feedstock == nd.lane_feedstock) known = true;
      if (!known)
        bad.push_back("node '" + nd.id + "' restricts to a feedstock no class uses");
    }
  }

  // Per class, flow must be chain-like: every allowed non-separator node has
  // at most one allowed successor (the separator has its two branches).
  for (int c = 0; c < nc; ++c) {
    for (int i = 0; i < n; ++i) {
      if (!net.allows(i, classes[c])) continue;
      if (net.nodes[i].kind == NodeKind::Separator) continue;
      int cnt = 0;
      for (int w : succ[i])
        if (net.allows(w, classes[c])) ++cnt;
      if (cnt > 1)
        bad.push_back("node '" + name(i) + "' has " + std::to_string(cnt) +
                      " successors for class " + std::to_string(c) +
                      "; per-class flow must be a chain");
    }
  }

  // Disjunction constant must dominate both the bale length and the horizon.
  const double len = geom ? geom->length : 0.0;
  if (net.big_m < std::max(len, static_cast<double>(net.horizon)))
    bad.push_back("big_m must be >= max(bale length, horizon)");

  return bad;
}

void validate_reliability(const ReliabilitySpec& rel) {
  if (!(rel.q_min > 0.0 && rel.q_min < 1.0))
    throw ValidationError("q_min must lie in (0,1)");
  if (!(rel.q_avg >= rel.q_min && rel.q_avg <= 1.0))
    throw ValidationError("q_avg must lie in [q_min, 1]");
  if (!(rel.u_lower >= 0.0))
    throw ValidationError("u_lower must be >= 0");
  if (!(rel.u_upper > rel.u_lower))
    throw ValidationError("u_upper must exceed u_lower");
}

}  // namespace bioproc

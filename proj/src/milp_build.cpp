#include "bioproc/milp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bioproc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string tkey(int t) { return "t" + std::to_string(t); }
}  // namespace

const char* row_family_name(RowFamily f) {
  switch (f) {
    case RowFamily::InfeedGate: return "infeed_gate";
    case RowFamily::BinMassCap: return "bin_mass";
    case RowFamily::BinVolumeCap: return "bin_vol";
    case RowFamily::WindowExcl: return "window_excl";
    case RowFamily::BeltCouple: return "belt_couple";
    case RowFamily::WholeBale: return "whole_bale";
    case RowFamily::AdvanceLo: return "advance_lo";
    case RowFamily::AdvanceHi: return "advance_hi";
    case RowFamily::RunMonotone: return "run_monotone";
    case RowFamily::GrindBalance: return "grind_balance";
    case RowFamily::LargeBalance: return "large_balance";
    case RowFamily::SmallBalance: return "small_balance";
    case RowFamily::PassThrough: return "pass_through";
    case RowFamily::BinBalance: return "bin_balance";
    case RowFamily::ReactorCap: return "reactor_cap";
    case RowFamily::MinRate: return "min_rate";
    case RowFamily::AvgRate: return "avg_rate";
    case RowFamily::McCormickA: return "mcc_a";
    case RowFamily::McCormickB: return "mcc_b";
    case RowFamily::McCormickC: return "mcc_c";
    case RowFamily::McCormickD: return "mcc_d";
    case RowFamily::BlendSlack: return "blend_slack";
    case RowFamily::BlendDet: return "blend_det";
    case RowFamily::BlendHard: return "blend_hard";
    case RowFamily::Plumbing: return "plumbing";
  }
  return "?";
}

const char* blend_variant_name(BlendVariant v) {
  switch (v) {
    case BlendVariant::None: return "none";
    case BlendVariant::Deterministic: return "deterministic";
    case BlendVariant::AllSamples: return "allsamples";
    case BlendVariant::ChanceSlack: return "chance";
  }
  return "?";
}

BlendVariant parse_blend_variant(const std::string& s) {
  const std::string t = lower(trim(s));
  if (t == "none") return BlendVariant::None;
  if (t == "deterministic" || t == "det") return BlendVariant::Deterministic;
  if (t == "allsamples" || t == "all") return BlendVariant::AllSamples;
  if (t == "chance" || t == "chanceslack") return BlendVariant::ChanceSlack;
  throw ValidationError("unknown blend variant '" + s + "'");
}

int MilpInstance::add_var(const std::string& name, double lb, double ub, bool binary,
                          const VarTag& tag, double obj) {
  if (index_.count(name))
    throw ValidationError("duplicate variable name '" + name + "'");
  Variable v;
  v.name = name;
  v.lb = lb;
  v.ub = ub;
  v.binary = binary;
  v.obj = obj;
  v.tag = tag;
  vars.push_back(std::move(v));
  const int id = static_cast<int>(vars.size()) - 1;
  index_[name] = id;
  return id;
}

int MilpInstance::add_row(const std::string& name, RowSense sense, double rhs,
                          RowFamily family) {
  Row r;
  r.name = name;
  r.sense = sense;
  r.rhs = rhs;
  r.family = family;
  rows.push_back(std::move(r));
  row_family_count[row_family_name(family)]++;
  return static_cast<int>(rows.size()) - 1;
}

void MilpInstance::add_term(int row, int var, double coeff) {
  if (coeff == 0.0) return;
  auto& terms = rows[row].terms;
  for (auto& tc : terms) {
    if (tc.first == var) {
      tc.second += coeff;
      return;
    }
  }
  terms.emplace_back(var, coeff);
}

int MilpInstance::var_index(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

std::vector<int> MilpInstance::vars_with_role(VarRole role) const {
  std::vector<int> out;
  for (int i = 0; i < n_vars(); ++i)
    if (vars[i].tag.role == role) out.push_back(i);
  return out;
}

int MilpInstance::n_binary() const {
  int k = 0;
  for (const Variable& v : vars)
    if (v.binary) ++k;
  return k;
}

size_t MilpInstance::n_nonzeros() const {
  size_t k = 0;
  for (const Row& r : rows) k += r.terms.size();
  return k;
}

void MilpInstance::set_penalty_weight(double alpha) {
  if (!blend || blend->kind != BlendVariant::ChanceSlack)
    throw ValidationError("penalty weight only applies to the chance variant");
  if (!(alpha >= 0.0)) throw ValidationError("penalty weight must be >= 0");
  for (int id : blend->slack_minus) vars[id].obj = alpha;
}

std::string MilpInstance::stats_text() const {
  std::ostringstream os;
  os << "vars\t" << n_vars() << "\n";
  os << "binary_vars\t" << n_binary() << "\n";
  os << "rows\t" << n_rows() << "\n";
  os << "nonzeros\t" << n_nonzeros() << "\n";
  for (const auto& [k, v] : row_family_count) os << "row\t" << k << "\t" << v << "\n";
  for (const auto& [k, v] : bound_family_count) os << "bound\t" << k << "\t" << v << "\n";
  for (const std::string& w : warnings) os << "warning\t" << w << "\n";
  return os.str();
}

std::pair<std::vector<std::pair<int, int>>, bool> blend_windows(int horizon,
                                                                int tau_periods) {
  std::vector<std::pair<int, int>> w;
  bool truncated = false;
  if (tau_periods <= 0) {
    w.emplace_back(1, horizon);
    return {w, false};
  }
  for (int a = 1; a <= horizon; a += tau_periods) {
    int b = a + tau_periods - 1;
    if (b > horizon) {
      b = horizon;
      truncated = true;
    }
    w.emplace_back(a, b);
  }
  return {w, truncated};
}

namespace {

struct BuildContext {
  const BuildInputs* in;
  int n_nodes, n_classes, T;
  std::vector<char> active;                 // node * n_classes + cls
  std::vector<int> x_id;                    // (node, cls, t) -> var id or -1
  std::vector<int> inv_id;                  // bins only
  std::vector<int> v_id, z_id;              // (cls, t)
  std::vector<int> zr_id, w_id;             // (t)
  int u_id = -1;

  bool is_active(int i, int c) const { return active[i * n_classes + c] != 0; }
  int x(int i, int c, int t) const {
    return x_id[(static_cast<size_t>(i) * n_classes + c) * T + (t - 1)];
  }
  int inv(int i, int c, int t) const {
    return inv_id[(static_cast<size_t>(i) * n_classes + c) * T + (t - 1)];
  }
  int v(int c, int t) const { return v_id[static_cast<size_t>(c) * T + (t - 1)]; }
  int z(int c, int t) const { return z_id[static_cast<size_t>(c) * T + (t - 1)]; }
};

// Reachable (node, class) pairs: flow starts at the infeed and follows
// lane-allowed successors; separators feed both branches.
std::vector<char> compute_active(const ProcessNetwork& net,
                                 const std::vector<BaleClass>& classes) {
  const int n = static_cast<int>(net.nodes.size());
  const int nc = static_cast<int>(classes.size());
  auto succ = net.successors();
  std::vector<char> active(static_cast<size_t>(n) * nc, 0);
  for (int c = 0; c < nc; ++c) {
    std::vector<int> stack;
    if (net.infeed >= 0 && net.allows(net.infeed, classes[c])) {
      active[net.infeed * nc + c] = 1;
      stack.push_back(net.infeed);
    }
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : succ[v]) {
        if (!net.allows(w, classes[c])) continue;
        if (active[w * nc + c]) continue;
        active[w * nc + c] = 1;
        stack.push_back(w);
      }
    }
  }
  return active;
}

void check_inputs(const BuildInputs& in) {
  if (!in.net || !in.classes || !in.plan)
    throw ValidationError("build inputs incomplete");
  auto bad = validate_network(*in.net, *in.classes, &in.geom);
  if (!bad.empty()) {
    std::string msg = "network validation failed:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ValidationError(msg);
  }
  validate_reliability(in.rel);
  const int nc = static_cast<int>(in.classes->size());
  if (nc == 0) throw ValidationError("no bale classes defined");
  if (static_cast<int>(in.class_labels.size()) != nc)
    throw ValidationError("class label table size mismatch");
  for (int c = 0; c < nc; ++c) {
    const BaleClass& bc = (*in.classes)[c];
    if (bc.processing_periods < 1 || bc.mass_per_meter <= 0.0)
      throw ValidationError("class '" + in.class_labels[c] +
                            "' is missing derived bale parameters");
    const double cap = in.net->nodes[in.net->infeed].capacity_for(c);
    if (std::isnan(cap))
      throw ValidationError("infeed capacity undefined for class '" +
                            in.class_labels[c] + "'");
  }
  if (in.plan->occupied > in.net->horizon)
    throw ValidationError("sequence does not fit in the horizon");
}

}  // namespace

MilpInstance build_core(const BuildInputs& in) {
  check_inputs(in);
  const ProcessNetwork& net = *in.net;
  const std::vector<BaleClass>& classes = *in.classes;
  const SequencePlan& plan = *in.plan;
  const int n = static_cast<int>(net.nodes.size());
  const int nc = static_cast<int>(classes.size());
  const int T = net.horizon;

  MilpInstance mi;
  BuildContext cx;
  cx.in = &in;
  cx.n_nodes = n;
  cx.n_classes = nc;
  cx.T = T;
  cx.active = compute_active(net, classes);
  cx.x_id.assign(static_cast<size_t>(n) * nc * T, -1);
  cx.inv_id.assign(static_cast<size_t>(n) * nc * T, -1);
  cx.v_id.assign(static_cast<size_t>(nc) * T, -1);
  cx.z_id.assign(static_cast<size_t>(nc) * T, -1);
  cx.zr_id.assign(T, -1);
  cx.w_id.assign(T, -1);

  const auto& labels = in.class_labels;

  // ---- variables ------------------------------------------------------
  // Node outflows. Finite throughput caps become the upper bounds.
  int capped_flows = 0;
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < nc; ++c) {
      if (!cx.is_active(i, c)) continue;
      const double cap = net.nodes[i].capacity_for(c);
      const double ub = std::isnan(cap) ? kInf : cap;
      if (!std::isnan(cap)) capped_flows += T;
      for (int t = 1; t <= T; ++t) {
        VarTag tag;
        tag.role = VarRole::Flow;
        tag.node = i;
        tag.cls = c;
        tag.t = t;
        cx.x_id[(static_cast<size_t>(i) * nc + c) * T + (t - 1)] = mi.add_var(
            "X_" + net.nodes[i].id + "_" + labels[c] + "_" + tkey(t), 0.0, ub, false, tag);
      }
    }
  }
  mi.bound_family_count["flow_caps"] = capped_flows;

  // Bin inventories; the final period is pinned to zero through its bounds.
  int final_pins = 0;
  for (int i = 0; i < n; ++i) {
    if (!is_bin(net.nodes[i].kind)) continue;
    for (int c = 0; c < nc; ++c) {
      if (!cx.is_active(i, c)) continue;
      for (int t = 1; t <= T; ++t) {
        VarTag tag;
        tag.role = VarRole::Inventory;
        tag.node = i;
        tag.cls = c;
        tag.t = t;
        const double ub = (t == T) ? 0.0 : kInf;
        if (t == T) ++final_pins;
        cx.inv_id[(static_cast<size_t>(i) * nc + c) * T + (t - 1)] = mi.add_var(
            "I_" + net.nodes[i].id + "_" + labels[c] + "_" + tkey(t), 0.0, ub, false, tag);
      }
    }
  }
  mi.bound_family_count["final_inventory_zero"] = final_pins;

  // Belt advance and infeed activity per class.
  for (int c = 0; c < nc; ++c) {
    const double u1 = net.nodes[net.infeed].capacity_for(c);
    const double vmax = u1 / classes[c].mass_per_meter;  // m per period
    for (int t = 1; t <= T; ++t) {
      VarTag tag;
      tag.role = VarRole::Advance;
      tag.cls = c;
      tag.t = t;
      cx.v_id[static_cast<size_t>(c) * T + (t - 1)] =
          mi.add_var("V_" + labels[c] + "_" + tkey(t), 0.0, vmax, false, tag);
    }
    for (int t = 1; t <= T; ++t) {
      VarTag tag;
      tag.role = VarRole::InfeedActive;
      tag.cls = c;
      tag.t = t;
      cx.z_id[static_cast<size_t>(c) * T + (t - 1)] =
          mi.add_var("Zf_" + labels[c] + "_" + tkey(t), 0.0, 1.0, true, tag);
    }
  }

  // Reactor status, feed rate, and the linearized running rate.
  for (int t = 1; t <= T; ++t) {
    VarTag tag;
    tag.role = VarRole::ReactorOn;
    tag.t = t;
    cx.zr_id[t - 1] = mi.add_var("Zr_" + tkey(t), 0.0, 1.0, true, tag, 1.0);
  }
  {
    VarTag tag;
    tag.role = VarRole::FeedRate;
    cx.u_id = mi.add_var("U", in.rel.u_lower, in.rel.u_upper, false, tag);
  }
  for (int t = 1; t <= T; ++t) {
    VarTag tag;
    tag.role = VarRole::WindowFlow;
    tag.t = t;
    cx.w_id[t - 1] = mi.add_var("W_" + tkey(t), 0.0, in.rel.u_upper, false, tag);
  }
  mi.bound_family_count["binary_domains"] = mi.n_binary();
  mi.bound_family_count["feed_rate_range"] = 1;

  // ---- rows -----------------------------------------------------------
  // Infeed only flows while its class is active, and no faster than the
  // belt carries mass past the grinder throat.
  for (int c = 0; c < nc; ++c) {
    const double u1 = net.nodes[net.infeed].capacity_for(c);
    for (int t = 1; t <= T; ++t) {
      int r = mi.add_row("infeed_gate_" + labels[c] + "_" + tkey(t), RowSense::LE, 0.0,
                         RowFamily::InfeedGate);
      mi.add_term(r, cx.x(net.infeed, c, t), 1.0);
      mi.add_term(r, cx.z(c, t), -u1);
      r = mi.add_row("belt_couple_" + labels[c] + "_" + tkey(t), RowSense::LE, 0.0,
                     RowFamily::BeltCouple);
      mi.add_term(r, cx.x(net.infeed, c, t), 1.0);
      mi.add_term(r, cx.v(c, t), -classes[c].mass_per_meter);
    }
  }

  // Every bale of every class is processed in full.
  for (int c = 0; c < nc; ++c) {
    int r = mi.add_row("whole_bale_" + labels[c], RowSense::EQ,
                       classes[c].bale_mass * classes[c].bale_count,
                       RowFamily::WholeBale);
    for (int t = 1; t <= T; ++t) mi.add_term(r, cx.x(net.infeed, c, t), 1.0);
  }

  // Scheduled bale windows: the occupying class's belt advances exactly one
  // bale length, and every other class is shut out of the infeed.
  for (int k = 0; k < plan.size(); ++k) {
    const int c = plan.bale_class[k];
    const int a = plan.start_period[k];
    const int e = a + plan.duration[k] - 1;
    const std::string pk = "p" + std::to_string(k + 1);
    int r = mi.add_row("advance_lo_" + pk, RowSense::GE, in.geom.length,
                       RowFamily::AdvanceLo);
    for (int t = a; t <= e; ++t) mi.add_term(r, cx.v(c, t), 1.0);
    r = mi.add_row("advance_hi_" + pk, RowSense::LE, in.geom.length,
                   RowFamily::AdvanceHi);
    for (int t = a; t <= e; ++t) mi.add_term(r, cx.v(c, t), 1.0);
    if (nc > 1) {
      r = mi.add_row("window_excl_" + pk, RowSense::LE, 0.0, RowFamily::WindowExcl);
      for (int c2 = 0; c2 < nc; ++c2) {
        if (c2 == c) continue;
        for (int t = a; t <= e; ++t) mi.add_term(r, cx.z(c2, t), 1.0);
      }
    }
  }

  // Reactor on-periods form a prefix of the horizon.
  for (int t = 2; t <= T; ++t) {
    int r = mi.add_row("run_monotone_" + tkey(t), RowSense::LE, 0.0,
                       RowFamily::RunMonotone);
    mi.add_term(r, cx.zr_id[t - 1], 1.0);
    mi.add_term(r, cx.zr_id[t - 2], -1.0);
  }

  // Node balances.
  for (int i = 0; i < n; ++i) {
    const EquipmentNode& nd = net.nodes[i];
    if (i == net.infeed) continue;
    for (int c = 0; c < nc; ++c) {
      if (!cx.is_active(i, c)) continue;
      // Predecessor flows of the same class.
      std::vector<int> pin;
      for (int p : net.preds[i])
        if (cx.is_active(p, c)) pin.push_back(p);
      for (int t = 1; t <= T; ++t) {
        if (is_bin(nd.kind)) {
          int r = mi.add_row("bin_balance_" + nd.id + "_" + labels[c] + "_" + tkey(t),
                             RowSense::EQ, 0.0, RowFamily::BinBalance);
          mi.add_term(r, cx.inv(i, c, t), 1.0);
          if (t > 1) mi.add_term(r, cx.inv(i, c, t - 1), -1.0);
          for (int p : pin) mi.add_term(r, cx.x(p, c, t), -1.0);
          mi.add_term(r, cx.x(i, c, t), 1.0);
          continue;
        }
        RowFamily fam = RowFamily::PassThrough;
        double coeff = 1.0;  // multiplier on predecessor flow
        std::string prefix = "pass_through_";
        if (nd.kind == NodeKind::Grinder) {
          fam = RowFamily::GrindBalance;
          coeff = 1.0 - nd.dry_matter_loss;
          prefix = "grind_balance_";
        } else if (nd.branch == BranchRole::Large) {
          fam = RowFamily::LargeBalance;
          prefix = "large_balance_";
        } else if (nd.branch == BranchRole::Small) {
          fam = RowFamily::SmallBalance;
          prefix = "small_balance_";
        }
        int r = mi.add_row(prefix + nd.id + "_" + labels[c] + "_" + tkey(t),
                           RowSense::EQ, 0.0, fam);
        mi.add_term(r, cx.x(i, c, t), 1.0);
        for (int p : pin) {
          double k = coeff;
          if (nd.branch != BranchRole::None &&
              net.nodes[p].kind == NodeKind::Separator) {
            // A branch node keeps its own transformation (a grinder's loss)
            // on top of the separator's split share.
            const double theta = net.nodes[p].bypass[c];
            k = coeff * ((nd.branch == BranchRole::Small) ? theta : 1.0 - theta);
          }
          mi.add_term(r, cx.x(p, c, t), -k);
        }
      }
    }
  }

  // Bin capacity rows couple the classes sharing a bin.
  for (int i = 0; i < n; ++i) {
    const EquipmentNode& nd = net.nodes[i];
    if (!is_bin(nd.kind)) continue;
    for (int t = 1; t <= T; ++t) {
      int rm = mi.add_row("bin_mass_" + nd.id + "_" + tkey(t), RowSense::LE, nd.mass_cap,
                          RowFamily::BinMassCap);
      int rv = mi.add_row("bin_vol_" + nd.id + "_" + tkey(t), RowSense::LE,
                          nd.volume_cap, RowFamily::BinVolumeCap);
      for (int c = 0; c < nc; ++c) {
        if (!cx.is_active(i, c)) continue;
        mi.add_term(rm, cx.inv(i, c, t), 1.0);
        mi.add_term(rv, cx.inv(i, c, t), 1.0 / nd.stored_density[c]);
      }
    }
  }

  // Reactor intake: capped by, and reliably close to, the linearized
  // running rate.
  int avg = mi.add_row("avg_rate", RowSense::GE, 0.0, RowFamily::AvgRate);
  for (int t = 1; t <= T; ++t) {
    int rc = mi.add_row("reactor_cap_" + tkey(t), RowSense::LE, 0.0,
                        RowFamily::ReactorCap);
    int rq = mi.add_row("min_rate_" + tkey(t), RowSense::GE, 0.0, RowFamily::MinRate);
    for (int i : net.reactor_feeders) {
      for (int c = 0; c < nc; ++c) {
        if (!cx.is_active(i, c)) continue;
        mi.add_term(rc, cx.x(i, c, t), 1.0);
        mi.add_term(rq, cx.x(i, c, t), 1.0);
        mi.add_term(avg, cx.x(i, c, t), 1.0);
      }
    }
    mi.add_term(rc, cx.w_id[t - 1], -1.0);
    mi.add_term(rq, cx.w_id[t - 1], -in.rel.q_min);
    mi.add_term(avg, cx.w_id[t - 1], -in.rel.q_avg);
  }

  // W_t = U when the reactor runs, 0 otherwise (exact at binary points).
  for (int t = 1; t <= T; ++t) {
    const int w = cx.w_id[t - 1];
    const int zr = cx.zr_id[t - 1];
    int r = mi.add_row("mcc_a_" + tkey(t), RowSense::GE, 0.0, RowFamily::McCormickA);
    mi.add_term(r, w, 1.0);
    mi.add_term(r, zr, -in.rel.u_lower);
    r = mi.add_row("mcc_b_" + tkey(t), RowSense::LE, 0.0, RowFamily::McCormickB);
    mi.add_term(r, w, 1.0);
    mi.add_term(r, zr, -in.rel.u_upper);
    r = mi.add_row("mcc_c_" + tkey(t), RowSense::GE, -in.rel.u_upper,
                   RowFamily::McCormickC);
    mi.add_term(r, w, 1.0);
    mi.add_term(r, cx.u_id, -1.0);
    mi.add_term(r, zr, -in.rel.u_upper);
    r = mi.add_row("mcc_d_" + tkey(t), RowSense::LE, -in.rel.u_lower,
                   RowFamily::McCormickD);
    mi.add_term(r, w, 1.0);
    mi.add_term(r, cx.u_id, -1.0);
    mi.add_term(r, zr, -in.rel.u_lower);
  }

  // Construction-time feasibility screens.
  double total_mass = 0.0;
  for (const BaleClass& c : classes) total_mass += c.bale_mass * c.bale_count;
  if (total_mass <= 0.0) mi.warnings.push_back("inventory is empty; nothing to schedule");
  if (total_mass > in.rel.u_upper * T)
    mi.warnings.push_back(
        "feed-rate ceiling cannot deliver the whole inventory within the horizon");
  if (plan.size() == 0) mi.warnings.push_back("no bales scheduled");

  return mi;
}

void add_blending(MilpInstance& mi, const BuildInputs& in, const VariantSpec& variant) {
  if (variant.kind == BlendVariant::None) return;
  if (mi.blend) throw ValidationError("blending layer already present");
  if (!(variant.target > 0.0 && variant.target < 1.0))
    throw ValidationError("blend target must lie in (0,1)");

  const ProcessNetwork& net = *in.net;
  const int nc = static_cast<int>(in.classes->size());
  const int T = net.horizon;

  auto [windows, truncated] = blend_windows(T, variant.tau_periods);
  if (truncated)
    mi.warnings.push_back("window length does not divide the horizon; final window truncated");

  // Collect the reactor-feeder flow variables per class once.
  std::vector<std::vector<int>> feeder_x(nc);  // var ids per class, all periods
  std::vector<std::vector<int>> feeder_t(nc);
  for (int i : net.reactor_feeders) {
    for (int c = 0; c < nc; ++c) {
      for (int t = 1; t <= T; ++t) {
        const int id = mi.var_index("X_" + net.nodes[i].id + "_" + in.class_labels[c] +
                                    "_" + tkey(t));
        if (id >= 0) {
          feeder_x[c].push_back(id);
          feeder_t[c].push_back(t);
        }
      }
    }
  }

  BlendInfo info;
  info.kind = variant.kind;
  info.target = variant.target;
  info.windows = windows;
  const int W = static_cast<int>(windows.size());

  auto add_window_terms = [&](int row, int w, const std::vector<double>& value,
                              double sign_target) {
    // sign_target = +1 emits (value - target); -1 emits (target - value).
    const auto [a, b] = windows[w];
    for (int c = 0; c < nc; ++c) {
      const double coeff = sign_target > 0 ? value[c] - variant.target
                                           : variant.target - value[c];
      if (coeff == 0.0) continue;
      for (size_t k = 0; k < feeder_x[c].size(); ++k) {
        const int t = feeder_t[c][k];
        if (t >= a && t <= b) mi.add_term(row, feeder_x[c][k], coeff);
      }
    }
  };

  switch (variant.kind) {
    case BlendVariant::Deterministic: {
      if (static_cast<int>(variant.class_value.size()) != nc)
        throw ValidationError("deterministic blend needs one mean value per class");
      for (int w = 0; w < W; ++w) {
        int r = mi.add_row("blend_det_w" + std::to_string(w + 1), RowSense::GE, 0.0,
                           RowFamily::BlendDet);
        add_window_terms(r, w, variant.class_value, +1.0);
      }
      break;
    }
    case BlendVariant::AllSamples:
    case BlendVariant::ChanceSlack: {
      const int N = static_cast<int>(variant.sample_value.size());
      if (N < 1) throw ValidationError("sample-based blend needs at least one sample");
      for (const auto& row : variant.sample_value)
        if (static_cast<int>(row.size()) != nc)
          throw ValidationError("sample value table width mismatch");
      info.n_samples = N;
      if (variant.kind == BlendVariant::AllSamples) {
        for (int s = 0; s < N; ++s) {
          for (int w = 0; w < W; ++w) {
            int r = mi.add_row("blend_hard_n" + std::to_string(s + 1) + "_w" +
                                   std::to_string(w + 1),
                               RowSense::GE, 0.0, RowFamily::BlendHard);
            add_window_terms(r, w, variant.sample_value[s], +1.0);
          }
        }
      } else {
        if (!(variant.penalty_weight >= 0.0))
          throw ValidationError("penalty weight must be >= 0");
        info.slack_minus.resize(static_cast<size_t>(N) * W);
        info.slack_plus.resize(static_cast<size_t>(N) * W);
        for (int s = 0; s < N; ++s) {
          for (int w = 0; w < W; ++w) {
            VarTag tp;
            tp.role = VarRole::SlackPlus;
            tp.sample = s;
            tp.window = w;
            VarTag tm;
            tm.role = VarRole::SlackMinus;
            tm.sample = s;
            tm.window = w;
            const std::string suffix =
                "n" + std::to_string(s + 1) + "_w" + std::to_string(w + 1);
            const int bp = mi.add_var("Bp_" + suffix, 0.0, kInf, false, tp, 0.0);
            const int bm = mi.add_var("Bm_" + suffix, 0.0, kInf, false, tm,
                                      variant.penalty_weight);
            info.slack_plus[static_cast<size_t>(s) * W + w] = bp;
            info.slack_minus[static_cast<size_t>(s) * W + w] = bm;
            int r = mi.add_row("blend_slack_" + suffix, RowSense::EQ, 0.0,
                               RowFamily::BlendSlack);
            add_window_terms(r, w, variant.sample_value[s], -1.0);
            mi.add_term(r, bm, -1.0);
            mi.add_term(r, bp, 1.0);
          }
        }
        mi.bound_family_count["slack_nonneg"] =
            static_cast<int>(info.slack_minus.size() + info.slack_plus.size());
      }
      break;
    }
    case BlendVariant::None:
      break;
  }
  mi.blend = info;
}

SolutionRecord extract_solution(const MilpInstance& mi, const BuildInputs& in,
                                const std::vector<double>& values, double objective) {
  const ProcessNetwork& net = *in.net;
  const int n = static_cast<int>(net.nodes.size());
  const int nc = static_cast<int>(in.classes->size());
  const int T = net.horizon;
  if (static_cast<int>(values.size()) != mi.n_vars())
    throw ValidationError("solution vector size mismatch");

  SolutionRecord rec;
  rec.resize(n, nc, T);
  rec.objective = objective;
  for (int id = 0; id < mi.n_vars(); ++id) {
    const VarTag& tag = mi.vars[id].tag;
    const double v = values[id];
    switch (tag.role) {
      case VarRole::Flow: rec.x(tag.node, tag.cls, tag.t) = v; break;
      case VarRole::Inventory: rec.inv(tag.node, tag.cls, tag.t) = v; break;
      case VarRole::Advance:
        rec.advance[static_cast<size_t>(tag.cls) * T + (tag.t - 1)] = v;
        break;
      case VarRole::InfeedActive:
        rec.infeed_active[static_cast<size_t>(tag.cls) * T + (tag.t - 1)] = v;
        break;
      case VarRole::ReactorOn: rec.reactor_on[tag.t - 1] = v; break;
      case VarRole::WindowFlow: rec.window_flow[tag.t - 1] = v; break;
      case VarRole::FeedRate: rec.feed_rate = v; break;
      default: break;
    }
  }
  return rec;
}

}  // namespace bioproc

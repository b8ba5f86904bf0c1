#include "bioproc/runner.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

namespace bioproc {

namespace {

constexpr double kDeliveryTol = 1e-6;

std::string fmt_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

bool parse_bool(const std::string& v, const std::string& key) {
  const std::string t = lower(trim(v));
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ValidationError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace

std::string RunConfig::resolve_path(const std::string& p) const {
  if (p.empty()) return p;
  std::filesystem::path fp(p);
  if (fp.is_absolute() || config_dir.empty()) return p;
  return (std::filesystem::path(config_dir) / fp).string();
}

int RunConfig::tau_periods() const {
  if (tau_minutes <= 0.0) return 0;
  const int p = static_cast<int>(std::lround(tau_minutes / dt_minutes));
  return p < 0 ? 0 : p;
}

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  cfg.config_dir = std::filesystem::path(path).parent_path().string();

  const std::string text = read_file(path);
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    const std::string where = "config key '" + key + "'";

    if (key == "problem") cfg.problem_id = val;
    else if (key == "network") cfg.network_path = val;
    else if (key == "equipment") cfg.equipment_path = val;
    else if (key == "inventory") cfg.inventory_path = val;
    else if (key == "distributions") cfg.distributions_dir = val;
    else if (key == "sequence") cfg.sequence_path = val;
    else if (key == "sequence_rule") cfg.sequence_rule = lower(val);
    else if (key == "variant") cfg.variant = parse_blend_variant(val);
    else if (key == "tau_minutes") cfg.tau_minutes = parse_double(val, where);
    else if (key == "target") cfg.target = parse_double(val, where);
    else if (key == "gamma") cfg.gamma = parse_double(val, where);
    else if (key == "gamma_hat") cfg.gamma_hat = parse_double(val, where);
    else if (key == "delta") cfg.delta = parse_double(val, where);
    else if (key == "n_samples") cfg.n_samples = static_cast<int>(parse_long(val, where));
    else if (key == "n_posterior") cfg.n_posterior = static_cast<int>(parse_long(val, where));
    else if (key == "m_replications") cfg.m_replications = static_cast<int>(parse_long(val, where));
    else if (key == "growth_step") cfg.growth_step = static_cast<int>(parse_long(val, where));
    else if (key == "max_outer") cfg.max_outer = static_cast<int>(parse_long(val, where));
    else if (key == "quality_percentile") cfg.quality_percentile = parse_double(val, where);
    else if (key == "q_min") cfg.rel.q_min = parse_double(val, where);
    else if (key == "q_avg") cfg.rel.q_avg = parse_double(val, where);
    else if (key == "u_lower") cfg.rel.u_lower = parse_double(val, where);
    else if (key == "u_upper") cfg.rel.u_upper = parse_double(val, where);
    else if (key == "dt_minutes") cfg.dt_minutes = parse_double(val, where);
    else if (key == "horizon") cfg.horizon = static_cast<int>(parse_long(val, where));
    else if (key == "bale_mass") cfg.bale_mass = parse_double(val, where);
    else if (key == "bale_width") cfg.geom.width = parse_double(val, where);
    else if (key == "bale_height") cfg.geom.height = parse_double(val, where);
    else if (key == "bale_length") cfg.geom.length = parse_double(val, where);
    else if (key == "alpha_lo") cfg.penalty.alpha_lo = parse_double(val, where);
    else if (key == "alpha_hi") cfg.penalty.alpha_hi = parse_double(val, where);
    else if (key == "count_eps") cfg.penalty.count_eps = parse_double(val, where);
    else if (key == "bracket_phi") cfg.penalty.bracket_phi = parse_double(val, where);
    else if (key == "trace") cfg.penalty.trace = parse_bool(val, key);
    else if (key == "max_nodes") cfg.penalty.request.max_nodes = parse_long(val, where);
    else if (key == "time_limit_sec") cfg.penalty.request.time_limit_sec = parse_double(val, where);
    else if (key == "gap_abs") cfg.penalty.request.gap_abs = parse_double(val, where);
    else if (key == "gap_rel") cfg.penalty.request.gap_rel = parse_double(val, where);
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(parse_long(val, where));
    else if (key == "pool_size") cfg.pool_size = static_cast<int>(parse_long(val, where));
    else if (key == "output_dir") cfg.output_dir = val;
    else if (key == "backend") cfg.backend = val;
    else
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": unknown config key '" + key + "'");
  }

  if (const char* env = std::getenv("BIOPROC_BACKEND")) cfg.backend = env;
  if (const char* env = std::getenv("BIOPROC_POOL"))
    cfg.pool_size = static_cast<int>(parse_long(env, "BIOPROC_POOL"));

  if (cfg.horizon < 1) throw ValidationError("config needs horizon >= 1");
  if (!(cfg.dt_minutes > 0.0)) throw ValidationError("config needs dt_minutes > 0");
  if (cfg.m_replications < 1) throw ValidationError("config needs m_replications >= 1");
  if (cfg.pool_size < 1) throw ValidationError("config needs pool_size >= 1");
  if (cfg.variant != BlendVariant::None && !(cfg.target > 0.0))
    throw ValidationError("blending variants need target > 0");
  if (cfg.variant == BlendVariant::ChanceSlack && !cfg.backend.empty())
    throw ValidationError("sampled-penalty runs use the built-in solver; "
                          "clear the backend setting");
  if (!(cfg.quality_percentile > 0.0 && cfg.quality_percentile < 1.0))
    throw ValidationError("quality_percentile must lie in (0,1)");
  cfg.geom.period_minutes = cfg.dt_minutes;
  return cfg;
}

// ---- ingest ---------------------------------------------------------------

namespace {

// Equipment table: param -> per-moisture values, indexed by the Moisture enum.
using EquipTable = std::map<std::string, std::array<double, 3>>;

EquipTable read_equipment(const std::string& path) {
  EquipTable table;
  const auto rows = read_tsv(path);
  for (size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 4)
      throw ValidationError(path + ": row " + std::to_string(r + 1) +
                            " needs 4 columns (param, low, mid, high)");
    std::array<double, 3> v{};
    for (int m = 0; m < 3; ++m)
      v[m] = parse_double(row[m + 1], path + " '" + row[0] + "' column " +
                                          std::to_string(m + 2));
    if (!table.emplace(trim(row[0]), v).second)
      throw ValidationError(path + ": duplicate param '" + row[0] + "'");
  }
  return table;
}

const std::array<double, 3>& equip_row(const EquipTable& table, const std::string& key,
                                       const std::string& path) {
  auto it = table.find(key);
  if (it == table.end())
    throw ValidationError(path + ": missing equipment param '" + key + "'");
  return it->second;
}

struct NetworkRow {
  std::string id;
  NodeKind kind = NodeKind::Conveyor;
  std::vector<std::string> preds;
  BranchRole branch = BranchRole::None;
  std::string lane;   // feedstock label or empty
  std::string equip;  // equipment param prefix or empty
  double mass_cap = 0.0;
  double volume_cap = 0.0;
};

std::vector<NetworkRow> read_network_rows(const std::string& path) {
  std::vector<NetworkRow> out;
  const auto rows = read_tsv(path);
  for (size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 8)
      throw ValidationError(path + ": row " + std::to_string(r + 1) +
                            " needs 8 columns (id, kind, preds, branch, lane, "
                            "equip, mass_cap, volume_cap)");
    NetworkRow nr;
    nr.id = trim(row[0]);
    nr.kind = parse_node_kind(row[1]);
    const std::string preds = trim(row[2]);
    if (preds != "-")
      for (const std::string& p : split(preds, ','))
        if (!trim(p).empty()) nr.preds.push_back(trim(p));
    const std::string branch = lower(trim(row[3]));
    if (branch == "large") nr.branch = BranchRole::Large;
    else if (branch == "small") nr.branch = BranchRole::Small;
    else if (branch != "-")
      throw ValidationError(path + ": node '" + nr.id + "' branch must be "
                            "large, small, or -");
    if (trim(row[4]) != "-") nr.lane = trim(row[4]);
    if (trim(row[5]) != "-") nr.equip = trim(row[5]);
    nr.mass_cap = parse_double(row[6], path + " '" + nr.id + "' mass_cap");
    nr.volume_cap = parse_double(row[7], path + " '" + nr.id + "' volume_cap");
    out.push_back(std::move(nr));
  }
  if (out.empty()) throw ValidationError(path + ": no nodes");
  return out;
}

struct InventoryRow {
  std::string label;
  double mean = 0.0;
  int bales = 0;
  std::array<int, 3> split{};  // by the Moisture enum
};

std::vector<InventoryRow> read_inventory_rows(const std::string& path) {
  std::vector<InventoryRow> out;
  const auto rows = read_tsv(path);
  for (size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 6)
      throw ValidationError(path + ": row " + std::to_string(r + 1) +
                            " needs 6 columns (label, mean_carb, bales, low, "
                            "mid, high)");
    InventoryRow ir;
    ir.label = trim(row[0]);
    if (ir.label.empty() ||
        ir.label.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZ"
                                   "abcdefghijklmnopqrstuvwxyz0123456789_") !=
            std::string::npos)
      throw ValidationError(path + ": feedstock label '" + ir.label +
                            "' must be letters, digits, or underscores (it is "
                            "used inside model identifiers)");
    ir.mean = parse_double(row[1], path + " '" + ir.label + "' mean_carb");
    ir.bales = static_cast<int>(parse_long(row[2], path + " '" + ir.label + "' bales"));
    int sum = 0;
    for (int m = 0; m < 3; ++m) {
      ir.split[m] = static_cast<int>(
          parse_long(row[m + 3], path + " '" + ir.label + "' split column " +
                                     std::to_string(m + 4)));
      if (ir.split[m] < 0)
        throw ValidationError(path + ": '" + ir.label + "' has a negative count");
      sum += ir.split[m];
    }
    if (sum != ir.bales)
      throw ValidationError(path + ": '" + ir.label + "' moisture split totals " +
                            std::to_string(sum) + ", bales column says " +
                            std::to_string(ir.bales));
    for (const InventoryRow& prev : out)
      if (prev.label == ir.label)
        throw ValidationError(path + ": duplicate feedstock '" + ir.label + "'");
    out.push_back(ir);
  }
  if (out.empty()) throw ValidationError(path + ": no feedstock rows");
  return out;
}

EmpiricalDist read_distribution(const std::string& path, int feedstock) {
  EmpiricalDist d;
  d.feedstock = feedstock;
  const auto rows = read_tsv(path);
  for (size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 2)
      throw ValidationError(path + ": row " + std::to_string(r + 1) +
                            " needs 2 columns (value, weight)");
    d.support.push_back(parse_double(row[0], path + " value"));
    d.weights.push_back(parse_double(row[1], path + " weight"));
  }
  d.validate();
  return d;
}

}  // namespace

CaseData ingest_case_data(const RunConfig& cfg) {
  if (cfg.network_path.empty() || cfg.equipment_path.empty() ||
      cfg.inventory_path.empty() || cfg.distributions_dir.empty())
    throw ValidationError("config needs network, equipment, inventory, and "
                          "distributions entries");

  const std::string net_path = cfg.resolve_path(cfg.network_path);
  const std::string equip_path = cfg.resolve_path(cfg.equipment_path);
  const std::string inv_path = cfg.resolve_path(cfg.inventory_path);
  const std::string dist_dir = cfg.resolve_path(cfg.distributions_dir);

  const EquipTable equip = read_equipment(equip_path);
  const auto net_rows = read_network_rows(net_path);
  const auto inv_rows = read_inventory_rows(inv_path);

  CaseData data;

  // Feedstocks and classes. Class order: feedstock-major, moisture-minor.
  const auto& bale_density = equip_row(equip, "bale.density", equip_path);
  for (size_t f = 0; f < inv_rows.size(); ++f) {
    data.feedstock_labels.push_back(inv_rows[f].label);
    data.feedstock_mean.push_back(inv_rows[f].mean);
    for (int m = 0; m < 3; ++m) {
      if (inv_rows[f].split[m] == 0) continue;
      BaleClass cls;
      cls.feedstock = static_cast<int>(f);
      cls.moisture = static_cast<Moisture>(m);
      cls.bale_mass = cfg.bale_mass;
      cls.bale_count = inv_rows[f].split[m];
      cls.bale_density = bale_density[m];
      data.classes.push_back(cls);
      // Underscore separator: these labels become model identifiers, and
      // the LP text format reserves '-' for arithmetic.
      data.class_labels.push_back(inv_rows[f].label + "_" +
                                  moisture_name(static_cast<Moisture>(m)));
    }
  }
  const int nc = static_cast<int>(data.classes.size());

  // Network nodes; capacities become dry Mg per period.
  const double per_period = cfg.dt_minutes / 60.0;
  std::map<std::string, int> index;
  for (const NetworkRow& nr : net_rows) {
    if (index.count(nr.id))
      throw ValidationError(net_path + ": duplicate node id '" + nr.id + "'");
    index[nr.id] = static_cast<int>(data.net.nodes.size());

    EquipmentNode nd;
    nd.id = nr.id;
    nd.kind = nr.kind;
    nd.branch = nr.branch;
    nd.mass_cap = nr.mass_cap;
    nd.volume_cap = nr.volume_cap;
    if (!nr.lane.empty()) {
      auto it = std::find(data.feedstock_labels.begin(), data.feedstock_labels.end(),
                          nr.lane);
      if (it == data.feedstock_labels.end())
        throw ValidationError(net_path + ": node '" + nr.id + "' lane '" +
                              nr.lane + "' is not a feedstock label");
      nd.lane_feedstock = static_cast<int>(it - data.feedstock_labels.begin());
    }
    if (!nr.equip.empty()) {
      const auto& cap = equip_row(equip, nr.equip + ".capacity", equip_path);
      nd.capacity.resize(nc);
      for (int c = 0; c < nc; ++c)
        nd.capacity[c] = cap[static_cast<int>(data.classes[c].moisture)] * per_period;
      // The infeed conveyor shares the grinder's capacity key; only the
      // grinder itself takes the dry matter loss.
      if (nd.kind == NodeKind::Grinder && equip.count(nr.equip + ".loss"))
        nd.dry_matter_loss =
            equip_row(equip, nr.equip + ".loss", equip_path)[0];
    }
    if (nd.kind == NodeKind::Separator) {
      const auto& byp = equip_row(equip, "separator.bypass", equip_path);
      nd.bypass.resize(nc);
      for (int c = 0; c < nc; ++c)
        nd.bypass[c] = byp[static_cast<int>(data.classes[c].moisture)];
    }
    if (is_bin(nd.kind)) {
      const std::string key =
          (nd.kind == NodeKind::SurgeBin ? "surge.density" : "metering.density");
      const auto& den = equip_row(equip, key, equip_path);
      nd.stored_density.resize(nc);
      for (int c = 0; c < nc; ++c)
        nd.stored_density[c] = den[static_cast<int>(data.classes[c].moisture)];
    }
    data.net.nodes.push_back(std::move(nd));
  }
  for (const NetworkRow& nr : net_rows) {
    std::vector<int> preds;
    for (const std::string& p : nr.preds) {
      auto it = index.find(p);
      if (it == index.end())
        throw ValidationError(net_path + ": node '" + nr.id +
                              "' references unknown predecessor '" + p + "'");
      preds.push_back(it->second);
    }
    data.net.preds.push_back(std::move(preds));
  }

  for (size_t i = 0; i < data.net.nodes.size(); ++i) {
    const EquipmentNode& nd = data.net.nodes[i];
    if (nd.kind == NodeKind::Conveyor && data.net.preds[i].empty()) {
      if (data.net.infeed >= 0)
        throw ValidationError(net_path + ": more than one infeed conveyor ('" +
                              data.net.nodes[data.net.infeed].id + "' and '" +
                              nd.id + "')");
      data.net.infeed = static_cast<int>(i);
    }
    if (nd.kind == NodeKind::ReactorFeeder)
      data.net.reactor_feeders.push_back(static_cast<int>(i));
  }
  if (data.net.infeed < 0)
    throw ValidationError(net_path + ": no infeed conveyor (a conveyor with no "
                          "predecessors)");
  if (data.net.reactor_feeders.empty())
    throw ValidationError(net_path + ": no reactor feeder nodes");

  data.net.horizon = cfg.horizon;
  data.net.big_m = std::max(static_cast<double>(cfg.horizon), cfg.geom.length) + 1.0;

  // Derived bale parameters need the infeed capacity per class.
  for (int c = 0; c < nc; ++c) {
    const double u1 = data.net.nodes[data.net.infeed].capacity_for(c);
    if (std::isnan(u1))
      throw ValidationError(net_path + ": infeed conveyor '" +
                            data.net.nodes[data.net.infeed].id +
                            "' needs an equipment capacity");
    data.classes[c] = derive_bale_parameters(cfg.geom, data.classes[c], u1);
  }

  // Distributions, one file per feedstock label.
  for (size_t f = 0; f < inv_rows.size(); ++f) {
    const std::string dpath =
        (std::filesystem::path(dist_dir) / (inv_rows[f].label + ".tsv")).string();
    EmpiricalDist d = read_distribution(dpath, static_cast<int>(f));
    const double mean = d.mean();
    if (std::abs(mean - inv_rows[f].mean) > 0.01 * inv_rows[f].mean)
      throw ValidationError(dpath + ": mean " + format_double(mean) +
                            " is more than 1% away from the inventory mean " +
                            format_double(inv_rows[f].mean));
    data.dists.push_back(std::move(d));
  }

  // Sequencing inventory.
  data.inventory.target = cfg.target;
  for (size_t f = 0; f < inv_rows.size(); ++f) {
    FeedstockLot lot;
    lot.feedstock = static_cast<int>(f);
    lot.label = inv_rows[f].label;
    lot.bales = inv_rows[f].bales;
    lot.by_moisture = {inv_rows[f].split[0], inv_rows[f].split[1], inv_rows[f].split[2]};
    lot.carb_percentile = data.dists[f].percentile(1.0 - cfg.quality_percentile);
    data.inventory.lots.push_back(std::move(lot));
    data.inventory.n_low += inv_rows[f].split[0];
    data.inventory.n_mid += inv_rows[f].split[1];
    data.inventory.n_high += inv_rows[f].split[2];
  }
  return data;
}

// ---- sequencing glue ------------------------------------------------------

std::vector<int> order_to_classes(const std::vector<PlacedBale>& order,
                                  const std::vector<BaleClass>& classes) {
  std::vector<int> out;
  out.reserve(order.size());
  for (size_t k = 0; k < order.size(); ++k) {
    int found = -1;
    for (size_t c = 0; c < classes.size(); ++c)
      if (classes[c].feedstock == order[k].feedstock &&
          classes[c].moisture == order[k].moisture) {
        found = static_cast<int>(c);
        break;
      }
    if (found < 0)
      throw ValidationError("sequence position " + std::to_string(k + 1) +
                            " asks for a (feedstock, moisture) pairing with no "
                            "bales in the inventory");
    out.push_back(found);
  }
  return out;
}

std::vector<PlacedBale> make_sequence(const RunConfig& cfg, const CaseData& data) {
  const std::string& rule = cfg.sequence_rule;
  if (rule == "literal") {
    if (cfg.sequence_path.empty())
      throw ValidationError("sequence_rule literal needs a sequence file");
    return load_literal_sequence(read_file(cfg.resolve_path(cfg.sequence_path)),
                                 data.inventory.lots);
  }
  if (rule == "random") return random_sequence(data.inventory, cfg.seed);
  if (rule == "combined") return rule4_combined(data.inventory).order;
  if (rule == "distance") {
    const DistanceSequence ds = rule3_distance(data.inventory);
    // The rule only fixes the feedstock order; moisture draws from each
    // lot's remaining stock in low, mid, high order.
    std::vector<std::array<int, 3>> rem(data.inventory.lots.size());
    for (size_t i = 0; i < data.inventory.lots.size(); ++i) {
      const auto& bm = data.inventory.lots[i].by_moisture;
      rem[i] = {bm[0], bm[1], bm[2]};
    }
    std::vector<PlacedBale> out;
    for (int f : ds.feedstock_order) {
      int m = 0;
      while (m < 3 && rem[f][m] == 0) ++m;
      if (m == 3)
        throw ValidationError("distance rule drew more bales than feedstock " +
                              data.inventory.lots[f].label + " holds");
      --rem[f][m];
      out.push_back({data.inventory.lots[f].feedstock, static_cast<Moisture>(m)});
    }
    return out;
  }
  if (rule == "moisture" || rule == "quality")
    throw ValidationError("sequence_rule '" + rule + "' yields a pattern, not a "
                          "bale order; use the sequence subcommand to inspect "
                          "it, or pick literal/distance/combined/random");
  throw ValidationError("unknown sequence_rule '" + rule + "'");
}

PreparedCase prepare_case(const RunConfig& cfg) {
  PreparedCase pc;
  pc.data = ingest_case_data(cfg);
  pc.order = make_sequence(cfg, pc.data);

  const std::vector<int> order = order_to_classes(pc.order, pc.data.classes);
  pc.plan = expand_sequence(order, pc.data.classes, cfg.horizon);

  validate_reliability(cfg.rel);
  const std::vector<std::string> problems =
      validate_network(pc.data.net, pc.data.classes, &cfg.geom);
  if (!problems.empty()) {
    std::string msg = "network validation failed:";
    for (const std::string& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }

  pc.shape.kind = cfg.variant;
  pc.shape.target = cfg.target;
  pc.shape.tau_periods = cfg.tau_periods();
  pc.shape.class_value.resize(pc.data.classes.size());
  for (size_t c = 0; c < pc.data.classes.size(); ++c)
    pc.shape.class_value[c] = pc.data.feedstock_mean[pc.data.classes[c].feedstock];
  pc.rel = cfg.rel;
  pc.geom = cfg.geom;
  return pc;
}

BuildInputs PreparedCase::inputs() const {
  BuildInputs in;
  in.net = &data.net;
  in.classes = &data.classes;
  in.plan = &plan;
  in.class_labels = data.class_labels;
  in.rel = rel;
  in.geom = geom;
  return in;
}

// ---- metrics --------------------------------------------------------------

bool metrics_identity_ok(double time_hours, double rate, double flow,
                         double rel_tol) {
  if (!(flow > 0.0)) return false;
  return std::abs(rate * time_hours - flow) <= rel_tol * flow;
}

MetricsRow compute_metrics(const SolutionRecord& sol, const ProcessNetwork& net,
                           double dt_minutes) {
  MetricsRow row;
  int k = 0;
  for (int t = 1; t <= sol.horizon; ++t)
    if (sol.reactor_on[t - 1] > 0.5) ++k;
  if (k == 0) throw ValidationError("schedule has zero process time");

  std::vector<double> per_period(sol.horizon, 0.0);
  double flow = 0.0;
  for (int t = 1; t <= sol.horizon; ++t) {
    double s = 0.0;
    for (int c = 0; c < sol.n_classes; ++c) s += sol.reactor_inflow(net, c, t);
    per_period[t - 1] = s;
    flow += s;
  }
  if (!(flow > 0.0)) throw ValidationError("schedule delivers no mass");

  row.time_hours = k * dt_minutes / 60.0;
  row.flow = flow;
  row.rate = flow / row.time_hours;

  // Variability of the reactor feed: share of total flow per running period.
  double mean = 0.0;
  for (int t = 1; t <= sol.horizon; ++t)
    if (sol.reactor_on[t - 1] > 0.5) mean += per_period[t - 1] / flow;
  mean /= k;
  double var = 0.0;
  for (int t = 1; t <= sol.horizon; ++t)
    if (sol.reactor_on[t - 1] > 0.5) {
      const double d = per_period[t - 1] / flow - mean;
      var += d * d;
    }
  row.cov = std::sqrt(var / k);

  double inv_sum = 0.0, inv_max = 0.0;
  for (int t = 1; t <= sol.horizon; ++t) {
    double tot = 0.0;
    for (size_t i = 0; i < net.nodes.size(); ++i) {
      if (!is_bin(net.nodes[i].kind)) continue;
      for (int c = 0; c < sol.n_classes; ++c)
        tot += sol.inv(static_cast<int>(i), c, t);
    }
    if (sol.reactor_on[t - 1] > 0.5) inv_sum += tot;
    inv_max = std::max(inv_max, tot);
  }
  row.avg_inventory = inv_sum / k;
  row.max_inventory = inv_max;
  row.feasible_count = 1;
  row.total_count = 1;

  if (!metrics_identity_ok(row.time_hours, row.rate, row.flow))
    throw BackendError("metrics row fails the rate * time = flow identity");
  return row;
}

std::vector<double> delivery_factors(const ProcessNetwork& net, int n_classes) {
  const int n = static_cast<int>(net.nodes.size());
  const auto succ = net.successors();

  // Reverse-topological order via successor counts.
  std::vector<int> outdeg(n, 0), order;
  for (int i = 0; i < n; ++i) outdeg[i] = static_cast<int>(succ[i].size());
  std::vector<int> stack;
  for (int i = 0; i < n; ++i)
    if (outdeg[i] == 0) stack.push_back(i);
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    order.push_back(i);
    for (int p : net.preds[i])
      if (--outdeg[p] == 0) stack.push_back(p);
  }
  if (static_cast<int>(order.size()) != n)
    throw ValidationError("network is not acyclic");

  // g[i][c]: fraction of mass entering node i that reaches a reactor feeder.
  std::vector<double> g(static_cast<size_t>(n) * n_classes, 0.0);
  auto at = [&](int i, int c) -> double& { return g[static_cast<size_t>(i) * n_classes + c]; };
  for (int i : order) {
    const EquipmentNode& nd = net.nodes[i];
    for (int c = 0; c < n_classes; ++c) {
      if (nd.kind == NodeKind::ReactorFeeder) {
        at(i, c) = 1.0;
        continue;
      }
      if (succ[i].empty()) continue;
      double downstream = 0.0;
      if (nd.kind == NodeKind::Separator) {
        const double byp = c < static_cast<int>(nd.bypass.size()) ? nd.bypass[c] : 0.0;
        for (int s : succ[i]) {
          const BranchRole role = net.nodes[s].branch;
          const double share = role == BranchRole::Small ? byp : 1.0 - byp;
          downstream += share * at(s, c);
        }
      } else {
        // Flow may route to any successor; the factor is only defined when
        // every branch loses the same fraction downstream.
        downstream = at(succ[i][0], c);
        for (int s : succ[i])
          if (std::abs(at(s, c) - downstream) > 1e-12)
            throw BackendError("delivery factor at node '" + nd.id +
                               "' depends on the routing; branches disagree");
      }
      at(i, c) = (1.0 - nd.dry_matter_loss) * downstream;
    }
  }

  std::vector<double> out(n_classes, 0.0);
  for (int c = 0; c < n_classes; ++c) out[c] = at(net.infeed, c);
  return out;
}

double delivery_gap(const SolutionRecord& sol, const ProcessNetwork& net,
                    const std::vector<BaleClass>& classes) {
  const std::vector<double> factor =
      delivery_factors(net, static_cast<int>(classes.size()));
  double worst = 0.0;
  for (size_t c = 0; c < classes.size(); ++c) {
    double delivered = 0.0;
    for (int t = 1; t <= sol.horizon; ++t)
      delivered += sol.reactor_inflow(net, static_cast<int>(c), t);
    const double expected = classes[c].bale_mass * classes[c].bale_count * factor[c];
    worst = std::max(worst, std::abs(delivered - expected));
  }
  return worst;
}

// ---- solution record serialization ---------------------------------------

std::string solution_record_text(const SolutionRecord& sol) {
  std::ostringstream os;
  os << "horizon\t" << sol.horizon << "\n";
  os << "nodes\t" << sol.n_nodes << "\n";
  os << "classes\t" << sol.n_classes << "\n";
  os << "feed_rate\t" << format_double(sol.feed_rate) << "\n";
  os << "objective\t" << format_double(sol.objective) << "\n";
  os << "reactor_on";
  for (int t = 0; t < sol.horizon; ++t)
    os << "\t" << format_double(sol.reactor_on[t]);
  os << "\nwindow_flow";
  for (int t = 0; t < sol.horizon; ++t)
    os << "\t" << format_double(sol.window_flow[t]);
  os << "\n";
  auto sparse = [&](const char* tag, const std::vector<double>& a, bool with_node) {
    const int nc = sol.n_classes, T = sol.horizon;
    for (size_t idx = 0; idx < a.size(); ++idx) {
      if (a[idx] == 0.0) continue;
      const int t = static_cast<int>(idx % T) + 1;
      const int c = static_cast<int>(idx / T) % nc;
      os << tag;
      if (with_node) os << "\t" << static_cast<int>(idx / (static_cast<size_t>(nc) * T));
      os << "\t" << c << "\t" << t << "\t" << format_double(a[idx]) << "\n";
    }
  };
  sparse("flow", sol.flow, true);
  sparse("inv", sol.inventory, true);
  sparse("advance", sol.advance, false);
  sparse("active", sol.infeed_active, false);
  return os.str();
}

SolutionRecord parse_solution_record(const std::string& text) {
  SolutionRecord sol;
  int T = 0, n = 0, nc = 0;
  std::istringstream is(text);
  std::string line;
  bool sized = false;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, '\t');
    const std::string& tag = f[0];
    auto need = [&](size_t k) {
      if (f.size() != k)
        throw ValidationError("solution record line '" + tag + "' needs " +
                              std::to_string(k) + " fields");
    };
    if (tag == "horizon") { need(2); T = static_cast<int>(parse_long(f[1], tag)); }
    else if (tag == "nodes") { need(2); n = static_cast<int>(parse_long(f[1], tag)); }
    else if (tag == "classes") { need(2); nc = static_cast<int>(parse_long(f[1], tag)); }
    else if (tag == "feed_rate" || tag == "objective") {
      need(2);
      if (!sized) {
        if (T < 1 || n < 1 || nc < 1)
          throw ValidationError("solution record sizes must precede values");
        sol.resize(n, nc, T);
        sized = true;
      }
      (tag == "feed_rate" ? sol.feed_rate : sol.objective) = parse_double(f[1], tag);
    } else {
      if (!sized) {
        if (T < 1 || n < 1 || nc < 1)
          throw ValidationError("solution record sizes must precede values");
        sol.resize(n, nc, T);
        sized = true;
      }
      if (tag == "reactor_on" || tag == "window_flow") {
        need(static_cast<size_t>(T) + 1);
        auto& dst = tag == "reactor_on" ? sol.reactor_on : sol.window_flow;
        for (int t = 0; t < T; ++t) dst[t] = parse_double(f[t + 1], tag);
      } else if (tag == "flow" || tag == "inv") {
        need(5);
        const int i = static_cast<int>(parse_long(f[1], tag + " node"));
        const int c = static_cast<int>(parse_long(f[2], tag + " class"));
        const int t = static_cast<int>(parse_long(f[3], tag + " period"));
        (tag == "flow" ? sol.x(i, c, t) : sol.inv(i, c, t)) =
            parse_double(f[4], tag);
      } else if (tag == "advance" || tag == "active") {
        need(4);
        const int c = static_cast<int>(parse_long(f[1], tag + " class"));
        const int t = static_cast<int>(parse_long(f[2], tag + " period"));
        auto& dst = tag == "advance" ? sol.advance : sol.infeed_active;
        dst[static_cast<size_t>(c) * T + (t - 1)] = parse_double(f[3], tag);
      } else {
        throw ValidationError("solution record has unknown tag '" + tag + "'");
      }
    }
  }
  if (!sized) throw ValidationError("solution record is empty");
  return sol;
}

// ---- replications ---------------------------------------------------------

namespace {

SolveResult dispatch_solve(const MilpInstance& mi, const RunConfig& cfg) {
  if (cfg.backend.empty()) return solve(mi, cfg.penalty.request);
  if (cfg.backend == "oracle") return oracle_solve(mi);
  ExternalBackend be;
  be.command = cfg.backend;
  return solve_external(mi, be, cfg.penalty.request);
}

ReplicationResult run_replication(int j, const RunConfig& cfg,
                                  const PreparedCase& pc) {
  ReplicationResult res;
  res.index = j;
  const BuildInputs in = pc.inputs();

  if (cfg.variant == BlendVariant::ChanceSlack) {
    const SampleSet ss =
        sample(pc.data.dists, cfg.n_samples, mix_seed(cfg.seed, j + 1));
    const VariantSpec spec = variant_with_samples(pc.shape, ss, pc.data.classes);
    const PenaltySearchState st =
        solve_penalty(in, spec, cfg.gamma_hat, cfg.penalty);
    res.status = st.status;
    res.feasible = st.feasible;
    res.alpha = st.incumbent_alpha;
    res.violation_count = st.incumbent_count;
    res.objective = st.objective;
    if (st.feasible) {
      res.solution = st.solution;
      const ViolationReport vr =
          violation_rate(st.solution, pc.data.net, pc.data.classes, ss,
                         cfg.target, cfg.tau_periods());
      res.violation_rate = vr.per_sample_rate;
    } else if (st.status == SolveStatus::Optimal) {
      res.message = "no iterate kept enough samples within the blend target";
    }
  } else {
    MilpInstance mi = build_core(in);
    if (cfg.variant != BlendVariant::None) {
      VariantSpec spec = pc.shape;
      if (cfg.variant == BlendVariant::AllSamples) {
        const SampleSet ss =
            sample(pc.data.dists, cfg.n_samples, mix_seed(cfg.seed, j + 1));
        spec = variant_with_samples(pc.shape, ss, pc.data.classes);
      }
      add_blending(mi, in, spec);
    }
    const SolveResult sr = dispatch_solve(mi, cfg);
    res.status = sr.status;
    res.objective = sr.objective;
    res.feasible = sr.status == SolveStatus::Optimal && sr.has_solution;
    if (res.feasible)
      res.solution = extract_solution(mi, in, sr.values, sr.objective);
    if (!sr.message.empty()) res.message = sr.message;
  }

  if (res.feasible) {
    res.metrics = compute_metrics(res.solution, pc.data.net, cfg.dt_minutes);
    res.metrics.problem_id = cfg.problem_id;
    const double gap = delivery_gap(res.solution, pc.data.net, pc.data.classes);
    const double scale = std::max(1.0, res.metrics.flow);
    if (gap > kDeliveryTol * scale)
      throw BackendError("delivered mass drifts from the loss-weighted infeed "
                         "total by " + format_double(gap) + " Mg");
  }
  return res;
}

}  // namespace

RunReport run_experiment(const RunConfig& cfg) {
  const PreparedCase pc = prepare_case(cfg);
  const int m = cfg.m_replications;

  RunReport report;
  report.problem_id = cfg.problem_id;
  report.replications.resize(m);

  std::vector<std::string> errors(m);
#pragma omp parallel for num_threads(cfg.pool_size) schedule(static, 1)
  for (int j = 0; j < m; ++j) {
    try {
      report.replications[j] = run_replication(j, cfg, pc);
    } catch (const std::exception& e) {
      report.replications[j].index = j;
      report.replications[j].status = SolveStatus::Error;
      report.replications[j].feasible = false;
      errors[j] = e.what();
    }
  }
  for (int j = 0; j < m; ++j)
    if (!errors[j].empty()) report.replications[j].message = errors[j];

  MetricsRow& sum = report.summary;
  sum.problem_id = cfg.problem_id;
  sum.total_count = m;
  for (const ReplicationResult& r : report.replications) {
    if (r.status == SolveStatus::Error) report.any_error = true;
    if (!r.feasible) continue;
    report.any_feasible = true;
    ++sum.feasible_count;
    sum.time_hours += r.metrics.time_hours;
    sum.flow += r.metrics.flow;
    sum.avg_inventory += r.metrics.avg_inventory;
    sum.max_inventory += r.metrics.max_inventory;
    sum.cov += r.metrics.cov;
  }
  if (sum.feasible_count > 0) {
    const double k = sum.feasible_count;
    sum.time_hours /= k;
    sum.flow /= k;
    sum.avg_inventory /= k;
    sum.max_inventory /= k;
    sum.cov /= k;
    // The emitted rate keeps the row identity exact; averaging per-run rates
    // instead would let the identity drift across replications.
    sum.rate = sum.flow / sum.time_hours;
  }
  report.status = report.any_error      ? "partial"
                  : report.any_feasible ? "ok"
                                        : "infeasible";
  return report;
}

// ---- report files ---------------------------------------------------------

namespace {

std::string results_table(const RunReport& report) {
  std::ostringstream os;
  os << "problem\ttime_h\trate_mg_h\tflow_mg\tavg_inv_mg\tmax_inv_mg\tcov\tfeasible\n";
  const MetricsRow& s = report.summary;
  os << report.problem_id << "\t";
  if (s.feasible_count == 0) {
    os << "Infeasible\t-\t-\t-\t-\t-\t0/" << s.total_count << "\n";
  } else {
    os << fmt_fixed(s.time_hours, 2) << "\t" << fmt_fixed(s.rate, 2) << "\t"
       << fmt_fixed(s.flow, 2) << "\t" << fmt_fixed(s.avg_inventory, 2) << "\t"
       << fmt_fixed(s.max_inventory, 2) << "\t" << fmt_fixed(s.cov, 4) << "\t"
       << s.feasible_count << "/" << s.total_count << "\n";
  }
  return os.str();
}

std::string replications_table(const RunReport& report) {
  std::ostringstream os;
  os << "rep\tstatus\tfeasible\tobjective_periods\ttime_h\trate_mg_h\tflow_mg\t"
        "avg_inv_mg\tmax_inv_mg\tcov\talpha\tviolations\town_sample_rate\tmessage\n";
  for (const ReplicationResult& r : report.replications) {
    os << (r.index + 1) << "\t" << solve_status_name(r.status) << "\t"
       << (r.feasible ? "yes" : "no") << "\t";
    if (r.feasible) {
      os << format_double(r.objective) << "\t" << fmt_fixed(r.metrics.time_hours, 2)
         << "\t" << fmt_fixed(r.metrics.rate, 2) << "\t"
         << fmt_fixed(r.metrics.flow, 2) << "\t"
         << fmt_fixed(r.metrics.avg_inventory, 2) << "\t"
         << fmt_fixed(r.metrics.max_inventory, 2) << "\t"
         << fmt_fixed(r.metrics.cov, 4) << "\t" << format_double(r.alpha) << "\t"
         << r.violation_count << "\t" << fmt_fixed(r.violation_rate, 4);
    } else {
      os << "-\t-\t-\t-\t-\t-\t-\t-\t-\t-";
    }
    os << "\t" << (r.message.empty() ? "-" : r.message) << "\n";
  }
  return os.str();
}

std::string series_table(const RunReport& report, const ProcessNetwork& net) {
  std::ostringstream os;
  os << "rep\tt\treactor_flow";
  for (const EquipmentNode& nd : net.nodes)
    if (is_bin(nd.kind)) os << "\t" << nd.id;
  os << "\ttotal_inventory\n";
  for (const ReplicationResult& r : report.replications) {
    if (!r.feasible) continue;
    const SolutionRecord& sol = r.solution;
    for (int t = 1; t <= sol.horizon; ++t) {
      double rf = 0.0;
      for (int c = 0; c < sol.n_classes; ++c) rf += sol.reactor_inflow(net, c, t);
      os << (r.index + 1) << "\t" << t << "\t" << format_double(rf);
      double tot = 0.0;
      for (size_t i = 0; i < net.nodes.size(); ++i) {
        if (!is_bin(net.nodes[i].kind)) continue;
        double b = 0.0;
        for (int c = 0; c < sol.n_classes; ++c)
          b += sol.inv(static_cast<int>(i), c, t);
        os << "\t" << format_double(b);
        tot += b;
      }
      os << "\t" << format_double(tot) << "\n";
    }
  }
  return os.str();
}

std::string meta_table(const RunReport& report) {
  std::ostringstream os;
  os << "rep\tstatus\tfeasible\tobjective\talpha\tviolations\town_sample_rate\tmessage\n";
  for (const ReplicationResult& r : report.replications) {
    std::string msg = r.message;
    for (char& ch : msg)
      if (ch == '\t' || ch == '\n') ch = ' ';
    os << (r.index + 1) << "\t" << solve_status_name(r.status) << "\t"
       << (r.feasible ? "yes" : "no") << "\t" << format_double(r.objective) << "\t"
       << format_double(r.alpha) << "\t" << r.violation_count << "\t"
       << format_double(r.violation_rate) << "\t" << (msg.empty() ? "-" : msg)
       << "\n";
  }
  return os.str();
}

SolveStatus parse_status(const std::string& s) {
  for (SolveStatus st : {SolveStatus::Optimal, SolveStatus::Infeasible,
                         SolveStatus::Unbounded, SolveStatus::IterLimit,
                         SolveStatus::TimeLimit, SolveStatus::Error})
    if (s == solve_status_name(st)) return st;
  throw ValidationError("unknown solve status '" + s + "'");
}

}  // namespace

void write_report(const RunConfig& cfg, const RunReport& report) {
  if (cfg.output_dir.empty())
    throw ValidationError("config needs output_dir to write reports");
  const std::filesystem::path out = cfg.resolve_path(cfg.output_dir);
  std::filesystem::create_directories(out / "solutions");

  const CaseData data = ingest_case_data(cfg);
  write_file((out / "results.tsv").string(), results_table(report));
  write_file((out / "replications.tsv").string(), replications_table(report));
  write_file((out / "series.tsv").string(), series_table(report, data.net));
  write_file((out / "meta.tsv").string(), meta_table(report));
  for (const ReplicationResult& r : report.replications) {
    if (!r.feasible) continue;
    write_file((out / "solutions" / ("rep" + std::to_string(r.index + 1) + ".txt"))
                   .string(),
               solution_record_text(r.solution));
  }
}

RunReport recompute_report(const RunConfig& cfg) {
  const std::filesystem::path out = cfg.resolve_path(cfg.output_dir);
  const std::string meta_path = (out / "meta.tsv").string();
  const auto rows = read_tsv(meta_path);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "rep")
    throw ValidationError(meta_path + ": not a replication metadata table");

  const CaseData data = ingest_case_data(cfg);

  RunReport report;
  report.problem_id = cfg.problem_id;
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 8)
      throw ValidationError(meta_path + ": row " + std::to_string(r + 1) +
                            " needs 8 columns");
    ReplicationResult rep;
    rep.index = static_cast<int>(parse_long(row[0], "rep")) - 1;
    rep.status = parse_status(row[1]);
    rep.feasible = row[2] == "yes";
    rep.objective = parse_double(row[3], "objective");
    rep.alpha = parse_double(row[4], "alpha");
    rep.violation_count = static_cast<int>(parse_long(row[5], "violations"));
    rep.violation_rate = parse_double(row[6], "own_sample_rate");
    if (row[7] != "-") rep.message = row[7];
    if (rep.feasible) {
      const std::string spath =
          (out / "solutions" / ("rep" + std::to_string(rep.index + 1) + ".txt"))
              .string();
      rep.solution = parse_solution_record(read_file(spath));
      rep.metrics = compute_metrics(rep.solution, data.net, cfg.dt_minutes);
      rep.metrics.problem_id = cfg.problem_id;
    }
    report.replications.push_back(std::move(rep));
  }

  MetricsRow& sum = report.summary;
  sum.problem_id = cfg.problem_id;
  sum.total_count = static_cast<int>(report.replications.size());
  for (const ReplicationResult& r : report.replications) {
    if (r.status == SolveStatus::Error) report.any_error = true;
    if (!r.feasible) continue;
    report.any_feasible = true;
    ++sum.feasible_count;
    sum.time_hours += r.metrics.time_hours;
    sum.flow += r.metrics.flow;
    sum.avg_inventory += r.metrics.avg_inventory;
    sum.max_inventory += r.metrics.max_inventory;
    sum.cov += r.metrics.cov;
  }
  if (sum.feasible_count > 0) {
    const double k = sum.feasible_count;
    sum.time_hours /= k;
    sum.flow /= k;
    sum.avg_inventory /= k;
    sum.max_inventory /= k;
    sum.cov /= k;
    sum.rate = sum.flow / sum.time_hours;
  }
  report.status = report.any_error      ? "partial"
                  : report.any_feasible ? "ok"
                                        : "infeasible";
  return report;
}

// ---- bounds ---------------------------------------------------------------

BoundCertificate run_lower_bound(const RunConfig& cfg, const PreparedCase& pc) {
  const BuildInputs in = pc.inputs();
  SaaProblem prob;
  prob.build = &in;
  prob.dists = &pc.data.dists;
  prob.target = cfg.target;
  prob.tau_periods = cfg.tau_periods();
  return lower_bound(prob, cfg.gamma, cfg.gamma_hat, cfg.delta,
                     cfg.m_replications, cfg.seed, cfg.penalty);
}

BoundCertificate run_upper_bound(const RunConfig& cfg, const PreparedCase& pc) {
  const BuildInputs in = pc.inputs();
  SaaProblem prob;
  prob.build = &in;
  prob.dists = &pc.data.dists;
  prob.target = cfg.target;
  prob.tau_periods = cfg.tau_periods();
  return upper_bound(prob, cfg.gamma, cfg.gamma_hat, cfg.delta, cfg.n_samples,
                     cfg.n_posterior, cfg.m_replications, cfg.growth_step,
                     cfg.seed, cfg.penalty, cfg.max_outer);
}

std::string bound_certificate_text(const BoundCertificate& cert) {
  std::ostringstream os;
  os << "kind\t" << (cert.kind == BoundKind::Lower ? "lower" : "upper") << "\n";
  os << "gamma\t" << format_double(cert.gamma) << "\n";
  os << "gamma_hat\t" << format_double(cert.gamma_hat) << "\n";
  os << "delta\t" << format_double(cert.delta) << "\n";
  os << "n_samples\t" << cert.n_samples << "\n";
  os << "m_replications\t" << cert.m_replications << "\n";
  if (cert.kind == BoundKind::Upper) {
    os << "n_posterior\t" << cert.n_posterior << "\n";
    os << "outer_iterations\t" << cert.outer_iterations << "\n";
    os << "converged\t" << (cert.converged ? "yes" : "no") << "\n";
  }
  os << "value\t" << (cert.has_value ? format_double(cert.value) : "-") << "\n";
  os << "all_feasible\t" << (cert.all_feasible ? "yes" : "no") << "\n";
  os << "rep\tobjective\tfeasible";
  if (cert.kind == BoundKind::Upper) os << "\tposterior_mean\tposterior_upper";
  os << "\n";
  for (size_t j = 0; j < cert.objectives.size(); ++j) {
    os << (j + 1) << "\t" << format_double(cert.objectives[j]) << "\t"
       << (cert.feasible[j] ? "yes" : "no");
    if (cert.kind == BoundKind::Upper)
      os << "\t" << format_double(cert.posterior_mean[j]) << "\t"
         << format_double(cert.posterior_upper[j]);
    os << "\n";
  }
  return os.str();
}

}  // namespace bioproc

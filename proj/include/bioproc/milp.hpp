// Time-indexed MILP for pushing a bale sequence through the flow network:
// instance container, the core builder, and the carbohydrate-blending
// variants layered on top.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bioproc/core.hpp"

namespace bioproc {

enum class VarRole {
  Flow,          // X: node outflow per class per period
  Inventory,     // bin holdings per class per period
  Advance,       // infeed belt travel per class per period (m)
  InfeedActive,  // binary: class may enter the infeed conveyor
  ReactorOn,     // binary: reactor runs this period
  FeedRate,      // U: the single reactor feed-rate variable
  WindowFlow,    // W_t: linearized U * ReactorOn_t
  SlackPlus,     // blending surplus per sample/window
  SlackMinus,    // blending shortfall per sample/window (penalized)
  Other,
};

struct VarTag {
  VarRole role = VarRole::Other;
  int node = -1;
  int cls = -1;
  int t = -1;       // 1-based period
  int sample = -1;
  int window = -1;
};

enum class RowSense { LE, GE, EQ };

// Constraint families. Together with the bound-applied families recorded in
// the stats map these account for every restriction in the model.
enum class RowFamily {
  InfeedGate,     // infeed flow only while the class is active
  BinMassCap,     // bin mass capacity
  BinVolumeCap,   // bin volume capacity
  WindowExcl,     // other classes shut out during a scheduled bale
  BeltCouple,     // infeed flow limited by belt advance times linear density
  WholeBale,      // each class's full inventory is processed
  AdvanceLo,      // belt advance over a bale window covers the bale length
  AdvanceHi,      // ... and no more
  RunMonotone,    // reactor on-periods form a prefix
  GrindBalance,   // grinder outflow = (1 - loss) * inflow
  LargeBalance,   // oversize branch of a separator
  SmallBalance,   // bypass branch of a separator
  PassThrough,    // plain conservation on transport nodes
  BinBalance,     // bin inventory recursion
  ReactorCap,     // reactor intake at most the window flow
  MinRate,        // reactor intake at least q_min * window flow
  AvgRate,        // total intake at least q_avg * total window flow
  McCormickA,     // W >= U_lo * on
  McCormickB,     // W <= U_hi * on
  McCormickC,     // W >= U - U_hi * (1 - on)
  McCormickD,     // W <= U - U_lo * (1 - on)
  BlendSlack,     // per-sample window blend with +/- slack
  BlendDet,       // mean-value window blend, hard
  BlendHard,      // per-sample window blend, hard
  Plumbing,
};

const char* row_family_name(RowFamily f);

struct Variable {
  std::string name;
  double lb = 0.0;
  double ub = 0.0;
  bool binary = false;
  double obj = 0.0;
  VarTag tag;
};

struct Row {
  std::string name;
  RowSense sense = RowSense::LE;
  double rhs = 0.0;
  std::vector<std::pair<int, double>> terms;  // (var index, coefficient)
  RowFamily family = RowFamily::Plumbing;
};

enum class BlendVariant { None, Deterministic, AllSamples, ChanceSlack };

const char* blend_variant_name(BlendVariant v);
BlendVariant parse_blend_variant(const std::string&);

// Which blending layer to add and with what data. class_value carries the
// per-class mean carbohydrate fraction (Deterministic); sample_value carries
// one realization per sample per class (AllSamples / ChanceSlack).
struct VariantSpec {
  BlendVariant kind = BlendVariant::None;
  double target = 0.0;        // required blend fraction at the reactor
  int tau_periods = 0;        // window length in periods; 0 = one window over [1,T]
  std::vector<double> class_value;
  std::vector<std::vector<double>> sample_value;  // [sample][class]
  double penalty_weight = 1.0;                    // initial shortfall penalty
};

// Bookkeeping for the blending layer, kept for penalty updates and reports.
struct BlendInfo {
  BlendVariant kind = BlendVariant::None;
  double target = 0.0;
  std::vector<std::pair<int, int>> windows;  // inclusive 1-based [a,b]
  int n_samples = 0;
  std::vector<int> slack_minus;  // var ids, sample-major [n * W + w]
  std::vector<int> slack_plus;
};

struct MilpInstance {
  std::vector<Variable> vars;
  std::vector<Row> rows;
  double obj_constant = 0.0;
  std::optional<BlendInfo> blend;
  std::map<std::string, int> row_family_count;
  // Restrictions realized as variable bounds rather than rows, by family.
  std::map<std::string, int> bound_family_count;
  std::vector<std::string> warnings;

  int add_var(const std::string& name, double lb, double ub, bool binary,
              const VarTag& tag, double obj = 0.0);
  int add_row(const std::string& name, RowSense sense, double rhs, RowFamily family);
  void add_term(int row, int var, double coeff);  // merges duplicate vars

  int var_index(const std::string& name) const;  // -1 if absent
  std::vector<int> vars_with_role(VarRole role) const;

  int n_vars() const { return static_cast<int>(vars.size()); }
  int n_rows() const { return static_cast<int>(rows.size()); }
  int n_binary() const;
  size_t n_nonzeros() const;

  // Rescales the shortfall penalty; only valid after a ChanceSlack layer.
  void set_penalty_weight(double alpha);

  // One line per family: kind, name, count (tab separated).
  std::string stats_text() const;

 private:
  std::unordered_map<std::string, int> index_;
};

struct BuildInputs {
  const ProcessNetwork* net = nullptr;
  const std::vector<BaleClass>* classes = nullptr;
  const SequencePlan* plan = nullptr;
  std::vector<std::string> class_labels;  // short unique names used in ids
  ReliabilitySpec rel;
  BaleGeometry geom;
};

// Windows [(a1,b1),...] covering 1..horizon; tau_periods <= 0 yields the
// single window [1,horizon]. A trailing short window is kept (truncated) and
// flagged via the returned bool.
std::pair<std::vector<std::pair<int, int>>, bool> blend_windows(int horizon,
                                                                int tau_periods);

// Builds the scheduling model without blending: flow conservation, bin
// dynamics, sequence gating, reactor rate linearization, makespan objective.
MilpInstance build_core(const BuildInputs& in);

// Adds the chosen blending layer on top of a core instance.
void add_blending(MilpInstance& mi, const BuildInputs& in, const VariantSpec& variant);

// Dense view of a solved instance, mapped back to network terms.
SolutionRecord extract_solution(const MilpInstance& mi, const BuildInputs& in,
                                const std::vector<double>& values, double objective);

}  // namespace bioproc

#include "bioproc/sequencing.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "bioproc/common.hpp"

namespace bioproc {

std::vector<std::string> SequencePattern::flatten() const {
  std::vector<std::string> out;
  for (int r = 0; r < repeats; ++r)
    for (const auto& [label, count] : segments)
      for (int i = 0; i < count; ++i) out.push_back(label);
  for (const auto& l : leftovers) out.push_back(l);
  return out;
}

int SequencePattern::total() const {
  int per_pass = 0;
  for (const auto& [label, count] : segments) per_pass += count;
  return per_pass * repeats + static_cast<int>(leftovers.size());
}

std::string SequencePattern::text() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [label, count] : segments) {
    if (count == 0) continue;
    if (!first) os << '-';
    os << count << label;
    first = false;
  }
  if (repeats != 1) os << " x" << repeats;
  if (!leftovers.empty()) {
    os << " (+";
    // compress leftovers by label, preserving first-seen order
    std::vector<std::pair<std::string, int>> packed;
    for (const auto& l : leftovers) {
      bool found = false;
      for (auto& [label, count] : packed)
        if (label == l) {
          ++count;
          found = true;
        }
      if (!found) packed.emplace_back(l, 1);
    }
    for (size_t i = 0; i < packed.size(); ++i) {
      if (i) os << '-';
      os << packed[i].second << packed[i].first;
    }
    os << ')';
  }
  return os.str();
}

namespace {

int gcd_all(const std::vector<int>& v) {
  int g = 0;
  for (int x : v) g = std::gcd(g, x);
  return g;
}

// Shared pattern construction: divide by the gcd when one exists, else
// search reductions of up to two bales per reducible level for the
// largest divisor of what remains. Ties prefer fewer leftover bales,
// then the smallest reduction vector. Reduced bales are appended after
// the repetitions, level order preserved.
SequencePattern pattern_divide(const std::vector<int>& counts,
                               const std::vector<std::string>& labels,
                               const std::vector<bool>& reducible) {
  const size_t k = counts.size();
  for (size_t i = 0; i < k; ++i)
    if (counts[i] < 0)
      throw ValidationError("negative bale count for level " + labels[i]);
  int total = 0;
  for (int c : counts) total += c;
  if (total == 0) throw ValidationError("no bales to order");

  std::vector<int> best = counts;
  std::vector<int> best_red(k, 0);
  int best_g = gcd_all(counts);
  if (best_g == 1) {
    std::vector<int> red(k, 0);
    // enumerate reduction vectors in lexicographic order
    while (true) {
      size_t pos = k;
      while (pos > 0) {
        --pos;
        if (!reducible[pos] || red[pos] == 2 || counts[pos] - red[pos] - 1 < 0) {
          red[pos] = 0;
          continue;
        }
        ++red[pos];
        break;
      }
      if (pos == 0 && red[0] == 0) {
        bool all_zero = true;
        for (int r : red)
          if (r != 0) all_zero = false;
        if (all_zero) break;
      }
      std::vector<int> cand(k);
      int cand_total = 0;
      for (size_t i = 0; i < k; ++i) {
        cand[i] = counts[i] - red[i];
        cand_total += cand[i];
      }
      if (cand_total == 0) continue;
      int g = gcd_all(cand);
      int dropped = total - cand_total;
      int best_dropped = 0;
      for (int r : best_red) best_dropped += r;
      if (g > best_g || (g == best_g && dropped < best_dropped)) {
        best_g = g;
        best = cand;
        best_red = red;
      }
    }
  }

  SequencePattern p;
  p.repeats = best_g;
  for (size_t i = 0; i < k; ++i) {
    int per = best[i] / best_g;
    if (per > 0) p.segments.emplace_back(labels[i], per);
  }
  for (size_t i = 0; i < k; ++i)
    for (int r = 0; r < best_red[i]; ++r) p.leftovers.push_back(labels[i]);
  return p;
}

}  // namespace

SequencePattern rule1_moisture(int n_low, int n_mid, int n_high) {
  return pattern_divide({n_low, n_mid, n_high}, {"L", "M", "H"},
                        {true, true, true});
}

SequencePattern rule2_quality(int n_quality, int n_nonquality, std::string* warning) {
  if (warning) warning->clear();
  if (n_quality == 0 && n_nonquality > 0 && warning)
    *warning = "no quality bales in the inventory; the ordering cannot lift "
               "any blend window";
  return pattern_divide({n_quality, n_nonquality}, {"q", "nq"}, {false, true});
}

namespace {

struct LotState {
  int lot = -1;       // index into inv.lots
  int remaining = 0;
};

// smallest percentile among live quality lots / largest among live
// non-quality lots; -1 when the side is exhausted
int pick_quality(const std::vector<LotState>& side, const SequenceInventory& inv,
                 bool want_min) {
  int best = -1;
  for (size_t i = 0; i < side.size(); ++i) {
    if (side[i].remaining <= 0) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    double a = inv.lots[side[i].lot].carb_percentile;
    double b = inv.lots[side[best].lot].carb_percentile;
    if (want_min ? a < b : a > b) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

DistanceSequence rule3_distance(const SequenceInventory& inv) {
  DistanceSequence out;
  std::vector<LotState> qside, nqside;
  for (size_t i = 0; i < inv.lots.size(); ++i) {
    const FeedstockLot& lot = inv.lots[i];
    if (lot.bales < 0)
      throw ValidationError("negative bale count for feedstock " + lot.label);
    if (lot.bales == 0) continue;
    LotState st{static_cast<int>(i), lot.bales};
    if (lot.carb_percentile >= inv.target)
      qside.push_back(st);
    else
      nqside.push_back(st);
  }
  if (qside.empty() && nqside.empty())
    throw ValidationError("no bales to order");

  auto emit = [&](LotState& st, int count) {
    int c = std::min(count, st.remaining);
    if (c <= 0) return;
    st.remaining -= c;
    const int f = inv.lots[st.lot].feedstock;
    for (int i = 0; i < c; ++i) out.feedstock_order.push_back(f);
    out.steps.push_back({f, c});
  };

  while (true) {
    int qi = pick_quality(qside, inv, true);
    int ni = pick_quality(nqside, inv, false);
    if (qi < 0 || ni < 0) break;
    double d_up = inv.lots[qside[qi].lot].carb_percentile - inv.target;
    double d_down = inv.target - inv.lots[nqside[ni].lot].carb_percentile;
    if (d_up <= 1e-15 || d_down <= 1e-15) {
      // a lot sits exactly on the threshold: fall back to a 2:1 alternation
      out.degenerate = true;
      emit(qside[qi], 2);
      emit(nqside[ni], 1);
      continue;
    }
    if (d_up >= d_down) {
      emit(qside[qi], 2);
      emit(nqside[ni], static_cast<int>(std::floor(d_up / d_down + 1e-9)));
    } else {
      emit(qside[qi], static_cast<int>(std::ceil(d_down / d_up - 1e-9)) + 1);
      emit(nqside[ni], 1);
    }
  }
  // one side is exhausted: append what is left, input order
  for (auto* side : {&qside, &nqside})
    for (LotState& st : *side) emit(st, st.remaining);
  return out;
}

CombinedSequence rule4_combined(const SequenceInventory& inv) {
  if (inv.lots.empty()) throw ValidationError("no feedstock lots to order");
  const int n_lots = static_cast<int>(inv.lots.size());
  // remaining[lot][moisture]
  std::vector<std::array<int, 3>> remaining(n_lots, {0, 0, 0});
  int by_m[3] = {0, 0, 0};
  int n_q = 0, n_nq = 0;
  std::vector<bool> is_q(n_lots, false);
  for (int i = 0; i < n_lots; ++i) {
    const FeedstockLot& lot = inv.lots[i];
    if (lot.by_moisture.size() != 3)
      throw ValidationError("feedstock " + lot.label +
                            " needs a three-level moisture split");
    int s = 0;
    for (int m = 0; m < 3; ++m) {
      if (lot.by_moisture[m] < 0)
        throw ValidationError("negative moisture count for feedstock " + lot.label);
      remaining[i][m] = lot.by_moisture[m];
      by_m[m] += lot.by_moisture[m];
      s += lot.by_moisture[m];
    }
    if (lot.bales != 0 && lot.bales != s)
      throw ValidationError("feedstock " + lot.label + " lists " +
                            std::to_string(lot.bales) + " bales but the moisture "
                            "split sums to " + std::to_string(s));
    is_q[i] = lot.carb_percentile >= inv.target;
    (is_q[i] ? n_q : n_nq) += s;
  }

  CombinedSequence out;
  out.moisture_pattern = rule1_moisture(by_m[0], by_m[1], by_m[2]);
  std::string warn;
  out.quality_pattern = rule2_quality(n_q, n_nq, &warn);

  std::vector<std::string> m_labels = out.moisture_pattern.flatten();
  std::vector<std::string> q_labels = out.quality_pattern.flatten();
  const int total = static_cast<int>(m_labels.size());
  if (static_cast<int>(q_labels.size()) != total)
    throw ValidationError("moisture and quality label streams disagree on the "
                          "bale count");

  // label pair scheduled at each position
  std::vector<int> want_m(total), want_q(total);
  for (int k = 0; k < total; ++k) {
    want_m[k] = static_cast<int>(parse_moisture(m_labels[k]));
    want_q[k] = q_labels[k] == "q" ? 1 : 0;
  }

  // round-robin cursor per (quality, moisture) cell
  int cursor[2][3] = {{0, 0, 0}, {0, 0, 0}};
  auto take = [&](int q, int m) -> int {
    for (int step = 0; step < n_lots; ++step) {
      int i = (cursor[q][m] + step) % n_lots;
      if ((is_q[i] ? 1 : 0) == q && remaining[i][m] > 0) {
        cursor[q][m] = (i + 1) % n_lots;
        --remaining[i][m];
        return i;
      }
    }
    return -1;
  };
  auto available = [&](int q, int m) {
    for (int i = 0; i < n_lots; ++i)
      if ((is_q[i] ? 1 : 0) == q && remaining[i][m] > 0) return true;
    return false;
  };

  // The two streams fix only the marginals, so a joint cell can run dry
  // while others still hold stock. Such a position takes the bale the
  // nearest later servable position would have drawn; that position keeps
  // its own label and re-checks its cell when reached. When no later
  // position's cell has stock either (the surplus sits in cells whose
  // labels are all spent), the position draws from the first stocked cell
  // in a fixed scan order and the swap records donor position 0.
  for (int k = 0; k < total; ++k) {
    int use_m = want_m[k];
    int use_q = want_q[k];
    if (!available(use_q, use_m)) {
      int j = -1;
      for (int cand = k + 1; cand < total; ++cand)
        if (available(want_q[cand], want_m[cand])) {
          j = cand;
          break;
        }
      if (j >= 0) {
        use_m = want_m[j];
        use_q = want_q[j];
        out.swaps.push_back({k + 1, j + 1});
      } else {
        bool found = false;
        for (int q = 1; q >= 0 && !found; --q)
          for (int m = 0; m < 3 && !found; ++m)
            if (available(q, m)) {
              use_q = q;
              use_m = m;
              found = true;
            }
        if (!found)
          throw ValidationError("combined ordering stuck at position " +
                                std::to_string(k + 1) +
                                ": inventory exhausted early");
        out.swaps.push_back({k + 1, 0});
      }
    }
    int lot = take(use_q, use_m);
    out.order.push_back({inv.lots[lot].feedstock, static_cast<Moisture>(use_m)});
  }
  return out;
}

namespace {

std::vector<std::pair<int, std::string>> parse_terms(const std::string& spec,
                                                     const std::string& what) {
  std::string clean;
  for (char c : spec)
    if (c != '(' && c != ')') clean.push_back(c);
  std::vector<std::pair<int, std::string>> terms;
  for (const std::string& tok : split(clean, '-')) {
    std::string t = trim(tok);
    if (t.empty()) continue;
    size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    if (i == 0 || i == t.size())
      throw ValidationError(what + " term '" + t +
                            "' is not <count><label>");
    terms.emplace_back(static_cast<int>(parse_long(t.substr(0, i), what + " count")),
                       t.substr(i));
  }
  if (terms.empty()) throw ValidationError(what + " line is empty");
  return terms;
}

}  // namespace

std::vector<PlacedBale> load_literal_sequence(const std::string& text,
                                              const std::vector<FeedstockLot>& lots) {
  std::string pattern_spec, moisture_spec;
  for (const std::string& raw : split(text, '\n')) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (starts_with(line, "pattern")) {
      pattern_spec = trim(line.substr(7));
    } else if (starts_with(line, "moisture")) {
      moisture_spec = trim(line.substr(8));
    } else {
      throw ValidationError("unrecognized sequence line: " + line);
    }
  }
  if (pattern_spec.empty())
    throw ValidationError("sequence file has no pattern line");

  auto find_lot = [&](const std::string& label) -> int {
    for (size_t i = 0; i < lots.size(); ++i)
      if (lots[i].label == label) return static_cast<int>(i);
    return -1;
  };

  std::vector<PlacedBale> order;
  std::vector<int> used(lots.size(), 0);
  for (const auto& [count, label] : parse_terms(pattern_spec, "pattern")) {
    int li = find_lot(label);
    if (li < 0)
      throw ValidationError("pattern references unknown feedstock '" + label + "'");
    used[li] += count;
    for (int i = 0; i < count; ++i)
      order.push_back({lots[li].feedstock, Moisture::Medium});
  }

  if (!moisture_spec.empty()) {
    std::vector<Moisture> cycle;
    for (const auto& [count, label] : parse_terms(moisture_spec, "moisture"))
      for (int i = 0; i < count; ++i) cycle.push_back(parse_moisture(label));
    for (size_t k = 0; k < order.size(); ++k)
      order[k].moisture = cycle[k % cycle.size()];
  }

  std::vector<std::string> deltas;
  for (size_t i = 0; i < lots.size(); ++i) {
    if (lots[i].bales == 0) continue;
    if (used[i] != lots[i].bales)
      deltas.push_back("feedstock " + lots[i].label + ": sequence has " +
                       std::to_string(used[i]) + ", inventory has " +
                       std::to_string(lots[i].bales));
  }
  if (!deltas.empty()) {
    std::string msg = "sequence does not match the inventory";
    for (const auto& d : deltas) msg += "; " + d;
    throw ValidationError(msg);
  }
  return order;
}

std::vector<PlacedBale> random_sequence(const SequenceInventory& inv, uint64_t seed) {
  std::vector<PlacedBale> order;
  for (const FeedstockLot& lot : inv.lots) {
    if (lot.by_moisture.size() == 3) {
      for (int m = 0; m < 3; ++m)
        for (int i = 0; i < lot.by_moisture[m]; ++i)
          order.push_back({lot.feedstock, static_cast<Moisture>(m)});
    } else {
      for (int i = 0; i < lot.bales; ++i)
        order.push_back({lot.feedstock, Moisture::Medium});
    }
  }
  if (order.empty()) throw ValidationError("no bales to order");
  std::mt19937_64 rng(mix_seed(seed, 97));
  for (size_t i = order.size() - 1; i > 0; --i) {
    size_t j = static_cast<size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

std::string sequence_text(const std::vector<PlacedBale>& order,
                          const std::vector<FeedstockLot>& lots) {
  std::ostringstream os;
  auto label_of = [&](int feedstock) -> std::string {
    for (const FeedstockLot& lot : lots)
      if (lot.feedstock == feedstock) return lot.label;
    return std::to_string(feedstock);
  };
  for (size_t k = 0; k < order.size(); ++k)
    os << (k + 1) << '\t' << label_of(order[k].feedstock) << '\t'
       << moisture_name(order[k].moisture) << '\n';
  return os.str();
}

}  // namespace bioproc

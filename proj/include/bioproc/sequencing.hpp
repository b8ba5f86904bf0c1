// Bale ordering rules: moisture interleaving, quality interleaving, the
// distance-ratio ordering, the combined moisture/quality placement, plus
// literal and random sequence sources.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bioproc/core.hpp"

namespace bioproc {

// Repeating segment pattern such as 3L-5M-2H x8 with leftover labels
// appended after the last repetition.
struct SequencePattern {
  std::vector<std::pair<std::string, int>> segments;  // (label, count per pass)
  int repeats = 1;
  std::vector<std::string> leftovers;

  std::vector<std::string> flatten() const;
  std::string text() const;  // "3L-5M-2H x8 (+1L-1M)"
  int total() const;
};

// Inventory handed to the ordering rules. Moisture totals drive the
// moisture rule; the per-feedstock table drives the quality and distance
// rules. by_moisture is indexed by the Moisture enum.
struct FeedstockLot {
  int feedstock = -1;
  std::string label;
  double carb_percentile = 0.0;  // carbohydrate fraction at the chosen percentile
  int bales = 0;
  std::vector<int> by_moisture;  // empty or size 3
};

struct SequenceInventory {
  int n_low = 0, n_mid = 0, n_high = 0;
  std::vector<FeedstockLot> lots;
  double target = 0.0;  // carbohydrate threshold separating quality lots
};

// Largest-pattern moisture interleave: divides the three counts by their
// gcd; when coprime, searches reductions of up to two bales per level for
// the largest divisor, preferring fewer leftovers on ties. Reduced bales
// are appended after the repeated pattern in L, M, H order.
SequencePattern rule1_moisture(int n_low, int n_mid, int n_high);

// Same construction over quality / non-quality counts, but only the
// non-quality count may be reduced. A missing quality class is allowed
// and reported through the warning.
SequencePattern rule2_quality(int n_quality, int n_nonquality, std::string* warning);

struct DistanceStep {
  int feedstock = -1;
  int count = 0;
};

struct DistanceSequence {
  std::vector<int> feedstock_order;  // one entry per bale
  std::vector<DistanceStep> steps;   // emission trace including remainders
  bool degenerate = false;           // a distance collapsed to zero
};

// Distance-ratio ordering: repeatedly emits a fixed lead of quality bales
// followed by a proportional run of non-quality bales, where the
// proportion is the ratio of the quality surplus to the quality deficit
// at the configured percentile. Exhausted lots drop out and the
// distances are recomputed; once either side empties the remainder is
// appended unchanged.
DistanceSequence rule3_distance(const SequenceInventory& inv);

struct PlacedBale {
  int feedstock = -1;
  Moisture moisture = Moisture::Medium;
};

struct SwapRecord {
  int position = 0;       // 1-based position that could not be served
  int borrowed_from = 0;  // later position whose labels were taken;
                          // 0 = drawn from leftover stock, no donor position
};

struct CombinedSequence {
  std::vector<PlacedBale> order;
  SequencePattern moisture_pattern;
  SequencePattern quality_pattern;
  std::vector<SwapRecord> swaps;
};

// Combined placement: position k draws its moisture label from the
// moisture pattern and its quality label from the quality pattern, both
// cycled; feedstocks inside a (moisture, quality) cell rotate. When a
// cell is empty the position takes the labels of the nearest later
// position that can still be served, and the trade is recorded. If no
// later position is servable either, the position draws from the first
// stocked cell (quality side first, moisture L/M/H) and the record's
// borrowed_from is 0.
CombinedSequence rule4_combined(const SequenceInventory& inv);

// Parses a literal sequence file: a `pattern` line of dash-separated
// <count><feedstock-label> terms (parentheses allowed as grouping sugar)
// and an optional `moisture` line cycled across all positions. Expected
// totals, when given, are checked per feedstock.
std::vector<PlacedBale> load_literal_sequence(const std::string& text,
                                              const std::vector<FeedstockLot>& lots);

// Seeded uniform shuffle of the full inventory.
std::vector<PlacedBale> random_sequence(const SequenceInventory& inv, uint64_t seed);

// One line per bale: position, feedstock label, moisture letter.
std::string sequence_text(const std::vector<PlacedBale>& order,
                          const std::vector<FeedstockLot>& lots);

}  // namespace bioproc

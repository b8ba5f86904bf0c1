// Text round-trip for model instances (industry LP format) and a small
// name/value solution file format shared with external solver adapters.
#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "bioproc/milp.hpp"

namespace bioproc {

// Deterministic LP-format serialization: terms and bound lines appear in
// sorted variable-name order so identical instances yield identical bytes.
std::string export_lp_text(const MilpInstance& mi);

// Parses LP-format text (sections, wrapped constraint lines, inline
// comments). Row families are recovered from row-name prefixes; variable
// tags are not reconstructed.
MilpInstance parse_lp_text(const std::string& text);

// Structural comparison by names: same variables (bounds, integrality,
// objective) and same rows (sense, rhs, terms). Order-insensitive. When
// diff is non-null the first difference found is described there.
bool instances_structurally_equal(const MilpInstance& a, const MilpInstance& b,
                                  std::string* diff = nullptr, double tol = 0.0);

struct ParsedSolution {
  std::string status;  // lowercase: optimal / infeasible / unknown ...
  double objective = 0.0;
  bool has_objective = false;
  std::unordered_map<std::string, double> values;
};

std::string write_solution_text(const std::string& status, double objective,
                                const MilpInstance& mi,
                                const std::vector<double>& values);

// Tolerant reader: '#' comments, blank lines, "status S" / "objective V"
// headers, then "name value" pairs in any order.
ParsedSolution parse_solution_text(const std::string& text);

}  // namespace bioproc

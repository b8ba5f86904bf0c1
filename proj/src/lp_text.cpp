#include "bioproc/lp_text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace bioproc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void append_terms(std::ostringstream& os, const MilpInstance& mi,
                  const std::vector<std::pair<int, double>>& terms, double constant) {
  // Sort by variable name for byte-stable output.
  std::vector<std::pair<std::string, double>> named;
  named.reserve(terms.size());
  for (const auto& [id, c] : terms) named.emplace_back(mi.vars[id].name, c);
  std::sort(named.begin(), named.end());
  bool first = true;
  for (const auto& [name, c] : named) {
    if (first) {
      if (c < 0) os << "- ";
      first = false;
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    os << format_double(std::fabs(c)) << " " << name;
  }
  if (constant != 0.0) {
    if (first)
      os << format_double(constant);
    else
      os << (constant < 0 ? " - " : " + ") << format_double(std::fabs(constant));
  } else if (first) {
    os << "0";
  }
}

const char* sense_text(RowSense s) {
  switch (s) {
    case RowSense::LE: return "<=";
    case RowSense::GE: return ">=";
    case RowSense::EQ: return "=";
  }
  return "?";
}

RowFamily family_from_name(const std::string& name) {
  static const std::pair<const char*, RowFamily> table[] = {
      {"infeed_gate_", RowFamily::InfeedGate},
      {"bin_mass_", RowFamily::BinMassCap},
      {"bin_vol_", RowFamily::BinVolumeCap},
      {"window_excl_", RowFamily::WindowExcl},
      {"belt_couple_", RowFamily::BeltCouple},
      {"whole_bale_", RowFamily::WholeBale},
      {"advance_lo_", RowFamily::AdvanceLo},
      {"advance_hi_", RowFamily::AdvanceHi},
      {"run_monotone_", RowFamily::RunMonotone},
      {"grind_balance_", RowFamily::GrindBalance},
      {"large_balance_", RowFamily::LargeBalance},
      {"small_balance_", RowFamily::SmallBalance},
      {"pass_through_", RowFamily::PassThrough},
      {"bin_balance_", RowFamily::BinBalance},
      {"reactor_cap_", RowFamily::ReactorCap},
      {"min_rate_", RowFamily::MinRate},
      {"mcc_a_", RowFamily::McCormickA},
      {"mcc_b_", RowFamily::McCormickB},
      {"mcc_c_", RowFamily::McCormickC},
      {"mcc_d_", RowFamily::McCormickD},
      {"blend_slack_", RowFamily::BlendSlack},
      {"blend_det_", RowFamily::BlendDet},
      {"blend_hard_", RowFamily::BlendHard},
  };
  if (name == "avg_rate") return RowFamily::AvgRate;
  for (const auto& [prefix, fam] : table)
    if (starts_with(name, prefix)) return fam;
  return RowFamily::Plumbing;
}

}  // namespace

std::string export_lp_text(const MilpInstance& mi) {
  std::ostringstream os;
  os << "\\ flow-network schedule model\n";
  os << "Minimize\n obj: ";
  {
    std::vector<std::pair<int, double>> obj;
    for (int i = 0; i < mi.n_vars(); ++i)
      if (mi.vars[i].obj != 0.0) obj.emplace_back(i, mi.vars[i].obj);
    append_terms(os, mi, obj, mi.obj_constant);
  }
  os << "\nSubject To\n";
  for (const Row& r : mi.rows) {
    os << " " << r.name << ": ";
    append_terms(os, mi, r.terms, 0.0);
    os << " " << sense_text(r.sense) << " " << format_double(r.rhs) << "\n";
  }

  std::vector<int> order(mi.n_vars());
  for (int i = 0; i < mi.n_vars(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return mi.vars[a].name < mi.vars[b].name;
  });

  os << "Bounds\n";
  for (int id : order) {
    const Variable& v = mi.vars[id];
    if (v.binary && v.lb == 0.0 && v.ub == 1.0) continue;  // implicit
    if (v.lb == 0.0 && v.ub == kInf) continue;             // LP default
    if (v.lb == v.ub) {
      os << " " << v.name << " = " << format_double(v.lb) << "\n";
    } else if (v.lb == -kInf && v.ub == kInf) {
      os << " " << v.name << " free\n";
    } else if (v.lb == 0.0) {
      os << " " << v.name << " <= " << format_double(v.ub) << "\n";
    } else if (v.ub == kInf) {
      os << " " << v.name << " >= " << format_double(v.lb) << "\n";
    } else {
      os << " " << format_double(v.lb) << " <= " << v.name << " <= "
         << format_double(v.ub) << "\n";
    }
  }

  bool any_bin = false;
  for (const Variable& v : mi.vars)
    if (v.binary) { any_bin = true; break; }
  if (any_bin) {
    os << "Binaries\n";
    for (int id : order)
      if (mi.vars[id].binary) os << " " << mi.vars[id].name << "\n";
  }
  os << "End\n";
  return os.str();
}

namespace {

enum class Section { None, Objective, Rows, Bounds, Binaries, Generals, End };

struct Tok {
  enum Kind { Name, Number, Plus, Minus, Le, Ge, Eq, Colon } kind;
  std::string text;
  double value = 0.0;
};

bool is_number_start(char c) {
  return (c >= '0' && c <= '9') || c == '.';
}

// Splits one content line into tokens. "3x" splits into 3 and x.
std::vector<Tok> tokenize(const std::string& line, int lineno) {
  std::vector<Tok> out;
  size_t i = 0;
  const size_t n = line.size();
  auto err = [&](const std::string& m) {
    throw ValidationError("LP parse error (line " + std::to_string(lineno) + "): " + m);
  };
  while (i < n) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
    if (c == '+') { out.push_back({Tok::Plus, "+"}); ++i; continue; }
    if (c == '-') { out.push_back({Tok::Minus, "-"}); ++i; continue; }
    if (c == ':') { out.push_back({Tok::Colon, ":"}); ++i; continue; }
    if (c == '<' || c == '>' || c == '=') {
      size_t j = i + 1;
      if (j < n && line[j] == '=') ++j;
      out.push_back({c == '<' ? Tok::Le : (c == '>' ? Tok::Ge : Tok::Eq),
                     line.substr(i, j - i)});
      i = j;
      continue;
    }
    if (is_number_start(c)) {
      const char* start = line.c_str() + i;
      char* end = nullptr;
      double v = std::strtod(start, &end);
      if (end == start) err("bad number");
      Tok t{Tok::Number, std::string(start, static_cast<const char*>(end)), v};
      out.push_back(t);
      i += static_cast<size_t>(end - start);
      continue;
    }
    // Name token: up to whitespace or operator character.
    size_t j = i;
    while (j < n) {
      const char d = line[j];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '+' || d == '-' ||
          d == '<' || d == '>' || d == '=' || d == ':')
        break;
      ++j;
    }
    if (j == i) err(std::string("unexpected character '") + c + "'");
    out.push_back({Tok::Name, line.substr(i, j - i)});
    i = j;
  }
  return out;
}

Section section_of(const std::string& raw) {
  const std::string t = lower(trim(raw));
  if (t == "minimize" || t == "minimise" || t == "min") return Section::Objective;
  if (t == "maximize" || t == "maximise" || t == "max")
    throw ValidationError("LP parse error: maximization not supported");
  if (t == "subject to" || t == "such that" || t == "st" || t == "s.t.")
    return Section::Rows;
  if (t == "bounds" || t == "bound") return Section::Bounds;
  if (t == "binaries" || t == "binary" || t == "bin") return Section::Binaries;
  if (t == "generals" || t == "general" || t == "gen") return Section::Generals;
  if (t == "end") return Section::End;
  return Section::None;
}

struct VarBuild {
  double lb = 0.0, ub = kInf;
  bool lb_set = false, ub_set = false;
  bool binary = false;
  double obj = 0.0;
  int order = -1;
};

}  // namespace

MilpInstance parse_lp_text(const std::string& text) {
  // Pass 1: strip comments, classify lines into sections.
  std::vector<std::pair<Section, std::vector<std::pair<int, std::string>>>> parts;
  Section cur = Section::None;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto ensure_part = [&](Section s) {
    if (parts.empty() || parts.back().first != s) parts.push_back({s, {}});
  };
  while (std::getline(in, line)) {
    ++lineno;
    const size_t slash = line.find('\\');
    if (slash != std::string::npos) line.erase(slash);
    if (trim(line).empty()) continue;
    const Section s = section_of(line);
    if (s != Section::None) {
      cur = s;
      if (s == Section::End) break;
      ensure_part(s);
      continue;
    }
    if (cur == Section::None)
      throw ValidationError("LP parse error (line " + std::to_string(lineno) +
                            "): content before the objective section");
    ensure_part(cur);
    parts.back().second.emplace_back(lineno, line);
  }

  std::unordered_map<std::string, VarBuild> vars;
  int next_order = 0;
  auto touch = [&](const std::string& name) -> VarBuild& {
    auto [it, inserted] = vars.try_emplace(name);
    if (inserted) it->second.order = next_order++;
    return it->second;
  };

  struct PRow {
    std::string name;
    RowSense sense;
    double rhs;
    std::vector<std::pair<std::string, double>> terms;
  };
  std::vector<PRow> prows;
  double obj_constant = 0.0;

  // Linear expression parser over a token stream; returns at sense or end.
  auto parse_expr = [&](const std::vector<Tok>& toks, size_t& i,
                        std::vector<std::pair<std::string, double>>& terms,
                        double& constant, int lineno2) {
    double sign = 1.0;
    bool have_coeff = false;
    double coeff = 1.0;
    auto err = [&](const std::string& m) {
      throw ValidationError("LP parse error (line " + std::to_string(lineno2) + "): " + m);
    };
    while (i < toks.size()) {
      const Tok& t = toks[i];
      if (t.kind == Tok::Le || t.kind == Tok::Ge || t.kind == Tok::Eq) break;
      if (t.kind == Tok::Plus || t.kind == Tok::Minus) {
        if (have_coeff) {  // dangling number becomes a constant term
          constant += sign * coeff;
          have_coeff = false;
        }
        sign = (t.kind == Tok::Minus) ? -sign : sign;
        ++i;
        continue;
      }
      if (t.kind == Tok::Number) {
        if (have_coeff) err("two numbers in a row");
        coeff = t.value;
        have_coeff = true;
        ++i;
        continue;
      }
      if (t.kind == Tok::Name) {
        terms.emplace_back(t.text, sign * (have_coeff ? coeff : 1.0));
        touch(t.text);
        sign = 1.0;
        coeff = 1.0;
        have_coeff = false;
        ++i;
        continue;
      }
      err("unexpected token '" + t.text + "'");
    }
    if (have_coeff) constant += sign * coeff;
  };

  for (const auto& [sect, lines] : parts) {
    if (sect == Section::Objective || sect == Section::Rows) {
      // Join the section into one token stream; rows end at sense+rhs.
      std::vector<Tok> toks;
      int first_line = lines.empty() ? 0 : lines.front().first;
      for (const auto& [ln, l] : lines) {
        auto t = tokenize(l, ln);
        toks.insert(toks.end(), t.begin(), t.end());
      }
      size_t i = 0;
      if (sect == Section::Objective) {
        if (i + 1 < toks.size() && toks[i].kind == Tok::Name &&
            toks[i + 1].kind == Tok::Colon)
          i += 2;
        std::vector<std::pair<std::string, double>> terms;
        parse_expr(toks, i, terms, obj_constant, first_line);
        if (i != toks.size())
          throw ValidationError("LP parse error: trailing tokens in the objective");
        for (const auto& [name, c] : terms) touch(name).obj += c;
      } else {
        int anon = 0;
        while (i < toks.size()) {
          PRow row;
          if (i + 1 < toks.size() && toks[i].kind == Tok::Name &&
              toks[i + 1].kind == Tok::Colon) {
            row.name = toks[i].text;
            i += 2;
          } else {
            row.name = "r" + std::to_string(++anon);
          }
          double cst = 0.0;
          parse_expr(toks, i, row.terms, cst, first_line);
          if (i >= toks.size())
            throw ValidationError("LP parse error: constraint '" + row.name +
                                  "' has no comparison");
          const Tok::Kind k = toks[i].kind;
          row.sense = (k == Tok::Le) ? RowSense::LE
                                     : (k == Tok::Ge ? RowSense::GE : RowSense::EQ);
          ++i;
          if (i >= toks.size())
            throw ValidationError("LP parse error: constraint '" + row.name +
                                  "' missing right-hand side");
          double sign = 1.0;
          while (i < toks.size() &&
                 (toks[i].kind == Tok::Plus || toks[i].kind == Tok::Minus)) {
            if (toks[i].kind == Tok::Minus) sign = -sign;
            ++i;
          }
          double rhs;
          if (i < toks.size() && toks[i].kind == Tok::Number) {
            rhs = sign * toks[i].value;
            ++i;
          } else if (i < toks.size() && toks[i].kind == Tok::Name &&
                     (lower(toks[i].text) == "inf" || lower(toks[i].text) == "infinity")) {
            rhs = sign * kInf;
            ++i;
          } else {
            throw ValidationError("LP parse error: constraint '" + row.name +
                                  "' missing numeric right-hand side");
          }
          row.rhs = rhs - cst;
          prows.push_back(std::move(row));
        }
      }
    } else if (sect == Section::Bounds) {
      for (const auto& [ln, l] : lines) {
        auto toks = tokenize(l, ln);
        auto err = [&, ln2 = ln](const std::string& m) {
          throw ValidationError("LP parse error (line " + std::to_string(ln2) +
                                "): " + m);
        };
        // Forms: v free | v = c | v <= c | v >= c | a <= v | a <= v <= b
        auto read_value = [&](size_t& i, double& out) -> bool {
          double sign = 1.0;
          size_t j = i;
          while (j < toks.size() &&
                 (toks[j].kind == Tok::Plus || toks[j].kind == Tok::Minus)) {
            if (toks[j].kind == Tok::Minus) sign = -sign;
            ++j;
          }
          if (j < toks.size() && toks[j].kind == Tok::Number) {
            out = sign * toks[j].value;
            i = j + 1;
            return true;
          }
          if (j < toks.size() && toks[j].kind == Tok::Name) {
            const std::string w = lower(toks[j].text);
            if (w == "inf" || w == "infinity") {
              out = sign * kInf;
              i = j + 1;
              return true;
            }
          }
          return false;
        };
        size_t i = 0;
        double a = 0.0;
        if (read_value(i, a)) {
          if (i >= toks.size() || (toks[i].kind != Tok::Le && toks[i].kind != Tok::Ge))
            err("expected comparison after number");
          const bool le = toks[i].kind == Tok::Le;
          ++i;
          if (i >= toks.size() || toks[i].kind != Tok::Name) err("expected variable");
          VarBuild& v = touch(toks[i].text);
          ++i;
          if (le) { v.lb = a; v.lb_set = true; }
          else    { v.ub = a; v.ub_set = true; }
          if (i < toks.size()) {
            if (toks[i].kind != (le ? Tok::Le : Tok::Ge)) err("mixed bound directions");
            ++i;
            double b = 0.0;
            if (!read_value(i, b)) err("expected bound value");
            if (le) { v.ub = b; v.ub_set = true; }
            else    { v.lb = b; v.lb_set = true; }
          }
          if (i != toks.size()) err("trailing tokens in bound");
          continue;
        }
        if (toks.empty() || toks[0].kind != Tok::Name) err("expected variable");
        VarBuild& v = touch(toks[0].text);
        i = 1;
        if (i < toks.size() && toks[i].kind == Tok::Name &&
            lower(toks[i].text) == "free") {
          v.lb = -kInf;
          v.ub = kInf;
          v.lb_set = v.ub_set = true;
          ++i;
        } else if (i < toks.size()) {
          const Tok::Kind k = toks[i].kind;
          if (k != Tok::Le && k != Tok::Ge && k != Tok::Eq) err("expected comparison");
          ++i;
          double b = 0.0;
          if (!read_value(i, b)) err("expected bound value");
          if (k == Tok::Le) { v.ub = b; v.ub_set = true; }
          else if (k == Tok::Ge) { v.lb = b; v.lb_set = true; }
          else { v.lb = v.ub = b; v.lb_set = v.ub_set = true; }
        } else {
          err("incomplete bound line");
        }
        if (i != toks.size()) err("trailing tokens in bound");
      }
    } else if (sect == Section::Binaries || sect == Section::Generals) {
      for (const auto& [ln, l] : lines) {
        for (const Tok& t : tokenize(l, ln)) {
          if (t.kind != Tok::Name)
            throw ValidationError("LP parse error (line " + std::to_string(ln) +
                                  "): expected variable names");
          VarBuild& v = touch(t.text);
          if (sect == Section::Generals && (v.lb_set || v.ub_set) &&
              !(v.lb >= 0.0 && v.ub <= 1.0))
            throw ValidationError("general integer variables beyond {0,1} unsupported");
          v.binary = true;
        }
      }
    }
  }

  // Materialize, preserving first-appearance order.
  MilpInstance mi;
  mi.obj_constant = obj_constant;
  std::vector<std::pair<int, std::string>> order;
  order.reserve(vars.size());
  for (const auto& [name, v] : vars) order.emplace_back(v.order, name);
  std::sort(order.begin(), order.end());
  for (const auto& [ord, name] : order) {
    const VarBuild& v = vars[name];
    double lb = v.lb, ub = v.ub;
    if (v.binary && !v.lb_set) lb = 0.0;
    if (v.binary && !v.ub_set) ub = 1.0;
    VarTag tag;  // roles are not reconstructed from text
    mi.add_var(name, lb, ub, v.binary, tag, v.obj);
  }
  for (const PRow& pr : prows) {
    int r = mi.add_row(pr.name, pr.sense, pr.rhs, family_from_name(pr.name));
    for (const auto& [name, c] : pr.terms) mi.add_term(r, mi.var_index(name), c);
  }
  return mi;
}

bool instances_structurally_equal(const MilpInstance& a, const MilpInstance& b,
                                  std::string* diff, double tol) {
  auto fail = [&](const std::string& m) {
    if (diff) *diff = m;
    return false;
  };
  auto close = [&](double x, double y) {
    if (x == y) return true;  // covers infinities
    return std::fabs(x - y) <= tol;
  };
  if (a.n_vars() != b.n_vars())
    return fail("variable counts differ: " + std::to_string(a.n_vars()) + " vs " +
                std::to_string(b.n_vars()));
  for (const Variable& va : a.vars) {
    const int j = b.var_index(va.name);
    if (j < 0) return fail("variable '" + va.name + "' missing from second instance");
    const Variable& vb = b.vars[j];
    if (va.binary != vb.binary) return fail("integrality differs for '" + va.name + "'");
    if (!close(va.lb, vb.lb) || !close(va.ub, vb.ub))
      return fail("bounds differ for '" + va.name + "'");
    if (!close(va.obj, vb.obj))
      return fail("objective coefficient differs for '" + va.name + "'");
  }
  if (!close(a.obj_constant, b.obj_constant)) return fail("objective constants differ");
  if (a.n_rows() != b.n_rows())
    return fail("row counts differ: " + std::to_string(a.n_rows()) + " vs " +
                std::to_string(b.n_rows()));
  std::unordered_map<std::string, int> brow;
  for (int i = 0; i < b.n_rows(); ++i) brow[b.rows[i].name] = i;
  for (const Row& ra : a.rows) {
    auto it = brow.find(ra.name);
    if (it == brow.end()) return fail("row '" + ra.name + "' missing from second instance");
    const Row& rb = b.rows[it->second];
    if (ra.sense != rb.sense) return fail("sense differs for row '" + ra.name + "'");
    if (!close(ra.rhs, rb.rhs)) return fail("rhs differs for row '" + ra.name + "'");
    auto named = [](const MilpInstance& mi, const Row& r) {
      std::vector<std::pair<std::string, double>> v;
      for (const auto& [id, c] : r.terms) v.emplace_back(mi.vars[id].name, c);
      std::sort(v.begin(), v.end());
      return v;
    };
    const auto ta = named(a, ra);
    const auto tb = named(b, rb);
    if (ta.size() != tb.size())
      return fail("term counts differ for row '" + ra.name + "'");
    for (size_t k = 0; k < ta.size(); ++k) {
      if (ta[k].first != tb[k].first)
        return fail("row '" + ra.name + "' references different variables");
      if (!close(ta[k].second, tb[k].second))
        return fail("coefficient differs in row '" + ra.name + "' for '" +
                    ta[k].first + "'");
    }
  }
  return true;
}

std::string write_solution_text(const std::string& status, double objective,
                                const MilpInstance& mi,
                                const std::vector<double>& values) {
  std::ostringstream os;
  os << "# solution file\n";
  os << "status " << status << "\n";
  os << "objective " << format_double(objective) << "\n";
  for (size_t i = 0; i < values.size() && i < mi.vars.size(); ++i)
    os << mi.vars[i].name << " " << format_double(values[i]) << "\n";
  return os.str();
}

ParsedSolution parse_solution_text(const std::string& text) {
  ParsedSolution out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ls(t);
    std::string key, val;
    ls >> key >> val;
    if (key.empty() || val.empty())
      throw ValidationError("solution parse error (line " + std::to_string(lineno) +
                            "): expected 'name value'");
    const std::string lk = lower(key);
    if (lk == "status") {
      out.status = lower(val);
    } else if (lk == "objective" || lk == "objectivevalue" || lk == "obj") {
      out.objective = parse_double(val, "objective");
      out.has_objective = true;
    } else {
      out.values[key] = parse_double(val, "value of " + key);
    }
  }
  return out;
}

}  // namespace bioproc

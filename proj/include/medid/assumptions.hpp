#pragma once

#include "medid/estimand.hpp"
#include "medid/ident.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace medid {

enum class Family { Consistency, Independence, Positivity };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::Consistency: return "consistency";
    case Family::Independence: return "independence";
    case Family::Positivity: return "positivity";
  }
  return "?";
}

/// A mediator value in a statement: a concrete label, or the arm's range symbol.
struct MedValue {
  bool symbolic = true;
  std::string label;
  bool operator==(const MedValue&) const = default;
};

/// Y = Y_a if A=a; Y = Y_{am} if A=a, M=m.
struct OutcomeConsistency {
  int a;
  std::optional<MedValue> m;
  bool operator==(const OutcomeConsistency&) const = default;
};
/// Y_{aM_{a'}} = Y_{am} if M_{a'} = m.
struct CrossWorldConsistency {
  int a, a_prime;
  bool operator==(const CrossWorldConsistency&) const = default;
};
/// Y_a = Y_{aM_a}; needed only to read natural effects as a decomposition.
struct CompositionConsistency {
  int a;
  bool operator==(const CompositionConsistency&) const = default;
};
/// M = M_{a*} if A = a*.
struct MediatorConsistency {
  int a_star;
  bool operator==(const MediatorConsistency&) const = default;
};
/// L = L_a if A = a.
struct IntermediateConsistency {
  int a;
  bool operator==(const IntermediateConsistency&) const = default;
};
/// A _||_ Y_a | C or A _||_ Y_{am} | C.
struct ExposureOutcomeCI {
  int a;
  std::optional<MedValue> m;
  bool operator==(const ExposureOutcomeCI&) const = default;
};
/// A _||_ M_{a*} | C.
struct ExposureMediatorCI {
  int a_star;
  bool operator==(const ExposureMediatorCI&) const = default;
};
/// M _||_ Y_{am} | C, L, A=a (or | C, A=a without L).
struct MediatorOutcomeCI {
  int a;
  MedValue m;
  bool given_l;
  bool operator==(const MediatorOutcomeCI&) const = default;
};
/// M_{a'} _||_ Y_{am} | C.
struct CrossWorldCI {
  int a, a_prime;
  bool operator==(const CrossWorldCI&) const = default;
};
/// P(A=a | C) > 0 or P(A=a | C, L) > 0.
struct ExposurePositivity {
  int a;
  bool given_l;
  bool operator==(const ExposurePositivity&) const = default;
};
/// P(M=m | C, L, A=a) > 0 (or | C, A=a).
struct MediatorPositivity {
  int a;
  MedValue m;
  bool given_l;
  bool operator==(const MediatorPositivity&) const = default;
};

using Statement =
    std::variant<OutcomeConsistency, CrossWorldConsistency, CompositionConsistency, MediatorConsistency,
                 IntermediateConsistency, ExposureOutcomeCI, ExposureMediatorCI, MediatorOutcomeCI, CrossWorldCI,
                 ExposurePositivity, MediatorPositivity>;

struct Relevance {
  std::size_t term;  // index into AssumptionSet::quantities
  bool implied = false;  // requirement is implied by this stronger row
};

struct AssumptionEntry {
  Family family;
  std::string group;
  Statement statement;
  std::string text;
  bool testable = false;
  bool interpretive = false;
  bool cross_world = false;
  std::vector<Relevance> terms;
};

struct RangeNote {
  std::string symbol;
  std::string combined;
  std::vector<std::pair<std::size_t, std::string>> terms;
};

struct AssumptionSet {
  std::vector<Quantity> quantities;
  std::vector<AssumptionEntry> entries;
  std::vector<RangeNote> ranges;
  std::map<int, std::string> symbols;  // exposure arm -> mediator symbol

  /// Tab-separated lines: family, group, statement, relevant terms.
  std::vector<std::string> lines() const;
};

/// Required m-values of a quantity, when it ranges over mediator values.
inline std::optional<MediatorRange> mediator_range(const Quantity& q) {
  if (const auto* t = std::get_if<MeanKnown>(&q)) return PolicyRange{t->policy};
  if (const auto* t = std::get_if<MeanPotential>(&q)) return ObservedRange{t->a_star, t->cond};
  if (const auto* t = std::get_if<MeanCrossWorld>(&q)) return ObservedRange{t->a_prime, PolicyConditioning::C};
  return std::nullopt;
}

inline std::string range_text(const Quantity& q) {
  const int a = exposure_of(q);
  if (const auto* t = std::get_if<MeanKnown>(&q)) {
    const std::string src = "pol:" + t->policy->source;
    switch (t->policy->conditioning) {
      case PolicyConditioning::Marginal: return "supp(" + src + ")";
      case PolicyConditioning::C: return "supp(" + src + "|C)";
      case PolicyConditioning::CL: return "supp(" + src + "|C,L=l), l=L_" + std::to_string(a);
    }
  }
  auto observed = [&](int s, PolicyConditioning c) {
    const std::string as = "A=" + std::to_string(s);
    switch (c) {
      case PolicyConditioning::Marginal: return "supp(M|" + as + ")";
      case PolicyConditioning::C: return "supp(M|C," + as + ")";
      case PolicyConditioning::CL: return "supp(M|C,L=l," + as + "), l=L_" + std::to_string(a);
    }
    return std::string();
  };
  if (const auto* t = std::get_if<MeanPotential>(&q)) return observed(t->a_star, t->cond);
  if (const auto* t = std::get_if<MeanCrossWorld>(&q)) return observed(t->a_prime, PolicyConditioning::C);
  return "";
}

namespace detail {

inline std::string po_text(int a, const std::optional<MedValue>& m, const std::map<int, std::string>& sym) {
  const std::string as = std::to_string(a);
  if (!m) return "Y_" + as;
  if (!m->symbolic) return "Y_{" + as + "," + m->label + "}";
  return "Y_{" + as + sym.at(a) + "}";
}

inline std::string m_text(int a, const MedValue& m, const std::map<int, std::string>& sym) {
  return m.symbolic ? sym.at(a) : m.label;
}

inline std::string statement_text(const Statement& s, const std::map<int, std::string>& sym) {
  struct V {
    const std::map<int, std::string>& sym;
    std::string operator()(const OutcomeConsistency& t) const {
      std::string out = "Y=" + po_text(t.a, t.m, sym) + " if A=" + std::to_string(t.a);
      if (t.m) out += ",M=" + m_text(t.a, *t.m, sym);
      return out;
    }
    std::string operator()(const CrossWorldConsistency& t) const {
      const std::string a = std::to_string(t.a), b = std::to_string(t.a_prime), m = sym.at(t.a);
      return "Y_{" + a + "M_" + b + "}=Y_{" + a + m + "} if M_" + b + "=" + m;
    }
    std::string operator()(const CompositionConsistency& t) const {
      const std::string a = std::to_string(t.a);
      return "Y_" + a + "=Y_{" + a + "M_" + a + "}";
    }
    std::string operator()(const MediatorConsistency& t) const {
      const std::string a = std::to_string(t.a_star);
      return "M=M_" + a + " if A=" + a;
    }
    std::string operator()(const IntermediateConsistency& t) const {
      const std::string a = std::to_string(t.a);
      return "L=L_" + a + " if A=" + a;
    }
    std::string operator()(const ExposureOutcomeCI& t) const { return "A _||_ " + po_text(t.a, t.m, sym) + " | C"; }
    std::string operator()(const ExposureMediatorCI& t) const {
      return "A _||_ M_" + std::to_string(t.a_star) + " | C";
    }
    std::string operator()(const MediatorOutcomeCI& t) const {
      return "M _||_ " + po_text(t.a, t.m, sym) + " | C," + (t.given_l ? "L," : "") + "A=" + std::to_string(t.a);
    }
    std::string operator()(const CrossWorldCI& t) const {
      return "M_" + std::to_string(t.a_prime) + " _||_ Y_{" + std::to_string(t.a) + sym.at(t.a) + "} | C";
    }
    std::string operator()(const ExposurePositivity& t) const {
      return "P(A=" + std::to_string(t.a) + "|C" + (t.given_l ? ",L" : "") + ")>0";
    }
    std::string operator()(const MediatorPositivity& t) const {
      return "P(M=" + m_text(t.a, t.m, sym) + "|C," + (t.given_l ? "L," : "") + "A=" + std::to_string(t.a) + ")>0";
    }
  };
  return std::visit(V{sym}, s);
}

struct Classified {
  Family family;
  const char* group;
};

inline Classified classify(const Statement& s) {
  struct V {
    Classified operator()(const OutcomeConsistency&) const { return {Family::Consistency, "outcome"}; }
    Classified operator()(const CrossWorldConsistency&) const { return {Family::Consistency, "outcome"}; }
    Classified operator()(const CompositionConsistency&) const { return {Family::Consistency, "composition"}; }
    Classified operator()(const MediatorConsistency&) const { return {Family::Consistency, "mediator"}; }
    Classified operator()(const IntermediateConsistency&) const { return {Family::Consistency, "intermediate"}; }
    Classified operator()(const ExposureOutcomeCI&) const { return {Family::Independence, "exposure-outcome"}; }
    Classified operator()(const ExposureMediatorCI&) const { return {Family::Independence, "exposure-mediator"}; }
    Classified operator()(const MediatorOutcomeCI&) const { return {Family::Independence, "mediator-outcome"}; }
    Classified operator()(const CrossWorldCI&) const { return {Family::Independence, "mediator-outcome"}; }
    Classified operator()(const ExposurePositivity&) const { return {Family::Positivity, "exposure"}; }
    Classified operator()(const MediatorPositivity&) const { return {Family::Positivity, "mediator"}; }
  };
  return std::visit(V{}, s);
}

/// Rows one potential-outcome mean needs. Interpretive rows carry no term.
inline std::vector<std::pair<Statement, bool>> rows_for(const Quantity& q) {
  std::vector<std::pair<Statement, bool>> out;  // (statement, relevant to the term)
  auto add = [&](Statement s) { out.emplace_back(std::move(s), true); };
  const MedValue sym{true, ""};
  if (const auto* t = std::get_if<MeanA>(&q)) {
    add(OutcomeConsistency{t->a, std::nullopt});
    add(ExposureOutcomeCI{t->a, std::nullopt});
    add(ExposurePositivity{t->a, false});
  } else if (const auto* t = std::get_if<MeanAM>(&q)) {
    const MedValue m{false, t->m};
    add(OutcomeConsistency{t->a, m});
    add(ExposureOutcomeCI{t->a, m});
    add(MediatorOutcomeCI{t->a, m, true});
    add(ExposurePositivity{t->a, false});
    add(MediatorPositivity{t->a, m, true});
  } else if (const auto* t = std::get_if<MeanKnown>(&q)) {
    add(OutcomeConsistency{t->a, sym});
    if (t->policy->conditioning == PolicyConditioning::CL) add(IntermediateConsistency{t->a});
    add(ExposureOutcomeCI{t->a, sym});
    add(MediatorOutcomeCI{t->a, sym, true});
    add(ExposurePositivity{t->a, false});
    add(MediatorPositivity{t->a, sym, true});
  } else if (const auto* t = std::get_if<MeanPotential>(&q)) {
    add(OutcomeConsistency{t->a, sym});
    add(MediatorConsistency{t->a_star});
    if (t->cond == PolicyConditioning::CL) {
      add(IntermediateConsistency{t->a});
      if (t->a_star != t->a) add(IntermediateConsistency{t->a_star});
    }
    add(ExposureMediatorCI{t->a_star});
    add(ExposureOutcomeCI{t->a, sym});
    add(MediatorOutcomeCI{t->a, sym, true});
    add(ExposurePositivity{t->a, false});
    if (t->cond == PolicyConditioning::CL) add(ExposurePositivity{t->a_star, true});
    else if (t->a_star != t->a) add(ExposurePositivity{t->a_star, false});
    add(MediatorPositivity{t->a, sym, true});
  } else if (const auto* t = std::get_if<MeanCrossWorld>(&q)) {
    add(OutcomeConsistency{t->a, sym});
    add(CrossWorldConsistency{t->a, t->a_prime});
    add(MediatorConsistency{t->a_prime});
    out.emplace_back(CompositionConsistency{std::min(t->a, t->a_prime)}, false);
    out.emplace_back(CompositionConsistency{std::max(t->a, t->a_prime)}, false);
    add(ExposureOutcomeCI{t->a, sym});
    add(ExposureMediatorCI{t->a_prime});
    add(MediatorOutcomeCI{t->a, sym, false});
    add(CrossWorldCI{t->a, t->a_prime});
    add(ExposurePositivity{t->a, false});
    add(ExposurePositivity{t->a_prime, false});
    add(MediatorPositivity{t->a, sym, false});
  }
  return out;
}

struct UsesSymbol {
  bool operator()(const OutcomeConsistency& t) const { return t.m && t.m->symbolic; }
  bool operator()(const CrossWorldConsistency&) const { return true; }
  bool operator()(const ExposureOutcomeCI& t) const { return t.m && t.m->symbolic; }
  bool operator()(const MediatorOutcomeCI& t) const { return t.m.symbolic; }
  bool operator()(const CrossWorldCI&) const { return true; }
  bool operator()(const MediatorPositivity& t) const { return t.m.symbolic; }
  bool operator()(const auto&) const { return false; }
};

inline bool uses_symbol(const Statement& s) { return std::visit(UsesSymbol{}, s); }

inline int group_rank(const AssumptionEntry& e) {
  static const char* order[] = {"outcome",          "composition",      "mediator", "intermediate",
                                "exposure-mediator", "exposure-outcome", "mediator-outcome"};
  int base = static_cast<int>(e.family) * 10;
  for (int i = 0; i < 7; ++i)
    if (e.group == order[i]) return base + i;
  return base + (e.group == "exposure" ? 0 : 1);
}

}  // namespace detail

/// Union of the rows each term needs, deduplicated across terms.
inline AssumptionSet required_assumptions(const std::vector<EstimandExpr>& exprs) {
  AssumptionSet set;
  for (const auto& e : exprs)
    for (const auto& q : e.quantities()) {
      bool seen = false;
      for (const auto& have : set.quantities) seen = seen || same_quantity(have, q);
      if (!seen) set.quantities.push_back(q);
    }

  for (std::size_t qi = 0; qi < set.quantities.size(); ++qi) {
    for (auto& [stmt, relevant] : detail::rows_for(set.quantities[qi])) {
      auto it = std::find_if(set.entries.begin(), set.entries.end(),
                             [&](const AssumptionEntry& e) { return e.statement == stmt; });
      if (it == set.entries.end()) {
        auto cls = detail::classify(stmt);
        AssumptionEntry e{cls.family, cls.group, stmt, "", cls.family == Family::Positivity,
                          std::holds_alternative<CompositionConsistency>(stmt),
                          std::holds_alternative<CrossWorldCI>(stmt), {}};
        set.entries.push_back(std::move(e));
        it = std::prev(set.entries.end());
      }
      if (relevant && std::none_of(it->terms.begin(), it->terms.end(), [&](const Relevance& r) { return r.term == qi; }))
        it->terms.push_back({qi, false});
    }
  }

  // P(A=a|C)>0 is implied by P(A=a|C,L)>0; fold it into the stronger row.
  for (auto it = set.entries.begin(); it != set.entries.end();) {
    const auto* weak = std::get_if<ExposurePositivity>(&it->statement);
    if (weak && !weak->given_l) {
      const Statement strong = ExposurePositivity{weak->a, true};
      auto st = std::find_if(set.entries.begin(), set.entries.end(),
                             [&](const AssumptionEntry& e) { return e.statement == strong; });
      if (st != set.entries.end()) {
        for (const auto& r : it->terms)
          if (std::none_of(st->terms.begin(), st->terms.end(), [&](const Relevance& x) { return x.term == r.term; }))
            st->terms.push_back({r.term, true});
        it = set.entries.erase(it);
        continue;
      }
    }
    ++it;
  }

  // Mediator symbols per exposure arm: arms whose ranges coincide share a symbol.
  std::vector<int> arms;
  std::map<int, std::set<std::string>> arm_ranges;
  for (const auto& q : set.quantities) {
    if (!mediator_range(q)) continue;
    const int a = exposure_of(q);
    if (std::find(arms.begin(), arms.end(), a) == arms.end()) arms.push_back(a);
    arm_ranges[a].insert(range_text(q));
  }
  const char* letters[] = {"m", "n"};
  std::vector<std::pair<std::set<std::string>, std::string>> assigned;
  for (int a : arms) {
    std::string s;
    for (const auto& [r, sym] : assigned)
      if (r == arm_ranges[a]) s = sym;
    if (s.empty()) {
      s = letters[std::min<std::size_t>(assigned.size(), 1)];
      assigned.emplace_back(arm_ranges[a], s);
    }
    set.symbols[a] = s;
  }
  for (const auto& [ranges, sym] : assigned) {
    RangeNote note{sym, "", {}};
    std::set<std::string> all;
    for (std::size_t qi = 0; qi < set.quantities.size(); ++qi) {
      const auto& q = set.quantities[qi];
      if (!mediator_range(q) || set.symbols[exposure_of(q)] != sym) continue;
      note.terms.emplace_back(qi, range_text(q));
      all.insert(range_text(q));
    }
    if (all == std::set<std::string>{"supp(M|C,A=0)", "supp(M|C,A=1)"}) {
      note.combined = "supp(M|C)";
    } else {
      for (const auto& r : all) note.combined += (note.combined.empty() ? "" : " U ") + r;
    }
    set.ranges.push_back(std::move(note));
  }

  for (auto& e : set.entries) e.text = detail::statement_text(e.statement, set.symbols);
  std::stable_sort(set.entries.begin(), set.entries.end(), [](const AssumptionEntry& x, const AssumptionEntry& y) {
    return detail::group_rank(x) < detail::group_rank(y);
  });
  return set;
}

inline AssumptionSet required_assumptions(const EstimandExpr& e) {
  return required_assumptions(std::vector<EstimandExpr>{e});
}

inline std::vector<std::string> AssumptionSet::lines() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    std::string terms;
    for (const auto& r : e.terms) terms += (terms.empty() ? "" : ";") + label(quantities[r.term]) + (r.implied ? "*" : "");
    if (e.interpretive) terms = "(interpretive)";
    out.push_back(std::string(family_name(e.family)) + "\t" + e.group + "\t" + e.text + "\t" + terms);
  }
  for (const auto& r : ranges) {
    std::string terms;
    for (const auto& [qi, txt] : r.terms) terms += (terms.empty() ? "" : ";") + label(quantities[qi]) + ":" + txt;
    out.push_back("range\t" + r.symbol + "\t" + r.combined + "\t" + terms);
  }
  return out;
}

/// True when a range symbol appears in the entry, so the entry quantifies over m.
inline bool quantifies_over_m(const AssumptionEntry& e) { return detail::uses_symbol(e.statement); }

}  // namespace medid

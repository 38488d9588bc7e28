#pragma once

#include "medid/audit.hpp"
#include "medid/model_io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace medid {

enum class Format { Human, Machine };

/// Loads known-policy files named in estimands, checked against the declared variables.
inline std::function<KnownPolicy(const std::string&)> policy_loader(const std::vector<VariableDecl>& decls) {
  return [decls](const std::string& source) {
    std::vector<Variable> vars;
    std::vector<std::string> cs, ls;
    std::string m;
    for (const auto& d : decls) {
      vars.push_back(d.var);
      if (d.role == Role::Covariate) cs.push_back(d.var.name);
      if (d.role == Role::Intermediate) ls.push_back(d.var.name);
      if (d.role == Role::Mediator) m = d.var.name;
    }
    auto raw = read_cond_tsv(read_file(source), vars, m);
    return make_policy(std::filesystem::path(source).filename().string(), raw, cs, ls, m);
  };
}

/// Mediator variable plus policy loader, kept alive for parse_estimand.
struct EstimandEnv {
  std::vector<VariableDecl> decls;
  Variable mediator;

  explicit EstimandEnv(std::vector<VariableDecl> d) : decls(std::move(d)) {
    for (const auto& x : decls)
      if (x.role == Role::Mediator) mediator = x.var;
  }
  ParseContext context() const { return ParseContext{&mediator, policy_loader(decls)}; }
  EstimandExpr parse(std::string_view text) const { return parse_estimand(text, context()); }
};

inline std::vector<VariableDecl> declarations(const Model& m) {
  std::vector<VariableDecl> out;
  for (std::size_t i = 0; i < m.size(); ++i) out.push_back({m.variables()[i], m.role(i)});
  return out;
}

// ---------------------------------------------------------------------------
// Value rendering

/// Human: 12 significant digits, then the exact rational in parentheses.
/// Machine: %.17g and the exact rational (or "-") as separate fields.
template <Scalar T>
std::string value_text(const T& v, Format f) {
  if (f == Format::Machine) {
    std::string s = format_double(to_double(v), 17) + "\t";
    if constexpr (is_exact_v<T>) {
      return s + to_string(v);
    } else {
      return s + "-";
    }
  }
  if constexpr (is_exact_v<T>) {
    return format_double(to_double(v), 12) + " (" + to_string(v) + ")";
  } else {
    return format_double(v, 12);
  }
}

inline std::string machine_header() { return "format_version\t1\n"; }

/// One-line cleanup for free text placed in a tab-separated field.
inline std::string field(std::string s) {
  for (char& c : s)
    if (c == '\t' || c == '\n') c = ' ';
  return s;
}

inline std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

inline std::string terms_text(const AssumptionSet& s, const AssumptionEntry& e) {
  if (e.interpretive) return "(interpretive)";
  std::vector<std::string> t;
  for (const auto& r : e.terms) t.push_back(label(s.quantities[r.term]) + (r.implied ? "*" : ""));
  return join(t, ";");
}

/// Assembler output without verdicts.
inline std::string render_assumptions(const AssumptionSet& s, Format f) {
  std::string out;
  if (f == Format::Machine) {
    out += machine_header();
    for (const auto& e : s.entries)
      out += "entry\t" + std::string(family_name(e.family)) + "\t" + e.group + "\t" + e.text + "\t" +
             (e.testable ? "testable" : "untestable") + "\t" + (e.interpretive ? "interpretive" : "required") + "\t" +
             (e.cross_world ? "cross-world" : "same-world") + "\t" + terms_text(s, e) + "\n";
    for (const auto& r : s.ranges) {
      std::vector<std::string> t;
      for (const auto& [q, txt] : r.terms) t.push_back(label(s.quantities[q]) + ":" + txt);
      out += "range\t" + r.symbol + "\t" + r.combined + "\t" + join(t, ";") + "\n";
    }
    return out;
  }
  std::string fam;
  for (const auto& e : s.entries) {
    if (fam != family_name(e.family)) {
      fam = family_name(e.family);
      out += fam + "\n";
    }
    out += "  " + e.text + "    [" + terms_text(s, e) + "]" + (e.cross_world ? " (cross-world)" : "") + "\n";
  }
  for (const auto& r : s.ranges) {
    out += "  " + r.symbol + " ranges over " + r.combined + "\n";
    for (const auto& [q, txt] : r.terms) out += "    " + label(s.quantities[q]) + ": " + txt + "\n";
  }
  return out;
}

inline std::string render_audit(const AssumptionReport& rep, Format f) {
  std::string out;
  if (f == Format::Machine) {
    out += machine_header();
    for (const auto& a : rep.entries) {
      const auto& e = a.entry;
      out += "entry\t" + std::string(family_name(e.family)) + "\t" + e.group + "\t" + e.text + "\t" +
             std::string(verdict_name(a.verdict)) + "\t" + a.basis + "\t" + terms_text(rep.set, e) + "\t" +
             (a.deviation ? format_double(*a.deviation, 17) : "-") + "\t" + field(join(a.witnesses, "; ")) + "\n";
    }
    for (const auto& r : rep.set.ranges) {
      std::vector<std::string> t;
      for (const auto& [q, txt] : r.terms) t.push_back(label(rep.set.quantities[q]) + ":" + txt);
      out += "range\t" + r.symbol + "\t" + r.combined + "\t" + join(t, ";") + "\n";
    }
    for (const auto& r : rep.refusals) out += "refusal\t" + field(r) + "\n";
    out += std::string("identified\t") + (rep.identified ? "true" : "false") + "\n";
    return out;
  }
  std::size_t w = 9;
  for (const auto& a : rep.entries) w = std::max(w, a.entry.text.size());
  auto pad = [](std::string s, std::size_t n) { return s + std::string(n > s.size() ? n - s.size() : 0, ' '); };
  out += pad("family", 14) + pad("statement", w + 2) + pad("verdict", 10) + "witnesses\n";
  for (const auto& a : rep.entries) {
    std::string v = std::string(verdict_name(a.verdict));
    if (a.verdict == Verdict::Holds && a.basis == "model-verified") v += "*";
    out += pad(std::string(family_name(a.entry.family)), 14) + pad(a.entry.text, w + 2) + pad(v, 10) +
           join(a.witnesses, "; ") + (a.entry.interpretive ? " (interpretive)" : "") + "\n";
  }
  for (const auto& r : rep.set.ranges) out += "range " + r.symbol + ": " + r.combined + "\n";
  for (const auto& r : rep.refusals) out += "refused: " + r + "\n";
  out += std::string("identified: ") + (rep.identified ? "yes" : "no") + "\n";
  out += "(* verified against the declared model, not testable from data)\n";
  return out;
}

inline std::string assumption_status(const AssumptionReport& rep) {
  if (!rep.refusals.empty()) return "refused";
  return rep.identified ? "identified" : "violated";
}

inline std::vector<std::string> violations(const AssumptionReport& rep) {
  std::vector<std::string> out = rep.refusals;
  for (const auto& a : rep.entries)
    if (a.verdict == Verdict::Violated && !a.entry.interpretive)
      out.push_back(a.entry.text + " [" + join(a.witnesses, "; ") + "]");
  return out;
}

// ---------------------------------------------------------------------------
// Full report

/// Named estimands applicable to a model, plus raw terms.
inline std::vector<std::string> default_catalog(const Model& m, const std::vector<std::string>& policies = {}) {
  std::vector<std::string> out{"TE"};
  for (const auto& s : m.variables()[m.mediator()].states) out.push_back("CDE(" + s + ")");
  for (const auto& p : policies) out.push_back("GDE(policy=" + p + ")");
  for (const char* s : {"IDE0", "IIE1", "IDE1", "IIE0", "NDE0", "NIE1", "NDE1", "NIE0", "EY(1)", "EY(0)", "XW(1,0)", "XW(0,1)"})
    out.push_back(s);
  return out;
}

struct ReportRow {
  std::string estimand;
  std::string oracle;
  std::string ident;  // value, or "refused: ..." text
  bool ident_ok = false;
  AssumptionReport audit;
};

template <Scalar T>
ReportRow report_row(const Model& m, const IdentInput<T>& in, const std::string& text, const EstimandExpr& e,
                     Format f, AuditOptions opt) {
  ReportRow r;
  r.estimand = text;
  r.oracle = value_text(evaluate_oracle<T>(e, m, opt.cap), f);
  try {
    r.ident = value_text(evaluate_ident<T>(e, in), f);
    r.ident_ok = true;
  } catch (const Error& x) {
    r.ident = std::string("refused: ") + x.what();
  }
  r.audit = audit_estimand<T>(m, e, opt);
  return r;
}

inline std::string render_report(const Model& m, const std::string& arith, const std::vector<ReportRow>& rows, Format f) {
  std::string out;
  if (f == Format::Machine) {
    out += machine_header();
    out += "model\t" + m.name() + "\n";
    out += "arithmetic\t" + arith + "\n";
    for (const auto& r : rows) {
      out += "row\t" + r.estimand + "\t" + r.oracle + "\t";
      out += r.ident_ok ? r.ident + "\t-" : "-\t-\t" + field(r.ident);
      out += std::string("\t") + (r.audit.identified ? "true" : "false") + "\t" + field(join(violations(r.audit), " | ")) + "\n";
    }
    return out;
  }
  out += "model: " + m.name() + "\n";
  out += "arithmetic: " + arith + "\n";
  for (const auto& r : rows) {
    out += "\n" + r.estimand + "\n";
    out += "  oracle      " + r.oracle + "\n";
    out += "  identified  " + r.ident + "\n";
    out += std::string("  audit       ") + (r.audit.identified ? "all assumptions hold" : "not identified") + "\n";
    for (const auto& v : violations(r.audit)) out += "    " + v + "\n";
  }
  return out;
}

}  // namespace medid

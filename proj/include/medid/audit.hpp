#pragma once

#include "medid/assumptions.hpp"
#include "medid/evaluate.hpp"
#include "medid/oracle.hpp"

#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace medid {

enum class Verdict { Holds, Violated, Assumed };

inline std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "HOLDS";
    case Verdict::Violated: return "VIOLATED";
    case Verdict::Assumed: return "ASSUMED";
  }
  return "?";
}

struct AuditEntry {
  AssumptionEntry entry;
  Verdict verdict = Verdict::Assumed;
  /// model-verified | by-construction | data | untestable
  std::string basis;
  std::vector<std::string> witnesses;
  std::optional<double> deviation;
};

struct AssumptionReport {
  AssumptionSet set;
  std::vector<AuditEntry> entries;
  /// Structural reasons the functional is not applicable at all.
  std::vector<std::string> refusals;
  bool identified = true;

  bool any_violated(Family f) const {
    for (const auto& e : entries)
      if (e.entry.family == f && e.verdict == Verdict::Violated) return true;
    return false;
  }
};

struct AuditOptions {
  double epsilon = kDefaultEpsilon;
  std::uint64_t cap = kDefaultEnumerationCap;
};

namespace detail {

inline std::string fmt_dev(double d) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", d);
  return buf;
}

template <Scalar T>
class Auditor {
 public:
  Auditor(const Model* model, const IdentInput<T>& in, const AssumptionSet& set, AuditOptions opt)
      : model_(model), in_(in), set_(set), opt_(opt) {}

  AuditEntry check(const AssumptionEntry& e) const {
    AuditEntry out{e, Verdict::Assumed, "untestable", {}, std::nullopt};
    if (e.family == Family::Positivity) {
      out.basis = "data";
      positivity(e, out);
    } else if (!model_) {
      out.verdict = Verdict::Assumed;
    } else if (e.family == Family::Consistency) {
      // Observed variables are the factual worlds of the declared mechanisms.
      out.basis = "by-construction";
      out.verdict = Verdict::Holds;
    } else {
      out.basis = "model-verified";
      independence(e, out);
    }
    if (out.verdict == Verdict::Violated && out.witnesses.empty()) out.witnesses.push_back("violated");
    return out;
  }

 private:
  int mediator_index(const std::string& label) const {
    const auto& mv = in_.mediator();
    const int i = mv.index_of(label);
    if (i < 0) throw InputError("mediator " + mv.name + " has no state " + label);
    return i;
  }

  /// The mediator range a term attaches to the entry's m.
  MediatorRange range_for(const MedValue& m, const Quantity& q) const {
    if (!m.symbolic) return PointRange{mediator_index(m.label)};
    auto r = mediator_range(q);
    if (!r) throw InputError("term " + label(q) + " has no mediator range");
    return *r;
  }

  /// m-values required at (c, l); empty when the range is undefined there.
  std::set<int> needed(const MediatorRange& r, const Assignment& c, const Assignment& l) const {
    try {
      auto s = resolve_range(in_, r, c, l);
      return s ? *s : std::set<int>{};
    } catch (const PolicyDomainGap&) {
      return {};
    }
  }

  /// m-values required somewhere in C-cell c, over every observed L cell.
  std::set<int> needed_at_c(const MediatorRange& r, const Assignment& c) const {
    std::set<int> out;
    std::set<Assignment> ls;
    for (int a : {0, 1})
      for (const auto& l : in_.l_cells(c, a)) ls.insert(l);
    for (const auto& l : ls)
      for (int m : needed(r, c, l)) out.insert(m);
    return out;
  }

  void positivity(const AssumptionEntry& e, AuditEntry& out) const {
    std::vector<std::string> ws;
    auto add = [&](const std::string& w) {
      if (std::find(ws.begin(), ws.end(), w) == ws.end()) ws.push_back(w);
    };
    if (const auto* s = std::get_if<ExposurePositivity>(&e.statement)) {
      for (const auto& w : exposure_positivity(in_, s->a, s->given_l)) add(w.describe());
    } else {
      const auto& mp = std::get<MediatorPositivity>(e.statement);
      const bool tag = mp.m.symbolic && e.terms.size() > 1;
      for (const auto& r : e.terms) {
        const Quantity& q = set_.quantities[r.term];
        const std::string prefix = tag ? label(q) + ": " : "";
        try {
          for (const auto& w : mediator_positivity(in_, mp.a, mp.given_l, range_for(mp.m, q))) add(prefix + w.describe());
        } catch (const PolicyDomainGap& g) {
          for (const auto& w : g.witnesses()) add(prefix + "policy has no row at " + w.describe());
        }
      }
    }
    out.verdict = ws.empty() ? Verdict::Holds : Verdict::Violated;
    out.witnesses = std::move(ws);
  }

  std::vector<std::string> names(const std::vector<std::size_t>& idx) const { return model_->names(idx); }
  std::string av() const { return model_->variables()[model_->exposure()].name; }
  std::string mv() const { return model_->variables()[model_->mediator()].name; }
  std::string yv() const { return model_->variables()[model_->outcome()].name; }
  bool has_l() const { return in_.has_intermediates(); }

  struct Check {
    std::vector<PotentialVar> req;
    std::vector<std::string> x, y, z;
    std::function<bool(const Assignment&)> filter;
    std::string note;
  };

  void run(const std::vector<Check>& checks, AuditEntry& out) const {
    double worst = 0.0;
    bool holds = true;
    std::string where;
    for (const auto& ck : checks) {
      auto j = counterfactual_joint<T>(*model_, ck.req, opt_.cap);
      auto res = check_ci(j, ck.x, ck.y, ck.z, opt_.epsilon, ck.filter);
      if (!res.holds) holds = false;
      if (res.max_deviation > worst || where.empty()) {
        if (res.max_deviation > worst) worst = res.max_deviation;
        std::string cell;
        for (const auto& [n, v] : res.worst_cell) cell += (cell.empty() ? "" : ",") + n + "=" + v;
        where = "max deviation " + fmt_dev(res.max_deviation) + (cell.empty() ? "" : " at (" + cell + ")") + ck.note;
      }
    }
    out.deviation = worst;
    out.verdict = holds ? Verdict::Holds : Verdict::Violated;
    if (holds && !checks.empty()) where = "max deviation " + fmt_dev(worst);
    if (!checks.empty()) out.witnesses.push_back(where);
  }

  /// Symbolic m-values to quantify over, with the C-cells (or (C,L)-cells) where each applies.
  std::vector<int> m_values(const MedValue& m) const {
    if (!m.symbolic) return {mediator_index(m.label)};
    std::vector<int> all;
    for (int k = 0; k < static_cast<int>(in_.mediator().size()); ++k) all.push_back(k);
    return all;
  }

  /// True when some relevant term requires m at z-cell (c[, l]).
  bool required(const AssumptionEntry& e, const MedValue& mval, int m, const Assignment& c,
                const std::optional<Assignment>& l) const {
    if (!mval.symbolic) return true;
    for (const auto& r : e.terms) {
      auto range = range_for(mval, set_.quantities[r.term]);
      auto s = l ? needed(range, c, *l) : needed_at_c(range, c);
      if (s.count(m)) return true;
    }
    return false;
  }

  void independence(const AssumptionEntry& e, AuditEntry& out) const {
    const auto cs = names(model_->covariates());
    const auto ls = names(model_->intermediates());
    const std::size_t nc = cs.size(), nl = ls.size();
    std::vector<Check> checks;
    auto split_c = [nc](const Assignment& z) { return Assignment(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(nc)); };
    auto potential_l = [&](int a) {
      std::vector<PotentialVar> out;
      for (const auto& l : ls) out.push_back({l, a, std::nullopt, std::nullopt});
      return out;
    };

    if (const auto* s = std::get_if<ExposureOutcomeCI>(&e.statement)) {
      if (!s->m) {
        PotentialVar y{yv(), s->a, std::nullopt, std::nullopt};
        checks.push_back({{y}, {av()}, {y.name(*model_)}, cs, {}, ""});
      } else {
        for (int m : m_values(*s->m)) {
          const std::string ml = in_.mediator().states[m];
          std::vector<PotentialVar> req;
          // With intermediate confounders the joint form A _||_ (L_a, Y_am) | C is tested.
          if (has_l()) req = potential_l(s->a);
          req.push_back({yv(), s->a, ml, std::nullopt});
          std::vector<std::string> ys;
          for (const auto& r : req) ys.push_back(r.name(*model_));
          const MedValue mval = *s->m;
          auto filter = [this, &e, mval, m, split_c](const Assignment& z) { return required(e, mval, m, split_c(z), std::nullopt); };
          checks.push_back({req, {av()}, ys, cs, filter, " m=" + ml});
        }
      }
    } else if (const auto* s = std::get_if<ExposureMediatorCI>(&e.statement)) {
      std::vector<PotentialVar> req;
      if (has_l()) req = potential_l(s->a_star);
      req.push_back({mv(), s->a_star, std::nullopt, std::nullopt});
      std::vector<std::string> ys;
      for (const auto& r : req) ys.push_back(r.name(*model_));
      checks.push_back({req, {av()}, ys, cs, {}, ""});
    } else if (const auto* s = std::get_if<MediatorOutcomeCI>(&e.statement)) {
      std::vector<std::string> z = cs;
      if (s->given_l) z.insert(z.end(), ls.begin(), ls.end());
      z.push_back(av());
      const std::size_t zl = s->given_l ? nl : 0;
      const int a = s->a;
      for (int m : m_values(s->m)) {
        const std::string ml = in_.mediator().states[m];
        PotentialVar y{yv(), a, ml, std::nullopt};
        const MedValue mval = s->m;
        auto filter = [this, &e, mval, m, a, nc, zl, given_l = s->given_l](const Assignment& zc) {
          if (zc.back() != a) return false;
          Assignment c(zc.begin(), zc.begin() + static_cast<std::ptrdiff_t>(nc));
          if (!given_l) return required(e, mval, m, c, std::nullopt);
          Assignment l(zc.begin() + static_cast<std::ptrdiff_t>(nc), zc.begin() + static_cast<std::ptrdiff_t>(nc + zl));
          return required(e, mval, m, c, l);
        };
        checks.push_back({{y}, {mv()}, {y.name(*model_)}, z, filter, " m=" + ml});
      }
    } else if (const auto* s = std::get_if<CrossWorldCI>(&e.statement)) {
      PotentialVar mp{mv(), s->a_prime, std::nullopt, std::nullopt};
      const MedValue sym{true, ""};
      for (int m : m_values(sym)) {
        const std::string ml = in_.mediator().states[m];
        PotentialVar y{yv(), s->a, ml, std::nullopt};
        auto filter = [this, &e, sym, m, split_c](const Assignment& z) { return required(e, sym, m, split_c(z), std::nullopt); };
        checks.push_back({{mp, y}, {mp.name(*model_)}, {y.name(*model_)}, cs, filter, " m=" + ml});
      }
    }
    run(checks, out);
  }

  const Model* model_;
  const IdentInput<T>& in_;
  const AssumptionSet& set_;
  AuditOptions opt_;
};

template <Scalar T>
AssumptionReport audit_impl(const Model* model, const IdentInput<T>& in, const std::vector<EstimandExpr>& exprs,
                            AuditOptions opt) {
  AssumptionReport rep;
  rep.set = required_assumptions(exprs);
  Auditor<T> auditor(model, in, rep.set, opt);
  for (const auto& e : rep.set.entries) rep.entries.push_back(auditor.check(e));
  if (in.has_intermediates())
    for (const auto& q : rep.set.quantities)
      if (std::holds_alternative<MeanCrossWorld>(q))
        rep.refusals.push_back(label(q) + ": intermediate confounders present");
  rep.identified = rep.refusals.empty();
  for (const auto& e : rep.entries)
    if (e.verdict == Verdict::Violated && !e.entry.interpretive) rep.identified = false;
  return rep;
}

}  // namespace detail

/// Audit against a declared model: positivity on its observed joint, independence
/// on its counterfactual joints, consistency by construction.
template <Scalar T>
AssumptionReport audit_estimand(const Model& model, const std::vector<EstimandExpr>& exprs, AuditOptions opt = {}) {
  const auto in = ident_input<T>(model, opt.cap);
  return detail::audit_impl<T>(&model, in, exprs, opt);
}

template <Scalar T>
AssumptionReport audit_estimand(const Model& model, const EstimandExpr& expr, AuditOptions opt = {}) {
  return audit_estimand<T>(model, std::vector<EstimandExpr>{expr}, opt);
}

/// Audit from data alone: positivity checked, everything else assumed.
template <Scalar T>
AssumptionReport audit_estimand(const IdentInput<T>& in, const std::vector<EstimandExpr>& exprs, AuditOptions opt = {}) {
  return detail::audit_impl<T>(nullptr, in, exprs, opt);
}

template <Scalar T>
AssumptionReport audit_estimand(const IdentInput<T>& in, const EstimandExpr& expr, AuditOptions opt = {}) {
  return audit_estimand<T>(in, std::vector<EstimandExpr>{expr}, opt);
}

}  // namespace medid

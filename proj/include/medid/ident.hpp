#pragma once

#include "medid/errors.hpp"
#include "medid/joint.hpp"
#include "medid/policy.hpp"
#include "medid/scm.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace medid {

// Identification functionals. Everything here reads the observed joint and the
// role map only.

struct Roles {
  std::vector<std::string> covariates;
  std::string exposure;
  std::vector<std::string> intermediates;
  std::string mediator;
  std::string outcome;
};

inline Roles roles_of(const Model& m) {
  return Roles{m.names(m.covariates()), m.variables()[m.exposure()].name, m.names(m.intermediates()),
               m.variables()[m.mediator()].name, m.variables()[m.outcome()].name};
}

inline Roles roles_of(const std::vector<VariableDecl>& decls) {
  Roles r;
  for (const auto& d : decls) {
    switch (d.role) {
      case Role::Covariate: r.covariates.push_back(d.var.name); break;
      case Role::Exposure: r.exposure = d.var.name; break;
      case Role::Intermediate: r.intermediates.push_back(d.var.name); break;
      case Role::Mediator: r.mediator = d.var.name; break;
      case Role::Outcome: r.outcome = d.var.name; break;
    }
  }
  return r;
}

/// Observed joint plus role map, pre-aggregated into strata keyed by
/// (c, a, l, m) with mass and outcome-weighted mass.
template <Scalar T>
class IdentInput {
 public:
  IdentInput(JointTable<T> joint, Roles roles) : joint_(std::move(joint)), roles_(std::move(roles)) {
    std::set<std::string> named;
    auto take = [&](const std::string& n) {
      if (!named.insert(n).second) throw InputError("variable " + n + " has two roles");
      return joint_.index_of(n);
    };
    for (const auto& c : roles_.covariates) ci_.push_back(take(c));
    ai_ = take(roles_.exposure);
    for (const auto& l : roles_.intermediates) li_.push_back(take(l));
    mi_ = take(roles_.mediator);
    yi_ = take(roles_.outcome);
    if (named.size() != joint_.arity()) throw InputError("joint contains variables without a role");
    if (joint_.variables()[ai_].states != std::vector<std::string>{"0", "1"})
      throw InputError("exposure must have states (0, 1)");
    const Variable& y = joint_.variables()[yi_];
    for (const auto& v : y.values)
      if (!v) throw InputError("outcome " + y.name + " has non-numeric states");
    for (const auto& [a, p] : joint_.entries()) {
      Assignment c = pick(a, ci_), l = pick(a, li_);
      const int x = a[ai_], m = a[mi_];
      const T yv = p * from_rational<T>(*y.values[a[yi_]]);
      c_[c] += p;
      ca_[cat(c, {x})] += p;
      cl_[cat(c, l)] += p;
      cal_[cat(cat(c, {x}), l)] += p;
      auto& s = calm_[cat(cat(cat(c, {x}), l), {m})];
      s.first += p;
      s.second += yv;
      auto& t = cam_[cat(c, {x, m})];
      t.first += p;
      t.second += yv;
    }
  }

  const JointTable<T>& joint() const { return joint_; }
  const Roles& roles() const { return roles_; }

  /// True when some intermediate confounder has more than one declared state.
  bool has_intermediates() const {
    for (auto i : li_)
      if (joint_.variables()[i].size() > 1) return true;
    return false;
  }

  const Variable& mediator() const { return joint_.variables()[mi_]; }
  const Variable& outcome() const { return joint_.variables()[yi_]; }
  std::vector<Variable> covariate_vars() const { return vars(ci_); }
  std::vector<Variable> intermediate_vars() const { return vars(li_); }

  // Strata masses. Keys concatenate the pieces in the order given by the name.
  const std::map<Assignment, T>& c_mass() const { return c_; }
  T mass_ca(const Assignment& c, int a) const { return get(ca_, cat(c, {a})); }
  T mass_cl(const Assignment& c, const Assignment& l) const { return get(cl_, cat(c, l)); }
  T mass_cal(const Assignment& c, int a, const Assignment& l) const { return get(cal_, cat(cat(c, {a}), l)); }
  std::pair<T, T> mass_calm(const Assignment& c, int a, const Assignment& l, int m) const {
    auto it = calm_.find(cat(cat(cat(c, {a}), l), {m}));
    return it == calm_.end() ? std::pair<T, T>{T(0), T(0)} : it->second;
  }
  std::pair<T, T> mass_cam(const Assignment& c, int a, int m) const {
    auto it = cam_.find(cat(c, {a, m}));
    return it == cam_.end() ? std::pair<T, T>{T(0), T(0)} : it->second;
  }

  /// Positive-mass L cells within the (C=c, A=a) stratum.
  std::vector<Assignment> l_cells(const Assignment& c, int a) const {
    std::vector<Assignment> out;
    const Assignment key = cat(c, {a});
    for (auto it = cal_.lower_bound(key); it != cal_.end(); ++it) {
      if (!std::equal(key.begin(), key.end(), it->first.begin())) break;
      out.emplace_back(it->first.begin() + static_cast<std::ptrdiff_t>(key.size()), it->first.end());
    }
    return out;
  }

  /// Mediator states with positive mass at (c, a, l).
  std::set<int> m_support(const Assignment& c, int a, const Assignment& l) const {
    std::set<int> out;
    for (int m = 0; m < static_cast<int>(mediator().size()); ++m)
      if (mass_calm(c, a, l, m).first > 0) out.insert(m);
    return out;
  }

  /// Mediator states with positive mass at (c, a), L summed out.
  std::set<int> m_support(const Assignment& c, int a) const {
    std::set<int> out;
    for (int m = 0; m < static_cast<int>(mediator().size()); ++m)
      if (mass_cam(c, a, m).first > 0) out.insert(m);
    return out;
  }

  Witness cell(const Assignment& c, const Assignment& l = {}, std::optional<int> a = std::nullopt) const {
    Witness w;
    for (std::size_t k = 0; k < ci_.size(); ++k)
      w.cell.emplace_back(joint_.variables()[ci_[k]].name, joint_.variables()[ci_[k]].states[c[k]]);
    if (a) w.cell.emplace_back(roles_.exposure, std::to_string(*a));
    for (std::size_t k = 0; k < l.size(); ++k)
      w.cell.emplace_back(joint_.variables()[li_[k]].name, joint_.variables()[li_[k]].states[l[k]]);
    return w;
  }

  static Assignment cat(Assignment a, const Assignment& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }

 private:
  static Assignment pick(const Assignment& a, const std::vector<std::size_t>& idx) {
    Assignment out;
    for (auto i : idx) out.push_back(a[i]);
    return out;
  }
  static T get(const std::map<Assignment, T>& m, const Assignment& k) {
    auto it = m.find(k);
    return it == m.end() ? T(0) : it->second;
  }
  std::vector<Variable> vars(const std::vector<std::size_t>& idx) const {
    std::vector<Variable> out;
    for (auto i : idx) out.push_back(joint_.variables()[i]);
    return out;
  }

  JointTable<T> joint_;
  Roles roles_;
  std::vector<std::size_t> ci_, li_;
  std::size_t ai_ = 0, mi_ = 0, yi_ = 0;
  std::map<Assignment, T> c_, ca_, cl_, cal_;
  std::map<Assignment, std::pair<T, T>> calm_, cam_;
};

/// Treats every intermediate confounder as an extra covariate. Only for
/// demonstrating what goes wrong when the cross-world formula is forced.
template <Scalar T>
IdentInput<T> relabel_intermediates_as_covariates(const IdentInput<T>& in) {
  Roles r = in.roles();
  r.covariates.insert(r.covariates.end(), r.intermediates.begin(), r.intermediates.end());
  r.intermediates.clear();
  return IdentInput<T>(in.joint(), std::move(r));
}

// ---------------------------------------------------------------------------
// Positivity
// ---------------------------------------------------------------------------

/// Mediator values whose positivity is required.
struct PointRange {
  int m;
};
struct PolicyRange {
  std::shared_ptr<const KnownPolicy> policy;
};
/// supp(M | A=a*) / supp(M | C, A=a*) / supp(M | C, L=l, A=a*) with l the cell's own L.
struct ObservedRange {
  int a_star;
  PolicyConditioning given;
};
using MediatorRange = std::variant<PointRange, PolicyRange, ObservedRange>;

/// Cells (C) or (C, L) with positive mass where P(A=a | .) = 0.
template <Scalar T>
std::vector<Witness> exposure_positivity(const IdentInput<T>& in, int a, bool given_l) {
  std::vector<Witness> out;
  for (const auto& [c, pc] : in.c_mass()) {
    if (!given_l) {
      if (is_zero(in.mass_ca(c, a))) out.push_back(in.cell(c));
      continue;
    }
    std::set<Assignment> ls;
    for (int x : {0, 1})
      for (const auto& l : in.l_cells(c, x)) ls.insert(l);
    for (const auto& l : ls)
      if (is_zero(in.mass_cal(c, a, l))) out.push_back(in.cell(c, l));
  }
  return out;
}

/// The required m-values at cell (c, l) of the A=a stratum; nullopt when the
/// range itself is undefined there (an exposure positivity failure, reported
/// separately). Throws PolicyDomainGap when a known policy lacks the row.
template <Scalar T>
std::optional<std::set<int>> resolve_range(const IdentInput<T>& in, const MediatorRange& r, const Assignment& c,
                                           const Assignment& l) {
  if (const auto* p = std::get_if<PointRange>(&r)) return std::set<int>{p->m};
  if (const auto* p = std::get_if<PolicyRange>(&r)) {
    Assignment g;
    if (p->policy->conditioning != PolicyConditioning::Marginal) g = c;
    if (p->policy->conditioning == PolicyConditioning::CL) g = IdentInput<T>::cat(g, l);
    const auto* row = p->policy->table.row(g);
    if (!row) throw PolicyDomainGap({in.cell(c, p->policy->conditioning == PolicyConditioning::CL ? l : Assignment{})});
    std::set<int> out;
    for (const auto& [m, q] : *row)
      if (q > 0) out.insert(m[0]);
    return out;
  }
  const auto& o = std::get<ObservedRange>(r);
  switch (o.given) {
    case PolicyConditioning::Marginal: {
      std::set<int> out;
      for (const auto& [cc, pc] : in.c_mass())
        for (int m : in.m_support(cc, o.a_star)) out.insert(m);
      return out;
    }
    case PolicyConditioning::C:
      if (is_zero(in.mass_ca(c, o.a_star))) return std::nullopt;
      return in.m_support(c, o.a_star);
    case PolicyConditioning::CL:
      if (is_zero(in.mass_cal(c, o.a_star, l))) return std::nullopt;
      return in.m_support(c, o.a_star, l);
  }
  return std::nullopt;
}

/// Cells of the A=a stratum ((C, L) or, with given_l false, C alone) where some
/// required m has zero conditional probability. Each witness lists the missing m.
template <Scalar T>
std::vector<Witness> mediator_positivity(const IdentInput<T>& in, int a, bool given_l, const MediatorRange& range) {
  std::vector<Witness> out;
  const auto& mv = in.mediator();
  for (const auto& [c, pc] : in.c_mass()) {
    if (is_zero(in.mass_ca(c, a))) continue;
    auto check = [&](const Assignment& l, const std::set<int>& have, const Assignment& wl) {
      auto need = resolve_range(in, range, c, l);
      if (!need) return;
      Witness w = in.cell(c, wl, a);
      for (int m : *need)
        if (!have.count(m)) w.missing.push_back(mv.states[m]);
      if (!w.missing.empty()) out.push_back(std::move(w));
    };
    if (given_l) {
      for (const auto& l : in.l_cells(c, a)) check(l, in.m_support(c, a, l), l);
    } else {
      // Ranges that read L are resolved at each L cell of the stratum; the
      // requirement itself does not condition on L.
      const auto have = in.m_support(c, a);
      for (const auto& l : in.l_cells(c, a)) check(l, have, {});
    }
  }
  // Cells repeated across L cells collapse to one witness.
  std::vector<Witness> uniq;
  for (auto& w : out)
    if (std::find(uniq.begin(), uniq.end(), w) == uniq.end()) uniq.push_back(std::move(w));
  return uniq;
}

namespace detail {

inline std::string exposure_requirement(const std::string& av, int a, bool given_l) {
  return "P(" + av + "=" + std::to_string(a) + "|C" + (given_l ? ",L" : "") + ")>0";
}

template <Scalar T>
void require_exposure(const IdentInput<T>& in, int a, bool given_l) {
  if (a != 0 && a != 1) throw InputError("exposure level must be 0 or 1");
  auto ws = exposure_positivity(in, a, given_l);
  if (!ws.empty()) throw PositivityError(exposure_requirement(in.roles().exposure, a, given_l), std::move(ws));
}

template <Scalar T>
std::string m_symbol(const IdentInput<T>& in, const MediatorRange& r) {
  if (const auto* p = std::get_if<PointRange>(&r)) return in.mediator().states[p->m];
  return "m";
}

template <Scalar T>
void require_mediator(const IdentInput<T>& in, int a, bool given_l, const MediatorRange& r) {
  auto ws = mediator_positivity(in, a, given_l, r);
  if (!ws.empty())
    throw PositivityError("P(" + in.roles().mediator + "=" + m_symbol(in, r) + "|C" + (given_l ? ",L" : "") + "," + in.roles().exposure +
                              "=" + std::to_string(a) + ")>0",
                          std::move(ws));
}

/// E_C[ E_{L|C,A=a}( sum_m row(c,l)[m] * E[Y|C,L,M=m,A=a] ) ].
template <Scalar T, class Row>
T nested_mean(const IdentInput<T>& in, int a, Row&& row) {
  T total(0);
  for (const auto& [c, pc] : in.c_mass()) total += pc;
  T sum(0);
  for (const auto& [c, pc] : in.c_mass()) {
    const T pca = in.mass_ca(c, a);
    T inner(0);
    for (const auto& l : in.l_cells(c, a)) {
      const T pl = in.mass_cal(c, a, l) / pca;
      T mid(0);
      for (const auto& [m, q] : row(c, l)) {
        auto [mass, ysum] = in.mass_calm(c, a, l, m);
        if (is_zero(q)) continue;
        if (is_zero(mass)) throw NullEventError("conditioning on null event");
        mid += q * (ysum / mass);
      }
      inner += pl * mid;
    }
    sum += (pc / total) * inner;
  }
  return sum;
}

}  // namespace detail

/// E_C{ E[Y | C, A=a] }.
template <Scalar T>
T identify_po_a(const IdentInput<T>& in, int a) {
  detail::require_exposure(in, a, false);
  T total(0), sum(0);
  for (const auto& [c, pc] : in.c_mass()) total += pc;
  for (const auto& [c, pc] : in.c_mass()) {
    T ysum(0);
    for (int m = 0; m < static_cast<int>(in.mediator().size()); ++m) ysum += in.mass_cam(c, a, m).second;
    sum += (pc / total) * (ysum / in.mass_ca(c, a));
  }
  return sum;
}

/// E_C( E_{L|C,A=a}{ E[Y | C, L, A=a, M=m] } ).
template <Scalar T>
T identify_po_am(const IdentInput<T>& in, int a, std::string_view m) {
  const int mi = in.mediator().require_state(m);
  detail::require_exposure(in, a, false);
  detail::require_mediator(in, a, true, PointRange{mi});
  return detail::nested_mean(in, a, [&](const Assignment&, const Assignment&) { return std::map<int, T>{{mi, T(1)}}; });
}

/// Quadruple expectation with the mediator drawn from a known policy; a CL policy
/// is read at the observed L of the A=a stratum.
template <Scalar T>
T identify_po_policy_known(const IdentInput<T>& in, int a, const KnownPolicy& policy) {
  if (policy.table.target.size() != 1 || policy.table.target[0].name != in.mediator().name)
    throw InputError("policy " + policy.source + " is not a distribution over " + in.mediator().name);
  detail::require_exposure(in, a, false);
  auto shared = std::make_shared<const KnownPolicy>(policy);
  detail::require_mediator(in, a, true, PolicyRange{shared});
  return detail::nested_mean(in, a, [&](const Assignment& c, const Assignment& l) {
    Assignment g;
    if (policy.conditioning != PolicyConditioning::Marginal) g = c;
    if (policy.conditioning == PolicyConditioning::CL) g = IdentInput<T>::cat(g, l);
    std::map<int, T> row;
    for (const auto& [m, q] : *policy.table.row(g)) row[m[0]] = from_rational<T>(q);
    return row;
  });
}

/// Case i: E_C[P(M | C, A=a*)]; case ii: P(M | C, A=a*); case iii: P(M | C, L, A=a*).
template <Scalar T>
CondTable<T> identify_mediator_dist(const IdentInput<T>& in, int a_star, PolicyConditioning c) {
  detail::require_exposure(in, a_star, c == PolicyConditioning::CL);
  CondTable<T> out;
  out.target = {in.mediator()};
  if (c != PolicyConditioning::Marginal) out.given = in.covariate_vars();
  if (c == PolicyConditioning::CL)
    for (const auto& v : in.intermediate_vars()) out.given.push_back(v);
  T total(0);
  for (const auto& [cc, pc] : in.c_mass()) total += pc;
  const int nm = static_cast<int>(in.mediator().size());
  for (const auto& [cc, pc] : in.c_mass()) {
    const T pca = in.mass_ca(cc, a_star);
    if (c == PolicyConditioning::CL) {
      for (const auto& l : in.l_cells(cc, a_star)) {
        const T pcal = in.mass_cal(cc, a_star, l);
        for (int m = 0; m < nm; ++m) {
          const T pm = in.mass_calm(cc, a_star, l, m).first;
          if (!is_zero(pm)) out.rows[IdentInput<T>::cat(cc, l)][{m}] = pm / pcal;
        }
      }
      continue;
    }
    for (int m = 0; m < nm; ++m) {
      const T pm = in.mass_cam(cc, a_star, m).first;
      if (is_zero(pm)) continue;
      if (c == PolicyConditioning::C) out.rows[cc][{m}] = pm / pca;
      else out.rows[{}][{m}] += (pc / total) * (pm / pca);
    }
  }
  return out;
}

/// E[Y_{aM}] with M drawn from the identified law of M_{a*} (case i, ii or iii).
template <Scalar T>
T identify_po_policy_potential(const IdentInput<T>& in, int a, int a_star, PolicyConditioning c) {
  if (a_star != 0 && a_star != 1) throw InputError("exposure level must be 0 or 1");
  detail::require_exposure(in, a, false);
  detail::require_exposure(in, a_star, c == PolicyConditioning::CL);
  detail::require_mediator(in, a, true, ObservedRange{a_star, c});
  auto dist = identify_mediator_dist(in, a_star, c);
  return detail::nested_mean(in, a, [&](const Assignment& cc, const Assignment& l) {
    Assignment g;
    if (c != PolicyConditioning::Marginal) g = cc;
    if (c == PolicyConditioning::CL) g = IdentInput<T>::cat(g, l);
    std::map<int, T> row;
    for (const auto& [m, q] : *dist.row(g)) row[m[0]] = q;
    return row;
  });
}

/// E_C( E_{M|C,A=a'}{ E[Y | C, M, A=a] } ); refused with intermediate confounders.
template <Scalar T>
T identify_po_crossworld(const IdentInput<T>& in, int a, int a_prime) {
  if (a == a_prime) throw InputError("cross-world mean needs a != a'");
  if (in.has_intermediates()) throw IdentificationError("cross-world not identified with intermediate confounders");
  detail::require_exposure(in, a, false);
  detail::require_exposure(in, a_prime, false);
  detail::require_mediator(in, a, false, ObservedRange{a_prime, PolicyConditioning::C});
  T total(0), sum(0);
  for (const auto& [c, pc] : in.c_mass()) total += pc;
  for (const auto& [c, pc] : in.c_mass()) {
    const T pca2 = in.mass_ca(c, a_prime);
    T inner(0);
    for (int m : in.m_support(c, a_prime)) {
      auto [mass, ysum] = in.mass_cam(c, a, m);
      inner += (in.mass_cam(c, a_prime, m).first / pca2) * (ysum / mass);
    }
    sum += (pc / total) * inner;
  }
  return sum;
}

}  // namespace medid

#pragma once

#include "medid/errors.hpp"
#include "medid/joint.hpp"
#include "medid/policy.hpp"
#include "medid/scm.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace medid {

// Ground truth by enumeration over every exogenous noise configuration. Nothing
// here reads observed-data tables.

namespace detail {

inline void check_exposure(int a) {
  if (a != 0 && a != 1) throw InputError("exposure level must be 0 or 1");
}

template <Scalar T, class F>
void enumerate(const Model& m, std::uint64_t cap, F&& f) {
  NoiseConfigurations<T> configs(m, cap);
  for (auto it = configs.begin(); it != configs.end(); ++it) f(it->assignment, it->probability);
}

inline std::vector<int> unforced(const Model& m) { return std::vector<int>(m.size(), -1); }

inline Assignment cells(const std::vector<int>& w, const std::vector<std::size_t>& idx) {
  Assignment out;
  for (auto i : idx) out.push_back(w[i]);
  return out;
}

inline Witness witness(const Model& m, const std::vector<std::size_t>& idx, const Assignment& a) {
  Witness w;
  for (std::size_t k = 0; k < idx.size(); ++k) w.cell.emplace_back(m.variables()[idx[k]].name, m.variables()[idx[k]].states[a[k]]);
  return w;
}

}  // namespace detail

template <Scalar T>
JointTable<T> observed_joint(const Model& m, std::uint64_t cap = kDefaultEnumerationCap) {
  typename JointTable<T>::Entries e;
  std::vector<int> w(m.size());
  detail::enumerate<T>(m, cap, [&](const std::vector<int>& u, const T& p) {
    m.evaluate(u.data(), nullptr, w.data());
    e[w] += p;
  });
  return JointTable<T>(m.variables(), std::move(e));
}

template <Scalar T>
T po_mean_a(const Model& m, int a, std::uint64_t cap = kDefaultEnumerationCap) {
  detail::check_exposure(a);
  auto forced = detail::unforced(m);
  forced[m.exposure()] = a;
  const auto& y = m.variables()[m.outcome()];
  std::vector<int> w(m.size());
  T sum(0);
  detail::enumerate<T>(m, cap, [&](const std::vector<int>& u, const T& p) {
    m.evaluate(u.data(), forced.data(), w.data());
    sum += p * from_rational<T>(*y.values[w[m.outcome()]]);
  });
  return sum;
}

inline void require_numeric_outcome(const Model& m) {
  for (const auto& v : m.variables()[m.outcome()].values)
    if (!v) throw InputError("outcome " + m.variables()[m.outcome()].name + " has non-numeric states");
}

template <Scalar T>
T po_mean_am(const Model& m, int a, std::string_view mediator_state, std::uint64_t cap = kDefaultEnumerationCap) {
  detail::check_exposure(a);
  require_numeric_outcome(m);
  auto forced = detail::unforced(m);
  forced[m.exposure()] = a;
  forced[m.mediator()] = m.variables()[m.mediator()].require_state(mediator_state);
  const auto& y = m.variables()[m.outcome()];
  std::vector<int> w(m.size());
  T sum(0);
  detail::enumerate<T>(m, cap, [&](const std::vector<int>& u, const T& p) {
    m.evaluate(u.data(), forced.data(), w.data());
    sum += p * from_rational<T>(*y.values[w[m.outcome()]]);
  });
  return sum;
}

/// Given-variable indices of a policy with this conditioning.
inline std::vector<std::size_t> policy_given(const Model& m, PolicyConditioning c) {
  std::vector<std::size_t> idx;
  if (c != PolicyConditioning::Marginal) idx = m.covariates();
  if (c == PolicyConditioning::CL) idx.insert(idx.end(), m.intermediates().begin(), m.intermediates().end());
  return idx;
}

/// E[Y_{aM}] with the mediator drawn from `policy` given (C, L_a), independently of the noise.
template <Scalar T>
T po_mean_policy(const Model& m, int a, const KnownPolicy& policy, std::uint64_t cap = kDefaultEnumerationCap) {
  detail::check_exposure(a);
  require_numeric_outcome(m);
  const auto given = policy_given(m, policy.conditioning);
  auto forced = detail::unforced(m);
  forced[m.exposure()] = a;
  auto forced_m = forced;
  const auto& y = m.variables()[m.outcome()];
  std::vector<int> w(m.size()), wy(m.size());
  std::set<Assignment> gaps;
  T sum(0);
  detail::enumerate<T>(m, cap, [&](const std::vector<int>& u, const T& p) {
    m.evaluate(u.data(), forced.data(), w.data());
    auto g = detail::cells(w, given);
    const auto* row = policy.table.row(g);
    if (!row) {
      gaps.insert(g);
      return;
    }
    for (const auto& [mm, q] : *row) {
      forced_m[m.mediator()] = mm[0];
      m.evaluate(u.data(), forced_m.data(), wy.data());
      sum += p * from_rational<T>(q) * from_rational<T>(*y.values[wy[m.outcome()]]);
    }
  });
  if (!gaps.empty()) {
    std::vector<Witness> ws;
    for (const auto& g : gaps) ws.push_back(detail::witness(m, given, g));
    throw PolicyDomainGap(std::move(ws));
  }
  return sum;
}

/// E[Y_{aM_{a'}}]: M taken from the same unit's world under exposure a'.
template <Scalar T>
T po_mean_crossworld(const Model& m, int a, int a_prime, std::uint64_t cap = kDefaultEnumerationCap) {
  detail::check_exposure(a);
  detail::check_exposure(a_prime);
  if (a == a_prime) throw InputError("cross-world mean needs a != a'");
  require_numeric_outcome(m);
  auto fa = detail::unforced(m), fb = detail::unforced(m);
  fb[m.exposure()] = a_prime;
  fa[m.exposure()] = a;
  const auto& y = m.variables()[m.outcome()];
  std::vector<int> w(m.size());
  T sum(0);
  detail::enumerate<T>(m, cap, [&](const std::vector<int>& u, const T& p) {
    m.evaluate(u.data(), fb.data(), w.data());
    fa[m.mediator()] = w[m.mediator()];
    m.evaluate(u.data(), fa.data(), w.data());
    sum += p * from_rational<T>(*y.values[w[m.outcome()]]);
  });
  return sum;
}

/// Law of M_{a*}, marginal or given C or given (C, L_{a*}). Rows exist only for
/// cells reachable under A := a*.
template <Scalar T>
CondTable<T> potential_mediator_dist(const Model& m, int a_star, PolicyConditioning c,
                                     std::uint64_t cap = kDefaultEnumerationCap) {
  detail::check_exposure(a_star);
  const auto given = policy_given(m, c);
  auto forced = detail::unforced(m);
  forced[m.exposure()] = a_star;
  std::vector<int> w(m.size());
  CondTable<T> out;
  for (auto i : given) out.given.push_back(m.variables()[i]);
  out.target.push_back(m.variables()[m.mediator()]);
  std::map<Assignment, T> mass;
  detail::enumerate<T>(m, cap, [&](const std::vector<int>& u, const T& p) {
    m.evaluate(u.data(), forced.data(), w.data());
    auto g = detail::cells(w, given);
    mass[g] += p;
    out.rows[g][{w[m.mediator()]}] += p;
  });
  for (auto& [g, row] : out.rows)
    for (auto& [k, p] : row) p /= mass[g];
  return out;
}

/// A potential variable: `variable` under A := a, optionally with M := m or with M
/// set to the unit's own M under A := mediator_from (cross-world).
struct PotentialVar {
  std::string variable;
  int a = 0;
  std::optional<std::string> m;
  std::optional<int> mediator_from;

  std::string name(const Model& model) const {
    const auto& av = model.variables()[model.exposure()].name;
    const auto& mv = model.variables()[model.mediator()].name;
    std::string s = variable + "[" + av + "=" + std::to_string(a);
    if (m) s += "," + mv + "=" + *m;
    if (mediator_from) s += "," + mv + "=" + mv + "[" + av + "=" + std::to_string(*mediator_from) + "]";
    return s + "]";
  }
};

/// Joint over the observed variables followed by the requested potential variables.
template <Scalar T>
JointTable<T> counterfactual_joint(const Model& m, const std::vector<PotentialVar>& req,
                                   std::uint64_t cap = kDefaultEnumerationCap) {
  struct Plan {
    std::size_t var;
    std::vector<int> forced;
    std::optional<std::vector<int>> pre;  // world that supplies the mediator
  };
  std::vector<Plan> plans;
  std::vector<Variable> vars = m.variables();
  std::set<std::string> names;
  for (const auto& v : vars) names.insert(v.name);
  for (const auto& r : req) {
    detail::check_exposure(r.a);
    Plan p{m.index_of(r.variable), detail::unforced(m), std::nullopt};
    const Role role = m.role(p.var);
    if (role == Role::Covariate || role == Role::Exposure)
      throw InputError("potential variable " + r.variable + " is not downstream of the exposure");
    if ((r.m || r.mediator_from) && role != Role::Outcome)
      throw InputError("mediator settings only apply to the outcome");
    if (r.m && r.mediator_from) throw InputError("potential variable sets the mediator twice");
    p.forced[m.exposure()] = r.a;
    if (r.m) p.forced[m.mediator()] = m.variables()[m.mediator()].require_state(*r.m);
    if (r.mediator_from) {
      detail::check_exposure(*r.mediator_from);
      p.pre = detail::unforced(m);
      (*p.pre)[m.exposure()] = *r.mediator_from;
    }
    Variable v = m.variables()[p.var];
    v.name = r.name(m);
    if (!names.insert(v.name).second) throw InputError("potential variable " + v.name + " requested twice");
    vars.push_back(std::move(v));
    plans.push_back(std::move(p));
  }
  typename JointTable<T>::Entries e;
  std::vector<int> w(m.size()), tmp(m.size()), key(m.size() + plans.size());
  detail::enumerate<T>(m, cap, [&](const std::vector<int>& u, const T& p) {
    m.evaluate(u.data(), nullptr, key.data());
    for (std::size_t k = 0; k < plans.size(); ++k) {
      auto& pl = plans[k];
      if (pl.pre) {
        m.evaluate(u.data(), pl.pre->data(), tmp.data());
        pl.forced[m.mediator()] = tmp[m.mediator()];
      }
      m.evaluate(u.data(), pl.forced.data(), w.data());
      key[m.size() + k] = w[pl.var];
    }
    e[key] += p;
  });
  return JointTable<T>(std::move(vars), std::move(e));
}

struct CiResult {
  bool holds = true;
  double max_deviation = 0.0;
  /// z-cell where the largest deviation occurs (empty when it holds exactly).
  std::vector<std::pair<std::string, std::string>> worst_cell;
};

/// Tests x _||_ y | z at every positive-mass z-cell accepted by `cell_filter`.
template <Scalar T>
CiResult check_ci(const JointTable<T>& j, const std::vector<std::string>& x, const std::vector<std::string>& y,
                  const std::vector<std::string>& z, double eps = kDefaultEpsilon,
                  const std::function<bool(const Assignment&)>& cell_filter = {}) {
  std::vector<std::string> all = z;
  all.insert(all.end(), x.begin(), x.end());
  all.insert(all.end(), y.begin(), y.end());
  auto zxy = marginal(j, all);
  const std::size_t nz = z.size(), nx = x.size();
  struct Cell {
    T pz{0};
    std::map<Assignment, T> px, py;
    std::map<std::pair<Assignment, Assignment>, T> pxy;
  };
  std::map<Assignment, Cell> cells;
  for (const auto& [a, p] : zxy.entries()) {
    Assignment zc(a.begin(), a.begin() + nz), xc(a.begin() + nz, a.begin() + nz + nx), yc(a.begin() + nz + nx, a.end());
    auto& c = cells[zc];
    c.pz += p;
    c.px[xc] += p;
    c.py[yc] += p;
    c.pxy[{xc, yc}] += p;
  }
  CiResult res;
  T worst(0);
  for (const auto& [zc, c] : cells) {
    if (cell_filter && !cell_filter(zc)) continue;
    for (const auto& [xc, px] : c.px)
      for (const auto& [yc, py] : c.py) {
        auto it = c.pxy.find({xc, yc});
        T pj = it == c.pxy.end() ? T(0) : it->second;
        T dev = abs_value(T(pj / c.pz - (px / c.pz) * (py / c.pz)));
        if (dev > worst) {
          worst = dev;
          res.worst_cell.clear();
          for (std::size_t k = 0; k < nz; ++k)
            res.worst_cell.emplace_back(z[k], zxy.variables()[k].states[zc[k]]);
        }
      }
  }
  res.max_deviation = to_double(worst);
  if constexpr (is_exact_v<T>) {
    res.holds = worst == 0;
  } else {
    res.holds = worst <= eps;
  }
  return res;
}

}  // namespace medid

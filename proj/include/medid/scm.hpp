#pragma once

#include "medid/errors.hpp"
#include "medid/joint.hpp"
#include "medid/rational.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace medid {

enum class Role { Covariate, Exposure, Intermediate, Mediator, Outcome };

inline std::string_view role_code(Role r) {
  switch (r) {
    case Role::Covariate: return "C";
    case Role::Exposure: return "A";
    case Role::Intermediate: return "L";
    case Role::Mediator: return "M";
    case Role::Outcome: return "Y";
  }
  return "?";
}

inline std::optional<Role> parse_role(std::string_view s) {
  if (s == "C") return Role::Covariate;
  if (s == "A") return Role::Exposure;
  if (s == "L") return Role::Intermediate;
  if (s == "M") return Role::Mediator;
  if (s == "Y") return Role::Outcome;
  return std::nullopt;
}

struct VariableDecl {
  Variable var;
  Role role;
};

struct NoiseDecl {
  std::string name;
  std::vector<std::string> support;
  std::vector<Rational> probs;
};

/// Deterministic mechanism. `table` is indexed by
/// (mixed-radix parent rank, first parent most significant) * |noise| + noise index
/// and holds a state index of `variable`, or -1 where no entry was given.
struct Mechanism {
  std::string variable;
  std::vector<std::string> parents;
  std::string noise;
  std::vector<int> table;
};

struct Scm {
  std::string name;
  std::vector<VariableDecl> variables;
  std::vector<NoiseDecl> noises;
  std::vector<Mechanism> mechanisms;

  const VariableDecl* find_variable(std::string_view n) const {
    for (const auto& v : variables)
      if (v.var.name == n) return &v;
    return nullptr;
  }
  const NoiseDecl* find_noise(std::string_view n) const {
    for (const auto& u : noises)
      if (u.name == n) return &u;
    return nullptr;
  }
};

struct Violation {
  std::string code;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(std::string_view code) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.code == code; });
  }
  std::string describe() const {
    std::string s;
    for (const auto& v : violations) s += v.code + ": " + v.detail + "\n";
    return s;
  }
};

namespace detail {

inline bool parent_allowed(Role child, Role parent) {
  switch (child) {
    case Role::Covariate: return false;
    case Role::Exposure: return parent == Role::Covariate;
    case Role::Intermediate:
      return parent == Role::Covariate || parent == Role::Exposure || parent == Role::Intermediate;
    case Role::Mediator:
      return parent == Role::Covariate || parent == Role::Exposure || parent == Role::Intermediate;
    case Role::Outcome: return parent != Role::Outcome;
  }
  return false;
}

}  // namespace detail

inline ValidationReport validate_scm(const Scm& m) {
  ValidationReport rep;
  auto add = [&](std::string code, std::string detail) { rep.violations.push_back({std::move(code), std::move(detail)}); };

  std::map<std::string, const VariableDecl*> vars;
  std::map<Role, int> counts;
  for (const auto& v : m.variables) {
    if (!vars.emplace(v.var.name, &v).second) add("duplicate names", "variable " + v.var.name);
    ++counts[v.role];
    if (v.var.states.empty()) add("empty state set", v.var.name);
    std::set<std::string> labels(v.var.states.begin(), v.var.states.end());
    if (labels.size() != v.var.states.size()) add("duplicate state label", v.var.name);
    if (v.var.values.size() != v.var.states.size()) add("value arity", v.var.name);
  }
  for (Role r : {Role::Exposure, Role::Mediator, Role::Outcome})
    if (counts[r] != 1)
      add("role count", "expected exactly one " + std::string(role_code(r)) + " variable, found " +
                            std::to_string(counts[r]));
  for (const auto& v : m.variables)
    if (v.role == Role::Exposure && v.var.states != std::vector<std::string>{"0", "1"})
      add("exposure states", "exposure " + v.var.name + " must have states (0, 1)");

  std::map<std::string, const NoiseDecl*> noises;
  for (const auto& u : m.noises) {
    if (!noises.emplace(u.name, &u).second) add("duplicate names", "noise " + u.name);
    if (vars.count(u.name)) add("duplicate names", "noise " + u.name + " shadows a variable");
    if (u.support.size() != u.probs.size() || u.support.empty()) {
      add("noise arity", u.name);
      continue;
    }
    std::set<std::string> labels(u.support.begin(), u.support.end());
    if (labels.size() != u.support.size()) add("duplicate noise value", u.name);
    Rational s(0);
    for (const auto& p : u.probs) {
      if (p <= 0) add("non-positive noise probability", u.name);
      s += p;
    }
    if (s != 1) add("noise not normalized", u.name + " sums to " + to_string(s));
  }

  std::map<std::string, const Mechanism*> mechs;
  std::map<std::string, std::string> noise_owner;
  for (const auto& mech : m.mechanisms) {
    auto vit = vars.find(mech.variable);
    if (vit == vars.end()) {
      add("unknown variable", "mechanism for " + mech.variable);
      continue;
    }
    if (!mechs.emplace(mech.variable, &mech).second) add("duplicate names", "second mechanism for " + mech.variable);
    const Role child = vit->second->role;
    std::size_t rows = 1;
    bool parents_ok = true;
    std::set<std::string> seen;
    for (const auto& p : mech.parents) {
      auto pit = vars.find(p);
      if (pit == vars.end()) {
        add("unknown parent", p + " of " + mech.variable);
        parents_ok = false;
        continue;
      }
      if (!seen.insert(p).second) add("duplicate names", "parent " + p + " repeated for " + mech.variable);
      if (!detail::parent_allowed(child, pit->second->role) || p == mech.variable)
        add("role-ordering breach",
            p + " (" + std::string(role_code(pit->second->role)) + ") cannot be a parent of " + mech.variable + " (" +
                std::string(role_code(child)) + ")");
      rows *= std::max<std::size_t>(1, pit->second->var.size());
    }
    auto nit = noises.find(mech.noise);
    if (nit == noises.end()) {
      add("unknown noise", mech.noise + " for " + mech.variable);
      continue;
    }
    auto [oit, fresh] = noise_owner.emplace(mech.noise, mech.variable);
    if (!fresh) add("shared noise", mech.noise + " drives both " + oit->second + " and " + mech.variable);
    if (!parents_ok) continue;
    const std::size_t expected = rows * nit->second->support.size();
    if (mech.table.size() != expected) {
      add("missing table entry", mech.variable + " has " + std::to_string(mech.table.size()) + " of " +
                                     std::to_string(expected) + " entries");
      continue;
    }
    const int nstates = static_cast<int>(vit->second->var.size());
    std::size_t missing = 0;
    for (int s : mech.table) {
      if (s < 0) ++missing;
      else if (s >= nstates) add("invalid table entry", mech.variable + " maps to state index " + std::to_string(s));
    }
    if (missing) add("missing table entry", mech.variable + " lacks " + std::to_string(missing) + " entries");
  }
  for (const auto& v : m.variables)
    if (!mechs.count(v.var.name)) add("missing mechanism", v.var.name);
  for (const auto& u : m.noises)
    if (!noise_owner.count(u.name)) add("unused noise", u.name);

  // Cycles can only arise among intermediate confounders; the role order fixes everything else.
  std::map<std::string, std::set<std::string>> deps;
  for (const auto& [name, mech] : mechs)
    for (const auto& p : mech->parents)
      if (vars.count(p)) deps[name].insert(p);
  std::map<std::string, int> state;  // 0 new, 1 on stack, 2 done
  bool cyclic = false;
  std::function<void(const std::string&)> visit = [&](const std::string& n) {
    state[n] = 1;
    for (const auto& p : deps[n]) {
      if (state[p] == 1) cyclic = true;
      else if (state[p] == 0) visit(p);
    }
    state[n] = 2;
  };
  for (const auto& [name, v] : vars)
    if (state[name] == 0) visit(name);
  if (cyclic) add("cycle", "parent relation is cyclic");
  return rep;
}

// ---------------------------------------------------------------------------
// CPT sugar
// ---------------------------------------------------------------------------

enum class Coupling { Comonotone, Antitone };

/// Rows keyed by parent state indices (parents in declared order); each row is a
/// distribution over the variable's states.
using Cpt = std::map<Assignment, std::vector<Rational>>;

struct SugarResult {
  NoiseDecl noise;
  Mechanism mechanism;
};

/// Realizes a CPT with a single uniform noise on {0..D-1}, D the lcm of all row
/// denominators. Comonotone: inverse CDF in declared state order on every row.
/// Antitone: rows whose parent indices have an odd sum read the noise reversed.
inline SugarResult expand_cpt_sugar(const VariableDecl& var, const std::vector<VariableDecl>& parents, const Cpt& cpt,
                                    Coupling coupling = Coupling::Comonotone) {
  const std::string& name = var.var.name;
  const std::size_t k = var.var.size();
  BigInt d = 1;
  for (const auto& [row, probs] : cpt) {
    if (row.size() != parents.size()) throw ModelError("cpt for " + name + ": row arity differs from parent count");
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i] < 0 || static_cast<std::size_t>(row[i]) >= parents[i].var.size())
        throw ModelError("cpt for " + name + ": parent state out of range");
    if (probs.size() != k) throw ModelError("cpt for " + name + ": row has " + std::to_string(probs.size()) +
                                            " probabilities for " + std::to_string(k) + " states");
    Rational s(0);
    for (const auto& p : probs) {
      if (p < 0) throw ModelError("cpt for " + name + ": negative probability");
      s += p;
      d = boost::multiprecision::lcm(d, boost::multiprecision::denominator(p));
    }
    if (s != 1) throw ModelError("cpt for " + name + ": row not normalized (sums to " + to_string(s) + ")");
  }
  if (d > 100000000) throw ModelError("cpt for " + name + ": common denominator " + d.str() + " is too large");
  const std::size_t dn = d.convert_to<std::size_t>();

  SugarResult out;
  out.noise.name = "U_" + name;
  for (std::size_t u = 0; u < dn; ++u) {
    out.noise.support.push_back(std::to_string(u));
    out.noise.probs.push_back(Rational(1, static_cast<long>(dn)));
  }
  out.mechanism.variable = name;
  out.mechanism.noise = out.noise.name;
  std::size_t nrows = 1;
  for (const auto& p : parents) {
    out.mechanism.parents.push_back(p.var.name);
    nrows *= p.var.size();
  }
  out.mechanism.table.assign(nrows * dn, -1);
  for (const auto& [row, probs] : cpt) {
    std::size_t rank = 0;
    int parity = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      rank = rank * parents[i].var.size() + static_cast<std::size_t>(row[i]);
      parity += row[i];
    }
    const bool reversed = coupling == Coupling::Antitone && parity % 2 == 1;
    std::vector<std::size_t> cum;
    std::size_t c = 0;
    for (const auto& p : probs) {
      c += boost::multiprecision::numerator(p * Rational(BigInt(dn))).convert_to<std::size_t>();
      cum.push_back(c);
    }
    for (std::size_t u = 0; u < dn; ++u) {
      const std::size_t v = reversed ? dn - 1 - u : u;
      int s = 0;
      while (v >= cum[s]) ++s;
      out.mechanism.table[rank * dn + u] = s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Compiled model
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kDefaultEnumerationCap = 100000000ULL;

/// An immutable validated model with variables in canonical order C..., A, L..., M, Y
/// (intermediate confounders topologically sorted). Noise k belongs to variable k.
class Model {
 public:
  static Model compile(const Scm& scm) {
    auto rep = validate_scm(scm);
    if (!rep.ok()) throw ModelError("invalid model:\n" + rep.describe());
    Model m;
    m.scm_ = scm;
    m.name_ = scm.name;

    std::vector<const VariableDecl*> order;
    for (const auto& v : scm.variables)
      if (v.role == Role::Covariate) order.push_back(&v);
    for (const auto& v : scm.variables)
      if (v.role == Role::Exposure) order.push_back(&v);
    std::map<std::string, const Mechanism*> mech;
    for (const auto& mm : scm.mechanisms) mech[mm.variable] = &mm;
    std::vector<const VariableDecl*> ls;
    for (const auto& v : scm.variables)
      if (v.role == Role::Intermediate) ls.push_back(&v);
    std::set<std::string> placed;
    while (!ls.empty()) {
      for (auto it = ls.begin(); it != ls.end(); ++it) {
        const auto& ps = mech[(*it)->var.name]->parents;
        bool ready = std::all_of(ps.begin(), ps.end(), [&](const std::string& p) {
          const auto* pd = scm.find_variable(p);
          return pd->role != Role::Intermediate || placed.count(p);
        });
        if (ready) {
          order.push_back(*it);
          placed.insert((*it)->var.name);
          ls.erase(it);
          break;
        }
      }
    }
    for (Role r : {Role::Mediator, Role::Outcome})
      for (const auto& v : scm.variables)
        if (v.role == r) order.push_back(&v);

    for (std::size_t i = 0; i < order.size(); ++i) {
      m.vars_.push_back(order[i]->var);
      m.roles_.push_back(order[i]->role);
      m.index_[order[i]->var.name] = i;
      switch (order[i]->role) {
        case Role::Covariate: m.covariates_.push_back(i); break;
        case Role::Exposure: m.exposure_ = i; break;
        case Role::Intermediate: m.intermediates_.push_back(i); break;
        case Role::Mediator: m.mediator_ = i; break;
        case Role::Outcome: m.outcome_ = i; break;
      }
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
      const Mechanism& mm = *mech[order[i]->var.name];
      const NoiseDecl& nd = *scm.find_noise(mm.noise);
      Compiled c;
      for (const auto& p : mm.parents) c.parents.push_back(m.index_.at(p));
      c.strides.assign(c.parents.size(), 0);
      std::size_t stride = nd.support.size();
      for (std::size_t k = c.parents.size(); k-- > 0;) {
        c.strides[k] = stride;
        stride *= m.vars_[c.parents[k]].size();
      }
      c.table = mm.table;
      m.compiled_.push_back(std::move(c));
      m.noises_.push_back(nd);
    }
    return m;
  }

  const Scm& scm() const { return scm_; }
  const std::string& name() const { return name_; }
  const std::vector<Variable>& variables() const { return vars_; }
  std::size_t size() const { return vars_.size(); }
  Role role(std::size_t i) const { return roles_[i]; }
  std::size_t exposure() const { return exposure_; }
  std::size_t mediator() const { return mediator_; }
  std::size_t outcome() const { return outcome_; }
  const std::vector<std::size_t>& covariates() const { return covariates_; }
  const std::vector<std::size_t>& intermediates() const { return intermediates_; }
  /// Noise declarations, aligned with variables().
  const std::vector<NoiseDecl>& noises() const { return noises_; }

  std::size_t index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw InputError("unknown variable " + std::string(name));
    return it->second;
  }

  std::vector<std::string> names(const std::vector<std::size_t>& idx) const {
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(vars_[i].name);
    return out;
  }

  BigInt configuration_count() const {
    BigInt n = 1;
    for (const auto& u : noises_) n *= u.support.size();
    return n;
  }

  /// Pushes noise values `u` through the mechanisms. Variables with forced[i] >= 0
  /// take that state instead of their mechanism's output.
  void evaluate(const int* u, const int* forced, int* out) const {
    for (std::size_t i = 0; i < compiled_.size(); ++i) {
      if (forced && forced[i] >= 0) {
        out[i] = forced[i];
        continue;
      }
      const Compiled& c = compiled_[i];
      std::size_t idx = static_cast<std::size_t>(u[i]);
      for (std::size_t k = 0; k < c.parents.size(); ++k) idx += c.strides[k] * static_cast<std::size_t>(out[c.parents[k]]);
      out[i] = c.table[idx];
    }
  }

 private:
  struct Compiled {
    std::vector<std::size_t> parents;
    std::vector<std::size_t> strides;
    std::vector<int> table;
  };

  Scm scm_;
  std::string name_;
  std::vector<Variable> vars_;
  std::vector<Role> roles_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::size_t> covariates_, intermediates_;
  std::size_t exposure_ = 0, mediator_ = 0, outcome_ = 0;
  std::vector<Compiled> compiled_;
  std::vector<NoiseDecl> noises_;
};

// ---------------------------------------------------------------------------
// Noise enumeration
// ---------------------------------------------------------------------------

/// Every joint noise configuration with its probability, each exactly once, in
/// odometer order (last noise fastest).
template <Scalar T>
class NoiseConfigurations {
 public:
  struct Value {
    std::vector<int> assignment;
    T probability;
  };

  class iterator {
   public:
    using value_type = Value;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    const Value& operator*() const { return cur_; }
    const Value* operator->() const { return &cur_; }
    iterator& operator++() {
      advance();
      return *this;
    }
    void operator++(int) { advance(); }
    bool operator==(std::default_sentinel_t) const { return done_; }

   private:
    friend class NoiseConfigurations;
    explicit iterator(const NoiseConfigurations* owner) : owner_(owner) {
      const std::size_t n = owner_->probs_.size();
      cur_.assignment.assign(n, 0);
      prefix_.assign(n + 1, T(1));
      refresh(0);
    }
    void refresh(std::size_t from) {
      for (std::size_t i = from; i < cur_.assignment.size(); ++i)
        prefix_[i + 1] = prefix_[i] * owner_->probs_[i][cur_.assignment[i]];
      cur_.probability = prefix_.back();
    }
    void advance() {
      std::size_t i = cur_.assignment.size();
      while (i > 0) {
        --i;
        if (static_cast<std::size_t>(++cur_.assignment[i]) < owner_->probs_[i].size()) {
          refresh(i);
          return;
        }
        cur_.assignment[i] = 0;
      }
      done_ = true;
    }

    const NoiseConfigurations* owner_ = nullptr;
    Value cur_;
    std::vector<T> prefix_;
    bool done_ = false;
  };

  explicit NoiseConfigurations(const Model& m, std::uint64_t cap = kDefaultEnumerationCap) {
    const BigInt count = m.configuration_count();
    if (count > cap)
      throw EnumerationTooLarge("enumeration too large: " + count.str() + " noise configurations exceed the cap of " +
                                std::to_string(cap));
    count_ = count.convert_to<std::uint64_t>();
    for (const auto& u : m.noises()) {
      std::vector<T> ps;
      for (const auto& p : u.probs) ps.push_back(from_rational<T>(p));
      probs_.push_back(std::move(ps));
    }
  }

  iterator begin() const { return iterator(this); }
  std::default_sentinel_t end() const { return {}; }
  std::uint64_t size() const { return count_; }

 private:
  std::vector<std::vector<T>> probs_;
  std::uint64_t count_ = 0;
};

}  // namespace medid

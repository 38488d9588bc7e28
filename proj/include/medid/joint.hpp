#pragma once

#include "medid/errors.hpp"
#include "medid/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace medid {

/// State indices, one per variable of the owning table.
using Assignment = std::vector<int>;

/// A finite variable: ordered state labels with optional numeric values.
struct Variable {
  std::string name;
  std::vector<std::string> states;
  std::vector<std::optional<Rational>> values;

  std::size_t size() const { return states.size(); }

  int index_of(std::string_view label) const {
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i] == label) return static_cast<int>(i);
    return -1;
  }

  int require_state(std::string_view label) const {
    int k = index_of(label);
    if (k < 0) throw InputError("'" + std::string(label) + "' is not a state of " + name);
    return k;
  }

  bool operator==(const Variable&) const = default;
};

/// Builds a variable whose numeric values default to the labels that parse as rationals.
inline Variable make_variable(std::string name, std::vector<std::string> states,
                              std::vector<std::optional<Rational>> values = {}) {
  if (values.empty()) {
    values.reserve(states.size());
    for (const auto& s : states) values.push_back(parse_rational(s));
  }
  if (values.size() != states.size()) throw InputError("variable " + name + ": values and states differ in length");
  return Variable{std::move(name), std::move(states), std::move(values)};
}

/// Evidence as (variable name, state label) pairs.
using Evidence = std::vector<std::pair<std::string, std::string>>;

template <Scalar T>
class JointTable {
 public:
  using Entries = std::map<Assignment, T>;

  /// The table over no variables: unit mass on the empty assignment.
  JointTable() { entries_.emplace(Assignment{}, T(1)); }

  JointTable(std::vector<Variable> vars, Entries entries, double eps = kDefaultEpsilon)
      : vars_(std::move(vars)) {
    std::set<std::string> seen;
    for (const auto& v : vars_) {
      if (!seen.insert(v.name).second) throw InputError("duplicate variable " + v.name);
      if (v.states.empty()) throw InputError("variable " + v.name + " has no states");
    }
    T mass(0);
    for (auto& [a, p] : entries) {
      if (a.size() != vars_.size()) throw InputError("assignment arity does not match table variables");
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] < 0 || static_cast<std::size_t>(a[i]) >= vars_[i].size())
          throw InputError("state index out of range for " + vars_[i].name);
      if (p < 0) throw InputError("negative probability");
      if (is_zero(p)) continue;
      mass += p;
      entries_.emplace(a, std::move(p));
    }
    if (!near(mass, T(1), eps)) throw InputError("table mass is " + format_value(mass) + ", not 1");
  }

  const std::vector<Variable>& variables() const { return vars_; }
  const Entries& entries() const { return entries_; }
  std::size_t arity() const { return vars_.size(); }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i].name == name) return i;
    return std::nullopt;
  }

  std::size_t index_of(std::string_view name) const {
    auto i = find(name);
    if (!i) throw InputError("unknown variable " + std::string(name));
    return *i;
  }

  const Variable& variable(std::string_view name) const { return vars_[index_of(name)]; }

  T probability(const Assignment& a) const {
    auto it = entries_.find(a);
    return it == entries_.end() ? T(0) : it->second;
  }

  /// Probability of a partial assignment.
  T probability(const Evidence& e) const {
    auto idx = resolve(e);
    T s(0);
    for (const auto& [a, p] : entries_)
      if (matches(a, idx)) s += p;
    return s;
  }

  std::vector<std::pair<std::size_t, int>> resolve(const Evidence& e) const {
    std::vector<std::pair<std::size_t, int>> out;
    for (const auto& [name, label] : e) {
      std::size_t i = index_of(name);
      out.emplace_back(i, vars_[i].require_state(label));
    }
    return out;
  }

  static bool matches(const Assignment& a, const std::vector<std::pair<std::size_t, int>>& idx) {
    for (const auto& [i, s] : idx)
      if (a[i] != s) return false;
    return true;
  }

  bool operator==(const JointTable&) const = default;

 private:
  std::vector<Variable> vars_;
  Entries entries_;
};

namespace detail {

template <Scalar T>
std::vector<std::size_t> indices(const JointTable<T>& j, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw InputError("variable " + n + " listed twice");
    out.push_back(j.index_of(n));
  }
  return out;
}

inline Assignment project(const Assignment& a, const std::vector<std::size_t>& idx) {
  Assignment out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = a[idx[k]];
  return out;
}

inline std::string describe(const Evidence& e) {
  std::string s;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i) s += ",";
    s += e[i].first + "=" + e[i].second;
  }
  return s;
}

}  // namespace detail

/// Sums out every variable not in `keep`; the result follows `keep`'s order.
template <Scalar T>
JointTable<T> marginal(const JointTable<T>& j, const std::vector<std::string>& keep) {
  auto idx = detail::indices(j, keep);
  typename JointTable<T>::Entries out;
  for (const auto& [a, p] : j.entries()) out[detail::project(a, idx)] += p;
  std::vector<Variable> vars;
  for (auto i : idx) vars.push_back(j.variables()[i]);
  return JointTable<T>(std::move(vars), std::move(out), 1e-6);
}

/// Renormalized table over the remaining variables given `evidence`.
template <Scalar T>
JointTable<T> condition(const JointTable<T>& j, const Evidence& evidence) {
  auto ev = j.resolve(evidence);
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < j.arity(); ++i)
    if (std::none_of(ev.begin(), ev.end(), [&](const auto& e) { return e.first == i; })) rest.push_back(i);
  typename JointTable<T>::Entries out;
  T mass(0);
  for (const auto& [a, p] : j.entries()) {
    if (!JointTable<T>::matches(a, ev)) continue;
    mass += p;
    out[detail::project(a, rest)] += p;
  }
  if (is_zero(mass)) throw NullEventError("conditioning on null event " + detail::describe(evidence));
  for (auto& [a, p] : out) p /= mass;
  std::vector<Variable> vars;
  for (auto i : rest) vars.push_back(j.variables()[i]);
  return JointTable<T>(std::move(vars), std::move(out), 1e-6);
}

/// E[target | evidence], using the target's numeric state values.
template <Scalar T>
T conditional_expectation(const JointTable<T>& j, const std::string& target, const Evidence& evidence) {
  const std::size_t t = j.index_of(target);
  const Variable& var = j.variables()[t];
  for (const auto& v : var.values)
    if (!v) throw InputError("variable " + target + " has non-numeric states");
  auto ev = j.resolve(evidence);
  T mass(0), sum(0);
  for (const auto& [a, p] : j.entries()) {
    if (!JointTable<T>::matches(a, ev)) continue;
    mass += p;
    sum += p * from_rational<T>(*var.values[a[t]]);
  }
  if (is_zero(mass)) throw NullEventError("conditioning on null event " + detail::describe(evidence));
  return sum / mass;
}

/// For each positive-mass assignment of `given`, the target states with positive probability.
template <Scalar T>
std::map<Assignment, std::set<int>> support(const JointTable<T>& j, const std::string& target,
                                            const std::vector<std::string>& given) {
  const std::size_t t = j.index_of(target);
  auto g = detail::indices(j, given);
  std::map<Assignment, std::set<int>> out;
  for (const auto& [a, p] : j.entries()) out[detail::project(a, g)].insert(a[t]);
  return out;
}

/// Pointwise convex combination of tables over identical variables.
template <Scalar T>
JointTable<T> mixture(const std::vector<std::pair<T, JointTable<T>>>& parts, double eps = kDefaultEpsilon) {
  if (parts.empty()) throw InputError("mixture of no tables");
  T wsum(0);
  typename JointTable<T>::Entries out;
  for (const auto& [w, t] : parts) {
    if (w < 0) throw InputError("negative mixture weight");
    if (t.variables() != parts.front().second.variables()) throw InputError("mixture over mismatched variable sets");
    wsum += w;
    for (const auto& [a, p] : t.entries()) out[a] += w * p;
  }
  if (!near(wsum, T(1), eps)) throw InputError("mixture weights do not sum to 1");
  return JointTable<T>(parts.front().second.variables(), std::move(out), eps);
}

template <Scalar U, Scalar T>
JointTable<U> convert(const JointTable<T>& j) {
  if constexpr (std::same_as<U, T>) {
    return j;
  } else {
    typename JointTable<U>::Entries out;
    for (const auto& [a, p] : j.entries()) {
      if constexpr (is_exact_v<U>) {
        out.emplace(a, Rational(p));
      } else {
        out.emplace(a, to_double(p));
      }
    }
    return JointTable<U>(j.variables(), std::move(out), 1e-6);
  }
}

/// A family of conditional distributions P(target | given), one row per positive-mass given cell.
template <Scalar T>
struct CondTable {
  std::vector<Variable> target;
  std::vector<Variable> given;
  std::map<Assignment, std::map<Assignment, T>> rows;

  const std::map<Assignment, T>* row(const Assignment& g) const {
    auto it = rows.find(g);
    return it == rows.end() ? nullptr : &it->second;
  }

  std::set<Assignment> domain() const {
    std::set<Assignment> d;
    for (const auto& [g, r] : rows) d.insert(g);
    return d;
  }

  bool operator==(const CondTable&) const = default;
};

template <Scalar T>
CondTable<T> conditional(const JointTable<T>& j, const std::vector<std::string>& target,
                         const std::vector<std::string>& given) {
  auto ti = detail::indices(j, target);
  auto gi = detail::indices(j, given);
  CondTable<T> out;
  for (auto i : ti) out.target.push_back(j.variables()[i]);
  for (auto i : gi) out.given.push_back(j.variables()[i]);
  std::map<Assignment, T> mass;
  for (const auto& [a, p] : j.entries()) {
    auto g = detail::project(a, gi);
    mass[g] += p;
    out.rows[g][detail::project(a, ti)] += p;
  }
  for (auto& [g, r] : out.rows)
    for (auto& [t, p] : r) p /= mass[g];
  return out;
}

template <Scalar U, Scalar T>
CondTable<U> convert(const CondTable<T>& c) {
  CondTable<U> out{c.target, c.given, {}};
  for (const auto& [g, r] : c.rows)
    for (const auto& [t, p] : r) {
      if constexpr (std::same_as<U, T>) {
        out.rows[g][t] = p;
      } else if constexpr (is_exact_v<U>) {
        out.rows[g][t] = Rational(p);
      } else {
        out.rows[g][t] = to_double(p);
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Tab-separated serialization
// ---------------------------------------------------------------------------

template <Scalar T>
std::string probability_text(const T& p) {
  if constexpr (is_exact_v<T>) {
    return to_string(p);
  } else {
    return format_double(p, 17);
  }
}

template <Scalar T>
std::string write_tsv(const JointTable<T>& j) {
  std::string out;
  for (const auto& v : j.variables()) out += v.name + "\t";
  out += "prob\n";
  for (const auto& [a, p] : j.entries()) {
    for (std::size_t i = 0; i < a.size(); ++i) out += j.variables()[i].states[a[i]] + "\t";
    out += probability_text(p) + "\n";
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto k = line.find(sep, start);
    out.emplace_back(line.substr(start, k == std::string_view::npos ? std::string_view::npos : k - start));
    if (k == std::string_view::npos) break;
    start = k + 1;
  }
  return out;
}

inline std::vector<std::string> lines(std::string_view text) {
  std::vector<std::string> out;
  for (auto& l : split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

inline const Variable& lookup(const std::vector<Variable>& declared, const std::string& name) {
  for (const auto& v : declared)
    if (v.name == name) return v;
  throw InputError("unknown variable " + name);
}

struct RawTsv {
  std::vector<Variable> vars;
  std::vector<std::pair<Assignment, Rational>> rows;
};

inline RawTsv read_raw_tsv(std::string_view text, const std::vector<Variable>& declared) {
  auto ls = lines(text);
  if (ls.empty()) throw InputError("empty table file");
  auto header = split(ls[0], '\t');
  if (header.empty() || header.back() != "prob") throw InputError("table header must end with a 'prob' column");
  RawTsv raw;
  for (std::size_t i = 0; i + 1 < header.size(); ++i) raw.vars.push_back(lookup(declared, header[i]));
  for (std::size_t r = 1; r < ls.size(); ++r) {
    auto cells = split(ls[r], '\t');
    if (cells.size() != header.size())
      throw InputError("table line " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(header.size()));
    Assignment a;
    for (std::size_t i = 0; i < raw.vars.size(); ++i) a.push_back(raw.vars[i].require_state(cells[i]));
    auto p = parse_rational(cells.back());
    if (!p) throw InputError("table line " + std::to_string(r + 1) + ": probability '" + cells.back() +
                             "' is not an exact rational n/d");
    raw.rows.emplace_back(std::move(a), *p);
  }
  return raw;
}

}  // namespace detail

/// Reads a joint written by write_tsv; columns must be declared variables.
inline JointTable<Rational> read_joint_tsv(std::string_view text, const std::vector<Variable>& declared) {
  auto raw = detail::read_raw_tsv(text, declared);
  JointTable<Rational>::Entries e;
  for (auto& [a, p] : raw.rows)
    if (!e.emplace(a, p).second) throw InputError("repeated assignment in table");
  return JointTable<Rational>(raw.vars, std::move(e));
}

/// Reads P(target | other columns); every row must sum to exactly 1.
inline CondTable<Rational> read_cond_tsv(std::string_view text, const std::vector<Variable>& declared,
                                         const std::string& target) {
  auto raw = detail::read_raw_tsv(text, declared);
  std::ptrdiff_t t = -1;
  for (std::size_t i = 0; i < raw.vars.size(); ++i)
    if (raw.vars[i].name == target) t = static_cast<std::ptrdiff_t>(i);
  if (t < 0) throw InputError("table has no column for " + target);
  CondTable<Rational> out;
  out.target.push_back(raw.vars[t]);
  for (std::size_t i = 0; i < raw.vars.size(); ++i)
    if (static_cast<std::ptrdiff_t>(i) != t) out.given.push_back(raw.vars[i]);
  for (auto& [a, p] : raw.rows) {
    if (p < 0) throw InputError("negative probability in conditional table");
    Assignment g;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (static_cast<std::ptrdiff_t>(i) != t) g.push_back(a[i]);
    auto& row = out.rows[g];
    if (row.count({a[t]})) throw InputError("repeated assignment in table");
    if (p != 0) row[{a[t]}] = p;
  }
  for (const auto& [g, row] : out.rows) {
    Rational s(0);
    for (const auto& [k, p] : row) s += p;
    if (s != 1) throw InputError("conditional table row does not sum to 1");
  }
  return out;
}

template <Scalar T>
std::string write_cond_tsv(const CondTable<T>& c) {
  std::string out;
  for (const auto& v : c.given) out += v.name + "\t";
  for (const auto& v : c.target) out += v.name + "\t";
  out += "prob\n";
  for (const auto& [g, row] : c.rows)
    for (const auto& [t, p] : row) {
      for (std::size_t i = 0; i < g.size(); ++i) out += c.given[i].states[g[i]] + "\t";
      for (std::size_t i = 0; i < t.size(); ++i) out += c.target[i].states[t[i]] + "\t";
      out += probability_text(p) + "\n";
    }
  return out;
}

}  // namespace medid

#pragma once

#include "medid/evaluate.hpp"
#include "medid/joint.hpp"
#include "medid/scm.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace medid {

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Output number `counter` of the SplitMix64 sequence started at `seed`:
/// mix64(seed + (counter + 1) * 0x9E3779B97F4A7C15). Random access, so any
/// row can be drawn without touching the others.
inline std::uint64_t splitmix_at(std::uint64_t seed, std::uint64_t counter) {
  return mix64(seed + (counter + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Exact uniform draw on [0, d) for noise `k` of row `row`. Words at or above the
/// largest multiple of d are rejected and the next attempt is drawn.
inline std::uint64_t uniform_below(std::uint64_t seed, std::uint64_t row, std::uint64_t k, std::uint64_t n_noise,
                                   std::uint64_t d) {
  const std::uint64_t limit = d == 0 ? 0 : std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % d;
  std::uint64_t x = 0;
  for (std::uint64_t attempt = 0; attempt < 256; ++attempt) {
    x = splitmix_at(seed, ((row * n_noise + k) << 8) | attempt);
    if (x < limit) break;
  }
  return x % d;
}

/// Inverse-CDF table of one noise: common denominator and cumulative numerators.
struct NoiseSampler {
  std::uint64_t denominator = 1;
  std::vector<std::uint64_t> cumulative;

  static NoiseSampler build(const NoiseDecl& n) {
    BigInt d = 1;
    for (const auto& p : n.probs) d = boost::multiprecision::lcm(d, BigInt(boost::multiprecision::denominator(p)));
    if (d > BigInt(std::numeric_limits<std::uint64_t>::max()))
      throw InputError("noise " + n.name + ": common denominator exceeds 64 bits");
    NoiseSampler s;
    s.denominator = d.convert_to<std::uint64_t>();
    BigInt acc = 0;
    for (const auto& p : n.probs) {
      acc += boost::multiprecision::numerator(p) * (d / boost::multiprecision::denominator(p));
      s.cumulative.push_back(acc.convert_to<std::uint64_t>());
    }
    return s;
  }

  int pick(std::uint64_t u) const {
    return static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
  }
};

struct Dataset {
  std::vector<VariableDecl> columns;
  std::vector<std::vector<int>> rows;  // state indices
  std::string model;
  std::optional<std::uint64_t> seed;

  std::size_t n() const { return rows.size(); }
  std::vector<Variable> variables() const {
    std::vector<Variable> out;
    for (const auto& c : columns) out.push_back(c.var);
    return out;
  }
};

/// n i.i.d. units: every noise drawn independently, pushed through the mechanisms.
/// Row i depends only on (seed, i), so the result does not depend on `threads`.
inline Dataset sample_dataset(const Model& m, std::size_t n, std::uint64_t seed, unsigned threads = 0) {
  if (n == 0) throw InputError("sample size must be at least 1");
  std::vector<NoiseSampler> samplers;
  for (const auto& u : m.noises()) samplers.push_back(NoiseSampler::build(u));
  const std::uint64_t k = samplers.size();
  if (n > (std::numeric_limits<std::uint64_t>::max() >> 8) / std::max<std::uint64_t>(k, 1))
    throw InputError("sample size too large for the counter layout");

  Dataset ds;
  for (std::size_t i = 0; i < m.size(); ++i) ds.columns.push_back({m.variables()[i], m.role(i)});
  ds.model = m.name();
  ds.seed = seed;
  ds.rows.assign(n, std::vector<int>(m.size()));

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<int> u(k);
    for (std::size_t r = begin; r < end; ++r) {
      for (std::uint64_t j = 0; j < k; ++j) u[j] = samplers[j].pick(uniform_below(seed, r, j, k, samplers[j].denominator));
      m.evaluate(u.data(), nullptr, ds.rows[r].data());
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk, e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return ds;
}

inline std::string write_csv(const Dataset& d) {
  std::string out;
  for (std::size_t i = 0; i < d.columns.size(); ++i) out += (i ? "," : "") + d.columns[i].var.name;
  out += "\n";
  for (const auto& r : d.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ",";
      out += d.columns[i].var.states[static_cast<std::size_t>(r[i])];
    }
    out += "\n";
  }
  return out;
}

/// Reads a CSV whose header names exactly the declared variables (any order).
/// Cells must be declared state labels.
inline Dataset read_csv(const std::string& text, const std::vector<VariableDecl>& declared) {
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  };
  if (!std::getline(in, line)) throw InputError("csv: missing header");
  const auto header = split(line);
  Dataset d;
  d.columns = declared;
  std::vector<std::size_t> pos(header.size());
  std::vector<bool> seen(declared.size(), false);
  for (std::size_t h = 0; h < header.size(); ++h) {
    auto it = std::find_if(declared.begin(), declared.end(), [&](const VariableDecl& v) { return v.var.name == header[h]; });
    if (it == declared.end()) throw InputError("csv: undeclared column " + header[h]);
    pos[h] = static_cast<std::size_t>(it - declared.begin());
    if (seen[pos[h]]) throw InputError("csv: duplicate column " + header[h]);
    seen[pos[h]] = true;
  }
  for (std::size_t i = 0; i < declared.size(); ++i)
    if (!seen[i]) throw InputError("csv: missing column " + declared[i].var.name);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw InputError("csv line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields");
    std::vector<int> row(declared.size());
    for (std::size_t h = 0; h < cells.size(); ++h) {
      const auto& v = declared[pos[h]].var;
      const int s = v.index_of(cells[h]);
      if (s < 0) throw InputError("csv line " + std::to_string(lineno) + ": '" + cells[h] + "' is not a state of " + v.name);
      row[pos[h]] = s;
    }
    d.rows.push_back(std::move(row));
  }
  return d;
}

/// Empirical joint: counts / n, absent cells stay absent.
template <Scalar T>
JointTable<T> fit_frequency_joint(const Dataset& d) {
  if (d.n() == 0) throw InputError("empty dataset");
  std::map<Assignment, std::uint64_t> counts;
  for (const auto& r : d.rows) ++counts[r];
  typename JointTable<T>::Entries e;
  for (const auto& [a, c] : counts) {
    const Rational p(BigInt(c), BigInt(d.n()));
    e[a] = from_rational<T>(p);
  }
  return JointTable<T>(d.variables(), std::move(e));
}

template <Scalar T>
struct PluginResult {
  T value;
  /// Declared covariate cells with no observed unit; they carry no weight.
  std::vector<std::string> empty_cells;
};

/// Plug-in estimate: the identification functional evaluated on the empirical joint.
/// Empirical positivity failures propagate as PositivityError.
template <Scalar T>
PluginResult<T> plugin_estimate(const Dataset& d, const EstimandExpr& expr) {
  IdentInput<T> in(fit_frequency_joint<T>(d), roles_of(d.columns));
  PluginResult<T> out{evaluate_ident<T>(expr, in), {}};
  const auto cvars = in.covariate_vars();
  std::vector<std::size_t> radix;
  for (const auto& v : cvars) radix.push_back(v.size());
  Assignment c(cvars.size(), 0);
  while (true) {
    if (!in.c_mass().count(c)) out.empty_cells.push_back(in.cell(c).describe());
    std::size_t k = c.size();
    while (k > 0 && ++c[k - 1] == static_cast<int>(radix[k - 1])) c[--k] = 0;
    if (k == 0) break;
  }
  return out;
}

}  // namespace medid

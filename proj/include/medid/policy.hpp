#pragma once

#include "medid/errors.hpp"
#include "medid/joint.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace medid {

/// What an interventional mediator distribution may condition on.
enum class PolicyConditioning { Marginal, C, CL };

inline std::string_view conditioning_name(PolicyConditioning c) {
  switch (c) {
    case PolicyConditioning::Marginal: return "marginal";
    case PolicyConditioning::C: return "C";
    case PolicyConditioning::CL: return "CL";
  }
  return "?";
}

inline PolicyConditioning parse_conditioning(std::string_view s) {
  if (s == "marginal") return PolicyConditioning::Marginal;
  if (s == "C") return PolicyConditioning::C;
  if (s == "CL") return PolicyConditioning::CL;
  throw InputError("conditioning must be marginal, C or CL, not '" + std::string(s) + "'");
}

/// A known mediator distribution: P(M | given) with given columns in canonical
/// order (covariates, then intermediate confounders).
struct KnownPolicy {
  std::string source;
  PolicyConditioning conditioning = PolicyConditioning::Marginal;
  CondTable<Rational> table;

  bool operator==(const KnownPolicy& o) const {
    return source == o.source && conditioning == o.conditioning && table == o.table;
  }
};

/// Reorders the given columns of a policy table to (covariates..., intermediates...)
/// and infers its conditioning. The given set must be empty, all of C, or all of C and L.
inline KnownPolicy make_policy(std::string source, const CondTable<Rational>& raw,
                               const std::vector<std::string>& covariates,
                               const std::vector<std::string>& intermediates, const std::string& mediator) {
  if (raw.target.size() != 1 || raw.target[0].name != mediator)
    throw InputError("policy " + source + " must be a distribution over " + mediator);
  std::vector<std::string> want;
  PolicyConditioning cond = PolicyConditioning::Marginal;
  if (raw.given.size() == covariates.size() && !covariates.empty()) {
    want = covariates;
    cond = PolicyConditioning::C;
  } else if (raw.given.size() == covariates.size() + intermediates.size() && !raw.given.empty()) {
    want = covariates;
    want.insert(want.end(), intermediates.begin(), intermediates.end());
    cond = PolicyConditioning::CL;
  } else if (!raw.given.empty()) {
    throw InputError("policy " + source + " must condition on nothing, on all of C, or on all of C and L");
  }
  std::vector<std::size_t> perm;
  for (const auto& w : want) {
    std::size_t k = raw.given.size();
    for (std::size_t i = 0; i < raw.given.size(); ++i)
      if (raw.given[i].name == w) k = i;
    if (k == raw.given.size())
      throw InputError("policy " + source + " must condition on nothing, on all of C, or on all of C and L");
    perm.push_back(k);
  }
  KnownPolicy p;
  p.source = std::move(source);
  p.conditioning = cond;
  p.table.target = raw.target;
  for (auto k : perm) p.table.given.push_back(raw.given[k]);
  for (const auto& [g, row] : raw.rows) {
    Assignment ng;
    for (auto k : perm) ng.push_back(g[k]);
    p.table.rows[ng] = row;
  }
  return p;
}

/// A point-mass policy at mediator state m (conditioning on nothing).
inline KnownPolicy point_mass_policy(const Variable& mediator, int m) {
  KnownPolicy p;
  p.source = "point:" + mediator.states[m];
  p.table.target = {mediator};
  p.table.rows[{}][{m}] = Rational(1);
  return p;
}

}  // namespace medid

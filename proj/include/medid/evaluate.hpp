#pragma once

#include "medid/estimand.hpp"
#include "medid/ident.hpp"
#include "medid/oracle.hpp"

#include <string>

namespace medid {

namespace detail {

/// Re-throws an evaluation failure with the offending term prefixed.
template <class F>
auto annotate(const Quantity& q, F&& f) -> decltype(f()) {
  const std::string where = label(q) + ": ";
  try {
    return f();
  } catch (const PositivityError& e) {
    throw PositivityError(where + e.requirement(), e.witnesses());
  } catch (const PolicyDomainGap& e) {
    throw PolicyDomainGap(e.witnesses());
  } catch (const IdentificationError& e) {
    throw IdentificationError(where + e.what());
  } catch (const NullEventError& e) {
    throw NullEventError(where + e.what());
  }
}

}  // namespace detail

/// Ground truth for one potential-outcome mean.
template <Scalar T>
T oracle_value(const Quantity& q, const Model& m, std::uint64_t cap = kDefaultEnumerationCap) {
  struct V {
    const Model& m;
    std::uint64_t cap;
    T operator()(const MeanA& t) const { return po_mean_a<T>(m, t.a, cap); }
    T operator()(const MeanAM& t) const { return po_mean_am<T>(m, t.a, t.m, cap); }
    T operator()(const MeanKnown& t) const { return po_mean_policy<T>(m, t.a, *t.policy, cap); }
    T operator()(const MeanPotential& t) const {
      KnownPolicy p;
      p.source = "M[" + std::to_string(t.a_star) + "]";
      p.conditioning = t.cond;
      p.table = potential_mediator_dist<Rational>(m, t.a_star, t.cond, cap);
      return po_mean_policy<T>(m, t.a, p, cap);
    }
    T operator()(const MeanCrossWorld& t) const { return po_mean_crossworld<T>(m, t.a, t.a_prime, cap); }
  };
  return detail::annotate(q, [&] { return std::visit(V{m, cap}, q); });
}

/// Identified value of one potential-outcome mean from the observed joint.
template <Scalar T>
T ident_value(const Quantity& q, const IdentInput<T>& in) {
  struct V {
    const IdentInput<T>& in;
    T operator()(const MeanA& t) const { return identify_po_a(in, t.a); }
    T operator()(const MeanAM& t) const { return identify_po_am(in, t.a, t.m); }
    T operator()(const MeanKnown& t) const { return identify_po_policy_known(in, t.a, *t.policy); }
    T operator()(const MeanPotential& t) const { return identify_po_policy_potential(in, t.a, t.a_star, t.cond); }
    T operator()(const MeanCrossWorld& t) const { return identify_po_crossworld(in, t.a, t.a_prime); }
  };
  return detail::annotate(q, [&] { return std::visit(V{in}, q); });
}

template <Scalar T>
T evaluate_oracle(const EstimandExpr& e, const Model& m, std::uint64_t cap = kDefaultEnumerationCap) {
  T sum(0);
  for (const auto& t : e.terms) sum += from_rational<T>(t.coefficient()) * oracle_value<T>(t.quantity, m, cap);
  return sum;
}

template <Scalar T>
T evaluate_ident(const EstimandExpr& e, const IdentInput<T>& in) {
  T sum(0);
  for (const auto& t : e.terms) sum += from_rational<T>(t.coefficient()) * ident_value<T>(t.quantity, in);
  return sum;
}

template <Scalar T>
IdentInput<T> ident_input(const Model& m, std::uint64_t cap = kDefaultEnumerationCap) {
  return IdentInput<T>(observed_joint<T>(m, cap), roles_of(m));
}

}  // namespace medid

#pragma once

#include "medid/errors.hpp"
#include "medid/joint.hpp"
#include "medid/policy.hpp"
#include "medid/rational.hpp"

#include <cctype>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace medid {

/// E[Y_a]
struct MeanA {
  int a;
};
/// E[Y_{am}]
struct MeanAM {
  int a;
  std::string m;
};
/// E[Y_{aM}] for a known mediator distribution.
struct MeanKnown {
  int a;
  std::shared_ptr<const KnownPolicy> policy;
};
/// E[Y_{aM}] with M drawn from the law of M_{a*} (marginal, given C, or given C and L_{a*}).
struct MeanPotential {
  int a;
  int a_star;
  PolicyConditioning cond;
};
/// E[Y_{aM_{a'}}]
struct MeanCrossWorld {
  int a;
  int a_prime;
};

using Quantity = std::variant<MeanA, MeanAM, MeanKnown, MeanPotential, MeanCrossWorld>;

inline int exposure_of(const Quantity& q) {
  return std::visit([](const auto& t) { return t.a; }, q);
}

inline std::string label(const Quantity& q) {
  struct V {
    std::string operator()(const MeanA& t) const { return "EY(" + std::to_string(t.a) + ")"; }
    std::string operator()(const MeanAM& t) const { return "EY(" + std::to_string(t.a) + ",m=" + t.m + ")"; }
    std::string operator()(const MeanKnown& t) const {
      return "EY(" + std::to_string(t.a) + ",pol=known:" + t.policy->source + ",cond=" +
             std::string(conditioning_name(t.policy->conditioning)) + ")";
    }
    std::string operator()(const MeanPotential& t) const {
      return "EY(" + std::to_string(t.a) + ",pol=pot:" + std::to_string(t.a_star) + ",cond=" +
             std::string(conditioning_name(t.cond)) + ")";
    }
    std::string operator()(const MeanCrossWorld& t) const {
      return "XW(" + std::to_string(t.a) + "," + std::to_string(t.a_prime) + ")";
    }
  };
  return std::visit(V{}, q);
}

inline bool same_quantity(const Quantity& x, const Quantity& y) { return label(x) == label(y); }

struct PoTerm {
  Quantity quantity;
  int sign = +1;
  Rational weight = 1;

  Rational coefficient() const { return sign < 0 ? Rational(-weight) : weight; }
};

struct EstimandExpr {
  std::vector<PoTerm> terms;
  std::optional<std::string> name;

  std::string label() const {
    if (name) return *name;
    std::string s;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const auto& t = terms[i];
      if (i) s += t.sign < 0 ? " - " : " + ";
      else if (t.sign < 0) s += "-";
      if (t.weight != 1) s += to_string(t.weight) + "*";
      s += medid::label(t.quantity);
    }
    return s;
  }

  /// Distinct quantities in order of first appearance.
  std::vector<Quantity> quantities() const {
    std::vector<Quantity> out;
    for (const auto& t : terms) {
      bool seen = false;
      for (const auto& q : out) seen = seen || same_quantity(q, t.quantity);
      if (!seen) out.push_back(t.quantity);
    }
    return out;
  }
};

/// Optional context for parsing: mediator states to validate m labels and a
/// loader for known-policy files.
struct ParseContext {
  const Variable* mediator = nullptr;
  std::function<KnownPolicy(const std::string& source)> load_policy;
};

namespace detail {

class EstimandParser {
 public:
  EstimandParser(std::string_view text, const ParseContext& ctx) : s_(text), ctx_(ctx) {}

  EstimandExpr parse() {
    EstimandExpr e;
    skip();
    int sign = +1;
    if (peek() == '-' || peek() == '+') {
      sign = get() == '-' ? -1 : +1;
      skip();
    }
    std::size_t items = 0;
    std::optional<std::string> only_name;
    while (true) {
      auto [weight, terms, name] = item();
      ++items;
      only_name = (items == 1 && sign > 0 && weight == 1) ? name : std::nullopt;
      for (auto& t : terms) {
        t.sign *= sign;
        t.weight *= weight;
        e.terms.push_back(std::move(t));
      }
      skip();
      if (pos_ == s_.size()) break;
      char c = get();
      if (c != '+' && c != '-') fail("expected '+', '-' or end of input", pos_ - 1);
      sign = c == '-' ? -1 : +1;
      skip();
    }
    if (items == 1) e.name = only_name;
    return e;
  }

 private:
  struct Item {
    Rational weight;
    std::vector<PoTerm> terms;
    std::optional<std::string> name;
  };

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const { throw ParseError(msg, at); }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  char get() { return pos_ < s_.size() ? s_[pos_++] : '\0'; }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip();
    if (peek() != c) fail(std::string("expected '") + c + "'", pos_);
    ++pos_;
    skip();
  }

  std::string ident() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (start == pos_) fail("expected a name", start);
    return std::string(s_.substr(start, pos_ - start));
  }

  /// Raw argument text up to the next ',' or ')' (trimmed).
  std::string raw(const char* what) {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ')') ++pos_;
    std::string v(s_.substr(start, pos_ - start));
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.pop_back();
    if (v.empty()) fail(std::string("expected ") + what, start);
    return v;
  }

  int exposure() {
    skip();
    std::size_t at = pos_;
    char c = get();
    if (c != '0' && c != '1') fail("exposure level must be 0 or 1", at);
    if (std::isalnum(static_cast<unsigned char>(peek()))) fail("exposure level must be 0 or 1", at);
    return c - '0';
  }

  std::string mediator_state(std::size_t at, std::string m) {
    if (ctx_.mediator && ctx_.mediator->index_of(m) < 0) fail("unknown mediator state '" + m + "'", at);
    return m;
  }

  std::shared_ptr<const KnownPolicy> known(const std::string& source, std::optional<PolicyConditioning> cond,
                                           std::size_t at) {
    KnownPolicy p;
    if (ctx_.load_policy) {
      p = ctx_.load_policy(source);
      if (cond && *cond != p.conditioning)
        fail("policy " + source + " conditions on " + std::string(conditioning_name(p.conditioning)) + ", not " +
                 std::string(conditioning_name(*cond)),
             at);
    } else {
      p.source = source;
      p.conditioning = cond.value_or(PolicyConditioning::Marginal);
    }
    p.source = source;
    return std::make_shared<const KnownPolicy>(std::move(p));
  }

  std::optional<PolicyConditioning> cond_arg() {
    skip();
    std::size_t at = pos_;
    std::string v = raw("a conditioning set");
    try {
      return parse_conditioning(v);
    } catch (const InputError&) {
      fail("conditioning must be marginal, C or CL", at);
    }
  }

  Quantity ey() {
    expect('(');
    int a = exposure();
    skip();
    std::optional<std::string> m;
    std::optional<std::string> pol;
    std::optional<PolicyConditioning> cond;
    std::size_t pol_at = 0;
    while (peek() == ',') {
      ++pos_;
      skip();
      std::size_t at = pos_;
      std::string key = ident();
      expect('=');
      if (key == "m" && !m) {
        std::size_t mat = pos_;
        m = mediator_state(mat, raw("a mediator state"));
      } else if (key == "pol" && !pol) {
        pol_at = pos_;
        pol = raw("a policy");
      } else if (key == "cond" && !cond) {
        cond = cond_arg();
      } else {
        fail("unexpected argument '" + key + "'", at);
      }
      skip();
    }
    expect(')');
    if (m && (pol || cond)) fail("EY takes either m= or pol=, not both", pol_at);
    if (m) return MeanAM{a, *m};
    if (!pol) {
      if (cond) fail("cond= needs pol=", pol_at);
      return MeanA{a};
    }
    if (pol->rfind("known:", 0) == 0) {
      std::string src = pol->substr(6);
      if (src.empty()) fail("known policy needs a file", pol_at);
      return MeanKnown{a, known(src, cond, pol_at)};
    }
    if (pol->rfind("pot:", 0) == 0) {
      std::string as = pol->substr(4);
      if (as != "0" && as != "1") fail("pot: needs exposure level 0 or 1", pol_at);
      return MeanPotential{a, as[0] - '0', cond.value_or(PolicyConditioning::C)};
    }
    fail("policy must be known:<file> or pot:<a*>", pol_at);
  }

  static PoTerm pos(Quantity q) { return PoTerm{std::move(q), +1, 1}; }
  static PoTerm neg(Quantity q) { return PoTerm{std::move(q), -1, 1}; }

  Item item() {
    Rational weight = 1;
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '/')) ++pos_;
      auto w = parse_rational(s_.substr(start, pos_ - start));
      if (!w) fail("malformed weight", start);
      weight = *w;
      expect('*');
    }
    std::size_t at = pos_;
    std::string head = ident();
    skip();
    Item it{weight, {}, std::nullopt};
    auto pot = [](int a, int s) { return MeanPotential{a, s, PolicyConditioning::C}; };
    auto level_suffix = [&](const std::string& base) -> std::optional<int> {
      if (head.size() == base.size() + 1 && head.compare(0, base.size(), base) == 0 &&
          (head.back() == '0' || head.back() == '1'))
        return head.back() - '0';
      return std::nullopt;
    };
    auto level_arg = [&](const std::string& base) {
      auto s = level_suffix(base);
      if (s) return *s;
      expect('(');
      int a = exposure();
      expect(')');
      return a;
    };

    if (head == "EY") {
      it.terms = {pos(ey())};
    } else if (head == "XW") {
      expect('(');
      int a = exposure();
      expect(',');
      std::size_t at2 = pos_;
      int b = exposure();
      expect(')');
      if (a == b) fail("XW(a,a') needs a != a'", at2);
      it.terms = {pos(MeanCrossWorld{a, b})};
    } else if (head == "TE") {
      it.terms = {pos(MeanA{1}), neg(MeanA{0})};
      it.name = "TE";
    } else if (head == "CDE") {
      expect('(');
      std::size_t mat = pos_;
      std::string m = mediator_state(mat, raw("a mediator state"));
      expect(')');
      it.terms = {pos(MeanAM{1, m}), neg(MeanAM{0, m})};
      it.name = "CDE(" + m + ")";
    } else if (head == "GDE") {
      expect('(');
      std::size_t kat = pos_;
      std::string key = ident();
      if (key != "policy") fail("GDE takes policy=<file>", kat);
      expect('=');
      std::size_t pat = pos_;
      std::string src = raw("a policy file");
      std::optional<PolicyConditioning> cond;
      skip();
      if (peek() == ',') {
        ++pos_;
        skip();
        std::size_t cat = pos_;
        if (ident() != "cond") fail("unexpected argument", cat);
        expect('=');
        cond = cond_arg();
      }
      expect(')');
      auto p = known(src, cond, pat);
      it.terms = {pos(MeanKnown{1, p}), neg(MeanKnown{0, p})};
      it.name = "GDE(" + src + ")";
    } else if (head == "IDE" || level_suffix("IDE")) {
      int s = level_arg("IDE");
      it.terms = {pos(pot(1, s)), neg(pot(0, s))};
      it.name = "IDE" + std::to_string(s);
    } else if (head == "IIE" || level_suffix("IIE")) {
      int a = level_arg("IIE");
      it.terms = {pos(pot(a, 1)), neg(pot(a, 0))};
      it.name = "IIE" + std::to_string(a);
    } else if (head == "NDE0") {
      it.terms = {pos(MeanCrossWorld{1, 0}), neg(MeanA{0})};
      it.name = head;
    } else if (head == "NIE1") {
      it.terms = {pos(MeanA{1}), neg(MeanCrossWorld{1, 0})};
      it.name = head;
    } else if (head == "NDE1") {
      it.terms = {pos(MeanA{1}), neg(MeanCrossWorld{0, 1})};
      it.name = head;
    } else if (head == "NIE0") {
      it.terms = {pos(MeanCrossWorld{0, 1}), neg(MeanA{0})};
      it.name = head;
    } else {
      fail("unknown estimand '" + head + "'", at);
    }
    return it;
  }

  std::string_view s_;
  const ParseContext& ctx_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline EstimandExpr parse_estimand(std::string_view text, const ParseContext& ctx = {}) {
  return detail::EstimandParser(text, ctx).parse();
}

/// Concatenation of two expressions (the sum of their values).
inline EstimandExpr concat(const EstimandExpr& x, const EstimandExpr& y) {
  EstimandExpr e;
  e.terms = x.terms;
  e.terms.insert(e.terms.end(), y.terms.begin(), y.terms.end());
  return e;
}

}  // namespace medid

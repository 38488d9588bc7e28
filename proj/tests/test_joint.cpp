#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace medid;
using namespace medid::testing;

namespace {

JointTable<Rational> two_by_two() {
  // X, Y binary; P(X=1)=1/2, P(Y=1|X=0)=1/4, P(Y=1|X=1)=3/4.
  std::vector<Variable> v{make_variable("X", {"0", "1"}), make_variable("Y", {"0", "1"})};
  JointTable<Rational>::Entries e{{{0, 0}, Rational(3, 8)}, {{0, 1}, Rational(1, 8)},
                                  {{1, 0}, Rational(1, 8)}, {{1, 1}, Rational(3, 8)}};
  return JointTable<Rational>(v, e);
}

}  // namespace

TEST(Rational, ParsesAndPrints) {
  EXPECT_EQ(*parse_rational("3/4"), Rational(3, 4));
  EXPECT_EQ(*parse_rational("-2"), Rational(-2));
  EXPECT_EQ(*parse_rational("6/8"), Rational(3, 4));
  EXPECT_FALSE(parse_rational("0.75"));
  EXPECT_FALSE(parse_rational("1/0"));
  EXPECT_FALSE(parse_rational("abc"));
  EXPECT_EQ(to_string(Rational(5, 16)), "5/16");
  EXPECT_EQ(to_string(Rational(2)), "2");
}

TEST(JointTable, RejectsBadMass) {
  std::vector<Variable> v{make_variable("X", {"0", "1"})};
  EXPECT_THROW(JointTable<Rational>(v, {{{0}, Rational(1, 2)}}), InputError);
  EXPECT_THROW(JointTable<Rational>(v, {{{0}, Rational(3, 2)}, {{1}, Rational(-1, 2)}}), InputError);
  EXPECT_THROW(JointTable<Rational>(v, {{{2}, Rational(1)}}), InputError);
  EXPECT_NO_THROW(JointTable<double>(v, {{{0}, 0.5}, {{1}, 0.5 + 1e-12}}));
}

TEST(JointTable, ZeroEntriesAreDropped) {
  std::vector<Variable> v{make_variable("X", {"0", "1"})};
  JointTable<Rational> j(v, {{{0}, Rational(0)}, {{1}, Rational(1)}});
  EXPECT_EQ(j.entries().size(), 1u);
  EXPECT_EQ(j.probability(Assignment{0}), 0);
}

TEST(JointTable, MarginalConditionExpectation) {
  auto j = two_by_two();
  auto mx = marginal(j, {"Y"});
  EXPECT_EQ(mx.probability(Assignment{1}), Rational(1, 2));
  auto c = condition(j, {{"X", "1"}});
  EXPECT_EQ(c.probability(Assignment{1}), Rational(3, 4));
  EXPECT_EQ(conditional_expectation(j, "Y", {{"X", "0"}}), Rational(1, 4));
  EXPECT_EQ(j.probability(Evidence{{"Y", "1"}}), Rational(1, 2));
}

TEST(JointTable, NullEventThrows) {
  std::vector<Variable> v{make_variable("X", {"0", "1"}), make_variable("Y", {"0", "1"})};
  JointTable<Rational> j(v, {{{0, 0}, Rational(1, 2)}, {{0, 1}, Rational(1, 2)}});
  EXPECT_THROW(condition(j, {{"X", "1"}}), NullEventError);
  EXPECT_THROW(conditional_expectation(j, "Y", {{"X", "1"}}), NullEventError);
}

TEST(JointTable, SupportAndConditional) {
  std::vector<Variable> v{make_variable("X", {"0", "1"}), make_variable("Y", {"a", "b", "c"})};
  JointTable<Rational> j(v, {{{0, 0}, Rational(1, 4)}, {{0, 2}, Rational(1, 4)}, {{1, 1}, Rational(1, 2)}});
  auto s = support(j, "Y", {"X"});
  EXPECT_EQ(s[{0}], (std::set<int>{0, 2}));
  EXPECT_EQ(s[{1}], (std::set<int>{1}));
  auto c = conditional(j, {"Y"}, {"X"});
  EXPECT_EQ(c.row({0})->at({2}), Rational(1, 2));
  EXPECT_EQ(c.row({1})->at({1}), 1);
  EXPECT_EQ(c.row({2}), nullptr);
}

TEST(JointTable, NonNumericTargetRejected) {
  std::vector<Variable> v{make_variable("Y", {"a", "b"})};
  JointTable<Rational> j(v, {{{0}, Rational(1)}});
  EXPECT_THROW(conditional_expectation(j, "Y", {}), InputError);
}

TEST(JointTable, Mixture) {
  auto j = two_by_two();
  std::vector<Variable> v = j.variables();
  JointTable<Rational> k(v, {{{1, 1}, Rational(1)}});
  auto mix = mixture<Rational>({{Rational(1, 2), j}, {Rational(1, 2), k}});
  EXPECT_EQ(mix.probability(Assignment{1, 1}), Rational(11, 16));
  EXPECT_THROW(mixture<Rational>({{Rational(1, 3), j}}), InputError);
}

TEST(JointTable, TsvRoundTrip) {
  const Model m = toy("toy3");
  auto j = observed_joint<Rational>(m);
  auto text = write_tsv(j);
  EXPECT_EQ(read_joint_tsv(text, m.variables()), j);
  EXPECT_THROW(read_joint_tsv("C\tprob\n0\t0.5\n1\t1/2\n", m.variables()), InputError);
  EXPECT_THROW(read_joint_tsv("Q\tprob\n0\t1\n", m.variables()), InputError);
  EXPECT_THROW(read_joint_tsv("C\tprob\n0\t1/2\n0\t1/2\n", m.variables()), InputError);
}

TEST(JointTable, CondTsvRowsMustSumToOne) {
  const Model m = toy("toy1");
  EXPECT_NO_THROW(read_cond_tsv(read_file(models_file("pol_C.tsv")), m.variables(), "M"));
  EXPECT_THROW(read_cond_tsv("C\tM\tprob\n0\t0\t1/2\n1\t0\t1\n", m.variables(), "M"), InputError);
}

TEST(JointTable, FloatConversionAgrees) {
  auto j = observed_joint<Rational>(toy("toy1"));
  auto f = convert<double>(j);
  auto g = observed_joint<double>(toy("toy1"));
  for (const auto& [a, p] : j.entries()) {
    EXPECT_NEAR(f.probability(a), to_double(p), 1e-15);
    EXPECT_NEAR(g.probability(a), to_double(p), 1e-12);
  }
}

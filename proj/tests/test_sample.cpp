#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace medid;
using namespace medid::testing;

TEST(SplitMix, KnownSequence) {
  // First outputs of SplitMix64 seeded with 0.
  EXPECT_EQ(splitmix_at(0, 0), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(splitmix_at(0, 1), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(splitmix_at(0, 2), 0x06C45D188009454FULL);
}

TEST(SplitMix, UniformBelowStaysInRange) {
  std::vector<int> counts(6, 0);
  for (std::uint64_t r = 0; r < 60000; ++r) {
    auto x = uniform_below(7, r, 0, 1, 6);
    ASSERT_LT(x, 6u);
    ++counts[x];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(NoiseSampler, CumulativeTable) {
  NoiseDecl n{"U", {"a", "b", "c"}, {Rational(1, 2), Rational(1, 3), Rational(1, 6)}};
  auto s = NoiseSampler::build(n);
  EXPECT_EQ(s.denominator, 6u);
  EXPECT_EQ(s.cumulative, (std::vector<std::uint64_t>{3, 5, 6}));
  EXPECT_EQ(s.pick(0), 0);
  EXPECT_EQ(s.pick(2), 0);
  EXPECT_EQ(s.pick(3), 1);
  EXPECT_EQ(s.pick(5), 2);
}

TEST(Sample, DeterministicAndThreadInvariant) {
  const Model m = toy("toy3");
  auto one = write_csv(sample_dataset(m, 5000, 42, 1));
  EXPECT_EQ(one, write_csv(sample_dataset(m, 5000, 42, 1)));
  EXPECT_EQ(one, write_csv(sample_dataset(m, 5000, 42, 3)));
  EXPECT_EQ(one, write_csv(sample_dataset(m, 5000, 42, 8)));
  EXPECT_NE(one, write_csv(sample_dataset(m, 5000, 43, 1)));
  // A prefix of a larger sample is the smaller sample.
  auto big = write_csv(sample_dataset(m, 6000, 42, 2));
  EXPECT_EQ(big.substr(0, one.size()), one);
}

TEST(Sample, FrequenciesApproachTheObservedJoint) {
  const Model m = toy("toy1");
  auto d = sample_dataset(m, 200000, 42);
  auto f = fit_frequency_joint<double>(d);
  auto j = observed_joint<double>(m);
  for (const auto& [a, p] : j.entries()) EXPECT_NEAR(f.probability(a), p, 0.005);
  for (const auto& [a, p] : f.entries()) EXPECT_GT(j.probability(a), 0.0);
}

TEST(Sample, CsvRoundTrip) {
  const Model m = toy("toy3");
  auto d = sample_dataset(m, 300, 1);
  auto text = write_csv(d);
  auto back = read_csv(text, declarations(m));
  EXPECT_EQ(back.rows, d.rows);
  // Columns in another order read back to the same rows.
  std::string shuffled = "Y,M,L,A,C\n";
  for (const auto& r : d.rows)
    shuffled += std::to_string(r[4]) + "," + std::to_string(r[3]) + "," + std::to_string(r[2]) + "," +
                std::to_string(r[1]) + "," + std::to_string(r[0]) + "\n";
  EXPECT_EQ(read_csv(shuffled, declarations(m)).rows, d.rows);
}

TEST(Sample, CsvErrors) {
  const auto decls = declarations(toy("toy1"));
  EXPECT_THROW(read_csv("", decls), InputError);
  EXPECT_THROW(read_csv("C,A,M\n0,0,0\n", decls), InputError);
  EXPECT_THROW(read_csv("C,A,M,Y,Z\n0,0,0,0,0\n", decls), InputError);
  EXPECT_THROW(read_csv("C,A,M,M\n0,0,0,0\n", decls), InputError);
  EXPECT_THROW(read_csv("C,A,M,Y\n0,0,0,2\n", decls), InputError);
  EXPECT_THROW(read_csv("C,A,M,Y\n0,0,0\n", decls), InputError);
  EXPECT_NO_THROW(read_csv("C,A,M,Y\r\n0,0,0,1\r\n", decls));
}

TEST(Sample, PluginMatchesIdentOnTheEmpiricalJoint) {
  const Model m = toy("toy3");
  auto d = sample_dataset(m, 20000, 9);
  IdentInput<Rational> in(fit_frequency_joint<Rational>(d), roles_of(d.columns));
  for (const char* e : {"TE", "CDE(1)", "IDE0", "EY(1,pol=pot:0,cond=CL)"}) {
    auto x = parse_estimand(e);
    EXPECT_EQ(plugin_estimate<Rational>(d, x).value, evaluate_ident<Rational>(x, in)) << e;
    EXPECT_NEAR(plugin_estimate<double>(d, x).value, to_double(evaluate_ident<Rational>(x, in)), 1e-12) << e;
  }
}

TEST(Sample, PluginConvergesOnToy1) {
  const Model m = toy("toy1");
  auto d = sample_dataset(m, 200000, 42);
  auto r = plugin_estimate<double>(d, parse_estimand("TE"));
  EXPECT_LT(std::fabs(r.value - 5.0 / 16), 0.01);
  EXPECT_TRUE(r.empty_cells.empty());
}

TEST(Sample, TinySampleReportsPositivity) {
  const Model m = toy("toy3");
  // Ten units cannot cover every (C, A, L, M) cell.
  auto d = sample_dataset(m, 10, 5);
  EXPECT_THROW(plugin_estimate<Rational>(d, parse_estimand("CDE(1)")), PositivityError);
}

TEST(Sample, RejectsZeroRows) { EXPECT_THROW(sample_dataset(toy("toy1"), 0, 1), InputError); }

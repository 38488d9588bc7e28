#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>

using namespace medid;
using namespace medid::testing;

namespace {

Variable binary(const std::string& name) { return make_variable(name, {"0", "1"}); }

NoiseDecl coin(const std::string& name) { return {name, {"0", "1"}, {Rational(1, 2), Rational(1, 2)}}; }

/// Output = noise, whatever the parents.
Mechanism copy_noise(const std::string& var, std::vector<std::string> parents, const std::string& noise,
                     std::size_t parent_cells) {
  Mechanism m{var, std::move(parents), noise, {}};
  for (std::size_t r = 0; r < parent_cells; ++r)
    for (int u : {0, 1}) m.table.push_back(u);
  return m;
}

/// C -> A -> M -> Y with C also a parent of Y; all binary, one coin per variable.
Scm small() {
  Scm s;
  s.name = "small";
  s.variables = {{binary("C"), Role::Covariate},
                 {binary("A"), Role::Exposure},
                 {binary("M"), Role::Mediator},
                 {binary("Y"), Role::Outcome}};
  s.noises = {coin("UC"), coin("UA"), coin("UM"), coin("UY")};
  s.mechanisms = {copy_noise("C", {}, "UC", 1), copy_noise("A", {"C"}, "UA", 2), copy_noise("M", {"A"}, "UM", 2),
                  copy_noise("Y", {"C", "A", "M"}, "UY", 8)};
  return s;
}

}  // namespace

TEST(Validate, SmallModelPasses) {
  auto rep = validate_scm(small());
  EXPECT_TRUE(rep.ok()) << rep.describe();
}

TEST(Validate, ShippedModelsPass) {
  for (auto n : {"toy1", "toy1_anti", "toy2", "toy2_degenerate", "toy2_l", "toy3", "toy3_anti", "toy3_anti_m"}) {
    auto rep = validate_scm(load_model(model_path(n)));
    EXPECT_TRUE(rep.ok()) << n << "\n" << rep.describe();
  }
}

TEST(Validate, DuplicateNames) {
  auto s = small();
  s.variables.push_back({binary("C"), Role::Covariate});
  EXPECT_TRUE(validate_scm(s).has("duplicate names"));
}

TEST(Validate, RoleCount) {
  auto s = small();
  s.variables.push_back({binary("A2"), Role::Exposure});
  EXPECT_TRUE(validate_scm(s).has("role count"));
}

TEST(Validate, ExposureMustBeBinary) {
  auto s = small();
  s.variables[1].var = make_variable("A", {"0", "1", "2"});
  EXPECT_TRUE(validate_scm(s).has("exposure states"));
}

TEST(Validate, OutcomeParentOfMediatorIsARoleOrderingBreach) {
  auto s = small();
  s.mechanisms[2] = copy_noise("M", {"A", "Y"}, "UM", 4);
  EXPECT_TRUE(validate_scm(s).has("role-ordering breach"));
}

TEST(Validate, CovariateWithParent) {
  auto s = small();
  s.variables.push_back({binary("C2"), Role::Covariate});
  s.noises.push_back(coin("UC2"));
  s.mechanisms.push_back(copy_noise("C2", {"C"}, "UC2", 2));
  EXPECT_TRUE(validate_scm(s).has("role-ordering breach"));
}

TEST(Validate, MissingTableEntry) {
  auto s = small();
  s.mechanisms[3].table[5] = -1;
  EXPECT_TRUE(validate_scm(s).has("missing table entry"));
}

TEST(Validate, NoiseNotNormalized) {
  auto s = small();
  s.noises[0].probs = {Rational(1, 2), Rational(1, 3)};
  EXPECT_TRUE(validate_scm(s).has("noise not normalized"));
}

TEST(Validate, SharedNoise) {
  auto s = small();
  s.mechanisms[2].noise = "UA";
  auto rep = validate_scm(s);
  EXPECT_TRUE(rep.has("shared noise"));
  EXPECT_TRUE(rep.has("unused noise"));
}

TEST(Validate, MissingMechanism) {
  auto s = small();
  s.mechanisms.pop_back();
  EXPECT_TRUE(validate_scm(s).has("missing mechanism"));
}

TEST(Validate, UnknownParentAndNoise) {
  auto s = small();
  s.mechanisms[1].parents = {"Q"};
  s.mechanisms[2].noise = "nope";
  auto rep = validate_scm(s);
  EXPECT_TRUE(rep.has("unknown parent"));
  EXPECT_TRUE(rep.has("unknown noise"));
}

TEST(Validate, IntermediateCycle) {
  auto s = small();
  s.variables.push_back({binary("L1"), Role::Intermediate});
  s.variables.push_back({binary("L2"), Role::Intermediate});
  s.noises.push_back(coin("U1"));
  s.noises.push_back(coin("U2"));
  s.mechanisms.push_back(copy_noise("L1", {"L2"}, "U1", 2));
  s.mechanisms.push_back(copy_noise("L2", {"L1"}, "U2", 2));
  EXPECT_TRUE(validate_scm(s).has("cycle"));
}

TEST(Validate, CompileRejectsInvalid) {
  auto s = small();
  s.mechanisms.pop_back();
  EXPECT_THROW(Model::compile(s), ModelError);
}

TEST(Loader, RejectsUnknownKeys) {
  const std::string base = read_file(model_path("toy1"));
  auto doc = nlohmann::json::parse(base);
  doc["colour"] = "blue";
  EXPECT_THROW(parse_model(doc.dump()), InputError);
  doc = nlohmann::json::parse(base);
  doc["cpt"][0]["weight"] = 1;
  EXPECT_THROW(parse_model(doc.dump()), InputError);
}

TEST(Loader, RejectsFloatProbabilitiesAndWrongSchema) {
  auto doc = nlohmann::json::parse(read_file(model_path("toy1")));
  doc["cpt"][0]["rows"][0]["probs"][0] = 0.75;
  EXPECT_THROW(parse_model(doc.dump()), InputError);
  doc = nlohmann::json::parse(read_file(model_path("toy1")));
  doc["schema"] = 2;
  EXPECT_THROW(parse_model(doc.dump()), InputError);
  EXPECT_THROW(parse_model("{not json"), InputError);
}

TEST(Loader, DropsZeroMassNoisePoints) {
  auto doc = nlohmann::json::parse(read_file(model_path("toy1")));
  doc["noise"][0]["support"] = {"0", "1", "2", "3", "4"};
  doc["noise"][0]["probs"] = {"1/4", "1/4", "1/4", "1/4", "0"};
  doc["mechanisms"][0]["table"].push_back({"4", "1"});
  const Model m = Model::compile(parse_model(doc.dump()));
  EXPECT_EQ(m.noises()[0].support.size(), 4u);
  EXPECT_EQ(observed_joint<Rational>(m), observed_joint<Rational>(toy("toy1")));
}

TEST(Loader, NameDefaultsToFileName) {
  auto doc = nlohmann::json::parse(read_file(model_path("toy1")));
  doc.erase("name");
  const std::string path = ::testing::TempDir() + "/unnamed.json";
  std::ofstream(path) << doc.dump();
  EXPECT_EQ(load_model(path).name, "unnamed.json");
}

TEST(CptSugar, UniformNoiseOnLcm) {
  const VariableDecl x{make_variable("X", {"a", "b", "c"}), Role::Mediator};
  const VariableDecl p{binary("P"), Role::Exposure};
  Cpt cpt{{{0}, {Rational(1, 2), Rational(1, 4), Rational(1, 4)}}, {{1}, {Rational(1, 3), Rational(2, 3), Rational(0)}}};
  auto r = expand_cpt_sugar(x, {p}, cpt);
  EXPECT_EQ(r.noise.name, "U_X");
  ASSERT_EQ(r.noise.support.size(), 12u);
  for (const auto& q : r.noise.probs) EXPECT_EQ(q, Rational(1, 12));
  // Row P=0: 6 a's, 3 b's, 3 c's in declared order.
  std::vector<int> row0(r.mechanism.table.begin(), r.mechanism.table.begin() + 12);
  EXPECT_EQ(row0, (std::vector<int>{0, 0, 0, 0, 0, 0, 1, 1, 1, 2, 2, 2}));
  std::vector<int> row1(r.mechanism.table.begin() + 12, r.mechanism.table.end());
  EXPECT_EQ(row1, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1}));
}

TEST(CptSugar, AntitoneReversesOddParityRows) {
  const VariableDecl x{binary("X"), Role::Mediator};
  const VariableDecl p{binary("P"), Role::Exposure};
  const VariableDecl q{binary("Q"), Role::Intermediate};
  Cpt cpt;
  for (int a : {0, 1})
    for (int b : {0, 1}) cpt[{a, b}] = {Rational(1, 4), Rational(3, 4)};
  auto co = expand_cpt_sugar(x, {p, q}, cpt, Coupling::Comonotone);
  auto anti = expand_cpt_sugar(x, {p, q}, cpt, Coupling::Antitone);
  const std::vector<int> fwd{0, 1, 1, 1}, rev{1, 1, 1, 0};
  for (int rank = 0; rank < 4; ++rank) {
    std::vector<int> c(co.mechanism.table.begin() + rank * 4, co.mechanism.table.begin() + rank * 4 + 4);
    std::vector<int> a(anti.mechanism.table.begin() + rank * 4, anti.mechanism.table.begin() + rank * 4 + 4);
    EXPECT_EQ(c, fwd);
    const bool odd = (rank / 2 + rank % 2) % 2 == 1;
    EXPECT_EQ(a, odd ? rev : fwd) << "rank " << rank;
  }
}

TEST(CptSugar, MissingRowsLeaveHoles) {
  const VariableDecl x{binary("X"), Role::Mediator};
  const VariableDecl p{binary("P"), Role::Exposure};
  Cpt missing{{{0}, {Rational(1, 2), Rational(1, 2)}}};
  auto r = expand_cpt_sugar(x, {p}, missing);
  EXPECT_EQ(r.mechanism.table[2], -1);
  EXPECT_EQ(r.mechanism.table[3], -1);
  Cpt unnormalized{{{0}, {Rational(1, 2), Rational(1, 3)}}, {{1}, {Rational(1, 2), Rational(1, 2)}}};
  EXPECT_THROW(expand_cpt_sugar(x, {p}, unnormalized), ModelError);
  Cpt short_row{{{0}, {Rational(1)}}};
  EXPECT_THROW(expand_cpt_sugar(x, {p}, short_row), ModelError);
}

TEST(CptSugar, ObservedConditionalsMatchTheTable) {
  const Model m = toy("toy3");
  auto j = observed_joint<Rational>(m);
  auto cond = conditional(j, {"M"}, {"C", "A", "L"});
  // Row (C=1, A=1, L=1) of toy3's M table.
  EXPECT_EQ(cond.row({1, 1, 1})->at({1}), Rational(5, 6));
  EXPECT_EQ(cond.row({0, 0, 0})->at({1}), Rational(1, 6));
}

TEST(Compile, CanonicalOrder) {
  const Model m = toy("toy3");
  std::vector<std::string> names;
  for (const auto& v : m.variables()) names.push_back(v.name);
  EXPECT_EQ(names, (std::vector<std::string>{"C", "A", "L", "M", "Y"}));
  EXPECT_EQ(m.exposure(), 1u);
  EXPECT_EQ(m.mediator(), 3u);
  EXPECT_EQ(m.configuration_count(), BigInt(1920));
  EXPECT_EQ(toy("toy1").configuration_count(), BigInt(256));
}

TEST(Compile, EvaluateWithForcedValues) {
  const Model m = Model::compile(small());
  std::vector<int> u{1, 0, 1, 0}, out(4), forced{-1, 1, -1, -1};
  m.evaluate(u.data(), nullptr, out.data());
  EXPECT_EQ(out, (std::vector<int>{1, 0, 1, 0}));
  m.evaluate(u.data(), forced.data(), out.data());
  EXPECT_EQ(out[1], 1);
}

TEST(NoiseConfigurations, VisitsEveryConfigurationOnce) {
  const Model m = toy("toy1");
  std::size_t count = 0;
  Rational total = 0;
  std::set<std::vector<int>> seen;
  for (const auto& v : NoiseConfigurations<Rational>(m)) {
    ++count;
    total += v.probability;
    seen.insert(v.assignment);
  }
  EXPECT_EQ(count, 256u);
  EXPECT_EQ(seen.size(), 256u);
  EXPECT_EQ(total, 1);
}

TEST(NoiseConfigurations, CapIsEnforced) {
  const Model m = toy("toy3");
  EXPECT_THROW(NoiseConfigurations<double>(m, 1000), EnumerationTooLarge);
  EXPECT_THROW(observed_joint<double>(m, 1000), EnumerationTooLarge);
  EXPECT_NO_THROW(observed_joint<double>(m, 1920));
}

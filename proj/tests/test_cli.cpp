#include "criteria.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

using namespace medid;
using namespace medid::testing;

namespace {

CommandResult medid_cli(const std::string& args) { return run_command(cli() + " " + args); }

std::string temp_file(const std::string& name, const std::string& content) {
  const std::string path = ::testing::TempDir() + "/" + name;
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

/// Roles file with the same variable declarations as a shipped model.
std::string roles_for(const std::string& model) {
  auto doc = nlohmann::json::parse(read_file(model_path(model)));
  nlohmann::json roles{{"schema", 1}, {"variables", doc["variables"]}};
  return temp_file(model + ".roles.json", roles.dump());
}

bool contains(const std::string& s, const std::string& x) { return s.find(x) != std::string::npos; }

}  // namespace

TEST(Cli, Validate) {
  auto r = medid_cli("validate " + model_path("toy1"));
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "ok: toy1, 4 variables, 256 noise configurations\n");
  auto bad = nlohmann::json::parse(read_file(model_path("toy1")));
  bad["noise"][0]["probs"][0] = "1/2";
  auto b = medid_cli("validate " + temp_file("bad.json", bad.dump()) + " --format machine");
  EXPECT_EQ(b.status, 1);
  EXPECT_TRUE(contains(b.out, "valid\tfalse\n"));
  EXPECT_TRUE(contains(b.out, "violation\tnoise not normalized\t"));
}

TEST(Cli, Truth) {
  auto r = medid_cli("truth " + model_path("toy1") + " -e TE -e NDE0 --format machine");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "format_version\t1\nvalue\tTE\t0.3125\t5/16\nvalue\tNDE0\t0.25\t1/4\n");
  auto h = medid_cli("truth " + model_path("toy1") + " --estimand TE");
  EXPECT_EQ(h.out, "TE\t0.3125 (5/16)\n");
}

TEST(Cli, MachineValuesRoundTrip) {
  auto r = medid_cli("truth " + model_path("toy3") + " -e 'XW(1,0)' --arith float --format machine");
  ASSERT_EQ(r.status, 0);
  auto f = split(lines(r.out)[1], '\t');
  ASSERT_EQ(f.size(), 4u);
  // %.17g reproduces the computed double bit for bit.
  EXPECT_EQ(std::strtod(f[2].c_str(), nullptr), evaluate_oracle<double>(parse_estimand("XW(1,0)"), toy("toy3")));
  EXPECT_EQ(f[3], "-");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(medid_cli("identify " + model_path("toy1") + " --estimand 'XW(1,1)'").status, 2);
  EXPECT_EQ(medid_cli("frobnicate").status, 2);
  EXPECT_EQ(medid_cli("truth " + model_path("toy1") + " --bogus").status, 2);
  EXPECT_EQ(medid_cli("truth " + model_path("toy1") + " --tolerance -1").status, 2);
  EXPECT_EQ(medid_cli("truth /nonexistent/model.json -e TE").status, 1);
  EXPECT_EQ(medid_cli("truth " + model_path("toy3") + " -e TE --cap 10").status, 1);
  EXPECT_EQ(medid_cli("sample " + model_path("toy1") + " --n 10").status, 2);
  EXPECT_EQ(medid_cli("identify " + model_path("toy1") + " --data x.csv --roles r.json -e TE").status, 2);
  EXPECT_EQ(medid_cli("truth --help").status, 0);
}

TEST(Cli, EnvironmentFallbacksAndFlagPrecedence) {
  const std::string base = "truth " + model_path("toy1") + " -e TE";
  EXPECT_EQ(run_command("MEDID_FORMAT=machine " + cli() + " " + base).out.rfind("format_version\t1\n", 0), 0u);
  EXPECT_EQ(run_command("MEDID_FORMAT=machine " + cli() + " " + base + " --format human").out, "TE\t0.3125 (5/16)\n");
  EXPECT_EQ(run_command("MEDID_ENUM_CAP=10 " + cli() + " " + base).status, 1);
  EXPECT_EQ(run_command("MEDID_ENUM_CAP=10 " + cli() + " " + base + " --cap 1000").status, 0);
  EXPECT_EQ(run_command("MEDID_ARITH=float " + cli() + " " + base).out, "TE\t0.3125\n");
}

TEST(Cli, IdentifyReportsRefusalsAsContent) {
  auto r = medid_cli("identify " + model_path("toy3") + " -e NDE0 -e TE --format machine");
  EXPECT_EQ(r.status, 0);
  auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 3u);
  EXPECT_TRUE(contains(ls[1], "value\tNDE0\t-\t-\trefused\t"));
  EXPECT_TRUE(contains(ls[1], "intermediate confounders"));
  EXPECT_EQ(ls[2], "value\tTE\t0.29375000000000001\t47/160\tidentified\t-");
}

TEST(Cli, AuditAndList) {
  auto r = medid_cli("audit " + model_path("toy2") + " -e 'CDE(1)'");
  EXPECT_EQ(r.status, 0);
  EXPECT_TRUE(contains(r.out, "(C=1,A=0) missing m=1"));
  EXPECT_TRUE(contains(r.out, "identified: no"));
  auto l = medid_cli("audit --list -e 'NDE0 + NIE1' --format machine");
  EXPECT_EQ(l.status, 0);
  EXPECT_TRUE(contains(l.out, "entry\tindependence\tmediator-outcome\tM_0 _||_ Y_{1m} | C\tuntestable\trequired\tcross-world\tXW(1,0)\n"));
  EXPECT_EQ(medid_cli("audit " + model_path("toy1")).status, 2);
}

TEST(Cli, ReportDefaults) {
  auto r = medid_cli("report " + model_path("toy1") + " --format machine");
  EXPECT_EQ(r.status, 0);
  EXPECT_TRUE(contains(r.out, "row\tTE\t0.3125\t5/16\t0.3125\t5/16\t-\ttrue\t\n"));
  auto t = medid_cli("report " + model_path("toy3"));
  EXPECT_EQ(t.status, 0);
  EXPECT_TRUE(contains(t.out, "XW(1,0): intermediate confounders present"));
  EXPECT_TRUE(contains(t.out, "M_0 _||_ Y_{1m} | C"));
}

TEST(Cli, ReportIsDeterministic) {
  auto r = check_determinism();
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Cli, SampleEstimateRoundTrip) {
  const std::string csv = ::testing::TempDir() + "/toy1.csv";
  auto s = medid_cli("sample " + model_path("toy1") + " --n 200000 --seed 42 --out " + csv);
  ASSERT_EQ(s.status, 0);
  EXPECT_EQ(read_file(csv), write_csv(sample_dataset(toy("toy1"), 200000, 42)));
  auto e = medid_cli("estimate --data " + csv + " --roles " + roles_for("toy1") + " -e TE --arith float --format machine");
  ASSERT_EQ(e.status, 0) << e.out;
  auto f = split(lines(e.out)[2], '\t');
  ASSERT_GE(f.size(), 3u);
  EXPECT_NEAR(std::strtod(f[2].c_str(), nullptr), 5.0 / 16, 0.01);
}

TEST(Cli, EstimatePositivityIsContent) {
  const std::string csv = ::testing::TempDir() + "/tiny.csv";
  ASSERT_EQ(medid_cli("sample " + model_path("toy3") + " --n 10 --seed 5 --out " + csv).status, 0);
  auto e = medid_cli("estimate --data " + csv + " --roles " + roles_for("toy3") + " -e 'CDE(1)'");
  EXPECT_EQ(e.status, 0);
  EXPECT_TRUE(contains(e.out, "not estimable: positivity failure"));
}

TEST(Cli, DataModeIdentifyAndAudit) {
  const std::string csv = ::testing::TempDir() + "/toy3.csv";
  ASSERT_EQ(medid_cli("sample " + model_path("toy3") + " --n 5000 --seed 3 --out " + csv).status, 0);
  const std::string src = "--data " + csv + " --roles " + roles_for("toy3");
  auto i = medid_cli("identify " + src + " -e TE --format machine");
  EXPECT_EQ(i.status, 0);
  EXPECT_TRUE(contains(i.out, "value\tTE\t"));
  auto a = medid_cli("audit " + src + " -e NDE0 --format machine");
  EXPECT_EQ(a.status, 0);
  EXPECT_TRUE(contains(a.out, "ASSUMED\tuntestable"));
  EXPECT_EQ(medid_cli("identify " + src).status, 2);
}

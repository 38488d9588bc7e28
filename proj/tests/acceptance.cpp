#include "criteria.hpp"

#include <chrono>
#include <cstdio>

using namespace medid;
using namespace medid::testing;

namespace {

int failures = 0;

void report(int n, const char* name, const std::function<Outcome()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = f();
  } catch (const std::exception& e) {
    o.fail(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

}  // namespace

int main() {
  const auto suite = random_suite(0.0);
  std::vector<Model> everything = suite;
  for (const char* t : {"toy1", "toy1_anti", "toy2", "toy2_l", "toy3", "toy3_anti", "toy3_anti_m"}) everything.push_back(toy(t));

  report(1, "identification equals oracle", [&] {
    auto exact = check_ident_vs_oracle<Rational>(suite);
    auto fl = check_ident_vs_oracle<double>(suite);
    if (!fl.pass) exact.fail("float mode: " + fl.detail);
    return exact;
  });
  report(2, "toy1 golden values", check_toy1_golden);
  report(3, "decomposition identities", [&] { return check_decompositions(everything); });
  report(4, "degenerate reductions", [&] { return check_degenerate_reductions(everything); });
  report(5, "cross-world non-identification on toy3", check_toy3_nonidentification);
  report(6, "coupling sensitivity", check_coupling_sensitivity);
  report(7, "assembler golden files", check_assembler_goldens);
  report(8, "positivity auditing", check_positivity_audit);
  report(9, "plug-in convergence", [] { return check_plugin_convergence(20); });
  report(10, "determinism", check_determinism);
  return failures == 0 ? 0 : 1;
}

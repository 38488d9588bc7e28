#include "medid/medid.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace medid;

namespace {

struct Options {
  std::string model;
  std::string data;
  std::string roles;
  std::vector<std::string> estimands;
  std::vector<std::string> policies;
  std::string format = "human";
  std::string arith = "exact";
  double tolerance = kDefaultEpsilon;
  std::uint64_t cap = kDefaultEnumerationCap;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
  unsigned threads = 0;
  bool list = false;
};

/// Thrown for invocation mistakes that CLI11 cannot see (exit 2).
struct UsageError : Error {
  using Error::Error;
};

Format format_of(const Options& o) { return o.format == "machine" ? Format::Machine : Format::Human; }
AuditOptions audit_options(const Options& o) { return {o.tolerance, o.cap}; }

void add_common(CLI::App* app, Options& o) {
  app->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"human", "machine"}))
      ->envname("MEDID_FORMAT");
  app->add_option("--arith", o.arith, "Arithmetic: exact rationals or doubles")
      ->check(CLI::IsMember({"exact", "float"}))
      ->envname("MEDID_ARITH");
  app->add_option("--tolerance", o.tolerance, "Tolerance for floating comparisons")
      ->check(CLI::PositiveNumber)
      ->envname("MEDID_TOLERANCE");
  app->add_option("--cap", o.cap, "Maximum number of noise configurations to enumerate")
      ->check(CLI::PositiveNumber)
      ->envname("MEDID_ENUM_CAP");
}

void add_source(CLI::App* app, Options& o, bool allow_data) {
  app->add_option("model", o.model, "Model file");
  if (allow_data) {
    app->add_option("--data", o.data, "Dataset (CSV)");
    app->add_option("--roles", o.roles, "Role file for the dataset");
  }
}

void add_estimands(CLI::App* app, Options& o) {
  app->add_option("--estimand,-e", o.estimands, "Estimand expression (repeatable)");
}

Model load(const Options& o) {
  if (o.model.empty()) throw UsageError("a model file is required");
  return Model::compile(load_model(o.model));
}

/// Exactly one of model / (data, roles).
bool data_mode(const Options& o) {
  const bool d = !o.data.empty() || !o.roles.empty();
  if (d && !o.model.empty()) throw UsageError("give either a model or --data/--roles, not both");
  if (d && (o.data.empty() || o.roles.empty())) throw UsageError("--data and --roles go together");
  if (!d && o.model.empty()) throw UsageError("a model file or --data/--roles is required");
  return d;
}

Dataset load_data(const Options& o) { return read_csv(read_file(o.data), parse_roles(read_file(o.roles))); }

std::vector<std::pair<std::string, EstimandExpr>> parse_all(const EstimandEnv& env, const std::vector<std::string>& texts) {
  std::vector<std::pair<std::string, EstimandExpr>> out;
  for (const auto& t : texts) out.emplace_back(t, env.parse(t));
  return out;
}

void write_out(const std::string& text) {
  std::fwrite(text.data(), 1, text.size(), stdout);
}

// ---------------------------------------------------------------------------

int cmd_validate(const Options& o) {
  if (o.model.empty()) throw UsageError("a model file is required");
  const Scm scm = load_model(o.model);
  const auto rep = validate_scm(scm);
  const Format f = format_of(o);
  if (f == Format::Machine) {
    std::string s = machine_header() + "valid\t" + (rep.ok() ? "true" : "false") + "\n";
    for (const auto& v : rep.violations) s += "violation\t" + v.code + "\t" + field(v.detail) + "\n";
    write_out(s);
  } else if (rep.ok()) {
    const Model m = Model::compile(scm);
    write_out("ok: " + m.name() + ", " + std::to_string(m.size()) + " variables, " + m.configuration_count().str() +
              " noise configurations\n");
  } else {
    write_out("invalid model:\n" + rep.describe());
  }
  return rep.ok() ? 0 : 1;
}

template <Scalar T>
int cmd_observe(const Options& o) {
  const Model m = load(o);
  std::string s = format_of(o) == Format::Machine ? machine_header() : "";
  write_out(s + write_tsv(observed_joint<T>(m, o.cap)));
  return 0;
}

template <Scalar T>
int cmd_truth(const Options& o) {
  const Model m = load(o);
  const EstimandEnv env(declarations(m));
  const auto texts = o.estimands.empty() ? default_catalog(m, o.policies) : o.estimands;
  const auto exprs = parse_all(env, texts);
  const Format f = format_of(o);
  std::string s = f == Format::Machine ? machine_header() : "";
  for (const auto& [t, e] : exprs) {
    const T v = evaluate_oracle<T>(e, m, o.cap);
    s += (f == Format::Machine ? "value\t" : "") + t + "\t" + value_text(v, f) + "\n";
  }
  write_out(s);
  return 0;
}

template <Scalar T>
int cmd_identify(const Options& o) {
  const bool dm = data_mode(o);
  std::optional<Model> model;
  std::optional<IdentInput<T>> in;
  std::vector<VariableDecl> decls;
  if (dm) {
    const Dataset d = load_data(o);
    decls = d.columns;
    in.emplace(fit_frequency_joint<T>(d), roles_of(decls));
  } else {
    model.emplace(load(o));
    decls = declarations(*model);
    in.emplace(ident_input<T>(*model, o.cap));
  }
  const EstimandEnv env(decls);
  std::vector<std::string> texts = o.estimands;
  if (texts.empty()) {
    if (!model) throw UsageError("--estimand is required with --data");
    texts = default_catalog(*model, o.policies);
  }
  const auto exprs = parse_all(env, texts);
  const Format f = format_of(o);
  std::string s = f == Format::Machine ? machine_header() : "";
  for (const auto& [t, e] : exprs) {
    const auto rep = model ? audit_estimand<T>(*model, e, audit_options(o)) : audit_estimand<T>(*in, e, audit_options(o));
    std::string value, message = "-";
    try {
      value = value_text(evaluate_ident<T>(e, *in), f);
    } catch (const Error& x) {
      value = f == Format::Machine ? "-\t-" : "refused";
      message = field(x.what());
    }
    if (f == Format::Machine) {
      s += "value\t" + t + "\t" + value + "\t" + assumption_status(rep) + "\t" + message + "\n";
    } else {
      s += t + "\t" + value + "\tassumption_status=" + assumption_status(rep);
      if (message != "-") s += "\t" + message;
      s += "\n";
    }
  }
  write_out(s);
  return 0;
}

template <Scalar T>
int cmd_audit(const Options& o) {
  if (o.estimands.empty()) throw UsageError("--estimand is required");
  const Format f = format_of(o);
  if (o.list) {
    // Assembler output only; policy files are not read.
    std::vector<EstimandExpr> exprs;
    for (const auto& t : o.estimands) exprs.push_back(parse_estimand(t));
    write_out(render_assumptions(required_assumptions(exprs), f));
    return 0;
  }
  std::vector<EstimandExpr> exprs;
  if (data_mode(o)) {
    const Dataset d = load_data(o);
    const EstimandEnv env(d.columns);
    for (const auto& t : o.estimands) exprs.push_back(env.parse(t));
    const IdentInput<T> in(fit_frequency_joint<T>(d), roles_of(d.columns));
    write_out(render_audit(audit_estimand<T>(in, exprs, audit_options(o)), f));
  } else {
    const Model m = load(o);
    const EstimandEnv env(declarations(m));
    for (const auto& t : o.estimands) exprs.push_back(env.parse(t));
    write_out(render_audit(audit_estimand<T>(m, exprs, audit_options(o)), f));
  }
  return 0;
}

int cmd_sample(const Options& o) {
  if (o.n == 0) throw UsageError("--n must be at least 1");
  const Model m = load(o);
  const std::string csv = write_csv(sample_dataset(m, o.n, o.seed, o.threads));
  if (o.out.empty()) {
    write_out(csv);
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw InputError("cannot write " + o.out);
    f << csv;
  }
  return 0;
}

template <Scalar T>
int cmd_estimate(const Options& o) {
  if (o.data.empty() || o.roles.empty()) throw UsageError("--data and --roles are required");
  if (!o.model.empty()) throw UsageError("estimate reads data, not a model");
  if (o.estimands.empty()) throw UsageError("--estimand is required");
  const Dataset d = load_data(o);
  const EstimandEnv env(d.columns);
  const auto exprs = parse_all(env, o.estimands);
  const Format f = format_of(o);
  std::string s = f == Format::Machine ? machine_header() + "n\t" + std::to_string(d.n()) + "\n"
                                       : "n = " + std::to_string(d.n()) + "\n";
  for (const auto& [t, e] : exprs) {
    try {
      const auto r = plugin_estimate<T>(d, e);
      if (f == Format::Machine) {
        s += "value\t" + t + "\t" + value_text(r.value, f) + "\t-\n";
        for (const auto& c : r.empty_cells) s += "empty_cell\t" + t + "\t" + c + "\n";
      } else {
        s += t + "\t" + value_text(r.value, f) + "\n";
        if (!r.empty_cells.empty()) s += "  covariate cells with no units: " + join(r.empty_cells, ", ") + "\n";
      }
    } catch (const PositivityError& x) {
      s += f == Format::Machine ? "value\t" + t + "\t-\t-\t" + field(x.what()) + "\n"
                                : t + "\tnot estimable: " + x.what() + "\n";
    }
  }
  write_out(s);
  return 0;
}

template <Scalar T>
int cmd_report(const Options& o) {
  const Model m = load(o);
  const EstimandEnv env(declarations(m));
  const auto texts = o.estimands.empty() ? default_catalog(m, o.policies) : o.estimands;
  const auto exprs = parse_all(env, texts);
  const Format f = format_of(o);
  const auto in = ident_input<T>(m, o.cap);
  std::vector<ReportRow> rows;
  for (const auto& [t, e] : exprs) rows.push_back(report_row<T>(m, in, t, e, f, audit_options(o)));
  write_out(render_report(m, o.arith, rows, f));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete mediation analysis: ground truth, identification and assumption audits"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "Check a model file");
  add_source(validate, o, false);
  add_common(validate, o);

  auto* observe = app.add_subcommand("observe", "Print the observed joint distribution");
  add_source(observe, o, false);
  add_common(observe, o);

  auto* truth = app.add_subcommand("truth", "Ground-truth values by enumeration");
  add_source(truth, o, false);
  add_estimands(truth, o);
  truth->add_option("--policy", o.policies, "Policy file for GDE rows of the default catalog");
  add_common(truth, o);

  auto* identify = app.add_subcommand("identify", "Identified values from the observed distribution");
  add_source(identify, o, true);
  add_estimands(identify, o);
  identify->add_option("--policy", o.policies, "Policy file for GDE rows of the default catalog");
  add_common(identify, o);

  auto* audit = app.add_subcommand("audit", "Required assumptions with verdicts");
  add_source(audit, o, true);
  add_estimands(audit, o);
  audit->add_flag("--list", o.list, "List the required assumptions without checking them");
  add_common(audit, o);

  auto* sample = app.add_subcommand("sample", "Draw a seeded dataset from a model");
  add_source(sample, o, false);
  sample->add_option("--n", o.n, "Number of units")->required();
  sample->add_option("--seed", o.seed, "Seed")->required();
  sample->add_option("--out", o.out, "Output CSV (default: stdout)");
  sample->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  add_common(sample, o);

  auto* estimate = app.add_subcommand("estimate", "Plug-in estimates from a dataset");
  add_source(estimate, o, true);
  add_estimands(estimate, o);
  add_common(estimate, o);

  auto* report = app.add_subcommand("report", "Full catalog: oracle, identification and audit");
  add_source(report, o, false);
  add_estimands(report, o);
  report->add_option("--policy", o.policies, "Policy file; adds a GDE row");
  add_common(report, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(o);
    if (sample->parsed()) return cmd_sample(o);
    const bool fl = o.arith == "float";
    if (observe->parsed()) return fl ? cmd_observe<double>(o) : cmd_observe<Rational>(o);
    if (truth->parsed()) return fl ? cmd_truth<double>(o) : cmd_truth<Rational>(o);
    if (identify->parsed()) return fl ? cmd_identify<double>(o) : cmd_identify<Rational>(o);
    if (audit->parsed()) return fl ? cmd_audit<double>(o) : cmd_audit<Rational>(o);
    if (estimate->parsed()) return fl ? cmd_estimate<double>(o) : cmd_estimate<Rational>(o);
    if (report->parsed()) return fl ? cmd_report<double>(o) : cmd_report<Rational>(o);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "estimand error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 2;
}

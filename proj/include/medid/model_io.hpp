#pragma once

#include "medid/errors.hpp"
#include "medid/scm.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace medid {

/// Model files are JSON documents with "schema": 1. Probabilities are exact
/// rationals written as strings ("3/4") or JSON integers; floats are rejected.
namespace io {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed,
                       std::initializer_list<const char*> required = {}) {
  if (!obj.is_object()) throw InputError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items())
    if (!ok.count(k)) throw InputError(where + ": unknown key '" + k + "'");
  for (const char* r : required)
    if (!obj.contains(r)) throw InputError(where + ": missing key '" + std::string(r) + "'");
}

inline std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw InputError(where + " must be a string");
  return v.get<std::string>();
}

inline std::vector<std::string> get_strings(const json& v, const std::string& where) {
  if (!v.is_array()) throw InputError(where + " must be a list");
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(get_string(e, where + " entry"));
  return out;
}

inline Rational get_rational(const json& v, const std::string& where) {
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (v.is_string()) {
    auto r = parse_rational(v.get<std::string>());
    if (r) return *r;
  }
  throw InputError(where + ": '" + v.dump() + "' is not an exact rational (write probabilities as \"n/d\")");
}

inline std::vector<Rational> get_rationals(const json& v, const std::string& where) {
  if (!v.is_array()) throw InputError(where + " must be a list");
  std::vector<Rational> out;
  for (const auto& e : v) out.push_back(get_rational(e, where));
  return out;
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(what + ": " + e.what());
  }
}

inline std::vector<VariableDecl> parse_variables(const json& arr) {
  if (!arr.is_array()) throw InputError("'variables' must be a list");
  std::vector<VariableDecl> out;
  for (const auto& v : arr) {
    check_keys(v, "variable", {"name", "role", "states", "values"}, {"name", "role", "states"});
    std::string name = get_string(v["name"], "variable name");
    auto role = parse_role(get_string(v["role"], "variable role"));
    if (!role) throw InputError("variable " + name + ": role must be one of C, A, L, M, Y");
    auto states = get_strings(v["states"], "states of " + name);
    std::vector<std::optional<Rational>> values;
    if (v.contains("values")) {
      if (!v["values"].is_array() || v["values"].size() != states.size())
        throw InputError("values of " + name + " must list one number per state");
      for (const auto& x : v["values"]) values.push_back(get_rational(x, "value of " + name));
    }
    out.push_back(VariableDecl{make_variable(name, std::move(states), std::move(values)), *role});
  }
  return out;
}

}  // namespace io

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Parses a model document. The result still has to pass validate_scm.
inline Scm parse_model(const std::string& text) {
  using io::json;
  json doc = io::parse_json(text, "model");
  io::check_keys(doc, "model", {"schema", "name", "description", "variables", "noise", "mechanisms", "cpt"},
                 {"schema", "variables"});
  if (!doc["schema"].is_number_integer() || doc["schema"].get<int>() != 1)
    throw InputError("model: unsupported schema (expected 1)");
  Scm scm;
  if (doc.contains("name")) scm.name = io::get_string(doc["name"], "model name");
  if (doc.contains("description")) io::get_string(doc["description"], "model description");
  scm.variables = io::parse_variables(doc["variables"]);

  auto decl = [&](const std::string& n) -> const VariableDecl& {
    const auto* d = scm.find_variable(n);
    if (!d) throw InputError("unknown variable " + n);
    return *d;
  };

  // Zero-mass support points are dropped along with the table rows that use them.
  std::map<std::string, std::set<std::string>> dropped;
  if (doc.contains("noise")) {
    if (!doc["noise"].is_array()) throw InputError("'noise' must be a list");
    for (const auto& u : doc["noise"]) {
      io::check_keys(u, "noise", {"name", "support", "probs"}, {"name", "support", "probs"});
      NoiseDecl nd;
      nd.name = io::get_string(u["name"], "noise name");
      auto support = io::get_strings(u["support"], "support of " + nd.name);
      auto probs = io::get_rationals(u["probs"], "probs of " + nd.name);
      if (support.size() != probs.size()) throw InputError("noise " + nd.name + ": support and probs differ in length");
      for (std::size_t i = 0; i < support.size(); ++i) {
        if (probs[i] == 0) {
          dropped[nd.name].insert(support[i]);
          continue;
        }
        nd.support.push_back(support[i]);
        nd.probs.push_back(probs[i]);
      }
      scm.noises.push_back(std::move(nd));
    }
  }

  if (doc.contains("mechanisms")) {
    if (!doc["mechanisms"].is_array()) throw InputError("'mechanisms' must be a list");
    for (const auto& mj : doc["mechanisms"]) {
      io::check_keys(mj, "mechanism", {"variable", "parents", "noise", "table"}, {"variable", "noise", "table"});
      Mechanism m;
      m.variable = io::get_string(mj["variable"], "mechanism variable");
      if (mj.contains("parents")) m.parents = io::get_strings(mj["parents"], "parents of " + m.variable);
      m.noise = io::get_string(mj["noise"], "noise of " + m.variable);
      const VariableDecl& self = decl(m.variable);
      std::vector<const VariableDecl*> ps;
      std::size_t rows = 1;
      for (const auto& p : m.parents) {
        ps.push_back(&decl(p));
        rows *= ps.back()->var.size();
      }
      const NoiseDecl* nd = scm.find_noise(m.noise);
      if (!nd) throw InputError("mechanism " + m.variable + ": unknown noise " + m.noise);
      m.table.assign(rows * nd->support.size(), -1);
      if (!mj["table"].is_array()) throw InputError("table of " + m.variable + " must be a list");
      for (const auto& row : mj["table"]) {
        auto cells = io::get_strings(row, "table row of " + m.variable);
        if (cells.size() != ps.size() + 2)
          throw InputError("table row of " + m.variable + " needs parent states, a noise value and an output");
        const std::string& uval = cells[ps.size()];
        if (dropped[m.noise].count(uval)) continue;
        std::size_t rank = 0;
        for (std::size_t i = 0; i < ps.size(); ++i) rank = rank * ps[i]->var.size() + ps[i]->var.require_state(cells[i]);
        std::ptrdiff_t u = -1;
        for (std::size_t k = 0; k < nd->support.size(); ++k)
          if (nd->support[k] == uval) u = static_cast<std::ptrdiff_t>(k);
        if (u < 0) throw InputError("table row of " + m.variable + ": '" + uval + "' is not a value of " + m.noise);
        int& slot = m.table[rank * nd->support.size() + static_cast<std::size_t>(u)];
        if (slot >= 0) throw InputError("table of " + m.variable + " repeats a row");
        slot = self.var.require_state(cells.back());
      }
      scm.mechanisms.push_back(std::move(m));
    }
  }

  if (doc.contains("cpt")) {
    if (!doc["cpt"].is_array()) throw InputError("'cpt' must be a list");
    for (const auto& cj : doc["cpt"]) {
      io::check_keys(cj, "cpt", {"variable", "parents", "rows", "coupling"}, {"variable", "rows"});
      std::string var = io::get_string(cj["variable"], "cpt variable");
      std::vector<VariableDecl> ps;
      std::vector<std::string> pnames;
      if (cj.contains("parents")) pnames = io::get_strings(cj["parents"], "parents of " + var);
      for (const auto& p : pnames) ps.push_back(decl(p));
      Coupling coupling = Coupling::Comonotone;
      if (cj.contains("coupling")) {
        auto c = io::get_string(cj["coupling"], "coupling");
        if (c == "antitone") coupling = Coupling::Antitone;
        else if (c != "comonotone") throw InputError("cpt " + var + ": coupling must be comonotone or antitone");
      }
      Cpt cpt;
      if (!cj["rows"].is_array()) throw InputError("rows of cpt " + var + " must be a list");
      for (const auto& rj : cj["rows"]) {
        io::check_keys(rj, "cpt row", {"given", "probs"}, {"probs"});
        std::vector<std::string> given;
        if (rj.contains("given")) given = io::get_strings(rj["given"], "given of cpt " + var);
        if (given.size() != ps.size()) throw InputError("cpt " + var + ": row must give one state per parent");
        Assignment a;
        for (std::size_t i = 0; i < ps.size(); ++i) a.push_back(ps[i].var.require_state(given[i]));
        if (cpt.count(a)) throw InputError("cpt " + var + " repeats a row");
        cpt[a] = io::get_rationals(rj["probs"], "probs of cpt " + var);
      }
      auto sugar = expand_cpt_sugar(decl(var), ps, cpt, coupling);
      scm.noises.push_back(std::move(sugar.noise));
      scm.mechanisms.push_back(std::move(sugar.mechanism));
    }
  }
  return scm;
}

inline Scm load_model(const std::string& path) {
  Scm scm = parse_model(read_file(path));
  if (scm.name.empty()) {
    auto slash = path.find_last_of('/');
    scm.name = path.substr(slash == std::string::npos ? 0 : slash + 1);
  }
  return scm;
}

/// Roles file for data mode: {"schema": 1, "variables": [...]}.
inline std::vector<VariableDecl> parse_roles(const std::string& text) {
  auto doc = io::parse_json(text, "roles");
  io::check_keys(doc, "roles", {"schema", "name", "description", "variables"}, {"schema", "variables"});
  if (!doc["schema"].is_number_integer() || doc["schema"].get<int>() != 1)
    throw InputError("roles: unsupported schema (expected 1)");
  auto vars = io::parse_variables(doc["variables"]);
  std::map<Role, int> counts;
  std::set<std::string> names;
  for (const auto& v : vars) {
    ++counts[v.role];
    if (!names.insert(v.var.name).second) throw InputError("roles: duplicate variable " + v.var.name);
    if (v.role == Role::Exposure && v.var.states != std::vector<std::string>{"0", "1"})
      throw InputError("roles: exposure must have states (0, 1)");
  }
  for (Role r : {Role::Exposure, Role::Mediator, Role::Outcome})
    if (counts[r] != 1) throw InputError("roles: need exactly one " + std::string(role_code(r)) + " variable");
  return vars;
}

}  // namespace medid

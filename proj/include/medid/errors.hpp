#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace medid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: unknown names, labels outside a state set, malformed files.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& msg, std::size_t position)
      : InputError(msg + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class NullEventError : public Error {
 public:
  using Error::Error;
};

class EnumerationTooLarge : public Error {
 public:
  using Error::Error;
};

/// A covariate cell that breaks a requirement, e.g. {C=1, A=0} missing m=1.
struct Witness {
  std::vector<std::pair<std::string, std::string>> cell;
  std::vector<std::string> missing;

  std::string describe() const {
    std::string s = "(";
    for (std::size_t i = 0; i < cell.size(); ++i) {
      if (i) s += ",";
      s += cell[i].first + "=" + cell[i].second;
    }
    s += ")";
    if (!missing.empty()) {
      s += " missing " + std::string(missing.size() == 1 ? "m=" : "m in {");
      for (std::size_t i = 0; i < missing.size(); ++i) {
        if (i) s += ",";
        s += missing[i];
      }
      if (missing.size() > 1) s += "}";
    }
    return s;
  }
  bool operator==(const Witness&) const = default;
};

inline std::string describe(const std::vector<Witness>& ws) {
  std::string s;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (i) s += " ";
    s += ws[i].describe();
  }
  return s;
}

class PositivityError : public Error {
 public:
  PositivityError(std::string requirement, std::vector<Witness> witnesses)
      : Error("positivity failure: " + requirement + " fails at " + describe(witnesses)),
        requirement_(std::move(requirement)),
        witnesses_(std::move(witnesses)) {}
  const std::string& requirement() const { return requirement_; }
  const std::vector<Witness>& witnesses() const { return witnesses_; }

 private:
  std::string requirement_;
  std::vector<Witness> witnesses_;
};

/// A known policy has no row for a cell that carries mass.
class PolicyDomainGap : public Error {
 public:
  explicit PolicyDomainGap(std::vector<Witness> witnesses)
      : Error("policy domain gap at " + describe(witnesses)), witnesses_(std::move(witnesses)) {}
  const std::vector<Witness>& witnesses() const { return witnesses_; }

 private:
  std::vector<Witness> witnesses_;
};

class IdentificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace medid

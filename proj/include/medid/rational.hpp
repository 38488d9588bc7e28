#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <concepts>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace medid {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Scalars the table algebra is instantiated with: exact rationals or doubles.
template <class T>
concept Scalar = std::same_as<T, Rational> || std::same_as<T, double>;

template <Scalar T>
inline constexpr bool is_exact_v = std::same_as<T, Rational>;

/// Default tolerance for the floating path.
inline constexpr double kDefaultEpsilon = 1e-9;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(double d) { return d; }

template <Scalar T>
T from_rational(const Rational& r) {
  if constexpr (is_exact_v<T>) {
    return r;
  } else {
    return to_double(r);
  }
}

/// Parses "n", "-n" or "n/d" with a nonzero denominator. Anything else
/// (decimals, exponents, whitespace) yields nullopt.
inline std::optional<Rational> parse_rational(std::string_view s) {
  auto digits = [](std::string_view d) {
    if (d.empty()) return false;
    for (char c : d)
      if (c < '0' || c > '9') return false;
    return true;
  };
  bool neg = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  auto slash = s.find('/');
  std::string_view num = s.substr(0, slash);
  std::string_view den = slash == std::string_view::npos ? std::string_view("1") : s.substr(slash + 1);
  if (!digits(num) || !digits(den)) return std::nullopt;
  BigInt n{std::string(num)};
  BigInt d{std::string(den)};
  if (d == 0) return std::nullopt;
  Rational r(n, d);
  return neg ? Rational(-r) : r;
}

/// "n" for integers, "n/d" otherwise, in lowest terms.
inline std::string to_string(const Rational& r) {
  const BigInt& d = boost::multiprecision::denominator(r);
  if (d == 1) return boost::multiprecision::numerator(r).str();
  return boost::multiprecision::numerator(r).str() + "/" + d.str();
}

/// Fixed significant-digit rendering of a double ("%.*g").
inline std::string format_double(double v, int digits = 12) {
  if (v == 0.0) v = 0.0;  // drop negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string format_value(const Rational& r, int digits = 12) { return format_double(to_double(r), digits); }
inline std::string format_value(double d, int digits = 12) { return format_double(d, digits); }

template <Scalar T>
bool is_zero(const T& v) {
  return v == 0;
}

inline Rational abs_value(const Rational& r) { return r < 0 ? Rational(-r) : r; }
inline double abs_value(double d) { return std::fabs(d); }

/// Mass check: exact equality for rationals, |v - target| <= eps for doubles.
template <Scalar T>
bool near(const T& v, const T& target, double eps) {
  if constexpr (is_exact_v<T>) {
    return v == target;
  } else {
    return std::fabs(v - target) <= eps;
  }
}

}  // namespace medid

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>

namespace renormlab {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int sign_of(const Rational& r) {
  return r.sign();
}

inline Rational rat_abs(const Rational& r) {
  return r < 0 ? Rational(-r) : r;
}

inline Rational midpoint(const Rational& a, const Rational& b) {
  return (a + b) / 2;
}

inline BigInt rat_num(const Rational& r) { return numerator(r); }
inline BigInt rat_den(const Rational& r) { return denominator(r); }

// Canonical text form: integers as-is, otherwise "p/q" in lowest terms.
inline std::string rat_to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

// Accepts "p", "p/q" and plain decimal literals ("0.5", "-1.25"), all read
// exactly. Exponent-free on purpose; reports are written the same way.
inline std::optional<Rational> try_parse_rational(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) return std::nullopt;
  bool neg = false;
  std::size_t pos = 0;
  if (s[pos] == '+' || s[pos] == '-') {
    neg = s[pos] == '-';
    ++pos;
  }
  auto read_digits = [&](std::string& out) {
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) out.push_back(s[pos++]);
  };
  std::string whole, frac, den;
  read_digits(whole);
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    read_digits(frac);
    if (whole.empty() && frac.empty()) return std::nullopt;
  } else if (pos < s.size() && s[pos] == '/') {
    ++pos;
    read_digits(den);
    if (whole.empty() || den.empty()) return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  if (whole.empty() && frac.empty()) return std::nullopt;

  Rational value;
  if (!den.empty()) {
    BigInt d(den);
    if (d == 0) return std::nullopt;
    value = Rational(BigInt(whole), d);
  } else {
    value = Rational(BigInt(whole.empty() ? "0" : whole));
    if (!frac.empty()) {
      BigInt scale = 1;
      for (std::size_t k = 0; k < frac.size(); ++k) scale *= 10;
      value += Rational(BigInt(frac), scale);
    }
  }
  if (neg) value = -value;
  return value;
}

inline Rational parse_rational(const std::string& text) {
  auto r = try_parse_rational(text);
  if (!r) throw ParseError("not a rational literal: '" + text + "'");
  return *r;
}

// q^k for integer k >= 0 (exact).
inline Rational rat_pow(const Rational& q, unsigned long long k) {
  Rational acc(1), base = q;
  while (k > 0) {
    if (k & 1ULL) acc *= base;
    base *= base;
    k >>= 1ULL;
  }
  return acc;
}

}  // namespace renormlab

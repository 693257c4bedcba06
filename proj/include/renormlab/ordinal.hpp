#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "renormlab/rational.hpp"

namespace renormlab {

// Ordinals below w^w in Cantor normal form: a sum of terms w^e * c with
// strictly decreasing exponents and positive coefficients. The empty sum is 0.
struct Ordinal {
  struct Term {
    std::uint32_t exp = 0;
    std::uint64_t coeff = 0;
    friend bool operator==(const Term&, const Term&) = default;
  };
  std::vector<Term> terms;

  friend bool operator==(const Ordinal&, const Ordinal&) = default;

  static Ordinal zero() { return {}; }

  static Ordinal finite(std::uint64_t n) {
    Ordinal o;
    if (n > 0) o.terms.push_back({0, n});
    return o;
  }

  static Ordinal omega() { return Ordinal{{{1, 1}}}; }

  // w*j + k, the position grid used by block-structured sequences.
  static Ordinal omega_times_plus(std::uint64_t j, std::uint64_t k) {
    Ordinal o;
    if (j > 0) o.terms.push_back({1, j});
    if (k > 0) o.terms.push_back({0, k});
    return o;
  }

  bool is_zero() const { return terms.empty(); }

  bool well_formed() const {
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (terms[i].coeff == 0) return false;
      if (i + 1 < terms.size() && terms[i].exp <= terms[i + 1].exp) return false;
    }
    return true;
  }
};

struct EmptyInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Cmp { Less, Equal, Greater };

inline Cmp ord_compare(const Ordinal& a, const Ordinal& b) {
  const std::size_t n = std::min(a.terms.size(), b.terms.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ta = a.terms[i];
    const auto& tb = b.terms[i];
    if (ta.exp != tb.exp) return ta.exp > tb.exp ? Cmp::Greater : Cmp::Less;
    if (ta.coeff != tb.coeff) return ta.coeff > tb.coeff ? Cmp::Greater : Cmp::Less;
  }
  if (a.terms.size() != b.terms.size())
    return a.terms.size() > b.terms.size() ? Cmp::Greater : Cmp::Less;
  return Cmp::Equal;
}

inline bool ord_less(const Ordinal& a, const Ordinal& b) { return ord_compare(a, b) == Cmp::Less; }

enum class OrdinalKind { Zero, Successor, Limit };

struct OrdinalClass {
  OrdinalKind kind = OrdinalKind::Zero;
  Ordinal predecessor;  // set only for successors
};

inline OrdinalClass ord_classify(const Ordinal& a) {
  if (a.is_zero()) return {OrdinalKind::Zero, {}};
  if (a.terms.back().exp != 0) return {OrdinalKind::Limit, {}};
  Ordinal pred = a;
  if (--pred.terms.back().coeff == 0) pred.terms.pop_back();
  return {OrdinalKind::Successor, pred};
}

// Supremum of a finite non-empty list, i.e. its maximum.
inline Ordinal ord_sup(const std::vector<Ordinal>& xs) {
  if (xs.empty()) throw EmptyInput("ord_sup: empty list");
  Ordinal best = Ordinal::zero();
  for (const auto& x : xs)
    if (ord_less(best, x)) best = x;
  return best;
}

// Ordinal addition (left absorption): terms of a below b's leading exponent
// vanish. Internal plumbing for position bookkeeping.
inline Ordinal ord_add(const Ordinal& a, const Ordinal& b) {
  if (b.is_zero()) return a;
  Ordinal out;
  const std::uint32_t lead = b.terms.front().exp;
  for (const auto& t : a.terms) {
    if (t.exp > lead) out.terms.push_back(t);
  }
  std::size_t i = 0;
  if (!a.terms.empty()) {
    // merge a's term at the leading exponent, if any survived absorption
    for (const auto& t : a.terms)
      if (t.exp == lead) {
        out.terms.push_back({lead, t.coeff + b.terms.front().coeff});
        i = 1;
        break;
      }
  }
  for (; i < b.terms.size(); ++i) out.terms.push_back(b.terms[i]);
  return out;
}

inline Ordinal ord_succ(const Ordinal& a) { return ord_add(a, Ordinal::finite(1)); }

inline std::string ord_to_string(const Ordinal& a) {
  if (a.is_zero()) return "0";
  std::string out;
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    if (i > 0) out += "+";
    const auto& t = a.terms[i];
    if (t.exp == 0) {
      out += std::to_string(t.coeff);
    } else if (t.exp == 1) {
      out += "w*" + std::to_string(t.coeff);
    } else {
      out += "w^" + std::to_string(t.exp) + "*" + std::to_string(t.coeff);
    }
  }
  return out;
}

inline Ordinal ord_parse(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s == "0") return Ordinal::zero();
  Ordinal out;
  std::size_t pos = 0;
  auto read_u64 = [&]() -> std::uint64_t {
    if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos])))
      throw ParseError("ordinal: expected digits in '" + text + "'");
    std::uint64_t v = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
      v = v * 10 + static_cast<std::uint64_t>(s[pos++] - '0');
    return v;
  };
  while (true) {
    Ordinal::Term t;
    if (pos < s.size() && s[pos] == 'w') {
      ++pos;
      t.exp = 1;
      if (pos < s.size() && s[pos] == '^') {
        ++pos;
        t.exp = static_cast<std::uint32_t>(read_u64());
      }
      t.coeff = 1;
      if (pos < s.size() && s[pos] == '*') {
        ++pos;
        t.coeff = read_u64();
      }
    } else {
      t.exp = 0;
      t.coeff = read_u64();
    }
    if (t.coeff == 0) throw ParseError("ordinal: zero coefficient in '" + text + "'");
    out.terms.push_back(t);
    if (pos == s.size()) break;
    if (s[pos] != '+') throw ParseError("ordinal: unexpected '" + std::string(1, s[pos]) + "'");
    ++pos;
  }
  if (!out.well_formed()) throw ParseError("ordinal: not in normal form: '" + text + "'");
  return out;
}

}  // namespace renormlab

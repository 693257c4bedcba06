#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "renormlab/asym.hpp"
#include "renormlab/expr.hpp"
#include "renormlab/ordinal.hpp"
#include "renormlab/rational.hpp"

namespace renormlab {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a comparison cannot be decided within the scan budget.
struct OrderUndecidable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline long long default_scan_cap() {
  static const long long cap = [] {
    if (const char* s = std::getenv("RENORMLAB_SCAN_CAP")) {
      long long v = std::atoll(s);
      if (v > 0) return v;
    }
    return 1000000LL;
  }();
  return cap;
}

// One omega-length run of values: explicit leading entries, then a closed-form
// term for the remaining indices, plus the exact supremum the run approaches.
// The value at the next limit position is carried by the following segment and
// must equal `limit` (continuity).
struct OmegaBlock {
  std::vector<Rational> prefix;  // values at i < prefix.size()
  ExprPtr term;                  // values at i >= prefix.size()
  Rational limit;

  Rational value(long long i) const {
    if (i >= 0 && static_cast<std::size_t>(i) < prefix.size()) return prefix[static_cast<std::size_t>(i)];
    return eval(term, i);
  }
};

inline bool block_equal(const OmegaBlock& a, const OmegaBlock& b) {
  return a.prefix == b.prefix && expr_equal(a.term, b.term) && a.limit == b.limit;
}

// A strictly increasing continuous transfinite sequence (domain [0, beta]),
// possibly ending with its final value duplicated once (the completion
// elements). Positions: block j covers w*j + i; tail entry k sits at
// w*|blocks| + k; the duplicate, when present, follows the last tail entry.
struct ZSeq {
  std::vector<OmegaBlock> blocks;
  std::vector<Rational> tail;
  bool terminal_repeat = false;

  bool has_repeat() const { return terminal_repeat; }
};

inline ZSeq zseq_finite(std::vector<Rational> values, bool repeat = false) {
  ZSeq z;
  z.tail = std::move(values);
  z.terminal_repeat = repeat;
  return z;
}

inline Ordinal z_length(const ZSeq& z) {
  return Ordinal::omega_times_plus(z.blocks.size(), z.tail.size() + (z.terminal_repeat ? 1 : 0));
}

inline Ordinal z_last_position(const ZSeq& z) {
  std::uint64_t fin = z.tail.size() + (z.terminal_repeat ? 1 : 0);
  return Ordinal::omega_times_plus(z.blocks.size(), fin - 1);
}

// Tail values with the duplicate made explicit.
inline std::vector<Rational> z_tail_stream(const ZSeq& z) {
  std::vector<Rational> s = z.tail;
  if (z.terminal_repeat && !z.tail.empty()) s.push_back(z.tail.back());
  return s;
}

inline std::optional<Rational> z_value_at(const ZSeq& z, const Ordinal& pos) {
  std::uint64_t j = 0, k = 0;
  for (const auto& t : pos.terms) {
    if (t.exp == 1)
      j = t.coeff;
    else if (t.exp == 0)
      k = t.coeff;
    else
      return std::nullopt;
  }
  if (j < z.blocks.size()) return z.blocks[j].value(static_cast<long long>(k));
  if (j == z.blocks.size()) {
    auto s = z_tail_stream(z);
    if (k < s.size()) return s[k];
  }
  return std::nullopt;
}

struct ValidationReport {
  bool ok = true;
  std::string clause;  // violated rule, empty when ok
  std::string detail;
};

namespace detail {

constexpr long long kBlockScan = 1000;

// Certifies an omega block: term inside the closed analysis family, values
// strictly increasing for every index, and the declared limit equal to the
// exact supremum. Exact scan below the certified thresholds, rule-based
// beyond them.
inline ValidationReport certify_block(const OmegaBlock& b, std::size_t index) {
  const std::string where = "block " + std::to_string(index);
  if (!b.term) return {false, "shape", where + ": missing term"};
  long long lo = static_cast<long long>(b.prefix.size());
  asym::RatFn f;
  try {
    f = asym::canonicalize(b.term);
  } catch (const AnalysisError& e) {
    return {false, "term-rule-set", where + ": " + e.what()};
  }

  asym::ESign inc, dom;
  asym::LimitVal lim;
  try {
    inc = asym::eventual_sign(asym::rf_delta(f));
    dom = asym::eventual_sign(asym::rf_sub(asym::rf_const(b.limit), f));
    lim = asym::limit(f);
  } catch (const AnalysisError& e) {
    return {false, "term-rule-set", where + ": " + e.what()};
  }
  if (inc.sign <= 0) return {false, "strictness", where + ": term not strictly increasing"};
  if (dom.sign <= 0) return {false, "limit", where + ": term not dominated by declared limit"};
  if (lim.kind != asym::LimitVal::Kind::Finite || lim.value != b.limit)
    return {false, "limit", where + ": term does not converge to declared limit"};

  long long hi = std::max({inc.threshold + 1, dom.threshold, lo + 1, kBlockScan});
  // up to valid_from (and through the prefix) only the source term is
  // trustworthy, so that window is checked by direct evaluation
  long long exact_until = std::max(lo, f.valid_from);
  Rational prev;
  bool have_prev = false;
  for (long long i = 0; i <= std::min(hi, exact_until); ++i) {
    Rational v;
    try {
      v = b.value(i);
    } catch (const EvalError& e) {
      return {false, "term-defined", where + ": " + e.what()};
    }
    if (have_prev && !(v > prev))
      return {false, "strictness", where + ": value at index " + std::to_string(i) + " does not increase"};
    if (!(v < b.limit))
      return {false, "limit", where + ": value at index " + std::to_string(i) + " reaches declared limit"};
    prev = v;
    have_prev = true;
  }
  // beyond valid_from the canonical form matches the term exactly, so the
  // remaining window reduces to integer sign streams
  if (hi > exact_until) {
    asym::RatFn dlt = asym::rf_delta(f);
    asym::RatFn gap = asym::rf_sub(asym::rf_const(b.limit), f);
    asym::SignScan den_prev(f.den, exact_until);
    asym::SignScan den_cur(f.den, exact_until + 1);
    asym::SignScan dnum(dlt.num, exact_until);
    asym::SignScan gnum(gap.num, exact_until + 1);
    for (long long i = exact_until + 1; i <= hi; ++i) {
      int sp = den_prev.sign(), sc = den_cur.sign();
      if (sp == 0 || sc == 0)
        return {false, "term-defined", where + ": denominator vanishes at index " + std::to_string(i)};
      if (dnum.sign() * sp * sc <= 0)
        return {false, "strictness", where + ": value at index " + std::to_string(i) + " does not increase"};
      if (gnum.sign() * sc <= 0)
        return {false, "limit", where + ": value at index " + std::to_string(i) + " reaches declared limit"};
      den_prev.advance();
      den_cur.advance();
      dnum.advance();
      gnum.advance();
    }
  }
  return {};
}

}  // namespace detail

inline ValidationReport z_validate(const ZSeq& z) {
  if (z.blocks.empty() && z.tail.empty()) return {false, "shape", "empty sequence"};
  if (!z.blocks.empty() && z.tail.empty())
    return {false, "shape", "block-terminated sequence has no closing value (tail required)"};
  for (std::size_t j = 0; j < z.blocks.size(); ++j) {
    ValidationReport r = detail::certify_block(z.blocks[j], j);
    if (!r.ok) return r;
    if (j + 1 < z.blocks.size()) {
      Rational next0 = z.blocks[j + 1].value(0);
      if (next0 != z.blocks[j].limit)
        return {false, "continuity",
                "block " + std::to_string(j + 1) + " must open at the preceding limit " +
                    rat_to_string(z.blocks[j].limit) + ", got " + rat_to_string(next0)};
    }
  }
  if (!z.blocks.empty() && z.tail.front() != z.blocks.back().limit)
    return {false, "continuity",
            "tail must open at the final block limit " + rat_to_string(z.blocks.back().limit) +
                ", got " + rat_to_string(z.tail.front())};
  for (std::size_t k = 1; k < z.tail.size(); ++k)
    if (!(z.tail[k] > z.tail[k - 1]))
      return {false, "strictness", "tail entry " + std::to_string(k) + " does not increase"};
  return {};
}

// --- first difference / comparison -----------------------------------------

struct FirstDiff {
  enum class Kind { Equal, ExtensionOf, Diverge, Undecidable } kind = Kind::Equal;
  enum class Side { Left, Right } side = Side::Left;  // ExtensionOf: the extended (shorter) side;
                                                      // Diverge: side with the smaller value
  Ordinal position;                                   // Diverge only
  Rational left_value, right_value;                   // Diverge only
};

namespace detail {

inline FirstDiff diverge_at(std::uint64_t j, std::uint64_t k, Rational lv, Rational rv) {
  FirstDiff d;
  d.kind = FirstDiff::Kind::Diverge;
  d.side = lv < rv ? FirstDiff::Side::Left : FirstDiff::Side::Right;
  d.position = Ordinal::omega_times_plus(j, k);
  d.left_value = std::move(lv);
  d.right_value = std::move(rv);
  return d;
}

// First index where two structurally different blocks disagree, decided by
// exact difference analysis of the closed forms with the scan cap as the
// declared model boundary.
inline std::optional<FirstDiff> block_first_diff(const OmegaBlock& bx, const OmegaBlock& by,
                                                 std::uint64_t j, long long cap) {
  long long scan_hi;
  long long exact_until = std::max(static_cast<long long>(bx.prefix.size()),
                                   static_cast<long long>(by.prefix.size()));
  int beyond_sign = 0;  // 0: terms identical beyond scan_hi
  bool certified = true;
  std::optional<asym::RatFn> fx, fy, d;
  try {
    fx = asym::canonicalize(bx.term);
    fy = asym::canonicalize(by.term);
    d = asym::rf_sub(*fx, *fy);
    asym::ESign es = asym::eventual_sign(*d);
    scan_hi = std::max(es.threshold, exact_until);
    beyond_sign = es.sign;
    exact_until = std::max({exact_until, fx->valid_from, fy->valid_from});
  } catch (const AnalysisError&) {
    certified = false;
    scan_hi = cap;
  }
  bool capped = scan_hi > cap;
  if (capped) scan_hi = cap;
  for (long long i = 0; i <= std::min(scan_hi, certified ? exact_until : scan_hi); ++i) {
    Rational vx = bx.value(i), vy = by.value(i);
    if (vx != vy) return diverge_at(j, static_cast<std::uint64_t>(i), vx, vy);
  }
  if (certified && scan_hi > exact_until) {
    // past both valid_from marks the canonical difference is exact; stream its
    // numerator sign and only materialize values at the first disagreement
    asym::SignScan dnum(d->num, exact_until + 1);
    for (long long i = exact_until + 1; i <= scan_hi; ++i) {
      if (dnum.sign() != 0)
        return diverge_at(j, static_cast<std::uint64_t>(i), asym::rf_eval(*fx, i),
                          asym::rf_eval(*fy, i));
      dnum.advance();
    }
  }
  if (!capped && certified && beyond_sign == 0) {
    if (bx.limit != by.limit)
      throw ValidationError("blocks with identical terms declare different limits");
    return std::nullopt;  // segments semantically equal
  }
  FirstDiff u;
  u.kind = FirstDiff::Kind::Undecidable;
  return u;
}

}  // namespace detail

inline FirstDiff z_first_difference(const ZSeq& x, const ZSeq& y, long long cap = default_scan_cap()) {
  const std::size_t bx = x.blocks.size(), by = y.blocks.size();
  std::size_t j = 0;
  while (j < bx && j < by) {
    if (block_equal(x.blocks[j], y.blocks[j])) {
      ++j;
      continue;
    }
    auto r = detail::block_first_diff(x.blocks[j], y.blocks[j], j, cap);
    if (r) return *r;
    ++j;  // semantically equal segments
  }
  const bool x_fin = j >= bx, y_fin = j >= by;
  if (x_fin && y_fin) {
    auto sx = z_tail_stream(x), sy = z_tail_stream(y);
    const std::size_t n = std::min(sx.size(), sy.size());
    for (std::size_t k = 0; k < n; ++k)
      if (sx[k] != sy[k]) return detail::diverge_at(j, k, sx[k], sy[k]);
    if (sx.size() == sy.size()) return {};
    FirstDiff d;
    d.kind = FirstDiff::Kind::ExtensionOf;
    d.side = sx.size() < sy.size() ? FirstDiff::Side::Left : FirstDiff::Side::Right;
    return d;
  }
  // one side runs a block across the other's finite remainder
  const bool left_finite = x_fin;
  const auto s = left_finite ? z_tail_stream(x) : z_tail_stream(y);
  const OmegaBlock& blk = left_finite ? y.blocks[j] : x.blocks[j];
  for (std::size_t k = 0; k < s.size(); ++k) {
    Rational bv = blk.value(static_cast<long long>(k));
    Rational lv = left_finite ? s[k] : bv;
    Rational rv = left_finite ? bv : s[k];
    if (lv != rv) return detail::diverge_at(j, k, lv, rv);
  }
  FirstDiff d;
  d.kind = FirstDiff::Kind::ExtensionOf;
  d.side = left_finite ? FirstDiff::Side::Left : FirstDiff::Side::Right;
  return d;
}

// Order on Z: a strict extension is larger; at a first difference the side
// with the SMALLER value is the larger sequence.
inline Cmp z_compare(const ZSeq& x, const ZSeq& y, long long cap = default_scan_cap()) {
  FirstDiff d = z_first_difference(x, y, cap);
  switch (d.kind) {
    case FirstDiff::Kind::Equal:
      return Cmp::Equal;
    case FirstDiff::Kind::ExtensionOf:
      return d.side == FirstDiff::Side::Left ? Cmp::Less : Cmp::Greater;
    case FirstDiff::Kind::Diverge:
      return d.side == FirstDiff::Side::Right ? Cmp::Less : Cmp::Greater;
    case FirstDiff::Kind::Undecidable:
      break;
  }
  throw OrderUndecidable("no difference within the scan cap");
}

inline bool z_less(const ZSeq& x, const ZSeq& y) { return z_compare(x, y) == Cmp::Less; }
inline bool z_equal(const ZSeq& x, const ZSeq& y) { return z_compare(x, y) == Cmp::Equal; }

// --- theta isomorphism ------------------------------------------------------

// Order isomorphism R -> (0,1), rational-exact: q |-> 1/2 + q/(2(1+|q|)).
inline Rational theta(const Rational& q) { return Rational(1, 2) + q / (2 * (1 + rat_abs(q))); }

inline Rational theta_inv(const Rational& p) {
  if (!(p > 0 && p < 1)) throw std::domain_error("theta_inv needs a value in (0,1)");
  Rational u = 2 * p - 1;
  return u / (1 - rat_abs(u));
}

inline ExprPtr theta_ast(const ExprPtr& e) {
  return e_add(e_const(Rational(1, 2)),
               e_div(e, e_mul(e_const(Rational(2)), e_add(e_const(Rational(1)), e_abs(e)))));
}

inline ExprPtr theta_inv_ast(const ExprPtr& p) {
  ExprPtr u = e_sub(e_mul(e_const(Rational(2)), p), e_const(Rational(1)));
  return e_div(u, e_sub(e_const(Rational(1)), e_abs(u)));
}

// Coordinatewise theta; preserves order, strictness, continuity and the
// terminal duplicate.
inline ZSeq theta_map(const ZSeq& z) {
  ZSeq out;
  out.terminal_repeat = z.terminal_repeat;
  for (const auto& b : z.blocks) {
    OmegaBlock ob;
    for (const auto& v : b.prefix) ob.prefix.push_back(theta(v));
    ob.term = theta_ast(b.term);
    ob.limit = theta(b.limit);
    out.blocks.push_back(std::move(ob));
  }
  for (const auto& v : z.tail) out.tail.push_back(theta(v));
  return out;
}

// --- the doubling embedding -------------------------------------------------

// Coordinate rules: 2x at position 0, x_xi + x_{xi-1} + 1 at successors,
// 2x + 1 at limits. Removes a terminal duplicate sitting at a successor
// (the image strictly increases there) and keeps one at a limit.
inline ZSeq phi_map(const ZSeq& z) {
  ZSeq out;
  for (std::size_t j = 0; j < z.blocks.size(); ++j) {
    const auto& b = z.blocks[j];
    const long long m = static_cast<long long>(b.prefix.size());
    OmegaBlock ob;
    Rational v0 = b.value(0);
    ob.prefix.push_back(j == 0 ? Rational(2 * v0) : Rational(2 * v0 + 1));
    for (long long i = 1; i <= m; ++i) ob.prefix.push_back(b.value(i) + b.value(i - 1) + 1);
    ob.term = e_add(e_add(b.term, expr_shift(b.term, -1)), e_const(Rational(1)));
    ob.limit = 2 * b.limit + 1;
    out.blocks.push_back(std::move(ob));
  }
  const bool tail_at_limit = !z.blocks.empty();
  for (std::size_t k = 0; k < z.tail.size(); ++k) {
    if (k == 0)
      out.tail.push_back(tail_at_limit ? Rational(2 * z.tail[0] + 1) : Rational(2 * z.tail[0]));
    else
      out.tail.push_back(z.tail[k] + z.tail[k - 1] + 1);
  }
  if (z.terminal_repeat) {
    const Rational& v = z.tail.back();
    if (z.tail.size() == 1 && tail_at_limit) {
      out.terminal_repeat = true;  // duplicate at a limit survives: 2v+1 twice
    } else {
      out.tail.push_back(2 * v + 1);  // duplicate at a successor becomes strict
    }
  }
  return out;
}

// --- semigroup product ------------------------------------------------------

inline Rational z_prod_value(const Rational& a, const Rational& b) {
  return theta_inv(theta(a) * theta(b));
}

inline ExprPtr z_prod_ast(const ExprPtr& a, const ExprPtr& b) {
  return theta_inv_ast(e_mul(theta_ast(a), theta_ast(b)));
}

// Coordinatewise theta-conjugated product on the common domain; the longer
// sequence's remaining values are copied verbatim.
inline ZSeq z_product(const ZSeq& x, const ZSeq& y) {
  ZSeq out;
  const std::size_t c = std::min(x.blocks.size(), y.blocks.size());
  for (std::size_t j = 0; j < c; ++j) {
    const auto& a = x.blocks[j];
    const auto& b = y.blocks[j];
    OmegaBlock ob;
    const long long m = static_cast<long long>(std::max(a.prefix.size(), b.prefix.size()));
    for (long long i = 0; i < m; ++i) ob.prefix.push_back(z_prod_value(a.value(i), b.value(i)));
    ob.term = z_prod_ast(a.term, b.term);
    ob.limit = z_prod_value(a.limit, b.limit);
    out.blocks.push_back(std::move(ob));
  }
  const bool x_fin = x.blocks.size() == c, y_fin = y.blocks.size() == c;
  auto append_stream = [&out](const std::vector<Rational>& s, std::size_t from) {
    for (std::size_t k = from; k < s.size(); ++k) out.tail.push_back(s[k]);
  };
  if (x_fin && y_fin) {
    auto sx = z_tail_stream(x), sy = z_tail_stream(y);
    const std::size_t n = std::min(sx.size(), sy.size());
    for (std::size_t k = 0; k < n; ++k) out.tail.push_back(z_prod_value(sx[k], sy[k]));
    append_stream(sx.size() >= sy.size() ? sx : sy, n);
    // re-fold a verbatim or simultaneous duplicate into the repeat flag
    const std::size_t t = out.tail.size();
    if (t >= 2 && out.tail[t - 1] == out.tail[t - 2]) {
      out.tail.pop_back();
      out.terminal_repeat = true;
    }
    return out;
  }
  // exactly one side still has blocks: its remainder is copied verbatim
  const ZSeq& longer = x_fin ? y : x;
  const auto s = x_fin ? z_tail_stream(x) : z_tail_stream(y);
  const OmegaBlock& blk = longer.blocks[c];
  OmegaBlock ob;
  const std::size_t m = std::max(s.size(), blk.prefix.size());
  for (std::size_t i = 0; i < m; ++i) {
    Rational bv = blk.value(static_cast<long long>(i));
    ob.prefix.push_back(i < s.size() ? z_prod_value(s[i], bv) : bv);
  }
  ob.term = blk.term;
  ob.limit = blk.limit;
  out.blocks.push_back(std::move(ob));
  for (std::size_t j = c + 1; j < longer.blocks.size(); ++j) out.blocks.push_back(longer.blocks[j]);
  out.tail = longer.tail;
  out.terminal_repeat = longer.terminal_repeat;
  return out;
}

// --- embedding into Z0 ------------------------------------------------------

inline bool is_z0(const ZSeq& z, std::string* why = nullptr) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  auto s = z_tail_stream(z);
  Rational first = z.blocks.empty() ? s.front() : z.blocks.front().value(0);
  if (first != 0) return fail("first value must be 0, got " + rat_to_string(first));
  for (const auto& b : z.blocks) {
    if (b.limit > 1) return fail("block limit exceeds 1");
    for (const auto& v : b.prefix)
      if (v < 0 || v > 1) return fail("block value outside [0,1]");
  }
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] < 0 || s[k] > 1) return fail("value outside [0,1]");
    const bool at_limit = (k == 0 && !z.blocks.empty());
    if (s[k] == 1 && !at_limit) return fail("value 1 at a non-limit position");
  }
  return true;
}

// Prepends 0 and maps the original coordinates through theta. Finite
// positions shift by one; positions at or past the first limit stay put.
inline ZSeq to_z0(const ZSeq& z) {
  ZSeq out;
  out.terminal_repeat = z.terminal_repeat;
  if (z.blocks.empty()) {
    out.tail.push_back(Rational(0));
    for (const auto& v : z.tail) out.tail.push_back(theta(v));
    return out;
  }
  {
    const auto& b = z.blocks.front();
    OmegaBlock ob;
    ob.prefix.push_back(Rational(0));
    for (long long i = 0; i < static_cast<long long>(b.prefix.size()); ++i)
      ob.prefix.push_back(theta(b.value(i)));
    ob.term = theta_ast(expr_shift(b.term, -1));
    ob.limit = theta(b.limit);
    out.blocks.push_back(std::move(ob));
  }
  for (std::size_t j = 1; j < z.blocks.size(); ++j) {
    const auto& b = z.blocks[j];
    OmegaBlock ob;
    for (const auto& v : b.prefix) ob.prefix.push_back(theta(v));
    ob.term = theta_ast(b.term);
    ob.limit = theta(b.limit);
    out.blocks.push_back(std::move(ob));
  }
  for (const auto& v : z.tail) out.tail.push_back(theta(v));
  return out;
}

// --- serialization ----------------------------------------------------------

inline std::string z_to_string(const ZSeq& z) {
  std::string out = "blocks=[";
  for (std::size_t j = 0; j < z.blocks.size(); ++j) {
    if (j) out += ",";
    const auto& b = z.blocks[j];
    out += "{";
    if (!b.prefix.empty()) {
      out += "prefix:[";
      for (std::size_t i = 0; i < b.prefix.size(); ++i) {
        if (i) out += ",";
        out += rat_to_string(b.prefix[i]);
      }
      out += "],";
    }
    out += "term:\"" + expr_to_string(b.term) + "\",limit:" + rat_to_string(b.limit) + "}";
  }
  out += "];tail=[";
  for (std::size_t k = 0; k < z.tail.size(); ++k) {
    if (k) out += ",";
    out += rat_to_string(z.tail[k]);
  }
  out += "];repeat=";
  out += z.terminal_repeat ? "true" : "false";
  return out;
}

namespace detail {

class ZSeqParser {
 public:
  explicit ZSeqParser(const std::string& text) {
    bool quoted = false;
    for (char ch : text) {
      if (ch == '"') quoted = !quoted;
      if (!quoted && std::isspace(static_cast<unsigned char>(ch))) continue;
      src_.push_back(ch);
    }
  }

  ZSeq parse() {
    ZSeq z;
    bool saw_tail = false;
    while (pos_ < src_.size()) {
      std::string key = read_until('=');
      if (key == "blocks") {
        parse_blocks(z);
      } else if (key == "tail") {
        parse_tail(z);
        saw_tail = true;
      } else if (key == "repeat") {
        std::string v = read_until(';');
        if (v == "true")
          z.terminal_repeat = true;
        else if (v == "false")
          z.terminal_repeat = false;
        else
          throw ParseError("sequence: repeat must be true or false");
      } else {
        throw ParseError("sequence: unknown section '" + key + "'");
      }
      if (pos_ < src_.size()) {
        if (src_[pos_] != ';') throw ParseError("sequence: expected ';'");
        ++pos_;
      }
    }
    if (!saw_tail) throw ParseError("sequence: missing tail section");
    return z;
  }

 private:
  std::string src_;
  std::size_t pos_ = 0;

  std::string read_until(char stop) {
    std::string out;
    while (pos_ < src_.size() && src_[pos_] != stop) out.push_back(src_[pos_++]);
    if (stop == '=') {
      if (pos_ >= src_.size()) throw ParseError("sequence: expected '='");
      ++pos_;
    }
    return out;
  }

  void expect(char c) {
    if (pos_ >= src_.size() || src_[pos_] != c)
      throw ParseError(std::string("sequence: expected '") + c + "'");
    ++pos_;
  }

  bool eat(char c) {
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Rational read_rational(const std::string& stops) {
    std::string out;
    while (pos_ < src_.size() && stops.find(src_[pos_]) == std::string::npos)
      out.push_back(src_[pos_++]);
    return parse_rational(out);
  }

  void parse_tail(ZSeq& z) {
    expect('[');
    if (eat(']')) return;
    while (true) {
      z.tail.push_back(read_rational(",]"));
      if (eat(']')) return;
      expect(',');
    }
  }

  void parse_blocks(ZSeq& z) {
    expect('[');
    if (eat(']')) return;
    while (true) {
      z.blocks.push_back(parse_block());
      if (eat(']')) return;
      expect(',');
    }
  }

  OmegaBlock parse_block() {
    expect('{');
    OmegaBlock b;
    bool saw_term = false, saw_limit = false;
    while (true) {
      std::string key = read_until(':');
      if (pos_ >= src_.size() || src_[pos_] != ':') throw ParseError("sequence: expected ':'");
      ++pos_;
      if (key == "prefix") {
        expect('[');
        if (!eat(']')) {
          while (true) {
            b.prefix.push_back(read_rational(",]"));
            if (eat(']')) break;
            expect(',');
          }
        }
      } else if (key == "term") {
        expect('"');
        std::string t = read_until('"');
        expect('"');
        b.term = parse_expr(t);
        saw_term = true;
      } else if (key == "limit") {
        b.limit = read_rational(",}");
        saw_limit = true;
      } else {
        throw ParseError("sequence: unknown block field '" + key + "'");
      }
      if (eat('}')) break;
      expect(',');
    }
    if (!saw_term || !saw_limit) throw ParseError("sequence: block needs term and limit");
    return b;
  }
};

}  // namespace detail

inline ZSeq z_parse(const std::string& text) { return detail::ZSeqParser(text).parse(); }

}  // namespace renormlab

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "renormlab/zseq.hpp"

namespace renormlab {

struct MalformedFamily : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotSeparable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotInZ0 : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A declared sequence of ZSeq members indexed by n >= n_start. Only finitely
// describable shapes are admitted; analysis works on the description, with
// exact scans below the certified thresholds.
struct ZFamily {
  enum class Kind {
    FiniteList,       // explicit members
    TailTemplate,     // fixed blocks, tail entries as expressions in n
    GrowingPrefix,    // member(n) = (g(0), ..., g(n))
    PrefixDeviation,  // base with one block value overridden at a moving index
  };
  Kind kind = Kind::FiniteList;
  long long n_start = 1;

  std::vector<ZSeq> items;  // FiniteList

  std::vector<OmegaBlock> blocks;  // TailTemplate
  std::vector<ExprPtr> tail_terms;
  bool terminal_repeat = false;

  ExprPtr growth;  // GrowingPrefix

  ZSeq base;  // PrefixDeviation
  std::size_t dev_block = 0;
  ExprPtr dev_offset;  // must advance in lockstep with n (n + c)
  ExprPtr dev_value;
};

inline ZFamily zfam_list(std::vector<ZSeq> items, long long n_start = 1) {
  ZFamily f;
  f.kind = ZFamily::Kind::FiniteList;
  f.n_start = n_start;
  f.items = std::move(items);
  return f;
}

inline ZFamily zfam_tail_template(std::vector<OmegaBlock> blocks, std::vector<ExprPtr> tail_terms,
                                  bool repeat = false, long long n_start = 1) {
  ZFamily f;
  f.kind = ZFamily::Kind::TailTemplate;
  f.n_start = n_start;
  f.blocks = std::move(blocks);
  f.tail_terms = std::move(tail_terms);
  f.terminal_repeat = repeat;
  return f;
}

inline ZFamily zfam_growing_prefix(ExprPtr growth, long long n_start = 1) {
  ZFamily f;
  f.kind = ZFamily::Kind::GrowingPrefix;
  f.n_start = n_start;
  f.growth = std::move(growth);
  return f;
}

inline ZFamily zfam_prefix_deviation(ZSeq base, std::size_t block, ExprPtr offset, ExprPtr value,
                                     long long n_start = 1) {
  ZFamily f;
  f.kind = ZFamily::Kind::PrefixDeviation;
  f.n_start = n_start;
  f.base = std::move(base);
  f.dev_block = block;
  f.dev_offset = std::move(offset);
  f.dev_value = std::move(value);
  return f;
}

inline ZSeq family_member(const ZFamily& f, long long n) {
  if (n < f.n_start) throw MalformedFamily("member index below the family start");
  switch (f.kind) {
    case ZFamily::Kind::FiniteList: {
      std::size_t idx = static_cast<std::size_t>(n - f.n_start);
      if (idx >= f.items.size()) throw MalformedFamily("member index past the list end");
      return f.items[idx];
    }
    case ZFamily::Kind::TailTemplate: {
      ZSeq z;
      z.blocks = f.blocks;
      z.terminal_repeat = f.terminal_repeat;
      for (const auto& e : f.tail_terms) z.tail.push_back(eval(e, n));
      return z;
    }
    case ZFamily::Kind::GrowingPrefix: {
      ZSeq z;
      for (long long k = 0; k <= n; ++k) z.tail.push_back(eval(f.growth, k));
      return z;
    }
    case ZFamily::Kind::PrefixDeviation: {
      Rational off = eval(f.dev_offset, n);
      if (rat_den(off) != 1 || off < 0) throw MalformedFamily("deviation offset must be a natural number");
      long long pos = static_cast<long long>(rat_num(off));
      ZSeq z = f.base;
      OmegaBlock& b = z.blocks.at(f.dev_block);
      while (static_cast<long long>(b.prefix.size()) <= pos)
        b.prefix.push_back(b.value(static_cast<long long>(b.prefix.size())));
      b.prefix[static_cast<std::size_t>(pos)] = eval(f.dev_value, n);
      return z;
    }
  }
  throw MalformedFamily("corrupt family kind");
}

// --- position helpers -------------------------------------------------------

// Final position before the terminal duplicate (the duplicate, when present,
// sits one past this).
inline Ordinal z_beta_position(const ZSeq& x) {
  return Ordinal::omega_times_plus(x.blocks.size(), x.tail.size() - 1);
}

// Shape class: 1 for plain sequences, 2 for a duplicate after a zero or
// successor final position, 3 for a duplicate after a limit final position.
inline int z_shape_case(const ZSeq& x) {
  if (!x.terminal_repeat) return 1;
  if (x.tail.size() >= 2) return 2;
  return x.blocks.empty() ? 2 : 3;
}

inline ZSeq z_append(const ZSeq& x, const Rational& v) {
  if (x.terminal_repeat) throw std::logic_error("cannot extend past a terminal duplicate");
  ZSeq out = x;
  out.tail.push_back(v);
  return out;
}

// Same values through the final position, with the final value replaced.
inline ZSeq z_replace_end(const ZSeq& x, const Rational& v) {
  if (x.tail.size() == 1 && !x.blocks.empty())
    throw std::logic_error("cannot replace a value pinned by block continuity");
  ZSeq out = x;
  out.terminal_repeat = false;
  out.tail.back() = v;
  return out;
}

// Values of x through position alpha, then one appended value.
inline ZSeq z_truncate_append(const ZSeq& x, const Ordinal& pos, const Rational& v) {
  std::uint64_t j = 0, k = 0;
  for (const auto& t : pos.terms) {
    if (t.exp == 1)
      j = t.coeff;
    else if (t.exp == 0)
      k = t.coeff;
    else
      throw std::logic_error("truncation position outside the sequence domain");
  }
  ZSeq out;
  if (j < x.blocks.size()) {
    out.blocks.assign(x.blocks.begin(), x.blocks.begin() + static_cast<std::ptrdiff_t>(j));
    for (std::uint64_t i = 0; i <= k; ++i)
      out.tail.push_back(x.blocks[j].value(static_cast<long long>(i)));
  } else {
    out.blocks = x.blocks;
    if (k >= x.tail.size()) throw std::logic_error("truncation position outside the sequence domain");
    out.tail.assign(x.tail.begin(), x.tail.begin() + static_cast<std::ptrdiff_t>(k + 1));
  }
  out.tail.push_back(v);
  return out;
}

// A plain sequence w with x < w <= m, found from the first difference; this is
// the density witness used throughout the separation machinery.
inline ZSeq y_between(const ZSeq& x, const ZSeq& m) {
  FirstDiff d = z_first_difference(x, m);
  if (d.kind == FirstDiff::Kind::ExtensionOf && d.side == FirstDiff::Side::Left) {
    Rational v = *z_value_at(m, z_length(x));
    // m extending x by duplicating the final value leaves no room at v itself;
    // one step higher stays strictly below the duplicate-terminated member
    if (!x.tail.empty() && v == x.tail.back()) return z_append(x, v + 1);
    return z_append(x, v);
  }
  if (d.kind != FirstDiff::Kind::Diverge || !(d.right_value < d.left_value))
    throw std::logic_error("y_between needs x < m");
  const Ordinal beta = z_beta_position(x);
  const Cmp at = ord_compare(d.position, beta);
  if (at == Cmp::Equal) {
    if (x.tail.size() == 1 && !x.blocks.empty())
      throw std::logic_error("divergence at a limit final position is impossible for valid inputs");
    return z_replace_end(x, midpoint(d.right_value, d.left_value));
  }
  if (at == Cmp::Greater) throw std::logic_error("y_between needs x < m");
  if (!x.terminal_repeat) return z_append(x, x.tail.back() + 1);
  Rational next = *z_value_at(x, ord_succ(d.position));
  return z_truncate_append(x, d.position, midpoint(d.left_value, next));
}

// --- family certificates ----------------------------------------------------

namespace detail {

constexpr long long kFamilyHeadCap = 20000;

inline asym::RatFn canon_or_reject(const ExprPtr& e, const char* what) {
  try {
    return asym::canonicalize(e);
  } catch (const AnalysisError& err) {
    throw MalformedFamily(std::string(what) + ": " + err.what());
  }
}

inline asym::PointEval ast_point_eval(const ExprPtr& ast, const asym::RatFn& f) {
  if (ast) return [ast](long long n) { return eval(ast, n); };
  return asym::rf_pointwise(f);
}

inline void check_head_window(long long settle) {
  if (settle > kFamilyHeadCap)
    throw OrderUndecidable("family certificate threshold " + std::to_string(settle) +
                           " exceeds the head scan budget");
}

// Expressions for the member value stream, with the terminal duplicate made
// explicit.
inline std::vector<ExprPtr> tt_stream_terms(const ZFamily& f) {
  std::vector<ExprPtr> s = f.tail_terms;
  if (f.terminal_repeat && !s.empty()) s.push_back(s.back());
  return s;
}

struct DevFacts {
  long long shift = 0;   // deviation offset is n + shift
  int direction = 0;     // sign of (override value - base value) eventually
  long long settle = 0;  // certificates hold for n >= settle
};

inline DevFacts dev_facts(const ZFamily& f) {
  if (f.dev_block >= f.base.blocks.size())
    throw MalformedFamily("deviation block index out of range");
  DevFacts facts;
  asym::RatFn off = canon_or_reject(f.dev_offset, "deviation offset");
  Rational first = eval(f.dev_offset, f.n_start);
  if (rat_den(first) != 1) throw MalformedFamily("deviation offset must take integer values");
  long long c = static_cast<long long>(rat_num(first)) - f.n_start;
  asym::RatFn lockstep =
      asym::rf_sub(off, asym::canonicalize(e_add(e_var(), e_const(Rational(c)))));
  asym::ESign es_off = asym::eventual_sign(lockstep);
  if (es_off.sign != 0)
    throw MalformedFamily("deviation offset must advance in lockstep with the index");
  facts.shift = c;

  const OmegaBlock& blk = f.base.blocks[f.dev_block];
  asym::RatFn v = canon_or_reject(f.dev_value, "deviation value");
  asym::RatFn at = asym::canonicalize(expr_shift(blk.term, c));
  asym::RatFn below = asym::canonicalize(expr_shift(blk.term, c - 1));
  asym::RatFn above = asym::canonicalize(expr_shift(blk.term, c + 1));
  asym::ESign dir = asym::eventual_sign(asym::rf_sub(v, at));
  asym::ESign lo = asym::eventual_sign(asym::rf_sub(v, below));
  asym::ESign hi = asym::eventual_sign(asym::rf_sub(above, v));
  asym::ESign cap = asym::eventual_sign(asym::rf_sub(asym::rf_const(blk.limit), v));
  if (lo.sign <= 0 || hi.sign <= 0 || cap.sign <= 0)
    throw MalformedFamily("deviation value leaves the strict corridor of its block");
  facts.direction = dir.sign;
  long long prefix_clear = static_cast<long long>(blk.prefix.size()) - c + 1;
  facts.settle = std::max({es_off.threshold, dir.threshold, lo.threshold, hi.threshold,
                           cap.threshold, prefix_clear, f.n_start});
  check_head_window(facts.settle);
  return facts;
}

// Validates every member: certificates for the symbolic tail, exact
// validation across the head window.
inline long long family_check(const ZFamily& f) {
  switch (f.kind) {
    case ZFamily::Kind::FiniteList: {
      for (std::size_t i = 0; i < f.items.size(); ++i) {
        ValidationReport r = z_validate(f.items[i]);
        if (!r.ok)
          throw MalformedFamily("member " + std::to_string(i) + ": " + r.clause + ": " + r.detail);
      }
      return f.n_start;
    }
    case ZFamily::Kind::GrowingPrefix: {
      asym::RatFn g = canon_or_reject(f.growth, "growth term");
      asym::ESign inc = asym::eventual_sign(asym::rf_delta(g));
      if (inc.sign <= 0) throw MalformedFamily("growth term must increase strictly");
      long long hi = std::max(inc.threshold + 1, f.n_start);
      check_head_window(hi);
      Rational prev = eval(f.growth, 0);
      for (long long k = 1; k <= hi; ++k) {
        Rational v = eval(f.growth, k);
        if (!(v > prev)) throw MalformedFamily("growth term must increase strictly");
        prev = v;
      }
      return std::max(inc.threshold, f.n_start);
    }
    case ZFamily::Kind::TailTemplate: {
      if (f.tail_terms.empty()) throw MalformedFamily("template needs at least one tail term");
      long long settle = f.n_start;
      std::vector<asym::RatFn> fns;
      for (const auto& e : f.tail_terms) fns.push_back(canon_or_reject(e, "tail term"));
      if (!f.blocks.empty()) {
        asym::ESign open = asym::eventual_sign(
            asym::rf_sub(fns.front(), asym::rf_const(f.blocks.back().limit)));
        if (open.sign != 0)
          throw MalformedFamily("tail must open at the final block limit for every index");
        settle = std::max(settle, open.threshold);
      }
      for (std::size_t k = 0; k + 1 < fns.size(); ++k) {
        asym::ESign inc = asym::eventual_sign(asym::rf_sub(fns[k + 1], fns[k]));
        if (inc.sign <= 0) throw MalformedFamily("tail terms must increase strictly at every index");
        settle = std::max(settle, inc.threshold);
      }
      check_head_window(settle);
      for (long long n = f.n_start; n <= settle; ++n) {
        ValidationReport r = z_validate(family_member(f, n));
        if (!r.ok)
          throw MalformedFamily("member at index " + std::to_string(n) + ": " + r.clause + ": " + r.detail);
      }
      return settle;
    }
    case ZFamily::Kind::PrefixDeviation: {
      ValidationReport r = z_validate(f.base);
      if (!r.ok) throw MalformedFamily("deviation base: " + r.clause + ": " + r.detail);
      DevFacts facts = dev_facts(f);
      for (long long n = f.n_start; n <= facts.settle; ++n) {
        ValidationReport m = z_validate(family_member(f, n));
        if (!m.ok)
          throw MalformedFamily("member at index " + std::to_string(n) + ": " + m.clause + ": " + m.detail);
      }
      return facts.settle;
    }
  }
  throw MalformedFamily("corrupt family kind");
}

// Eventual relation of template members to a fixed target.
struct TTProfile {
  enum class Kind { Extension, DivergeFixed, EqualEventually, PrefixEventually } kind;
  long long settle = 0;
  Ordinal position;     // DivergeFixed
  asym::RatFn value;    // DivergeFixed: member value there; Extension: first new value
  ExprPtr value_ast;    // exact evaluation below certified thresholds
  Rational x_value;     // DivergeFixed: target value at the position
  int sign = 0;         // sign of (member value - target value) eventually
};

inline TTProfile tt_profile(const ZSeq& x, const ZFamily& fam, long long cap = default_scan_cap()) {
  TTProfile p;
  p.settle = fam.n_start;
  const std::size_t bF = fam.blocks.size(), bX = x.blocks.size();
  std::size_t j = 0;
  while (j < bF && j < bX) {
    if (!block_equal(fam.blocks[j], x.blocks[j])) {
      auto d = block_first_diff(fam.blocks[j], x.blocks[j], j, cap);
      if (d) {
        if (d->kind == FirstDiff::Kind::Undecidable)
          throw OrderUndecidable("no block difference within the scan cap");
        p.kind = TTProfile::Kind::DivergeFixed;
        p.position = d->position;
        p.value = asym::rf_const(d->left_value);
        p.x_value = d->right_value;
        p.sign = d->left_value > d->right_value ? 1 : -1;
        return p;
      }
    }
    ++j;
  }
  if (j == bF && bF < bX) {
    // member tails run against the target's next block
    const OmegaBlock& xb = x.blocks[j];
    auto terms = tt_stream_terms(fam);
    for (std::size_t k = 0; k < terms.size(); ++k) {
      Rational xv = xb.value(static_cast<long long>(k));
      asym::RatFn d = asym::rf_sub(asym::canonicalize(terms[k]), asym::rf_const(xv));
      asym::ESign es = asym::eventual_sign(d);
      p.settle = std::max(p.settle, es.threshold);
      if (es.sign != 0) {
        p.kind = TTProfile::Kind::DivergeFixed;
        p.position = Ordinal::omega_times_plus(j, k);
        p.value = asym::canonicalize(terms[k]);
        p.value_ast = terms[k];
        p.x_value = xv;
        p.sign = es.sign;
        return p;
      }
    }
    p.kind = TTProfile::Kind::PrefixEventually;
    return p;
  }
  if (j == bX && bX < bF) {
    // the target's finite remainder runs against a member block
    const OmegaBlock& fb = fam.blocks[j];
    auto xs = z_tail_stream(x);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      Rational fv = fb.value(static_cast<long long>(k));
      if (fv != xs[k]) {
        p.kind = TTProfile::Kind::DivergeFixed;
        p.position = Ordinal::omega_times_plus(j, k);
        p.value = asym::rf_const(fv);
        p.x_value = xs[k];
        p.sign = fv > xs[k] ? 1 : -1;
        return p;
      }
    }
    p.kind = TTProfile::Kind::Extension;
    p.value = asym::rf_const(fb.value(static_cast<long long>(xs.size())));
    return p;
  }
  // shared block structure; compare tail streams
  auto xs = z_tail_stream(x);
  auto terms = tt_stream_terms(fam);
  const std::size_t common = std::min(xs.size(), terms.size());
  for (std::size_t k = 0; k < common; ++k) {
    asym::RatFn d = asym::rf_sub(asym::canonicalize(terms[k]), asym::rf_const(xs[k]));
    asym::ESign es = asym::eventual_sign(d);
    p.settle = std::max(p.settle, es.threshold);
    if (es.sign != 0) {
      p.kind = TTProfile::Kind::DivergeFixed;
      p.position = Ordinal::omega_times_plus(j, k);
      p.value = asym::canonicalize(terms[k]);
      p.value_ast = terms[k];
      p.x_value = xs[k];
      p.sign = es.sign;
      return p;
    }
  }
  if (terms.size() > xs.size()) {
    if (x.terminal_repeat)
      throw MalformedFamily("members would extend past a terminal duplicate");
    p.kind = TTProfile::Kind::Extension;
    p.value = asym::canonicalize(terms[xs.size()]);
    p.value_ast = terms[xs.size()];
    return p;
  }
  p.kind = terms.size() == xs.size() ? TTProfile::Kind::EqualEventually
                                     : TTProfile::Kind::PrefixEventually;
  return p;
}

// Truncation of the deviation base just past the deviating block, closed with
// a terminal plateau: the object downward-deviating members approach.
inline ZSeq deviation_floor(const ZFamily& f) {
  ZSeq out;
  out.blocks.assign(f.base.blocks.begin(),
                    f.base.blocks.begin() + static_cast<std::ptrdiff_t>(f.dev_block + 1));
  out.tail.push_back(out.blocks.back().limit);
  out.terminal_repeat = true;
  return out;
}

inline void require_members_above(const ZSeq& x, const ZFamily& fam, long long settle) {
  for (long long n = fam.n_start; n <= settle; ++n) {
    if (z_compare(family_member(fam, n), x) != Cmp::Greater)
      throw MalformedFamily("member at index " + std::to_string(n) + " is not above the target");
  }
}

}  // namespace detail

// --- convergence ------------------------------------------------------------

struct ConvergenceResult {
  bool yes = false;
  int case_id = 0;  // target shape class when yes
  std::string detail;
};

// Decides whether the family approaches x from above, classified by the
// target's shape: plain targets are reached only by extensions whose first
// new value grows without bound (1); a duplicate after a successor is reached
// by members diverging exactly at the final position with values tending to
// it (2); a duplicate after a limit is reached when the divergence position
// itself climbs to the limit (3).
inline ConvergenceResult z_converges(const ZSeq& x, const ZFamily& fam) {
  {
    ValidationReport r = z_validate(x);
    if (!r.ok) throw MalformedFamily("target: " + r.clause + ": " + r.detail);
  }
  long long settle = detail::family_check(fam);
  switch (fam.kind) {
    case ZFamily::Kind::FiniteList: {
      if (fam.items.empty()) throw MalformedFamily("empty family has no members above the target");
      for (std::size_t i = 0; i < fam.items.size(); ++i)
        if (z_compare(fam.items[i], x) != Cmp::Greater)
          throw MalformedFamily("member " + std::to_string(i) + " is not above the target");
      return {false, 0, "a finite list has no tail behavior"};
    }
    case ZFamily::Kind::GrowingPrefix: {
      if (z_compare(family_member(fam, fam.n_start), x) != Cmp::Greater)
        throw MalformedFamily("first member is not above the target");
      return {false, 0, "members form an increasing chain moving away from the target"};
    }
    case ZFamily::Kind::PrefixDeviation: {
      detail::DevFacts facts = detail::dev_facts(fam);
      detail::require_members_above(x, fam, facts.settle);
      if (facts.direction == 0) return {false, 0, "members eventually coincide with the base"};
      if (facts.direction > 0)
        return {false, 0, "members form an increasing chain moving away from the target"};
      ZSeq floor = detail::deviation_floor(fam);
      Cmp c = z_compare(x, floor);
      if (c == Cmp::Greater)
        throw MalformedFamily("members eventually fall below the target");
      if (c == Cmp::Equal)
        return {true, 3, "divergence positions climb to the limit final position"};
      return {false, 0, "members stay above a plateau strictly above the target"};
    }
    case ZFamily::Kind::TailTemplate: {
      detail::TTProfile p = detail::tt_profile(x, fam);
      settle = std::max(settle, p.settle);
      detail::check_head_window(settle);
      detail::require_members_above(x, fam, settle);
      switch (p.kind) {
        case detail::TTProfile::Kind::EqualEventually:
          throw MalformedFamily("members eventually equal the target");
        case detail::TTProfile::Kind::PrefixEventually:
          throw MalformedFamily("members eventually sit below the target as proper prefixes");
        case detail::TTProfile::Kind::Extension: {
          asym::LimitVal lv = asym::limit(p.value);
          if (lv.kind == asym::LimitVal::Kind::PlusInf)
            return {true, 1, "first new values grow without bound"};
          return {false, 0, "first new values stay bounded"};
        }
        case detail::TTProfile::Kind::DivergeFixed: {
          if (p.sign > 0) throw MalformedFamily("members eventually fall below the target");
          if (!x.terminal_repeat)
            return {false, 0, "a plain target is approached only by extensions"};
          if (ord_compare(p.position, z_beta_position(x)) != Cmp::Equal)
            return {false, 0, "divergence stays pinned away from the final position"};
          asym::LimitVal lv = asym::limit(p.value);
          if (lv.kind == asym::LimitVal::Kind::Finite && lv.value == p.x_value)
            return {true, 2, "values at the final position converge to the target value"};
          return {false, 0, "values at the final position stay away from the target value"};
        }
      }
      throw MalformedFamily("corrupt profile");
    }
  }
  throw MalformedFamily("corrupt family kind");
}

// --- separation -------------------------------------------------------------

// A plain sequence w with x < w <= every member, available exactly when the
// family does not converge to x.
inline ZSeq z_separate(const ZSeq& x, const ZFamily& fam) {
  ConvergenceResult c = z_converges(x, fam);
  if (c.yes) throw NotSeparable(c.detail);

  std::vector<ZSeq> cands;
  switch (fam.kind) {
    case ZFamily::Kind::FiniteList: {
      const ZSeq* m = &fam.items.front();
      for (const auto& it : fam.items)
        if (z_compare(it, *m) == Cmp::Less) m = &it;
      cands.push_back(y_between(x, *m));
      break;
    }
    case ZFamily::Kind::GrowingPrefix: {
      cands.push_back(y_between(x, family_member(fam, fam.n_start)));
      break;
    }
    case ZFamily::Kind::PrefixDeviation: {
      detail::DevFacts facts = detail::dev_facts(fam);
      if (facts.direction < 0) {
        cands.push_back(y_between(x, detail::deviation_floor(fam)));
      } else {
        ZSeq m = family_member(fam, fam.n_start);
        for (long long n = fam.n_start + 1; n <= facts.settle; ++n) {
          ZSeq cand = family_member(fam, n);
          if (z_compare(cand, m) == Cmp::Less) m = std::move(cand);
        }
        if (facts.direction == 0 && z_compare(fam.base, m) == Cmp::Less) m = fam.base;
        cands.push_back(y_between(x, m));
      }
      break;
    }
    case ZFamily::Kind::TailTemplate: {
      detail::TTProfile p = detail::tt_profile(x, fam);
      if (p.kind == detail::TTProfile::Kind::Extension) {
        asym::BoundCert sup =
            asym::certified_sup(p.value, fam.n_start, detail::ast_point_eval(p.value_ast, p.value));
        Rational top = x.tail.back();
        cands.push_back(z_append(x, sup.bound > top ? sup.bound : top + 1));
      } else {
        const Ordinal beta = z_beta_position(x);
        if (ord_compare(p.position, beta) == Cmp::Equal) {
          asym::BoundCert sup =
              asym::certified_sup(p.value, fam.n_start, detail::ast_point_eval(p.value_ast, p.value));
          if (sup.bound < p.x_value)
            cands.push_back(z_replace_end(x, midpoint(sup.bound, p.x_value)));
          else
            cands.push_back(z_append(x, x.tail.back() + 1));
        } else if (!x.terminal_repeat) {
          cands.push_back(z_append(x, x.tail.back() + 1));
        } else {
          Rational next = *z_value_at(x, ord_succ(p.position));
          cands.push_back(z_truncate_append(x, p.position, midpoint(p.x_value, next)));
        }
      }
      long long settle = std::max(p.settle, detail::family_check(fam));
      for (long long n = fam.n_start; n <= settle; ++n)
        cands.push_back(y_between(x, family_member(fam, n)));
      break;
    }
  }
  ZSeq w = cands.front();
  for (std::size_t i = 1; i < cands.size(); ++i)
    if (z_compare(cands[i], w) == Cmp::Less) w = cands[i];
  return w;
}

// --- least upper bounds in Z0 -----------------------------------------------

namespace detail {

inline void require_range(const asym::RatFn& f, const ExprPtr& ast, long long n_start,
                          bool one_allowed, const std::string& what) {
  asym::PointEval at = ast_point_eval(ast, f);
  asym::BoundCert lo = asym::certified_inf(f, n_start, at);
  if (!lo.bounded || lo.bound < 0) throw NotInZ0(what + ": values fall below 0");
  asym::BoundCert hi = asym::certified_sup(f, n_start, at);
  if (!hi.bounded || hi.bound > 1) throw NotInZ0(what + ": values exceed 1");
  if (!one_allowed && hi.bound == 1 && hi.attained)
    throw NotInZ0(what + ": value 1 attained at a non-limit position");
}

inline void z0_check(const ZFamily& f, long long settle) {
  long long head = std::min(settle + 1, kFamilyHeadCap);
  switch (f.kind) {
    case ZFamily::Kind::FiniteList: {
      for (std::size_t i = 0; i < f.items.size(); ++i) {
        std::string why;
        if (!is_z0(f.items[i], &why))
          throw NotInZ0("member " + std::to_string(i) + ": " + why);
      }
      return;
    }
    case ZFamily::Kind::GrowingPrefix: {
      if (eval(f.growth, 0) != 0) throw NotInZ0("growth term must start at 0");
      require_range(asym::canonicalize(f.growth), f.growth, 0, false, "growth term");
      return;
    }
    case ZFamily::Kind::TailTemplate: {
      for (long long n = f.n_start; n <= head; ++n) {
        std::string why;
        if (!is_z0(family_member(f, n), &why))
          throw NotInZ0("member at index " + std::to_string(n) + ": " + why);
      }
      for (std::size_t k = 0; k < f.tail_terms.size(); ++k) {
        const bool at_limit = k == 0 && !f.blocks.empty();
        require_range(asym::canonicalize(f.tail_terms[k]), f.tail_terms[k], f.n_start, at_limit,
                      "tail term " + std::to_string(k));
      }
      return;
    }
    case ZFamily::Kind::PrefixDeviation: {
      std::string why;
      if (!is_z0(f.base, &why)) throw NotInZ0("deviation base: " + why);
      for (long long n = f.n_start; n <= head; ++n) {
        if (!is_z0(family_member(f, n), &why))
          throw NotInZ0("member at index " + std::to_string(n) + ": " + why);
      }
      require_range(asym::canonicalize(f.dev_value), f.dev_value, f.n_start, false,
                    "deviation value");
      return;
    }
  }
}

}  // namespace detail

// Least upper bound of the family inside Z0. Families with a greatest element
// return it exactly; increasing families return the frozen-coordinate object
// their members approach.
inline ZSeq z0_sup(const ZFamily& fam) {
  if (fam.kind == ZFamily::Kind::FiniteList && fam.items.empty()) return zseq_finite({Rational(0)});
  long long settle = detail::family_check(fam);
  detail::z0_check(fam, settle);

  auto max_of = [](std::vector<ZSeq> cands) {
    ZSeq best = std::move(cands.front());
    for (std::size_t i = 1; i < cands.size(); ++i)
      if (z_compare(cands[i], best) == Cmp::Greater) best = std::move(cands[i]);
    return best;
  };

  switch (fam.kind) {
    case ZFamily::Kind::FiniteList:
      return max_of(fam.items);
    case ZFamily::Kind::GrowingPrefix: {
      asym::LimitVal lv = asym::limit(asym::canonicalize(fam.growth));
      if (lv.kind != asym::LimitVal::Kind::Finite)
        throw NotInZ0("growth term has no finite limit");
      OmegaBlock b;
      b.term = fam.growth;
      b.limit = lv.value;
      ZSeq out;
      out.blocks.push_back(std::move(b));
      out.tail.push_back(lv.value);
      return out;
    }
    case ZFamily::Kind::PrefixDeviation: {
      detail::DevFacts facts = detail::dev_facts(fam);
      std::vector<ZSeq> cands;
      for (long long n = fam.n_start; n <= facts.settle; ++n)
        cands.push_back(family_member(fam, n));
      if (facts.direction > 0) {
        ZSeq top = detail::deviation_floor(fam);
        top.terminal_repeat = false;  // members stay strictly below the plain truncation
        cands.push_back(std::move(top));
      } else if (facts.direction == 0) {
        cands.push_back(fam.base);
      }
      return max_of(std::move(cands));
    }
    case ZFamily::Kind::TailTemplate: {
      std::size_t k_star = fam.tail_terms.size();
      int dir = 0;
      long long prof_settle = settle;
      for (std::size_t k = 0; k < fam.tail_terms.size(); ++k) {
        asym::RatFn fk = asym::canonicalize(fam.tail_terms[k]);
        asym::ESign es = asym::eventual_sign(asym::rf_delta(fk));
        prof_settle = std::max(prof_settle, es.threshold);
        if (es.sign != 0) {
          k_star = k;
          dir = es.sign;
          break;
        }
      }
      detail::check_head_window(prof_settle);
      std::vector<ZSeq> cands;
      for (long long n = fam.n_start; n <= prof_settle; ++n)
        cands.push_back(family_member(fam, n));
      if (k_star == fam.tail_terms.size() || dir > 0) {
        // members eventually constant or eventually descending: some head
        // member (or the frozen member itself) is greatest
        if (dir == 0) cands.push_back(family_member(fam, prof_settle + 1));
        return max_of(std::move(cands));
      }
      // members ascend: freeze the settled coordinates, close at the limit
      ZSeq out;
      out.blocks = fam.blocks;
      for (std::size_t k = 0; k < k_star; ++k) {
        asym::LimitVal ck = asym::limit(asym::canonicalize(fam.tail_terms[k]));
        out.tail.push_back(ck.value);
      }
      asym::LimitVal lv = asym::limit(asym::canonicalize(fam.tail_terms[k_star]));
      if (lv.kind != asym::LimitVal::Kind::Finite)
        throw NotInZ0("tail term " + std::to_string(k_star) + " has no finite limit");
      if (!out.tail.empty() && lv.value == out.tail.back()) {
        out.terminal_repeat = true;
      } else if (out.tail.empty() && !out.blocks.empty() && lv.value == out.blocks.back().limit) {
        out.tail.push_back(lv.value);
        out.terminal_repeat = true;
      } else {
        out.tail.push_back(lv.value);
      }
      cands.push_back(std::move(out));
      return max_of(std::move(cands));
    }
  }
  throw MalformedFamily("corrupt family kind");
}

}  // namespace renormlab

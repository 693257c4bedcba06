#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "renormlab/expr.hpp"
#include "renormlab/rational.hpp"

namespace renormlab {

// Raised when an expression leaves the certified analysis family. Callers
// treat this as "outside the rule set" and reject the input or fall back to
// the bounded-scan model boundary.
struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace asym {

// Dense univariate polynomial over Q.
struct Poly {
  std::vector<Rational> c;  // c[k] * n^k

  void trim() {
    while (!c.empty() && c.back() == 0) c.pop_back();
  }
  bool is_zero() const { return c.empty(); }
  int degree() const { return static_cast<int>(c.size()) - 1; }
  const Rational& lead() const { return c.back(); }

  Rational eval(long long n) const {
    Rational acc(0);
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * n + c[k];
    return acc;
  }

  Rational sum_abs() const {
    Rational s(0);
    for (const auto& x : c) s += rat_abs(x);
    return s;
  }
};

inline Poly poly_const(Rational v) {
  Poly p;
  if (v != 0) p.c.push_back(std::move(v));
  return p;
}

inline Poly poly_add(const Poly& a, const Poly& b) {
  Poly r;
  r.c.resize(std::max(a.c.size(), b.c.size()), Rational(0));
  for (std::size_t k = 0; k < a.c.size(); ++k) r.c[k] += a.c[k];
  for (std::size_t k = 0; k < b.c.size(); ++k) r.c[k] += b.c[k];
  r.trim();
  return r;
}

inline Poly poly_neg(const Poly& a) {
  Poly r = a;
  for (auto& x : r.c) x = -x;
  return r;
}

inline Poly poly_sub(const Poly& a, const Poly& b) { return poly_add(a, poly_neg(b)); }

inline Poly poly_mul(const Poly& a, const Poly& b) {
  if (a.is_zero() || b.is_zero()) return {};
  Poly r;
  r.c.resize(a.c.size() + b.c.size() - 1, Rational(0));
  for (std::size_t i = 0; i < a.c.size(); ++i)
    for (std::size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  r.trim();
  return r;
}

inline Poly poly_scale(const Poly& a, const Rational& s) {
  if (s == 0) return {};
  Poly r = a;
  for (auto& x : r.c) x *= s;
  return r;
}

// p(n+1) via binomial expansion.
inline Poly poly_shift1(const Poly& a) {
  Poly r;
  r.c.resize(a.c.size(), Rational(0));
  for (std::size_t j = 0; j < a.c.size(); ++j) {
    BigInt binom = 1;
    for (std::size_t k = 0; k <= j; ++k) {
      r.c[k] += a.c[j] * Rational(binom);
      binom = binom * BigInt(j - k) / BigInt(k + 1);
    }
  }
  r.trim();
  return r;
}

// Exponential polynomial sum p_s(n) * s^n over bases s in (0,1], keyed by s.
struct ExpPoly {
  std::map<Rational, Poly> terms;

  bool is_zero() const { return terms.empty(); }

  void insert(const Rational& base, const Poly& p) {
    if (p.is_zero()) return;
    auto [it, fresh] = terms.try_emplace(base, p);
    if (!fresh) {
      it->second = poly_add(it->second, p);
      if (it->second.is_zero()) terms.erase(it);
    }
  }

  Rational eval(long long n) const {
    Rational acc(0);
    for (const auto& [s, p] : terms) {
      if (s == 1)
        acc += p.eval(n);
      else
        acc += p.eval(n) * rat_pow(s, static_cast<unsigned long long>(n));
    }
    return acc;
  }
};

inline ExpPoly ep_const(Rational v) {
  ExpPoly e;
  e.insert(Rational(1), poly_const(std::move(v)));
  return e;
}

inline ExpPoly ep_var() {
  ExpPoly e;
  Poly p;
  p.c = {Rational(0), Rational(1)};
  e.insert(Rational(1), p);
  return e;
}

inline ExpPoly ep_geom(const Rational& q) {
  ExpPoly e;
  e.insert(q, poly_const(Rational(1)));
  return e;
}

inline ExpPoly ep_add(const ExpPoly& a, const ExpPoly& b) {
  ExpPoly r = a;
  for (const auto& [s, p] : b.terms) r.insert(s, p);
  return r;
}

inline ExpPoly ep_neg(const ExpPoly& a) {
  ExpPoly r;
  for (const auto& [s, p] : a.terms) r.terms.emplace(s, poly_neg(p));
  return r;
}

inline ExpPoly ep_sub(const ExpPoly& a, const ExpPoly& b) { return ep_add(a, ep_neg(b)); }

inline ExpPoly ep_mul(const ExpPoly& a, const ExpPoly& b) {
  ExpPoly r;
  for (const auto& [sa, pa] : a.terms)
    for (const auto& [sb, pb] : b.terms) r.insert(sa * sb, poly_mul(pa, pb));
  return r;
}

// f(n) -> f(n+1): p(n) s^n becomes s*p(n+1) * s^n.
inline ExpPoly ep_shift1(const ExpPoly& a) {
  ExpPoly r;
  for (const auto& [s, p] : a.terms) r.insert(s, poly_scale(poly_shift1(p), s));
  return r;
}

// Streams the exact sign of an exponential polynomial along consecutive
// integers. Values are rescaled by L * B^n (common coefficient and base
// denominators), which keeps every step in integer arithmetic: one small
// multiply per term per advance instead of normalized rational powers.
class SignScan {
 public:
  SignScan(const ExpPoly& f, long long start) : n_(start) {
    BigInt L = 1, B = 1;
    for (const auto& [s, p] : f.terms) {
      B = lcm_(B, rat_den(s));
      for (const auto& c : p.c) L = lcm_(L, rat_den(c));
    }
    for (const auto& [s, p] : f.terms) {
      Term t;
      t.growth = rat_num(s) * (B / rat_den(s));
      t.poly.reserve(p.c.size());
      for (const auto& c : p.c) t.poly.push_back(rat_num(c) * (L / rat_den(c)));
      t.power = ipow_(t.growth, start);
      terms_.push_back(std::move(t));
    }
  }

  int sign() const {
    BigInt acc = 0;
    for (const auto& t : terms_) {
      BigInt pv = 0;
      for (std::size_t k = t.poly.size(); k-- > 0;) pv = pv * n_ + t.poly[k];
      acc += pv * t.power;
    }
    return acc == 0 ? 0 : (acc > 0 ? 1 : -1);
  }

  void advance() {
    ++n_;
    for (auto& t : terms_) t.power *= t.growth;
  }

 private:
  struct Term {
    BigInt growth;
    std::vector<BigInt> poly;
    BigInt power;
  };
  static BigInt lcm_(const BigInt& a, const BigInt& b) {
    using boost::multiprecision::gcd;
    return a / gcd(a, b) * b;
  }
  static BigInt ipow_(const BigInt& b, long long e) {
    BigInt r = 1, base = b;
    for (; e > 0; e >>= 1) {
      if (e & 1) r *= base;
      base *= base;
    }
    return r;
  }
  long long n_;
  std::vector<Term> terms_;
};

// Certified eventual sign: sign(f(n)) is `sign` for every n >= threshold.
// sign == 0 means f is identically zero.
struct ESign {
  int sign = 0;
  long long threshold = 0;
};

namespace detail {

inline Poly poly_derivative(const Poly& a) {
  Poly r;
  if (a.c.size() <= 1) return r;
  r.c.resize(a.c.size() - 1);
  for (std::size_t k = 1; k < a.c.size(); ++k)
    r.c[k - 1] = a.c[k] * Rational(static_cast<long long>(k));
  r.trim();
  return r;
}

inline Poly poly_rem(Poly a, const Poly& b) {
  while (!a.is_zero() && a.degree() >= b.degree()) {
    Rational f = a.lead() / b.lead();
    std::size_t shift = static_cast<std::size_t>(a.degree() - b.degree());
    for (std::size_t k = 0; k < b.c.size(); ++k) a.c[k + shift] -= f * b.c[k];
    a.trim();
  }
  return a;
}

inline int sign_variations(const std::vector<int>& signs) {
  int v = 0, last = 0;
  for (int s : signs) {
    if (s == 0) continue;
    if (last != 0 && s != last) ++v;
    last = s;
  }
  return v;
}

// Smallest integer T >= 0 with no real root of p at or beyond T, so that
// sign(p(n)) = sign(lead) for every n >= T. Sturm variation counts make the
// predicate exact; the Cauchy bound caps the search.
inline long long poly_sign_from(const Poly& p) {
  if (p.is_zero() || p.degree() == 0) return 0;
  std::vector<Poly> chain{p, poly_derivative(p)};
  while (chain.back().degree() > 0) {
    Poly r = poly_rem(chain[chain.size() - 2], chain.back());
    if (r.is_zero()) break;
    chain.push_back(poly_neg(r));
  }
  std::vector<int> at_inf;
  at_inf.reserve(chain.size());
  for (const auto& q : chain) at_inf.push_back(sign_of(q.lead()));
  const int vinf = sign_variations(at_inf);
  auto root_free_from = [&](long long x) {
    if (p.eval(x) == 0) return false;
    std::vector<int> s;
    s.reserve(chain.size());
    for (const auto& q : chain) s.push_back(sign_of(q.eval(x)));
    return sign_variations(s) == vinf;
  };

  Rational maxc(0);
  for (int k = 0; k < p.degree(); ++k) maxc = std::max(maxc, rat_abs(p.c[k]));
  Rational cauchy = 1 + maxc / rat_abs(p.lead());
  BigInt cb = numerator(cauchy) / denominator(cauchy) + 1;
  if (cb > BigInt(1LL << 40)) throw AnalysisError("polynomial root bound out of range");
  long long lo = 0, hi = static_cast<long long>(cb);
  while (lo < hi) {
    long long mid = lo + (hi - lo) / 2;
    if (root_free_from(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

// First n at which q*(n+1)^m <= n^m, after which C*n^m*q^n is non-increasing.
inline long long geom_decreasing_from(const Rational& q, int m) {
  if (m <= 0) return 1;
  long long n = 1;
  auto ok = [&](long long v) {
    return q * rat_pow(Rational(v + 1), static_cast<unsigned long long>(m)) <=
           rat_pow(Rational(v), static_cast<unsigned long long>(m));
  };
  while (!ok(n)) {
    if (n > (1LL << 40)) throw AnalysisError("geometric dominance threshold out of range");
    n *= 2;
  }
  long long lo = n / 2 < 1 ? 1 : n / 2, hi = n;
  while (lo < hi) {
    long long mid = lo + (hi - lo) / 2;
    if (ok(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

// Smallest n >= start with C*n^m*q^n <= target, valid for all larger n.
// Cross-multiplied into integers: normalized rational powers at large n are
// prohibitively slow.
inline long long geom_below_from(const Rational& C, int m, const Rational& q, const Rational& target,
                                 long long start) {
  const BigInt cn = rat_num(C), cd = rat_den(C);
  const BigInt qn = rat_num(q), qd = rat_den(q);
  const BigInt tn = rat_num(target), td = rat_den(target);
  auto ok = [&](long long v) {
    using boost::multiprecision::pow;
    BigInt vm = 1;
    for (int k = 0; k < m; ++k) vm *= v;
    const unsigned uv = static_cast<unsigned>(v);
    return cn * vm * pow(qn, uv) * td <= tn * cd * pow(qd, uv);
  };
  long long n = std::max<long long>(start, 1);
  while (!ok(n)) {
    if (n > (1LL << 40)) throw AnalysisError("geometric decay threshold out of range");
    n *= 2;
  }
  long long lo = std::max<long long>(start, 1), hi = n;
  while (lo < hi) {
    long long mid = lo + (hi - lo) / 2;
    if (ok(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

}  // namespace detail

inline ESign eventual_sign(const ExpPoly& f) {
  if (f.is_zero()) return {0, 0};
  auto dom = std::prev(f.terms.end());
  const Rational& s_star = dom->first;
  const Poly& p = dom->second;
  const int d = p.degree();
  const Rational L = p.lead();

  // Below-threshold guard for the dominant polynomial: beyond the last real
  // root of p - (L/2) n^d we get |p(n)| >= |L|/2 * n^d (and the sign of L).
  Poly half = p;
  half.c[static_cast<std::size_t>(d)] = L / 2;
  long long N = std::max<long long>(1, detail::poly_sign_from(half));

  const std::size_t J = f.terms.size() - 1;
  if (J > 0) {
    const Rational target = rat_abs(L) / Rational(2 * static_cast<long long>(J) + 2);
    for (auto it = f.terms.begin(); it != dom; ++it) {
      const Rational sigma = it->first / s_star;
      const int m = std::max(0, it->second.degree() - d);
      const Rational C = it->second.sum_abs();
      long long from = detail::geom_decreasing_from(sigma, m);
      long long n_j = detail::geom_below_from(C, m, sigma, target, from);
      N = std::max(N, n_j);
    }
  }
  return {sign_of(L), N};
}

// Rational function of exponential polynomials, the closed analysis family.
// Claims about f are certified for n >= valid_from only; exact evaluation of
// the originating expression remains available below it.
struct RatFn {
  ExpPoly num;
  ExpPoly den;  // never identically zero
  long long valid_from = 0;
};

inline RatFn rf_const(Rational v) { return {ep_const(std::move(v)), ep_const(Rational(1)), 0}; }

inline RatFn rf_add(const RatFn& a, const RatFn& b) {
  return {ep_add(ep_mul(a.num, b.den), ep_mul(b.num, a.den)), ep_mul(a.den, b.den),
          std::max(a.valid_from, b.valid_from)};
}

inline RatFn rf_neg(const RatFn& a) { return {ep_neg(a.num), a.den, a.valid_from}; }

inline RatFn rf_sub(const RatFn& a, const RatFn& b) { return rf_add(a, rf_neg(b)); }

inline RatFn rf_mul(const RatFn& a, const RatFn& b) {
  return {ep_mul(a.num, b.num), ep_mul(a.den, b.den), std::max(a.valid_from, b.valid_from)};
}

inline RatFn rf_div(const RatFn& a, const RatFn& b) {
  if (b.num.is_zero()) throw AnalysisError("division by identically zero expression");
  // the fresh denominator is nonzero beyond its eventual-sign threshold
  ESign dz = eventual_sign(b.num);
  return {ep_mul(a.num, b.den), ep_mul(a.den, b.num),
          std::max({a.valid_from, b.valid_from, dz.threshold})};
}

inline RatFn rf_shift1(const RatFn& a) {
  return {ep_shift1(a.num), ep_shift1(a.den), std::max<long long>(0, a.valid_from - 1)};
}

inline ESign eventual_sign(const RatFn& f) {
  ESign n = eventual_sign(f.num);
  if (n.sign == 0) return {0, std::max(n.threshold, f.valid_from)};
  ESign d = eventual_sign(f.den);
  return {n.sign * d.sign, std::max({n.threshold, d.threshold, f.valid_from})};
}

struct LimitVal {
  enum class Kind { Finite, PlusInf, MinusInf } kind = Kind::Finite;
  Rational value;  // set when finite
};

// Growth signature of the dominant term: (base, degree, leading coefficient).
namespace detail {
struct Dominant {
  Rational base;
  int degree;
  Rational lead;
};
inline Dominant dominant(const ExpPoly& f) {
  auto it = std::prev(f.terms.end());
  return {it->first, it->second.degree(), it->second.lead()};
}
}  // namespace detail

inline LimitVal limit(const RatFn& f) {
  if (f.num.is_zero()) return {LimitVal::Kind::Finite, Rational(0)};
  auto a = detail::dominant(f.num);
  auto b = detail::dominant(f.den);
  if (a.base < b.base) return {LimitVal::Kind::Finite, Rational(0)};
  if (a.base == b.base) {
    if (a.degree < b.degree) return {LimitVal::Kind::Finite, Rational(0)};
    if (a.degree == b.degree) return {LimitVal::Kind::Finite, a.lead / b.lead};
  }
  return {sign_of(a.lead) * sign_of(b.lead) > 0 ? LimitVal::Kind::PlusInf : LimitVal::Kind::MinusInf,
          Rational(0)};
}

// Exact evaluation of the canonical form (callers must be at or past
// valid_from for the value to mean anything; denominator zeroes raise).
inline Rational rf_eval(const RatFn& f, long long n) {
  Rational d = f.den.eval(n);
  if (d == 0) throw EvalError("denominator vanishes at index " + std::to_string(n));
  return f.num.eval(n) / d;
}

// f(n+1) - f(n) as a member of the family.
inline RatFn rf_delta(const RatFn& f) { return rf_sub(rf_shift1(f), f); }

enum class Monotone { Increasing, Decreasing, Constant };

struct MonotoneCert {
  Monotone kind = Monotone::Constant;
  long long threshold = 0;  // certified for n >= threshold
};

inline MonotoneCert eventual_monotonicity(const RatFn& f) {
  ESign s = eventual_sign(rf_delta(f));
  if (s.sign > 0) return {Monotone::Increasing, s.threshold};
  if (s.sign < 0) return {Monotone::Decreasing, s.threshold};
  return {Monotone::Constant, s.threshold};
}

struct BoundCert {
  bool bounded = true;
  Rational bound;     // valid for every n >= n_start when bounded
  bool attained = false;
  long long argmax = 0;  // witness index when attained
};

using PointEval = std::function<Rational(long long)>;

inline PointEval rf_pointwise(const RatFn& f) {
  return [f](long long n) { return rf_eval(f, n); };
}

// Certified supremum of f over integers n >= n_start: exact scan up to the
// monotonicity threshold, then the certified tail behavior. Below valid_from
// the canonical form may disagree with the source expression (abs folding),
// so the scan region is evaluated through `at`.
inline BoundCert certified_sup(const RatFn& f, long long n_start, const PointEval& at) {
  MonotoneCert mc = eventual_monotonicity(f);
  long long hi = std::max({mc.threshold, f.valid_from, n_start});
  Rational best = at(n_start);
  long long arg = n_start;
  for (long long n = n_start + 1; n <= hi; ++n) {
    Rational v = at(n);
    if (v > best) {
      best = v;
      arg = n;
    }
  }
  if (mc.kind == Monotone::Increasing) {
    LimitVal lv = limit(f);
    if (lv.kind != LimitVal::Kind::Finite) return {false, Rational(0), false, 0};
    if (lv.value > best) return {true, lv.value, false, 0};
  }
  return {true, best, true, arg};
}

inline BoundCert certified_sup(const RatFn& f, long long n_start) {
  return certified_sup(f, n_start, rf_pointwise(f));
}

inline BoundCert certified_inf(const RatFn& f, long long n_start, const PointEval& at) {
  RatFn neg{ep_neg(f.num), f.den, f.valid_from};
  BoundCert c = certified_sup(neg, n_start, [&at](long long n) { return -at(n); });
  return {c.bounded, -c.bound, c.attained, c.argmax};
}

inline BoundCert certified_inf(const RatFn& f, long long n_start) {
  return certified_inf(f, n_start, rf_pointwise(f));
}

// Canonicalization into the analysis family. abs() is folded through its
// argument's certified eventual sign; geometric atoms need bases in (0,1).
inline RatFn canonicalize(const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::Const:
      return rf_const(e->value);
    case Expr::Kind::Var:
      return {ep_var(), ep_const(Rational(1)), 0};
    case Expr::Kind::Pow:
      if (!(e->value > 0 && e->value < 1))
        throw AnalysisError("geometric base must lie in (0,1), got " + rat_to_string(e->value));
      return {ep_geom(e->value), ep_const(Rational(1)), 0};
    case Expr::Kind::Add:
      return rf_add(canonicalize(e->lhs), canonicalize(e->rhs));
    case Expr::Kind::Sub:
      return rf_sub(canonicalize(e->lhs), canonicalize(e->rhs));
    case Expr::Kind::Mul:
      return rf_mul(canonicalize(e->lhs), canonicalize(e->rhs));
    case Expr::Kind::Div:
      return rf_div(canonicalize(e->lhs), canonicalize(e->rhs));
    case Expr::Kind::Neg:
      return rf_neg(canonicalize(e->lhs));
    case Expr::Kind::Abs: {
      RatFn inner = canonicalize(e->lhs);
      ESign s = eventual_sign(inner);
      if (s.sign < 0) inner = rf_neg(inner);
      inner.valid_from = std::max(inner.valid_from, s.threshold);
      return inner;
    }
  }
  throw AnalysisError("corrupt expression node");
}

// First index n in [lo, cap] with f(n) != 0, certified complete: if the
// eventual-sign threshold fits under the cap the answer is exact, otherwise
// the question is reported undecided under the scan budget.
struct FirstNonzero {
  enum class Kind { AllZero, At, Undecided } kind = Kind::AllZero;
  long long index = 0;
};

inline FirstNonzero first_nonzero(const RatFn& f, long long lo, long long cap) {
  ESign s = eventual_sign(f);
  if (s.sign == 0) return {FirstNonzero::Kind::AllZero, 0};
  long long hi = std::max(lo, s.threshold);
  if (hi > cap) hi = cap;
  for (long long n = lo; n <= hi; ++n)
    if (rf_eval(f, n) != 0) return {FirstNonzero::Kind::At, n};
  if (std::max(lo, s.threshold) > cap) return {FirstNonzero::Kind::Undecided, cap};
  // unreachable when thresholds are sound: sign is fixed nonzero past s.threshold
  return {FirstNonzero::Kind::At, std::max(lo, s.threshold)};
}

}  // namespace asym

}  // namespace renormlab

#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "renormlab/rational.hpp"

namespace renormlab {

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Closed term language over one natural-number index: rational constants, the
// index itself, +, -, *, /, abs, and geometric atoms q^index. Index letters
// (i, j, k, m, n) are interchangeable; an expression has one index.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Const, Var, Add, Sub, Mul, Div, Neg, Abs, Pow };
  Kind kind = Kind::Const;
  Rational value;    // Const: the constant; Pow: the base q
  ExprPtr lhs, rhs;  // operands (Neg/Abs use lhs only; Pow has none)
};

inline ExprPtr e_const(Rational v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Const;
  e->value = std::move(v);
  return e;
}

inline ExprPtr e_var() {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Var;
  return e;
}

inline ExprPtr e_node(Expr::Kind k, ExprPtr a, ExprPtr b = nullptr) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->lhs = std::move(a);
  e->rhs = std::move(b);
  return e;
}

inline ExprPtr e_add(ExprPtr a, ExprPtr b) { return e_node(Expr::Kind::Add, std::move(a), std::move(b)); }
inline ExprPtr e_sub(ExprPtr a, ExprPtr b) { return e_node(Expr::Kind::Sub, std::move(a), std::move(b)); }
inline ExprPtr e_mul(ExprPtr a, ExprPtr b) { return e_node(Expr::Kind::Mul, std::move(a), std::move(b)); }
inline ExprPtr e_div(ExprPtr a, ExprPtr b) { return e_node(Expr::Kind::Div, std::move(a), std::move(b)); }
inline ExprPtr e_neg(ExprPtr a) { return e_node(Expr::Kind::Neg, std::move(a)); }
inline ExprPtr e_abs(ExprPtr a) { return e_node(Expr::Kind::Abs, std::move(a)); }

inline ExprPtr e_pow(Rational base) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Pow;
  e->value = std::move(base);
  return e;
}

inline Rational eval(const ExprPtr& e, long long n) {
  switch (e->kind) {
    case Expr::Kind::Const:
      return e->value;
    case Expr::Kind::Var:
      return Rational(n);
    case Expr::Kind::Add:
      return eval(e->lhs, n) + eval(e->rhs, n);
    case Expr::Kind::Sub:
      return eval(e->lhs, n) - eval(e->rhs, n);
    case Expr::Kind::Mul:
      return eval(e->lhs, n) * eval(e->rhs, n);
    case Expr::Kind::Div: {
      Rational d = eval(e->rhs, n);
      if (d == 0) throw EvalError("division by zero at index " + std::to_string(n));
      return eval(e->lhs, n) / d;
    }
    case Expr::Kind::Neg:
      return -eval(e->lhs, n);
    case Expr::Kind::Abs:
      return rat_abs(eval(e->lhs, n));
    case Expr::Kind::Pow:
      if (n < 0) throw EvalError("negative index in geometric atom");
      return rat_pow(e->value, static_cast<unsigned long long>(n));
  }
  throw EvalError("corrupt expression node");
}

inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case Expr::Kind::Const:
    case Expr::Kind::Pow:
      return a->value == b->value;
    case Expr::Kind::Var:
      return true;
    case Expr::Kind::Neg:
    case Expr::Kind::Abs:
      return expr_equal(a->lhs, b->lhs);
    default:
      return expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
  }
}

// Substitutes index -> index + d, staying inside the language
// (q^(index+d) folds to q^d * q^index).
inline ExprPtr expr_shift(const ExprPtr& e, long long d) {
  if (d == 0) return e;
  switch (e->kind) {
    case Expr::Kind::Const:
      return e;
    case Expr::Kind::Var:
      return d > 0 ? e_add(e_var(), e_const(Rational(d))) : e_sub(e_var(), e_const(Rational(-d)));
    case Expr::Kind::Pow: {
      Rational factor = d > 0 ? rat_pow(e->value, static_cast<unsigned long long>(d))
                              : rat_pow(Rational(1) / e->value, static_cast<unsigned long long>(-d));
      return e_mul(e_const(factor), e_pow(e->value));
    }
    case Expr::Kind::Neg:
      return e_neg(expr_shift(e->lhs, d));
    case Expr::Kind::Abs:
      return e_abs(expr_shift(e->lhs, d));
    default:
      return e_node(e->kind, expr_shift(e->lhs, d), expr_shift(e->rhs, d));
  }
}

inline std::string expr_to_string(const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::Const: {
      if (e->value < 0 || denominator(e->value) != 1) return "(" + rat_to_string(e->value) + ")";
      return rat_to_string(e->value);
    }
    case Expr::Kind::Var:
      return "i";
    case Expr::Kind::Add:
      return "(" + expr_to_string(e->lhs) + "+" + expr_to_string(e->rhs) + ")";
    case Expr::Kind::Sub:
      return "(" + expr_to_string(e->lhs) + "-" + expr_to_string(e->rhs) + ")";
    case Expr::Kind::Mul:
      return "(" + expr_to_string(e->lhs) + "*" + expr_to_string(e->rhs) + ")";
    case Expr::Kind::Div:
      return "(" + expr_to_string(e->lhs) + "/" + expr_to_string(e->rhs) + ")";
    case Expr::Kind::Neg:
      return "(-" + expr_to_string(e->lhs) + ")";
    case Expr::Kind::Abs:
      return "abs(" + expr_to_string(e->lhs) + ")";
    case Expr::Kind::Pow:
      return "(" + rat_to_string(e->value) + ")^i";
  }
  return "?";
}

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(const std::string& text) {
    for (char c : text)
      if (!std::isspace(static_cast<unsigned char>(c))) src_.push_back(c);
  }

  ExprPtr parse() {
    ExprPtr e = sum();
    if (pos_ != src_.size())
      throw ParseError("expression: trailing input at '" + src_.substr(pos_) + "'");
    return e;
  }

 private:
  std::string src_;
  std::size_t pos_ = 0;

  bool eat(char c) {
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

  ExprPtr sum() {
    ExprPtr e = product();
    while (true) {
      if (eat('+'))
        e = e_add(e, product());
      else if (eat('-'))
        e = e_sub(e, product());
      else
        return e;
    }
  }

  ExprPtr product() {
    ExprPtr e = factor();
    while (true) {
      if (eat('*'))
        e = e_mul(e, factor());
      else if (eat('/'))
        e = e_div(e, factor());
      else
        return e;
    }
  }

  ExprPtr factor() {
    if (eat('-')) return e_neg(factor());
    if (eat('+')) return factor();
    ExprPtr base = atom();
    if (eat('^')) return power(base);
    return base;
  }

  // Constant value of an index-free subtree, if it is one.
  static std::optional<Rational> const_value(const ExprPtr& e) {
    switch (e->kind) {
      case Expr::Kind::Const:
        return e->value;
      case Expr::Kind::Var:
      case Expr::Kind::Pow:
        return std::nullopt;
      default:
        break;
    }
    auto l = e->lhs ? const_value(e->lhs) : std::nullopt;
    if (e->kind == Expr::Kind::Neg) return l ? std::optional<Rational>(-*l) : std::nullopt;
    if (e->kind == Expr::Kind::Abs) return l ? std::optional<Rational>(rat_abs(*l)) : std::nullopt;
    auto r = e->rhs ? const_value(e->rhs) : std::nullopt;
    if (!l || !r) return std::nullopt;
    switch (e->kind) {
      case Expr::Kind::Add:
        return *l + *r;
      case Expr::Kind::Sub:
        return *l - *r;
      case Expr::Kind::Mul:
        return *l * *r;
      case Expr::Kind::Div:
        if (*r == 0) throw ParseError("expression: division by zero");
        return *l / *r;
      default:
        return std::nullopt;
    }
  }

  ExprPtr power(const ExprPtr& base) {
    std::optional<Rational> b = const_value(base);
    if (is_var_char(peek())) {
      ++pos_;
      if (!b) throw ParseError("expression: geometric atom needs a constant base");
      return e_pow(*b);
    }
    bool neg = eat('-');
    if (!std::isdigit(static_cast<unsigned char>(peek())))
      throw ParseError("expression: exponent must be the index or an integer");
    unsigned long long k = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) k = k * 10 + (src_[pos_++] - '0');
    if (b) {
      if (neg && *b == 0) throw ParseError("expression: zero to a negative power");
      Rational bb = neg ? Rational(1) / *b : *b;
      return e_const(rat_pow(bb, k));
    }
    // index-dependent base: unfold the integer power into products
    if (k > 64) throw ParseError("expression: integer power too large to unfold");
    ExprPtr prod = e_const(Rational(1));
    for (unsigned long long i = 0; i < k; ++i) prod = i == 0 ? base : e_mul(prod, base);
    return neg ? e_div(e_const(Rational(1)), prod) : prod;
  }

  static bool is_var_char(char c) { return c == 'i' || c == 'j' || c == 'k' || c == 'm' || c == 'n'; }

  ExprPtr atom() {
    if (eat('(')) {
      ExprPtr e = sum();
      if (!eat(')')) throw ParseError("expression: missing ')'");
      return e;
    }
    if (eat('|')) {
      ExprPtr e = sum();
      if (!eat('|')) throw ParseError("expression: missing '|'");
      return e_abs(e);
    }
    if (src_.compare(pos_, 4, "abs(") == 0) {
      pos_ += 4;
      ExprPtr e = sum();
      if (!eat(')')) throw ParseError("expression: missing ')' after abs");
      return e_abs(e);
    }
    if (is_var_char(peek()) && !(pos_ + 1 < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_ + 1])))) {
      ++pos_;
      return e_var();
    }
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      std::size_t start = pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      if (peek() == '.') {
        ++pos_;
        while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      }
      return e_const(parse_rational(src_.substr(start, pos_ - start)));
    }
    throw ParseError("expression: unexpected '" + std::string(1, peek()) + "'");
  }
};

}  // namespace detail

inline ExprPtr parse_expr(const std::string& text) { return detail::ExprParser(text).parse(); }

}  // namespace renormlab

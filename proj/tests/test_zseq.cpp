#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"
#include "renormlab/zseq.hpp"

using namespace renormlab;
using namespace renormlab::testing;

namespace {

ZSeq fin(std::vector<Rational> vs, bool rep = false) { return zseq_finite(std::move(vs), rep); }

}  // namespace

TEST_CASE("lengths and positional access") {
  ZSeq a = fin({0, 1, 2});
  CHECK(z_length(a) == Ordinal::finite(3));
  CHECK(*z_value_at(a, Ordinal::finite(1)) == Rational(1));
  CHECK_FALSE(z_value_at(a, Ordinal::finite(3)).has_value());

  ZSeq b = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)});
  CHECK(z_length(b) == Ordinal::omega_times_plus(1, 1));
  CHECK(*z_value_at(b, Ordinal::finite(5)) == Rational(31, 32));
  CHECK(*z_value_at(b, Ordinal::omega()) == Rational(1));
  CHECK_FALSE(z_value_at(b, Ordinal::omega_times_plus(1, 1)).has_value());

  ZSeq c = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)}, true);
  CHECK(z_length(c) == Ordinal::omega_times_plus(1, 2));
  CHECK(*z_value_at(c, Ordinal::omega_times_plus(1, 1)) == Rational(1));

  ZSeq d = fin({0, 1}, true);
  CHECK(z_length(d) == Ordinal::finite(3));
  CHECK(*z_value_at(d, Ordinal::finite(2)) == Rational(1));
}

TEST_CASE("validation fixtures") {
  CHECK(z_validate(fin({0, 1, 2})).ok);

  ValidationReport r = z_validate(fin({0, 1, 1}));
  CHECK_FALSE(r.ok);
  CHECK(r.clause == "strictness");

  r = z_validate(make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1, 2)}));
  CHECK_FALSE(r.ok);
  CHECK(r.clause == "continuity");

  CHECK(z_validate(fin({0, 1}, true)).ok);
  CHECK(z_validate(make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)})).ok);
}

TEST_CASE("validation of block internals") {
  ValidationReport r = z_validate(make_blockseq({make_block("(1/2)^i", 1)}, {Rational(1)}));
  CHECK_FALSE(r.ok);
  CHECK(r.clause == "strictness");

  r = z_validate(make_blockseq({make_block("1 - (1/2)^i", 2)}, {Rational(2)}));
  CHECK_FALSE(r.ok);
  CHECK(r.clause == "limit");

  r = z_validate(make_blockseq({make_block("i", 1)}, {Rational(1)}));
  CHECK_FALSE(r.ok);
  CHECK(r.clause == "limit");

  r = z_validate(make_blockseq({make_block("1 - (1/2)^i + 0/(i - 3)", 1)}, {Rational(1)}));
  CHECK_FALSE(r.ok);
  CHECK(r.clause == "term-defined");

  // prefix override that repeats the value the closed form takes at index 1
  r = z_validate(make_blockseq({make_block("1 - (1/2)^i", 1, {Rational(1, 2)})}, {Rational(1)}));
  CHECK_FALSE(r.ok);
  CHECK(r.clause == "strictness");

  ZSeq empty;
  CHECK_FALSE(z_validate(empty).ok);

  ZSeq no_close = make_blockseq({make_block("1 - (1/2)^i", 1)}, {});
  r = z_validate(no_close);
  CHECK_FALSE(r.ok);
  CHECK(r.clause == "shape");
}

TEST_CASE("first difference fixtures") {
  FirstDiff d = z_first_difference(fin({0, 1}), fin({0, 1, 5}));
  CHECK(d.kind == FirstDiff::Kind::ExtensionOf);
  CHECK(d.side == FirstDiff::Side::Left);

  d = z_first_difference(fin({0, 2}), fin({0, 1}));
  CHECK(d.kind == FirstDiff::Kind::Diverge);
  CHECK(d.position == Ordinal::finite(1));
  CHECK(d.side == FirstDiff::Side::Right);
  CHECK(d.left_value == Rational(2));
  CHECK(d.right_value == Rational(1));

  OmegaBlock blk = make_block("1 - (1/2)^i", 1);
  d = z_first_difference(make_blockseq({blk}, {Rational(1), Rational(2)}),
                         make_blockseq({blk}, {Rational(1), Rational(3)}));
  CHECK(d.kind == FirstDiff::Kind::Diverge);
  CHECK(d.position == Ordinal::omega_times_plus(1, 1));
  CHECK(d.side == FirstDiff::Side::Left);

  d = z_first_difference(fin({0, 1}), fin({0, 1}));
  CHECK(d.kind == FirstDiff::Kind::Equal);

  // a terminal duplicate is a real position: (0,1) is extended by (0,1)+dup
  d = z_first_difference(fin({0, 1}), fin({0, 1}, true));
  CHECK(d.kind == FirstDiff::Kind::ExtensionOf);
  CHECK(d.side == FirstDiff::Side::Left);
}

TEST_CASE("comparison fixtures") {
  CHECK(z_compare(fin({0, 1}), fin({0, 1, 5})) == Cmp::Less);
  CHECK(z_compare(fin({0, 2}), fin({0, 1})) == Cmp::Less);
  CHECK(z_compare(fin({0, 1}), fin({0, 1})) == Cmp::Equal);
  CHECK(z_compare(fin({0, 1, 5}), fin({0, 1})) == Cmp::Greater);
  CHECK(z_compare(fin({0, 1}), fin({0, 2})) == Cmp::Greater);

  // equal semantic content through different closed forms
  ZSeq via_geom = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)});
  ZSeq via_geom2 = make_blockseq({make_block("1 - (1/2)^i + 0", 1)}, {Rational(1)});
  CHECK(z_compare(via_geom, via_geom2) == Cmp::Equal);
}

TEST_CASE("comparison across block boundaries") {
  OmegaBlock blk = make_block("1 - (1/2)^i", 1);
  ZSeq shorter = make_blockseq({blk}, {Rational(1)});
  ZSeq longer = make_blockseq({blk}, {Rational(1), Rational(2)});
  CHECK(z_compare(shorter, longer) == Cmp::Less);

  // a finite sequence against a block: first difference inside the block
  ZSeq finite_below = fin({0, Rational(1, 4)});
  CHECK(z_compare(finite_below, shorter) == Cmp::Greater);  // 1/4 < 1/2 at position 1

  ZSeq finite_prefix = fin({0, Rational(1, 2)});
  CHECK(z_compare(finite_prefix, shorter) == Cmp::Less);  // proper prefix

  // differing limits force a difference somewhere inside the blocks
  ZSeq lim1 = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)});
  ZSeq lim2 = make_blockseq({make_block("1 - (1/2)^i - (1/3)^i", 1)}, {Rational(1)});
  FirstDiff d = z_first_difference(lim1, lim2);
  CHECK(d.kind == FirstDiff::Kind::Diverge);
  CHECK(d.position == Ordinal::zero());
  CHECK(d.side == FirstDiff::Side::Right);
}

TEST_CASE("undecidable under a tiny scan cap") {
  // same closed form, one value overridden past the cap
  OmegaBlock base = make_block("1 - (1/2)^i", 1);
  OmegaBlock bumped = base;
  for (long long i = 0; i <= 5; ++i) bumped.prefix.push_back(base.value(i));
  bumped.prefix[5] = Rational(3, 4) * bumped.prefix[5] + Rational(1, 4) * bumped.prefix[4];
  ZSeq x = make_blockseq({base}, {Rational(1)});
  ZSeq y = make_blockseq({bumped}, {Rational(1)});
  REQUIRE(z_validate(y).ok);

  FirstDiff d = z_first_difference(x, y, 2);
  CHECK(d.kind == FirstDiff::Kind::Undecidable);
  CHECK_THROWS_AS(z_compare(x, y, 2), OrderUndecidable);

  d = z_first_difference(x, y);
  CHECK(d.kind == FirstDiff::Kind::Diverge);
  CHECK(d.position == Ordinal::finite(5));
  CHECK(d.side == FirstDiff::Side::Right);  // y's value dips below x's there
  CHECK(z_compare(x, y) == Cmp::Less);
}

TEST_CASE("total order properties on a structured pool") {
  std::mt19937 rng(20240815);
  std::vector<ZSeq> pool = zseq_pool(rng);
  for (const auto& z : pool) REQUIRE(z_validate(z).ok);

  const std::size_t n = pool.size();
  std::vector<std::vector<Cmp>> table(n, std::vector<Cmp>(n, Cmp::Equal));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) table[i][j] = z_compare(pool[i], pool[j]);

  for (std::size_t i = 0; i < n; ++i) {
    CHECK(table[i][i] == Cmp::Equal);
    for (std::size_t j = 0; j < n; ++j) {
      // antisymmetry
      if (table[i][j] == Cmp::Less) CHECK(table[j][i] == Cmp::Greater);
      if (table[i][j] == Cmp::Equal) CHECK(table[j][i] == Cmp::Equal);
    }
  }
  // transitivity over all triples of the pool
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        if (table[i][j] != Cmp::Greater && table[j][k] != Cmp::Greater)
          CHECK(table[i][k] != Cmp::Greater);
}

TEST_CASE("theta fixtures") {
  CHECK(theta(Rational(0)) == Rational(1, 2));
  CHECK(theta(Rational(1)) == Rational(3, 4));
  CHECK(theta(Rational(-1)) == Rational(1, 4));
  CHECK(theta_inv(Rational(1, 2)) == Rational(0));
  CHECK(theta_inv(Rational(3, 8)) == Rational(-1, 3));

  std::mt19937 rng(20240816);
  for (int t = 0; t < 500; ++t) {
    Rational q = random_rational(rng, -50, 50);
    Rational p = theta(q);
    CHECK(p > 0);
    CHECK(p < 1);
    CHECK(theta_inv(p) == q);
    Rational q2 = random_rational(rng, -50, 50);
    if (q < q2) CHECK(theta(q) < theta(q2));
  }

  // the single-expression inverse agrees with the exact function
  ExprPtr inv = theta_inv_ast(parse_expr("1/2 + 1/(n+3)"));
  for (long long n = 0; n < 30; ++n)
    CHECK(eval(inv, n) == theta_inv(Rational(1, 2) + Rational(1, n + 3)));
}

TEST_CASE("theta map on sequences") {
  ZSeq img = theta_map(fin({0, 1}));
  REQUIRE(img.tail.size() == 2);
  CHECK(img.tail[0] == Rational(1, 2));
  CHECK(img.tail[1] == Rational(3, 4));

  std::mt19937 rng(20240817);
  std::vector<ZSeq> pool = zseq_pool(rng);
  for (const auto& z : pool) CHECK(z_validate(theta_map(z)).ok);
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = 0; j < pool.size(); ++j)
      CHECK(z_compare(theta_map(pool[i]), theta_map(pool[j])) == z_compare(pool[i], pool[j]));

  // images live in (0,1) at every sampled position, so prepending 0 stays legal
  ZSeq img2 = theta_map(make_blockseq({make_block("-1/(i+1)", 0)}, {Rational(0)}, true));
  CHECK(z_validate(img2).ok);
  CHECK(*z_value_at(img2, Ordinal::finite(0)) == Rational(1, 4));
  CHECK(*z_value_at(img2, Ordinal::omega()) == Rational(1, 2));
}

TEST_CASE("phi fixtures") {
  ZSeq a = phi_map(fin({0, 1}));
  REQUIRE(a.tail.size() == 2);
  CHECK(a.tail[0] == Rational(0));
  CHECK(a.tail[1] == Rational(2));

  ZSeq b = phi_map(fin({-1}));
  REQUIRE(b.tail.size() == 1);
  CHECK(b.tail[0] == Rational(-2));

  // terminal duplicate at a successor position becomes strict
  ZSeq c = phi_map(fin({0, 1}, true));
  CHECK_FALSE(c.terminal_repeat);
  REQUIRE(c.tail.size() == 3);
  CHECK(c.tail[2] == Rational(3));
  CHECK(z_validate(c).ok);

  // block sequence: successor images 3 - 3*2^{-i}, limit image 2*1+1 = 3
  ZSeq blk = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)});
  ZSeq img = phi_map(blk);
  REQUIRE(img.blocks.size() == 1);
  CHECK(*z_value_at(img, Ordinal::finite(0)) == Rational(0));
  CHECK(*z_value_at(img, Ordinal::finite(1)) == Rational(3) - Rational(3, 2));
  CHECK(*z_value_at(img, Ordinal::finite(4)) == Rational(3) - Rational(3, 16));
  CHECK(img.blocks[0].limit == Rational(3));
  CHECK(*z_value_at(img, Ordinal::omega()) == Rational(3));
  CHECK(z_validate(img).ok);

  // terminal duplicate at a limit position survives
  ZSeq lim_dup = phi_map(make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)}, true));
  CHECK(lim_dup.terminal_repeat);
  CHECK(z_validate(lim_dup).ok);
}

TEST_CASE("phi is strictly increasing") {
  std::mt19937 rng(20240818);
  std::vector<ZSeq> pool = zseq_pool(rng);
  for (const auto& z : pool) CHECK(z_validate(phi_map(z)).ok);
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = 0; j < pool.size(); ++j)
      CHECK(z_compare(phi_map(pool[i]), phi_map(pool[j])) == z_compare(pool[i], pool[j]));
}

TEST_CASE("product fixtures") {
  ZSeq p = z_product(fin({0}), fin({0}));
  REQUIRE(p.tail.size() == 1);
  CHECK(p.tail[0] == Rational(-1));

  ZSeq q = z_product(fin({1}), fin({0}));
  REQUIRE(q.tail.size() == 1);
  CHECK(q.tail[0] == Rational(-1, 3));
  // the smaller diverging value wins: (1) < (0), and the product keeps that
  CHECK(z_compare(p, q) == Cmp::Greater);

  // overhang: positions past the shorter side copy the longer side
  ZSeq r = z_product(fin({0}), fin({0, 3, 4}));
  REQUIRE(r.tail.size() == 3);
  CHECK(r.tail[0] == Rational(-1));
  CHECK(r.tail[1] == Rational(3));
  CHECK(r.tail[2] == Rational(4));

  // block against finite: the finite side folds into the block's prefix
  ZSeq blk = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)});
  ZSeq s = z_product(fin({0}), blk);
  REQUIRE(s.blocks.size() == 1);
  CHECK(*z_value_at(s, Ordinal::finite(0)) == z_prod_value(Rational(0), Rational(0)));
  CHECK(*z_value_at(s, Ordinal::finite(3)) == blk.blocks[0].value(3));
  CHECK(*z_value_at(s, Ordinal::omega()) == Rational(1));
  CHECK(z_validate(s).ok);
}

TEST_CASE("product respects order and associates") {
  std::mt19937 rng(20240819);
  std::vector<ZSeq> pool = zseq_pool(rng, 14);

  for (const auto& x : pool)
    for (const auto& y : pool) CHECK(z_validate(z_product(x, y)).ok);

  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int t = 0; t < 120; ++t) {
    const ZSeq &x = pool[pick(rng)], &y = pool[pick(rng)], &u = pool[pick(rng)];
    Cmp xy = z_compare(x, y);
    // monotone in each argument, strictly when the varied side is strict
    Cmp lhs = z_compare(z_product(x, u), z_product(y, u));
    CHECK(lhs == xy);
    Cmp rhs = z_compare(z_product(u, x), z_product(u, y));
    CHECK(rhs == xy);
  }

  for (int t = 0; t < 40; ++t) {
    const ZSeq &x = pool[pick(rng)], &y = pool[pick(rng)], &u = pool[pick(rng)];
    CHECK(z_compare(z_product(z_product(x, y), u), z_product(x, z_product(y, u))) == Cmp::Equal);
  }
}

TEST_CASE("embedding into the unit core") {
  ZSeq a = to_z0(fin({0}));
  REQUIRE(a.tail.size() == 2);
  CHECK(a.tail[0] == Rational(0));
  CHECK(a.tail[1] == Rational(1, 2));
  CHECK(is_z0(a));

  ZSeq b = to_z0(fin({-1, 1}));
  REQUIRE(b.tail.size() == 3);
  CHECK(b.tail[0] == Rational(0));
  CHECK(b.tail[1] == Rational(1, 4));
  CHECK(b.tail[2] == Rational(3, 4));

  std::mt19937 rng(20240820);
  std::vector<ZSeq> pool = zseq_pool(rng);
  for (const auto& z : pool) {
    ZSeq img = to_z0(z);
    CHECK(z_validate(img).ok);
    std::string why;
    INFO(why);
    CHECK(is_z0(img, &why));
  }
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = 0; j < pool.size(); ++j)
      CHECK(z_compare(to_z0(pool[i]), to_z0(pool[j])) == z_compare(pool[i], pool[j]));

  // block positions: finite indices shift by one, limit positions stay
  ZSeq blk = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)});
  ZSeq img = to_z0(blk);
  CHECK(*z_value_at(img, Ordinal::finite(0)) == Rational(0));
  CHECK(*z_value_at(img, Ordinal::finite(1)) == theta(Rational(0)));
  CHECK(*z_value_at(img, Ordinal::finite(4)) == theta(Rational(7, 8)));
  CHECK(*z_value_at(img, Ordinal::omega()) == theta(Rational(1)));
}

TEST_CASE("z0 membership checks") {
  CHECK(is_z0(fin({0, Rational(1, 2)})));
  CHECK_FALSE(is_z0(fin({Rational(1, 2)})));           // must start at 0
  CHECK_FALSE(is_z0(fin({0, Rational(3, 2)})));        // above 1
  CHECK_FALSE(is_z0(fin({0, 1})));                     // 1 at a successor
  CHECK(is_z0(make_blockseq({make_block("1 - (1/2)^i", 1, {Rational(0)})}, {Rational(1)})));
}

TEST_CASE("serialization round-trip") {
  std::mt19937 rng(20240821);
  std::vector<ZSeq> pool = zseq_pool(rng);
  for (const auto& z : pool) {
    ZSeq back = z_parse(z_to_string(z));
    CHECK(z_compare(z, back) == Cmp::Equal);
    CHECK(back.terminal_repeat == z.terminal_repeat);
    CHECK(back.blocks.size() == z.blocks.size());
    CHECK(z_to_string(back) == z_to_string(z));
  }

  ZSeq c = z_parse("tail=[0,1];repeat=true");
  CHECK(z_validate(c).ok);
  CHECK(c.tail.size() == 2);
  CHECK(c.terminal_repeat);
  CHECK(z_length(c) == Ordinal::finite(3));

  ZSeq d = z_parse("blocks=[{prefix:[-1],term:\"1 - (1/2)^i\",limit:1}];tail=[1];repeat=false");
  CHECK(z_validate(d).ok);
  CHECK(*z_value_at(d, Ordinal::finite(0)) == Rational(-1));

  CHECK_THROWS_AS(z_parse("tail=[0,1"), ParseError);
  CHECK_THROWS_AS(z_parse("nonsense"), ParseError);
}

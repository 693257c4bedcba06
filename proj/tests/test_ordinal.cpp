#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "renormlab/ordinal.hpp"

using namespace renormlab;

namespace {

Ordinal random_ordinal(std::mt19937& rng) {
  std::uniform_int_distribution<int> exp_dist(0, 3);
  std::uniform_int_distribution<std::uint64_t> coeff_dist(1, 9);
  Ordinal o;
  int exp = exp_dist(rng);
  while (exp >= 0) {
    if (std::uniform_int_distribution<int>(0, 1)(rng) == 1)
      o.terms.push_back({static_cast<std::uint32_t>(exp), coeff_dist(rng)});
    --exp;
  }
  return o;
}

}  // namespace

TEST_CASE("comparison fixtures") {
  CHECK(ord_compare(Ordinal::zero(), Ordinal::zero()) == Cmp::Equal);
  CHECK(ord_compare(Ordinal::omega(), ord_succ(Ordinal::omega())) == Cmp::Less);
  CHECK(ord_compare(Ordinal::omega_times_plus(2, 0), Ordinal{{{2, 1}}}) == Cmp::Less);
  CHECK(ord_compare(Ordinal::finite(7), Ordinal::omega()) == Cmp::Less);
  CHECK(ord_compare(Ordinal::omega_times_plus(1, 3), Ordinal::omega_times_plus(1, 2)) == Cmp::Greater);
}

TEST_CASE("classification fixtures") {
  CHECK(ord_classify(Ordinal::zero()).kind == OrdinalKind::Zero);

  OrdinalClass c = ord_classify(Ordinal::omega_times_plus(1, 3));
  REQUIRE(c.kind == OrdinalKind::Successor);
  CHECK(c.predecessor == Ordinal::omega_times_plus(1, 2));

  CHECK(ord_classify(Ordinal{{{2, 1}}}).kind == OrdinalKind::Limit);
  CHECK(ord_classify(Ordinal::omega()).kind == OrdinalKind::Limit);
  CHECK(ord_classify(Ordinal::finite(1)).predecessor == Ordinal::zero());
}

TEST_CASE("sup fixtures") {
  CHECK(ord_sup({Ordinal::finite(1), Ordinal::omega(), Ordinal::finite(3)}) == Ordinal::omega());
  CHECK(ord_sup({Ordinal::zero()}) == Ordinal::zero());
  Ordinal w1 = ord_succ(Ordinal::omega());
  CHECK(ord_sup({w1, w1}) == w1);
  CHECK_THROWS_AS(ord_sup({}), EmptyInput);
}

TEST_CASE("total order on random triples") {
  std::mt19937 rng(20240811);
  for (int trial = 0; trial < 3000; ++trial) {
    Ordinal a = random_ordinal(rng), b = random_ordinal(rng), c = random_ordinal(rng);
    REQUIRE(a.well_formed());

    // trichotomy and antisymmetry
    Cmp ab = ord_compare(a, b), ba = ord_compare(b, a);
    if (ab == Cmp::Less) CHECK(ba == Cmp::Greater);
    if (ab == Cmp::Equal) {
      CHECK(ba == Cmp::Equal);
      CHECK(a == b);
    }
    if (ab == Cmp::Greater) CHECK(ba == Cmp::Less);

    // transitivity
    if (ord_compare(a, b) != Cmp::Greater && ord_compare(b, c) != Cmp::Greater)
      CHECK(ord_compare(a, c) != Cmp::Greater);
  }
}

TEST_CASE("classify round-trips through successor") {
  std::mt19937 rng(20240812);
  for (int trial = 0; trial < 2000; ++trial) {
    Ordinal a = random_ordinal(rng);
    OrdinalClass c = ord_classify(ord_succ(a));
    REQUIRE(c.kind == OrdinalKind::Successor);
    CHECK(c.predecessor == a);
  }
}

TEST_CASE("sup picks a dominating member") {
  std::mt19937 rng(20240813);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Ordinal> xs;
    int n = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int i = 0; i < n; ++i) xs.push_back(random_ordinal(rng));
    Ordinal s = ord_sup(xs);
    bool member = false;
    for (const auto& x : xs) {
      CHECK(ord_compare(x, s) != Cmp::Greater);
      member = member || x == s;
    }
    CHECK(member);
  }
}

TEST_CASE("addition bookkeeping") {
  // left absorption: finite + w = w
  CHECK(ord_add(Ordinal::finite(5), Ordinal::omega()) == Ordinal::omega());
  CHECK(ord_add(Ordinal::omega(), Ordinal::finite(1)) == Ordinal::omega_times_plus(1, 1));
  CHECK(ord_add(Ordinal::omega_times_plus(2, 3), Ordinal::omega()) == Ordinal::omega_times_plus(3, 0));
  CHECK(ord_add(Ordinal::zero(), Ordinal::zero()) == Ordinal::zero());
}

TEST_CASE("string round-trip") {
  CHECK(ord_to_string(Ordinal::zero()) == "0");
  Ordinal a{{{2, 3}, {1, 1}, {0, 4}}};
  CHECK(ord_to_string(a) == "w^2*3+w*1+4");
  CHECK(ord_parse("w^2*3 + w*1 + 4") == a);
  CHECK(ord_parse("0") == Ordinal::zero());
  CHECK(ord_parse("w") == Ordinal::omega());
  CHECK(ord_parse("w^3") == Ordinal{{{3, 1}}});

  std::mt19937 rng(20240814);
  for (int trial = 0; trial < 500; ++trial) {
    Ordinal x = random_ordinal(rng);
    CHECK(ord_parse(ord_to_string(x)) == x);
  }
  CHECK_THROWS_AS(ord_parse("w^"), ParseError);
  CHECK_THROWS_AS(ord_parse(""), ParseError);
  CHECK_THROWS_AS(ord_parse("3+w"), ParseError);
}

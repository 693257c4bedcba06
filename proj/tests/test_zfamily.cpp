#include <catch2/catch_amalgamated.hpp>

#include <renormlab/zfamily.hpp>

#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"

using namespace renormlab;
using namespace renormlab::testing;

namespace {

ZSeq fin(std::vector<Rational> vals, bool repeat = false) {
  ZSeq z = zseq_finite(std::move(vals));
  z.terminal_repeat = repeat;
  return z;
}

ZFamily tmpl(const std::vector<std::string>& terms, std::vector<OmegaBlock> blocks = {},
             bool repeat = false, long long n_start = 1) {
  std::vector<ExprPtr> es;
  es.reserve(terms.size());
  for (const auto& t : terms) es.push_back(parse_expr(t));
  return zfam_tail_template(std::move(blocks), std::move(es), repeat, n_start);
}

// Direct order-topology reading of convergence on a member window: every
// candidate u above x must trap the tail of the window below it.
bool oracle_converges(const ZSeq& x, const ZFamily& fam, const std::vector<ZSeq>& us,
                      long long hi) {
  for (const auto& u : us) {
    if (z_compare(u, x) != Cmp::Greater) continue;
    for (long long n = hi - 4; n <= hi; ++n)
      if (z_compare(family_member(fam, n), u) != Cmp::Less) return false;
  }
  return true;
}

void check_witness(const ZSeq& x, const ZFamily& fam, const ZSeq& w, long long lo, long long hi) {
  REQUIRE(z_validate(w).ok);
  CHECK_FALSE(w.terminal_repeat);
  CHECK(z_compare(x, w) == Cmp::Less);
  for (long long n = lo; n <= hi; ++n)
    CHECK(z_compare(w, family_member(fam, n)) != Cmp::Greater);
}

}  // namespace

TEST_CASE("family member materialization") {
  ZFamily lst = zfam_list({fin({0, 1}), fin({0, 2})});
  CHECK(z_compare(family_member(lst, 1), fin({0, 1})) == Cmp::Equal);
  CHECK(z_compare(family_member(lst, 2), fin({0, 2})) == Cmp::Equal);
  CHECK_THROWS_AS(family_member(lst, 0), MalformedFamily);
  CHECK_THROWS_AS(family_member(lst, 3), MalformedFamily);

  ZFamily tt = tmpl({"0", "1", "n + 1"});
  CHECK(z_compare(family_member(tt, 3), fin({0, 1, 4})) == Cmp::Equal);

  ZFamily gp = zfam_growing_prefix(parse_expr("1 - (1/2)^n"));
  ZSeq g2 = family_member(gp, 2);
  REQUIRE(g2.tail.size() == 3);
  CHECK(g2.tail[2] == Rational(3, 4));

  ZSeq base = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)});
  ZFamily dev = zfam_prefix_deviation(base, 0, parse_expr("n"), parse_expr("1 - (3/2)*(1/2)^n"));
  ZSeq m3 = family_member(dev, 3);
  CHECK(*z_value_at(m3, Ordinal::finite(3)) == Rational(1) - Rational(3, 16));
  CHECK(*z_value_at(m3, Ordinal::finite(2)) == Rational(3, 4));
  CHECK(z_validate(m3).ok);
}

TEST_CASE("shape classes and final positions") {
  CHECK(z_shape_case(fin({0, 1})) == 1);
  CHECK(z_shape_case(fin({0, 1}, true)) == 2);
  CHECK(z_shape_case(fin({0}, true)) == 2);
  ZSeq lim = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)}, true);
  CHECK(z_shape_case(lim) == 3);

  CHECK(z_beta_position(fin({0, 1})) == Ordinal::finite(1));
  CHECK(z_beta_position(fin({0, 1}, true)) == Ordinal::finite(1));
  CHECK(z_beta_position(lim) == Ordinal::omega());
  ZSeq longer = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1), Rational(2)}, true);
  CHECK(z_beta_position(longer) == Ordinal::omega_times_plus(1, 1));
}

TEST_CASE("convergence by unbounded extension values") {
  ZSeq x = fin({0, 1});
  ConvergenceResult r = z_converges(x, tmpl({"0", "1", "n + 1"}));
  CHECK(r.yes);
  CHECK(r.case_id == 1);

  // bounded extension values keep the family away from the target
  r = z_converges(fin({0}), tmpl({"0", "5 + 1/n"}));
  CHECK_FALSE(r.yes);

  // quadratic growth reaches the target as well
  r = z_converges(x, tmpl({"0", "1", "n*n + 2"}));
  CHECK(r.yes);
  CHECK(r.case_id == 1);
}

TEST_CASE("convergence at a duplicated successor position") {
  ZSeq x = fin({0, 1}, true);
  ConvergenceResult r = z_converges(x, tmpl({"0", "1 - 1/n"}, {}, false, 2));
  CHECK(r.yes);
  CHECK(r.case_id == 2);

  // values settling below the duplicated value do not reach it
  r = z_converges(x, tmpl({"0", "1/2 - 1/n"}, {}, false, 3));
  CHECK_FALSE(r.yes);

  // same approach against a plain target is not convergence either
  r = z_converges(fin({0, 1}), tmpl({"0", "1 - 1/n"}, {}, false, 2));
  CHECK_FALSE(r.yes);

  // duplicated position after a block: values creep up to the final value
  ZSeq xb = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1), Rational(2)}, true);
  r = z_converges(xb, tmpl({"1", "2 - 1/n"}, {make_block("1 - (1/2)^i", 1)}, false, 2));
  CHECK(r.yes);
  CHECK(r.case_id == 2);
}

TEST_CASE("convergence by climbing divergence positions") {
  ZSeq base = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)});
  ZFamily fam = zfam_prefix_deviation(base, 0, parse_expr("n"), parse_expr("1 - (3/2)*(1/2)^n"));

  ZSeq x = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)}, true);
  ConvergenceResult r = z_converges(x, fam);
  CHECK(r.yes);
  CHECK(r.case_id == 3);

  // without the terminal plateau the members stay strictly above the target
  r = z_converges(base, fam);
  CHECK_FALSE(r.yes);

  // upward deviations move away from any target beneath them
  ZFamily up = zfam_prefix_deviation(base, 0, parse_expr("n"), parse_expr("1 - (2/3)*(1/2)^n"));
  r = z_converges(fin({0, Rational(3, 4)}), up);
  CHECK_FALSE(r.yes);
  // and sit below the terminal plateau itself
  CHECK_THROWS_AS(z_converges(x, up), MalformedFamily);
}

TEST_CASE("families that can never converge") {
  ConvergenceResult r = z_converges(fin({0}), zfam_list({fin({0, 5}), fin({0, 7})}));
  CHECK_FALSE(r.yes);

  r = z_converges(fin({0}), zfam_growing_prefix(parse_expr("1 - (1/2)^n")));
  CHECK_FALSE(r.yes);
}

TEST_CASE("malformed families are rejected") {
  // a member at or below the target
  CHECK_THROWS_AS(z_converges(fin({0, 5}), zfam_list({fin({0, 6})})), MalformedFamily);
  CHECK_THROWS_AS(z_converges(fin({0, 1}), zfam_list({fin({0, 1})})), MalformedFamily);
  CHECK_THROWS_AS(z_converges(fin({0, 1}), tmpl({"0", "2"})), MalformedFamily);
  CHECK_THROWS_AS(z_converges(fin({0, 1}), tmpl({"0", "1"})), MalformedFamily);
  CHECK_THROWS_AS(z_converges(fin({0, 1, 2}), tmpl({"0", "1"})), MalformedFamily);

  // structurally broken families
  CHECK_THROWS_AS(z_converges(fin({0}), tmpl({"1", "0"})), MalformedFamily);
  CHECK_THROWS_AS(z_converges(fin({0}), zfam_growing_prefix(parse_expr("1/(n+1)"))),
                  MalformedFamily);
  CHECK_THROWS_AS(z_converges(fin({0}), zfam_list({})), MalformedFamily);
  ZSeq blk = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)});
  CHECK_THROWS_AS(z_converges(fin({0}), tmpl({"1/2 + 1/n"}, {make_block("1 - (1/2)^i", 1)})),
                  MalformedFamily);
  CHECK_THROWS_AS(
      z_converges(fin({0}), zfam_prefix_deviation(blk, 0, parse_expr("2*n"),
                                                  parse_expr("1 - (3/2)*(1/2)^n"))),
      MalformedFamily);
  CHECK_THROWS_AS(
      z_converges(fin({0}), zfam_prefix_deviation(blk, 0, parse_expr("n"),
                                                  parse_expr("1 - (1/2)*(1/2)^n"))),
      MalformedFamily);

  // an invalid target is refused up front
  CHECK_THROWS_AS(z_converges(fin({1, 0}), tmpl({"0", "n"})), MalformedFamily);
}

TEST_CASE("certificate thresholds past the head budget are refused") {
  ZFamily slow = tmpl({"0", "2 - (9999/10000)^n * 100"});
  CHECK_THROWS_AS(z_converges(fin({0}), slow), OrderUndecidable);
}

TEST_CASE("separation witnesses, frozen") {
  // bounded extension family: the certified supremum of the new values
  ZSeq w = z_separate(fin({0}), tmpl({"0", "5 + 1/n"}));
  CHECK(z_compare(w, fin({0, 6})) == Cmp::Equal);

  // single member strictly above: the first-difference midpoint
  w = z_separate(fin({0, 1}), zfam_list({fin({0, Rational(1, 2)})}));
  CHECK(z_compare(w, fin({0, Rational(3, 4)})) == Cmp::Equal);

  // constant second coordinate: the shared prefix itself separates
  w = z_separate(fin({0}), tmpl({"0", "1", "n"}, {}, false, 2));
  CHECK(z_compare(w, fin({0, 1})) == Cmp::Equal);

  // values settling below a duplicated final value: midpoint of the gap
  w = z_separate(fin({0, 1}, true), tmpl({"0", "1/2 - 1/n"}, {}, false, 3));
  CHECK(z_compare(w, fin({0, Rational(3, 4)})) == Cmp::Equal);

  // downward deviations above a plain truncation: step past the plateau
  ZSeq base = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)});
  ZFamily dev = zfam_prefix_deviation(base, 0, parse_expr("n"), parse_expr("1 - (3/2)*(1/2)^n"));
  w = z_separate(base, dev);
  CHECK(z_compare(w, make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1), Rational(2)})) ==
        Cmp::Equal);
  check_witness(base, dev, w, 1, 30);

  // a convergent family has no separator
  CHECK_THROWS_AS(z_separate(fin({0}), tmpl({"0", "n"}, {}, false, 5)), NotSeparable);
  CHECK_THROWS_AS(z_separate(fin({0, 1}), tmpl({"0", "1", "n + 1"})), NotSeparable);
}

TEST_CASE("convergence agrees with the order-topology oracle") {
  std::mt19937 rng(20240822);
  std::uniform_int_distribution<int> small(1, 5);

  struct Sample {
    ZSeq x;
    ZFamily fam;
    bool expect_yes;
    long long lo;
  };
  std::vector<Sample> samples;

  for (int t = 0; t < 12; ++t) {
    // plain target, extensions with unbounded first new value
    auto vals = random_increasing(rng, 1 + t % 3);
    ZSeq x = fin(vals);
    std::vector<std::string> terms;
    for (const auto& v : vals) terms.push_back(rat_to_string(v));
    std::vector<std::string> grow = terms;
    grow.push_back("n*" + std::to_string(small(rng)) + " + " + rat_to_string(vals.back() + 1));
    samples.push_back({x, tmpl(grow), true, 1});

    // same shape with bounded new values
    std::vector<std::string> stay = terms;
    Rational c = vals.back() + small(rng);
    stay.push_back(rat_to_string(c) + " + 1/n");
    samples.push_back({x, tmpl(stay), false, 1});

    // duplicated successor target approached at the final position
    ZSeq xr = fin(vals, true);
    std::vector<std::string> close(terms.begin(), terms.end() - 1);
    close.push_back(rat_to_string(vals.back()) + " - " + std::to_string(small(rng)) + "/n");
    long long start = 1;
    while (true) {
      try {
        family_member(tmpl(close, {}, false, start), start);
        ZSeq m = family_member(tmpl(close, {}, false, start), start);
        if (z_validate(m).ok && z_compare(m, xr) == Cmp::Greater) break;
      } catch (...) {
      }
      ++start;
      REQUIRE(start < 64);
    }
    samples.push_back({xr, tmpl(close, {}, false, start), true, start});

    // and the same members against the plain version of the target
    samples.push_back({fin(vals), tmpl(close, {}, false, start), false, start});
  }

  ZSeq base = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)});
  ZSeq plateau = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)}, true);
  for (int a : {2, 3, 5}) {
    ZFamily dev = zfam_prefix_deviation(
        base, 0, parse_expr("n"),
        parse_expr("1 - (" + std::to_string(2 * a - 1) + "/" + std::to_string(a) + ")*(1/2)^n"));
    samples.push_back({plateau, dev, true, 1});
    samples.push_back({base, dev, false, 1});
  }

  for (const auto& s : samples) {
    ConvergenceResult r = z_converges(s.x, s.fam);
    CHECK(r.yes == s.expect_yes);

    std::vector<ZSeq> us;
    for (long long k : {s.lo, s.lo + 2, s.lo + 7})
      us.push_back(y_between(s.x, family_member(s.fam, k)));
    // midpoint candidates taken at index k trap the members only past 2k
    const long long hi = 2 * (s.lo + 7) + 8;
    if (r.yes) {
      CHECK_THROWS_AS(z_separate(s.x, s.fam), NotSeparable);
    } else {
      ZSeq w = z_separate(s.x, s.fam);
      check_witness(s.x, s.fam, w, s.lo, s.lo + 28);
      us.push_back(w);
    }
    CHECK(oracle_converges(s.x, s.fam, us, hi) == r.yes);
  }
}

TEST_CASE("least upper bounds, frozen") {
  CHECK(z_compare(z0_sup(zfam_list({})), fin({0})) == Cmp::Equal);

  // descending members: the first member is greatest
  ZSeq s = z0_sup(tmpl({"0", "1 - (1/2)^n"}));
  CHECK(z_compare(s, fin({0, Rational(1, 2)})) == Cmp::Equal);

  // an extension chain closes into a block with its limit on top
  ZSeq chain = z0_sup(zfam_growing_prefix(parse_expr("1 - (1/2)^n")));
  REQUIRE(chain.blocks.size() == 1);
  CHECK(chain.blocks[0].limit == Rational(1));
  CHECK(*z_value_at(chain, Ordinal::omega()) == Rational(1));
  CHECK(z_length(chain) == Ordinal::omega_times_plus(1, 1));
  CHECK(z_validate(chain).ok);
  std::string why;
  CHECK(is_z0(chain, &why));

  // ascending members freeze the settled coordinate and close at the limit
  s = z0_sup(tmpl({"0", "1/2 + (1/2)^n"}, {}, false, 2));
  CHECK(z_compare(s, fin({0, Rational(1, 2)})) == Cmp::Equal);

  // the limit landing on the previous coordinate folds into a duplicate
  s = z0_sup(tmpl({"0", "1/2", "1/2 + (1/2)^n"}, {}, false, 2));
  CHECK(s.terminal_repeat);
  CHECK(z_compare(s, fin({0, Rational(1, 2)}, true)) == Cmp::Equal);

  // a constant family is its own bound
  s = z0_sup(tmpl({"0", "1/2"}));
  CHECK(z_compare(s, fin({0, Rational(1, 2)})) == Cmp::Equal);

  // upward deviations approach the undisturbed base from below
  ZSeq base = make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)});
  ZFamily up = zfam_prefix_deviation(base, 0, parse_expr("n"), parse_expr("1 - (2/3)*(1/2)^n"));
  s = z0_sup(up);
  CHECK(z_compare(s, base) == Cmp::Equal);
  CHECK_FALSE(s.terminal_repeat);

  // finite lists return their greatest element
  ZSeq a = fin({0, Rational(1, 4)});
  ZSeq b = fin({0, Rational(1, 4), Rational(1, 2)});
  ZSeq c = fin({0, Rational(1, 8)});
  s = z0_sup(zfam_list({a, b, c}));
  CHECK(z_compare(s, c) == Cmp::Equal);
}

TEST_CASE("membership constraints for the unit core") {
  CHECK_THROWS_AS(z0_sup(zfam_list({fin({Rational(1, 2)})})), NotInZ0);
  CHECK_THROWS_AS(z0_sup(zfam_list({fin({0, 1})})), NotInZ0);
  CHECK_THROWS_AS(z0_sup(zfam_list({fin({0, Rational(3, 2)})})), NotInZ0);
  CHECK_THROWS_AS(z0_sup(tmpl({"0", "1 + 1/n"})), NotInZ0);
  CHECK_THROWS_AS(z0_sup(zfam_growing_prefix(parse_expr("n"))), NotInZ0);
  CHECK_THROWS_AS(z0_sup(zfam_growing_prefix(parse_expr("1/2 + n"))), NotInZ0);
}

TEST_CASE("least upper bound properties on generated families") {
  std::mt19937 rng(20240823);
  std::uniform_int_distribution<int> den(2, 9);

  for (int t = 0; t < 20; ++t) {
    // random finite families of unit-core elements
    std::vector<ZSeq> items;
    int count = 1 + t % 4;
    for (int i = 0; i < count; ++i) {
      std::vector<Rational> vals{Rational(0)};
      int len = 1 + (t + i) % 3;
      Rational v(0);
      for (int k = 0; k < len; ++k) {
        v += Rational(1, (1 + k + i % 3) * den(rng));
        if (v >= 1) break;
        vals.push_back(v);
      }
      items.push_back(fin(vals));
    }
    ZFamily fam = zfam_list(items);
    ZSeq s = z0_sup(fam);
    std::string why;
    CHECK(is_z0(s, &why));
    bool attained = false;
    for (const auto& it : items) {
      CHECK(z_compare(it, s) != Cmp::Greater);
      if (z_compare(it, s) == Cmp::Equal) attained = true;
    }
    CHECK(attained);
  }

  for (int t = 0; t < 12; ++t) {
    // ascending one-parameter families with a known closure value
    int d = den(rng);
    std::string lim = "1/" + std::to_string(d);
    ZFamily fam = tmpl({"0", lim + " + (1/2)^n * 1/" + std::to_string(d + 1)});
    ZSeq s = z0_sup(fam);
    std::string why;
    CHECK(is_z0(s, &why));
    for (long long n = 1; n <= 30; ++n)
      CHECK(z_compare(family_member(fam, n), s) != Cmp::Greater);
    // the closure value is exactly the least candidate on the (0, q) grid
    CHECK(z_compare(s, fin({0, Rational(1, d)})) == Cmp::Equal);
    for (int num = 1; num <= d; ++num) {
      ZSeq cand = fin({0, Rational(1, d) * Rational(num, d)});
      bool ub = true;
      for (long long n = 1; n <= 30 && ub; ++n)
        if (z_compare(family_member(fam, n), cand) == Cmp::Greater) ub = false;
      if (ub) CHECK(z_compare(s, cand) != Cmp::Greater);
    }
  }
}

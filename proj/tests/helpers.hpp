#pragma once

#include <random>
#include <vector>

#include "renormlab/zseq.hpp"

namespace renormlab::testing {

inline OmegaBlock make_block(const std::string& term, const Rational& limit,
                             std::vector<Rational> prefix = {}) {
  OmegaBlock b;
  b.prefix = std::move(prefix);
  b.term = parse_expr(term);
  b.limit = limit;
  return b;
}

inline ZSeq make_blockseq(std::vector<OmegaBlock> blocks, std::vector<Rational> tail,
                          bool repeat = false) {
  ZSeq z;
  z.blocks = std::move(blocks);
  z.tail = std::move(tail);
  z.terminal_repeat = repeat;
  return z;
}

inline Rational random_rational(std::mt19937& rng, int lo = -8, int hi = 8) {
  std::uniform_int_distribution<int> num(lo * 4, hi * 4);
  std::uniform_int_distribution<int> den(1, 4);
  return Rational(num(rng), den(rng));
}

// Strictly increasing finite value list.
inline std::vector<Rational> random_increasing(std::mt19937& rng, int len) {
  std::vector<Rational> vs;
  Rational v = random_rational(rng);
  for (int i = 0; i < len; ++i) {
    vs.push_back(v);
    v += Rational(std::uniform_int_distribution<int>(1, 5)(rng),
                  std::uniform_int_distribution<int>(1, 3)(rng));
  }
  return vs;
}

// A pool of structurally diverse valid sequences: finite, with terminal
// duplicates, one- and two-block shapes, block sequences ending in plateaus.
inline std::vector<ZSeq> zseq_pool(std::mt19937& rng, int finite_count = 24) {
  std::vector<ZSeq> pool;
  for (int i = 0; i < finite_count; ++i) {
    int len = std::uniform_int_distribution<int>(1, 5)(rng);
    bool rep = std::uniform_int_distribution<int>(0, 3)(rng) == 0;
    pool.push_back(zseq_finite(random_increasing(rng, len), rep));
  }
  pool.push_back(make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)}));
  pool.push_back(make_blockseq({make_block("1 - (1/2)^i", 1)}, {Rational(1)}, true));
  pool.push_back(make_blockseq({make_block("1 - (1/3)^i", 1)}, {Rational(1), Rational(2)}));
  pool.push_back(make_blockseq({make_block("2 - 2/(i+1)", 2)}, {Rational(2), Rational(3)}));
  pool.push_back(make_blockseq({make_block("1 - (1/2)^i", 1),
                                make_block("2 - (1/2)^i", 2, {Rational(1)})},
                               {Rational(2)}));
  pool.push_back(make_blockseq({make_block("1 - (1/2)^i", 1, {Rational(-1)})},
                               {Rational(1), Rational(7, 2)}));
  pool.push_back(make_blockseq({make_block("-1/(i+1)", 0)}, {Rational(0)}, true));
  return pool;
}

}  // namespace renormlab::testing

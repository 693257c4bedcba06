#pragma once

// The chain-building game on a tree: A and B alternate nominations, each at
// or above the last, starting with B. B wins when the nominated chain is
// unbounded, which a finite transcript can never certify on its own, so
// unboundedness rulings come from the generator's oracle. The fixed-pair
// strategy keeps a per-move audit trail so the 2^{-n} slack rule can be
// re-derived from scratch afterwards.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "renormlab/tree.hpp"
#include "renormlab/zseq.hpp"

namespace renormlab {

struct IllegalMove : std::runtime_error {
  std::string node;
  std::size_t round;
  IllegalMove(const std::string& n, std::size_t r)
      : std::runtime_error("illegal move " + n + " at round " + std::to_string(r)),
        node(n),
        round(r) {}
};

struct NoFixedPair : std::logic_error {
  explicit NoFixedPair(const std::string& why)
      : std::logic_error("no fixed pair available: " + why) {}
};

enum class GameOutcome { AWins, BWins, Undecided };

struct GameState {
  std::vector<std::string> history;
  char to_move = 'B';
  std::size_t round = 0;
};

inline GameState game_state(std::vector<std::string> history) {
  GameState s;
  s.round = history.size();
  s.to_move = (s.round % 2 == 0) ? 'B' : 'A';
  s.history = std::move(history);
  return s;
}

// A strategy sees the tree and the moves so far and names the next node.
using Strategy = std::function<std::string(const TreeSpec&, const std::vector<std::string>&)>;

struct GameResult {
  GameOutcome outcome = GameOutcome::Undecided;
  std::vector<std::string> history;
  std::string certificate;
};

// Referee. B moves at even rounds. Every move must sit at or above the
// previous one. Explicit trees are adjudicated exactly: any nonempty play is
// a finite weakly increasing chain, so its last element is an upper bound
// and A wins. Generated trees defer to the chain oracle.
inline GameResult play_game(const TreeSpec& t, const Strategy& strat_a, const Strategy& strat_b,
                            std::size_t round_cap) {
  GameResult res;
  for (std::size_t n = 0; n < round_cap; ++n) {
    const Strategy& mover = (n % 2 == 0) ? strat_b : strat_a;
    std::string move = mover(t, res.history);
    if (t.kind == TreeSpec::Kind::Explicit && !has_node(t, move)) throw IllegalMove(move, n);
    if (!res.history.empty() && !tree_leq(t, res.history.back(), move))
      throw IllegalMove(move, n);
    res.history.push_back(move);
  }
  if (res.history.empty()) {
    res.certificate = "no rounds played";
    return res;
  }
  if (t.kind == TreeSpec::Kind::Explicit) {
    res.outcome = GameOutcome::AWins;
    res.certificate = "upper bound " + res.history.back();
    return res;
  }
  ChainRuling ruling =
      t.chain_oracle ? t.chain_oracle(res.history) : ChainRuling{ChainVerdict::Unknown, "no oracle"};
  switch (ruling.verdict) {
    case ChainVerdict::Bounded:
      res.outcome = GameOutcome::AWins;
      break;
    case ChainVerdict::Unbounded:
      res.outcome = GameOutcome::BWins;
      break;
    case ChainVerdict::Unknown:
      res.outcome = GameOutcome::Undecided;
      break;
  }
  res.certificate = ruling.certificate;
  return res;
}

// Repeats the last move, opening at the first root.
inline Strategy strategy_stay() {
  return [](const TreeSpec& t, const std::vector<std::string>& h) -> std::string {
    if (!h.empty()) return h.back();
    if (t.kind == TreeSpec::Kind::Generated) return t.roots.at(0);
    for (const auto& n : t.nodes)
      if (!t.parent.count(n)) return n;
    throw TreeInvariantError("no root to open at");
  };
}

// Takes the first child above the last move, staying put at a leaf.
inline Strategy strategy_climb() {
  return [](const TreeSpec& t, const std::vector<std::string>& h) -> std::string {
    if (h.empty()) {
      if (t.kind == TreeSpec::Kind::Generated) return t.roots.at(0);
      for (const auto& n : t.nodes)
        if (!t.parent.count(n)) return n;
      throw TreeInvariantError("no root to open at");
    }
    auto kids = successors(t, h.back());
    return kids.empty() ? h.back() : kids.front();
  };
}

// Plays a fixed script, staying put once it runs out.
inline Strategy strategy_script(std::vector<std::string> moves) {
  auto cursor = std::make_shared<std::size_t>(0);
  return [moves = std::move(moves), cursor](const TreeSpec&,
                                            const std::vector<std::string>& h) -> std::string {
    if (*cursor < moves.size()) return moves[(*cursor)++];
    if (!h.empty()) return h.back();
    throw TreeInvariantError("empty script with no move to repeat");
  };
}

namespace detail {

// Coordinates of a finite sequence with the terminal duplicate written out.
inline std::vector<Rational> game_coords(const ZSeq& z) {
  if (!z.blocks.empty())
    throw ValidationError("fixed-pair bookkeeping needs finitely enumerated sequences");
  std::vector<Rational> out = z.tail;
  if (z.terminal_repeat) out.push_back(out.back());
  return out;
}

inline Rational pow2_neg(std::size_t n) {
  Rational p(1);
  for (std::size_t i = 0; i < n; ++i) p /= 2;
  return p;
}

}  // namespace detail

// A pair (alpha, u) is fixed when every v in the wedge above u carries the
// same coordinates as u up to and including position alpha.
struct FixedPair {
  long long alpha = 0;
  std::string node;
};

// Largest alpha making (alpha, u) a fixed pair. Position zero is always
// fixed once the sequences are normalized to start at zero.
inline long long fixed_pair_ceiling(const TreeSpec& t,
                                    const std::map<std::string, ZSeq>& rho0,
                                    const std::string& u) {
  auto base = detail::game_coords(rho0.at(u));
  long long ceiling = static_cast<long long>(base.size()) - 1;
  for (const auto& v : wedge(t, u)) {
    auto other = detail::game_coords(rho0.at(v));
    long long common = -1;
    while (common + 1 < ceiling + 1 && common + 1 < static_cast<long long>(other.size()) &&
           other[common + 1] == base[common + 1])
      ++common;
    ceiling = common;
  }
  return ceiling;
}

inline bool is_fixed_pair(const TreeSpec& t, const std::map<std::string, ZSeq>& rho0,
                          long long alpha, const std::string& u) {
  return alpha >= 0 && alpha <= fixed_pair_ceiling(t, rho0, u);
}

struct FixedPairTrace {
  std::size_t n = 0;
  std::string from;
  std::string move;
  long long alpha = 0;
  Rational r;
};

struct FixedPairStrategy {
  Strategy play;
  std::shared_ptr<std::map<std::string, ZSeq>> rho0;
  std::shared_ptr<std::vector<FixedPairTrace>> trace;
};

// B's bookkeeping strategy. Opens at the first root with alpha_0 = 0. At
// each later turn it takes r_n as the exact maximum of rho(u)_alpha over
// fixed pairs anchored in the wedge above the last move, then plays a pair
// attaining it, preferring shallow nodes and small alpha. The attained value
// equals r_n, so the 2^{-n} slack rule holds with room to spare.
inline FixedPairStrategy strategy_fixed_pair(const TreeSpec& t,
                                             const std::map<std::string, ZSeq>& rho) {
  if (t.kind != TreeSpec::Kind::Explicit)
    throw TreeInvariantError("fixed-pair strategy needs an explicit tree");
  auto rho0 = std::make_shared<std::map<std::string, ZSeq>>();
  for (const auto& u : t.nodes) {
    auto it = rho.find(u);
    if (it == rho.end()) throw UnknownNode(u);
    (*rho0)[u] = to_z0(it->second);
  }
  for (const auto& u : t.nodes)
    for (const auto& v : wedge(t, u))
      if (z_compare(rho0->at(u), rho0->at(v)) == Cmp::Greater)
        throw ValidationError("rho decreases from " + u + " to " + v);

  auto ceilings = std::make_shared<std::map<std::string, long long>>();
  for (const auto& u : t.nodes) (*ceilings)[u] = fixed_pair_ceiling(t, *rho0, u);

  auto trace = std::make_shared<std::vector<FixedPairTrace>>();
  Strategy play = [tspec = t, rho0, ceilings, trace](const TreeSpec&,
                                                     const std::vector<std::string>& h) -> std::string {
    if (h.empty()) {
      std::string t0;
      for (const auto& n : tspec.nodes)
        if (!tspec.parent.count(n)) {
          t0 = n;
          break;
        }
      if (t0.empty()) throw NoFixedPair("tree has no root");
      trace->push_back({0, "", t0, 0, detail::game_coords(rho0->at(t0)).at(0)});
      return t0;
    }
    const std::string& last = h.back();
    std::vector<std::string> w = wedge(tspec, last);
    std::stable_sort(w.begin(), w.end(), [&](const std::string& a, const std::string& b) {
      return node_depth(tspec, a) < node_depth(tspec, b);
    });
    bool found = false;
    Rational best(0);
    FixedPair pick;
    for (const auto& u : w) {
      auto coords = detail::game_coords(rho0->at(u));
      for (long long a = 0; a <= ceilings->at(u); ++a) {
        if (!found || coords[a] > best) {
          found = true;
          best = coords[a];
          pick = {a, u};
        }
      }
    }
    if (!found) throw NoFixedPair("empty wedge above " + last);
    trace->push_back({trace->size(), last, pick.node, pick.alpha, best});
    return pick.node;
  };
  return {std::move(play), rho0, trace};
}

struct SlackAudit {
  bool ok = true;
  std::string why;
};

// Re-derives every r_n from the recorded anchor and checks the strict slack
// inequality exactly. Independent of the bookkeeping kept during play.
inline SlackAudit audit_fixed_pair(const TreeSpec& t, const FixedPairStrategy& s) {
  for (const auto& e : *s.trace) {
    if (e.n == 0) continue;
    bool any = false;
    Rational r(0);
    for (const auto& u : wedge(t, e.from)) {
      auto coords = detail::game_coords(s.rho0->at(u));
      long long ceil = fixed_pair_ceiling(t, *s.rho0, u);
      for (long long a = 0; a <= ceil; ++a)
        if (!any || coords[a] > r) {
          any = true;
          r = coords[a];
        }
    }
    if (!any) return {false, "no fixed pair above " + e.from};
    if (!is_fixed_pair(t, *s.rho0, e.alpha, e.move))
      return {false, "move " + std::to_string(e.n) + " is not a fixed pair"};
    Rational got = detail::game_coords(s.rho0->at(e.move)).at(e.alpha);
    if (!(got > r - detail::pow2_neg(e.n)))
      return {false, "slack rule fails at move " + std::to_string(e.n)};
  }
  return {};
}

struct WedgeWitness {
  std::optional<std::string> node;
  bool certified = false;
};

// Exhaustive search for a node whose whole wedge carries one value. Finite
// explicit trees always have one: a maximal node at worst. The shallowest
// witness is returned, so a two-plateau chain yields the least element of
// its terminal plateau. Generated trees stay undecided: a capped fragment
// cannot certify constancy beyond its horizon.
inline WedgeWitness constancy_wedge(const TreeSpec& t, const std::map<std::string, ZSeq>& rho) {
  if (t.kind != TreeSpec::Kind::Explicit) return {std::nullopt, false};
  std::optional<std::string> best;
  int best_depth = 0;
  for (const auto& u : t.nodes) {
    const ZSeq& at = rho.at(u);
    bool constant = true;
    for (const auto& v : wedge(t, u))
      if (!z_equal(at, rho.at(v))) {
        constant = false;
        break;
      }
    if (!constant) continue;
    int d = node_depth(t, u);
    if (!best || d < best_depth) {
      best = u;
      best_depth = d;
    }
  }
  return {best, best.has_value()};
}

}  // namespace renormlab

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "renormlab/rational.hpp"

namespace renormlab {

struct UnknownNode : std::runtime_error {
  explicit UnknownNode(const std::string& id) : std::runtime_error("unknown node: " + id) {}
};

struct SizeLimit : std::runtime_error {
  explicit SizeLimit(const std::string& what) : std::runtime_error(what) {}
};

struct TreeInvariantError : std::runtime_error {
  explicit TreeInvariantError(const std::string& what) : std::runtime_error(what) {}
};

// Verdict of a chain-boundedness oracle attached to a generated tree. Finite
// observation cannot certify unboundedness, so generators declare it.
enum class ChainVerdict { Bounded, Unbounded, Unknown };

struct ChainRuling {
  ChainVerdict verdict = ChainVerdict::Unknown;
  std::string certificate;
};

// A forest of nodes identified by strings. Explicit trees carry the full
// carrier and parent map. Generated trees carry roots plus oracles: a child
// generator, an order test, a chain-boundedness judge, and an attestation
// that every generated node keeps branching below the horizon.
struct TreeSpec {
  enum class Kind { Explicit, Generated };
  Kind kind = Kind::Explicit;

  std::vector<std::string> nodes;
  std::map<std::string, std::string> parent;

  std::vector<std::string> roots;
  std::function<std::vector<std::string>(const std::string&)> children_of;
  std::function<bool(const std::string&, const std::string&)> leq;
  std::function<ChainRuling(const std::vector<std::string>&)> chain_oracle;
  bool branching_attested = false;
};

inline TreeSpec tree_explicit(std::vector<std::string> nodes,
                              std::map<std::string, std::string> parent) {
  TreeSpec t;
  t.kind = TreeSpec::Kind::Explicit;
  t.nodes = std::move(nodes);
  t.parent = std::move(parent);
  return t;
}

inline TreeSpec tree_chain(const std::vector<std::string>& nodes) {
  std::map<std::string, std::string> parent;
  for (std::size_t i = 1; i < nodes.size(); ++i) parent[nodes[i]] = nodes[i - 1];
  return tree_explicit(nodes, std::move(parent));
}

inline TreeSpec tree_generated(std::vector<std::string> roots,
                               std::function<std::vector<std::string>(const std::string&)> children,
                               std::function<bool(const std::string&, const std::string&)> leq,
                               std::function<ChainRuling(const std::vector<std::string>&)> oracle,
                               bool branching_attested) {
  TreeSpec t;
  t.kind = TreeSpec::Kind::Generated;
  t.roots = std::move(roots);
  t.children_of = std::move(children);
  t.leq = std::move(leq);
  t.chain_oracle = std::move(oracle);
  t.branching_attested = branching_attested;
  return t;
}

// The chain 0 < 1 < 2 < ..., generated lazily. A transcript that keeps
// strictly climbing to the horizon is certified unbounded by the generator's
// tail rule; a transcript that eventually stalls is bounded by its maximum.
inline TreeSpec lazy_omega_chain() {
  auto children = [](const std::string& id) {
    return std::vector<std::string>{std::to_string(std::stoll(id) + 1)};
  };
  auto leq = [](const std::string& a, const std::string& b) {
    return std::stoll(a) <= std::stoll(b);
  };
  auto oracle = [](const std::vector<std::string>& chain) -> ChainRuling {
    if (chain.empty()) return {ChainVerdict::Unknown, "empty transcript"};
    bool climbing = true;
    for (std::size_t i = 1; i < chain.size(); ++i)
      if (std::stoll(chain[i]) <= std::stoll(chain[i - 1])) climbing = false;
    if (climbing && chain.size() >= 2)
      return {ChainVerdict::Unbounded,
              "strictly increasing ordinal chain; the generator has no upper bound"};
    return {ChainVerdict::Bounded, "chain stalls at " + chain.back()};
  };
  return tree_generated({"0"}, children, leq, oracle, false);
}

// The full binary tree over bit strings, generated lazily, with the
// generator attesting that every node branches forever.
inline TreeSpec lazy_binary_tree() {
  auto children = [](const std::string& id) {
    return std::vector<std::string>{id + "0", id + "1"};
  };
  auto leq = [](const std::string& a, const std::string& b) {
    return b.size() >= a.size() && b.compare(0, a.size(), a) == 0;
  };
  auto oracle = [](const std::vector<std::string>&) -> ChainRuling {
    return {ChainVerdict::Bounded, "every finite bit string extends"};
  };
  return tree_generated({""}, children, leq, oracle, true);
}

struct TreeCheck {
  bool ok = true;
  std::string why;
};

inline bool has_node(const TreeSpec& t, const std::string& id) {
  return std::find(t.nodes.begin(), t.nodes.end(), id) != t.nodes.end();
}

inline void require_node(const TreeSpec& t, const std::string& id) {
  if (!has_node(t, id)) throw UnknownNode(id);
}

// Explicit trees: every parent exists and the parent walk from any node
// terminates, so each predecessor set is a finite chain. The parent map also
// makes minimal upper bounds of chains unique.
inline TreeCheck tree_validate(const TreeSpec& t) {
  if (t.kind == TreeSpec::Kind::Generated) {
    if (t.roots.empty()) return {false, "generated tree without roots"};
    if (!t.children_of) return {false, "generated tree without a child generator"};
    return {true, ""};
  }
  std::set<std::string> carrier(t.nodes.begin(), t.nodes.end());
  if (carrier.size() != t.nodes.size()) return {false, "duplicate node id"};
  for (const auto& [child, par] : t.parent) {
    if (!carrier.count(child)) return {false, "parent entry for unknown node " + child};
    if (!carrier.count(par)) return {false, "unknown parent " + par + " of " + child};
  }
  for (const auto& id : t.nodes) {
    std::set<std::string> seen;
    std::string cur = id;
    while (true) {
      if (!seen.insert(cur).second) return {false, "parent cycle through " + cur};
      auto it = t.parent.find(cur);
      if (it == t.parent.end()) break;
      cur = it->second;
    }
  }
  return {true, ""};
}

// The interval (0,t]: all predecessors of t including t, listed root first.
inline std::vector<std::string> predecessors(const TreeSpec& t, const std::string& id) {
  require_node(t, id);
  std::vector<std::string> up;
  std::string cur = id;
  while (true) {
    up.push_back(cur);
    auto it = t.parent.find(cur);
    if (it == t.parent.end()) break;
    cur = it->second;
  }
  std::reverse(up.begin(), up.end());
  return up;
}

inline bool tree_leq(const TreeSpec& t, const std::string& a, const std::string& b) {
  if (t.kind == TreeSpec::Kind::Generated) {
    if (!t.leq) throw TreeInvariantError("generated tree without an order oracle");
    return t.leq(a, b);
  }
  auto up = predecessors(t, b);
  require_node(t, a);
  return std::find(up.begin(), up.end(), a) != up.end();
}

inline bool comparable(const TreeSpec& t, const std::string& a, const std::string& b) {
  return tree_leq(t, a, b) || tree_leq(t, b, a);
}

// The interval (s,t] = (0,t] \ (0,s].
inline std::vector<std::string> interval(const TreeSpec& t, const std::string& s,
                                         const std::string& u) {
  auto up = predecessors(t, u);
  auto cut = predecessors(t, s);
  std::set<std::string> drop(cut.begin(), cut.end());
  std::vector<std::string> out;
  for (const auto& n : up)
    if (!drop.count(n)) out.push_back(n);
  return out;
}

inline std::vector<std::string> successors(const TreeSpec& t, const std::string& id) {
  if (t.kind == TreeSpec::Kind::Generated) {
    if (!t.children_of) throw TreeInvariantError("generated tree without a child generator");
    return t.children_of(id);
  }
  require_node(t, id);
  std::vector<std::string> out;
  for (const auto& n : t.nodes) {
    auto it = t.parent.find(n);
    if (it != t.parent.end() && it->second == id) out.push_back(n);
  }
  return out;
}

// The restriction of the tree order to a subset of carriers: each kept node's
// parent becomes its nearest proper ancestor inside the subset.
inline TreeSpec induced_subtree(const TreeSpec& t, const std::set<std::string>& keep) {
  if (t.kind != TreeSpec::Kind::Explicit)
    throw TreeInvariantError("induced subtree needs an explicit tree");
  std::vector<std::string> nodes;
  std::map<std::string, std::string> parent;
  for (const auto& n : t.nodes) {
    if (!keep.count(n)) continue;
    nodes.push_back(n);
    std::string cur = n;
    while (true) {
      auto it = t.parent.find(cur);
      if (it == t.parent.end()) break;
      cur = it->second;
      if (keep.count(cur)) {
        parent[n] = cur;
        break;
      }
    }
  }
  for (const auto& k : keep) require_node(t, k);
  return tree_explicit(std::move(nodes), std::move(parent));
}

// The wedge [t,oo). Generated trees take a depth cap on the breadth-first
// expansion below t.
inline std::vector<std::string> wedge(const TreeSpec& t, const std::string& id,
                                      int depth_cap = -1) {
  if (t.kind == TreeSpec::Kind::Explicit) {
    require_node(t, id);
    std::vector<std::string> out;
    for (const auto& n : t.nodes)
      if (tree_leq(t, id, n)) out.push_back(n);
    return out;
  }
  if (depth_cap < 0) throw SizeLimit("wedge on a generated tree needs a depth cap");
  std::vector<std::string> out{id};
  std::vector<std::pair<std::string, int>> queue{{id, 0}};
  for (std::size_t i = 0; i < queue.size(); ++i) {
    auto [cur, d] = queue[i];
    if (d == depth_cap) continue;
    for (const auto& c : t.children_of(cur)) {
      out.push_back(c);
      queue.push_back({c, d + 1});
    }
  }
  return out;
}

// Truncation of a generated tree to a finite explicit prefix. The frontier
// records nodes whose children were left unexpanded.
struct Truncation {
  TreeSpec tree;
  std::set<std::string> frontier;
};

inline Truncation materialize(const TreeSpec& t, int depth_cap) {
  if (t.kind == TreeSpec::Kind::Explicit) return {t, {}};
  Truncation out;
  out.tree.kind = TreeSpec::Kind::Explicit;
  std::vector<std::pair<std::string, int>> queue;
  for (const auto& r : t.roots) {
    out.tree.nodes.push_back(r);
    queue.push_back({r, 0});
  }
  for (std::size_t i = 0; i < queue.size(); ++i) {
    auto [cur, d] = queue[i];
    if (d == depth_cap) {
      out.frontier.insert(cur);
      continue;
    }
    for (const auto& c : t.children_of(cur)) {
      out.tree.nodes.push_back(c);
      out.tree.parent[c] = cur;
      queue.push_back({c, d + 1});
    }
  }
  return out;
}

inline int node_depth(const TreeSpec& t, const std::string& id) {
  return static_cast<int>(predecessors(t, id).size()) - 1;
}

// Depth classes: two comparable nodes have nested predecessor sets of
// different sizes, so each class is an antichain and their union is the
// whole carrier.
inline std::vector<std::vector<std::string>> antichain_decomposition(const TreeSpec& t) {
  if (t.kind != TreeSpec::Kind::Explicit)
    throw TreeInvariantError("antichain decomposition needs an explicit tree");
  std::vector<std::vector<std::string>> levels;
  for (const auto& n : t.nodes) {
    auto d = static_cast<std::size_t>(node_depth(t, n));
    if (levels.size() <= d) levels.resize(d + 1);
    levels[d].push_back(n);
  }
  return levels;
}

// rho(t) = sum of 2^-enum(s) over s <= t. Strictly increasing on comparable
// pairs because predecessor sets nest strictly and all summands are positive.
inline std::map<std::string, Rational> q_embed(const TreeSpec& t,
                                               const std::map<std::string, long long>& enumeration) {
  if (t.kind != TreeSpec::Kind::Explicit)
    throw TreeInvariantError("q_embed needs an explicit tree");
  std::set<long long> used;
  for (const auto& n : t.nodes) {
    auto it = enumeration.find(n);
    if (it == enumeration.end()) throw TreeInvariantError("enumeration misses node " + n);
    if (it->second < 0) throw TreeInvariantError("enumeration value must be nonnegative");
    if (!used.insert(it->second).second)
      throw TreeInvariantError("enumeration is not injective at " + n);
  }
  std::map<std::string, Rational> rho;
  for (const auto& n : t.nodes) {
    Rational sum(0);
    for (const auto& s : predecessors(t, n))
      sum += Rational(1, BigInt(1) << enumeration.at(s));
    rho[n] = sum;
  }
  return rho;
}

namespace detail {

inline std::string seq_id(const std::vector<std::size_t>& picks,
                          const std::vector<std::string>& order) {
  std::string id = "(";
  for (std::size_t i = 0; i < picks.size(); ++i) {
    if (i) id += ",";
    id += order[picks[i]];
  }
  return id + ")";
}

}  // namespace detail

// The Kurepa tree over a finite linear order: all strictly increasing
// sequences under end-extension, with the empty sequence as root. Elements
// need not be bounded above in the order.
inline TreeSpec sigma_tree(const std::vector<std::string>& order, int depth_cap) {
  if (order.size() > 12) throw SizeLimit("sigma tree over more than 12 elements");
  if (depth_cap < 0) depth_cap = static_cast<int>(order.size());
  TreeSpec t;
  t.kind = TreeSpec::Kind::Explicit;
  std::vector<std::vector<std::size_t>> frontier{{}};
  t.nodes.push_back("()");
  for (int len = 1; len <= depth_cap; ++len) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& seq : frontier) {
      std::size_t lo = seq.empty() ? 0 : seq.back() + 1;
      for (std::size_t k = lo; k < order.size(); ++k) {
        auto ext = seq;
        ext.push_back(k);
        t.nodes.push_back(detail::seq_id(ext, order));
        t.parent[detail::seq_id(ext, order)] = detail::seq_id(seq, order);
        next.push_back(std::move(ext));
      }
    }
    frontier = std::move(next);
  }
  return t;
}

struct EmbedResult {
  bool yes = false;
  std::map<std::string, std::string> witness;
  long long assignments_tried = 0;
};

namespace detail {

inline bool embed_search(const TreeSpec& t, const std::vector<std::string>& order,
                         const std::vector<std::string>& todo, std::size_t at,
                         std::map<std::string, std::size_t>& assign, long long& tried,
                         long long budget) {
  if (at == todo.size()) return true;
  const std::string& n = todo[at];
  auto it = t.parent.find(n);
  std::size_t lo = 0;
  if (it != t.parent.end()) lo = assign.at(it->second) + 1;
  for (std::size_t v = lo; v < order.size(); ++v) {
    ++tried;
    if (tried > budget) throw SizeLimit("embedding search budget exhausted");
    assign[n] = v;
    if (embed_search(t, order, todo, at + 1, assign, tried, budget)) return true;
  }
  assign.erase(n);
  return false;
}

}  // namespace detail

// Backtracking search for a strictly increasing map into a finite linear
// order. A returned witness is re-verified on every comparable pair; a No
// answer means the search exhausted all assignments.
inline EmbedResult embeddable(const TreeSpec& t, const std::vector<std::string>& order) {
  if (t.kind != TreeSpec::Kind::Explicit)
    throw TreeInvariantError("embeddability search needs an explicit tree");
  if (order.size() > 12) throw SizeLimit("embedding target over more than 12 elements");
  if (t.nodes.size() > 4096) throw SizeLimit("embedding source over 4096 nodes");

  std::vector<std::string> todo = t.nodes;
  std::stable_sort(todo.begin(), todo.end(), [&](const auto& a, const auto& b) {
    return node_depth(t, a) < node_depth(t, b);
  });
  std::map<std::string, std::size_t> assign;
  EmbedResult res;
  if (!detail::embed_search(t, order, todo, 0, assign, res.assignments_tried, 100000000))
    return res;

  res.yes = true;
  for (const auto& [n, v] : assign) res.witness[n] = order[v];
  for (const auto& a : t.nodes)
    for (const auto& b : t.nodes)
      if (a != b && tree_leq(t, a, b) && assign.at(a) >= assign.at(b))
        throw TreeInvariantError("embedding witness fails on " + a + " < " + b);
  return res;
}

// Finite surrogate of the gap example: sigma(L_k) x {0..kappa-1}, where
// (A,a) <= (B,b) iff A = B and a <= b, or A precedes B and a is at most the
// rank, under the supplied well-order, of B's first new element among the
// upper bounds of A. Successor counts are reported under the rule's
// unbounded semantics: one more node up the spine always exists, and a fresh
// branch exists exactly when A has an upper bound.
struct PsiFragment {
  TreeSpec tree;
  std::map<std::string, int> rule_successor_count;
};

inline PsiFragment psi_fragment(int k, int kappa, const std::vector<int>& wellorder) {
  if (k < 1 || k > 6) throw SizeLimit("psi surrogate needs 1 <= k <= 6");
  if (kappa < 1 || kappa > 8) throw SizeLimit("psi surrogate needs 1 <= kappa <= 8");
  if (wellorder.size() != static_cast<std::size_t>(k))
    throw TreeInvariantError("well-order must permute 0..k-1");
  std::vector<int> rank(k, -1);
  for (int i = 0; i < k; ++i) {
    int v = wellorder[static_cast<std::size_t>(i)];
    if (v < 0 || v >= k || rank[static_cast<std::size_t>(v)] != -1)
      throw TreeInvariantError("well-order must permute 0..k-1");
    rank[static_cast<std::size_t>(v)] = i;
  }

  auto set_id = [](const std::vector<int>& a) {
    std::string s = "(";
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(a[i]);
    }
    return s + ")";
  };
  auto node_id = [&](const std::vector<int>& a, int alpha) {
    return set_id(a) + ":" + std::to_string(alpha);
  };
  auto upper = [&](const std::vector<int>& a) {
    std::vector<int> u;
    int top = a.empty() ? -1 : a.back();
    for (int v = top + 1; v < k; ++v) u.push_back(v);
    return u;
  };
  auto rank_alpha_element = [&](const std::vector<int>& a, int alpha) -> std::optional<int> {
    for (int v : upper(a)) {
      int below = 0;
      for (int w : upper(a))
        if (rank[static_cast<std::size_t>(w)] < rank[static_cast<std::size_t>(v)]) ++below;
      if (below == alpha) return v;
    }
    return std::nullopt;
  };

  PsiFragment out;
  out.tree.kind = TreeSpec::Kind::Explicit;
  struct Item {
    std::vector<int> set;
    int alpha;
  };
  std::vector<Item> queue{{{}, 0}};
  out.tree.nodes.push_back(node_id({}, 0));
  out.rule_successor_count[node_id({}, 0)] = upper({}).empty() ? 1 : 2;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    Item cur = queue[i];
    std::string cid = node_id(cur.set, cur.alpha);
    auto push = [&](Item child) {
      std::string id = node_id(child.set, child.alpha);
      out.tree.nodes.push_back(id);
      out.tree.parent[id] = cid;
      out.rule_successor_count[id] = upper(child.set).empty() ? 1 : 2;
      queue.push_back(std::move(child));
    };
    if (cur.alpha + 1 < kappa) push({cur.set, cur.alpha + 1});
    if (auto y = rank_alpha_element(cur.set, cur.alpha)) {
      auto ext = cur.set;
      ext.push_back(*y);
      push({std::move(ext), 0});
    }
    if (out.tree.nodes.size() > 4096) throw SizeLimit("psi surrogate over 4096 nodes");
  }
  return out;
}

// Greatest subset of E in which every element has two incomparable strict
// successors inside the subset, computed by iterated deletion. Finite
// explicit sets always empty out; a generated tree with an attested
// branching tail keeps its generated nodes.
inline std::set<std::string> ever_branching_core(const TreeSpec& t,
                                                 const std::set<std::string>& e) {
  if (t.kind == TreeSpec::Kind::Generated) {
    if (t.branching_attested) return e;
    return {};
  }
  std::set<std::string> core = e;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = core.begin(); it != core.end();) {
      const std::string& u = *it;
      std::vector<std::string> above;
      for (const auto& v : core)
        if (v != u && tree_leq(t, u, v)) above.push_back(v);
      bool branching = false;
      for (std::size_t i = 0; i < above.size() && !branching; ++i)
        for (std::size_t j = i + 1; j < above.size() && !branching; ++j)
          if (!comparable(t, above[i], above[j])) branching = true;
      if (!branching) {
        it = core.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  return core;
}

// Depth-d dyadic subtree extracted from an attested ever-branching
// generator: one minimal element, every node keeping exactly two immediate
// successors.
inline std::optional<TreeSpec> dyadic_subtree(const TreeSpec& t, int depth) {
  if (t.kind != TreeSpec::Kind::Generated || !t.branching_attested) return std::nullopt;
  TreeSpec out;
  out.kind = TreeSpec::Kind::Explicit;
  std::vector<std::pair<std::string, int>> queue{{t.roots.front(), 0}};
  out.nodes.push_back(t.roots.front());
  for (std::size_t i = 0; i < queue.size(); ++i) {
    auto [cur, d] = queue[i];
    if (d == depth) continue;
    auto kids = t.children_of(cur);
    if (kids.size() < 2) return std::nullopt;
    for (std::size_t j = 0; j < 2; ++j) {
      out.nodes.push_back(kids[j]);
      out.parent[kids[j]] = cur;
      queue.push_back({kids[j], d + 1});
    }
  }
  return out;
}

}  // namespace renormlab

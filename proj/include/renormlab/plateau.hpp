#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "renormlab/rational.hpp"
#include "renormlab/tree.hpp"

namespace renormlab {

struct NotIncreasing : std::runtime_error {
  std::string below, above;
  NotIncreasing(std::string b, std::string a)
      : std::runtime_error("map decreases from " + b + " to " + a),
        below(std::move(b)),
        above(std::move(a)) {}
};

struct EmptyIntersection : std::runtime_error {
  EmptyIntersection() : std::runtime_error("plateau intersection is empty") {}
};

struct NonChainPlateau : std::runtime_error {
  std::string left, right;
  NonChainPlateau(std::string l, std::string r)
      : std::runtime_error("plateau holds incomparable nodes " + l + " and " + r),
        left(std::move(l)),
        right(std::move(r)) {}
};

// A set with a least element 0_V equal to the union of the intervals
// [0_V, t] over its members.
struct Plateau {
  std::string least;
  std::set<std::string> members;
};

struct PlateauPartition {
  std::vector<Plateau> plateaux;
  std::set<std::string> least_elements;
};

inline TreeCheck plateau_ok(const TreeSpec& t, const Plateau& p) {
  if (!p.members.count(p.least)) return {false, "least element missing from members"};
  for (const auto& m : p.members) {
    if (!tree_leq(t, p.least, m)) return {false, "member " + m + " not above the least element"};
    for (const auto& s : interval(t, p.least, m))
      if (!p.members.count(s)) return {false, "gap at " + s + " below " + m};
  }
  return {true, ""};
}

// Classes of the relation s ~ t iff some r below both satisfies
// rho(r) = rho(s) = rho(t). For an increasing rho the class of a node is
// determined by the highest ancestor still carrying the node's value, so
// classes are keyed by that representative.
template <typename V, typename Eq, typename Less>
PlateauPartition plateau_partition_by(const TreeSpec& t, const std::map<std::string, V>& rho,
                                      Eq equal, Less less) {
  if (t.kind != TreeSpec::Kind::Explicit)
    throw TreeInvariantError("plateau partition needs an explicit tree");
  for (const auto& n : t.nodes)
    if (!rho.count(n)) throw TreeInvariantError("map misses node " + n);
  for (const auto& [child, par] : t.parent)
    if (less(rho.at(child), rho.at(par))) throw NotIncreasing(par, child);

  auto representative = [&](const std::string& n) {
    std::string cur = n;
    while (true) {
      auto it = t.parent.find(cur);
      if (it == t.parent.end() || !equal(rho.at(it->second), rho.at(n))) break;
      cur = it->second;
    }
    return cur;
  };

  PlateauPartition out;
  std::map<std::string, std::size_t> index;
  for (const auto& n : t.nodes) {
    std::string r = representative(n);
    auto it = index.find(r);
    if (it == index.end()) {
      index[r] = out.plateaux.size();
      out.plateaux.push_back({r, {}});
      out.least_elements.insert(r);
    }
    out.plateaux[index.at(r)].members.insert(n);
  }
  return out;
}

inline PlateauPartition plateau_partition(const TreeSpec& t,
                                          const std::map<std::string, Rational>& rho) {
  return plateau_partition_by(
      t, rho, [](const Rational& a, const Rational& b) { return a == b; },
      [](const Rational& a, const Rational& b) { return a < b; });
}

inline PlateauPartition plateau_partition_num(const TreeSpec& t,
                                              const std::map<std::string, double>& rho,
                                              double tol) {
  return plateau_partition_by(
      t, rho, [tol](double a, double b) { return std::fabs(a - b) <= tol; },
      [tol](double a, double b) { return a < b - tol; });
}

inline const Plateau& plateau_of(const PlateauPartition& p, const std::string& node) {
  for (const auto& v : p.plateaux)
    if (v.members.count(node)) return v;
  throw UnknownNode(node);
}

// Intersection of plateaux is a plateau whose least element is the sup of
// the input least elements; they are pairwise comparable because all precede
// any common member.
inline Plateau plateau_intersect(const TreeSpec& t, const std::vector<Plateau>& vs) {
  if (vs.empty()) throw TreeInvariantError("intersection of an empty plateau list");
  std::set<std::string> common = vs.front().members;
  for (std::size_t i = 1; i < vs.size(); ++i) {
    std::set<std::string> next;
    std::set_intersection(common.begin(), common.end(), vs[i].members.begin(),
                          vs[i].members.end(), std::inserter(next, next.begin()));
    common = std::move(next);
  }
  if (common.empty()) throw EmptyIntersection();

  std::string least = vs.front().least;
  for (const auto& v : vs) {
    if (tree_leq(t, least, v.least)) {
      least = v.least;
    } else if (!tree_leq(t, v.least, least)) {
      throw TreeInvariantError("least elements " + least + " and " + v.least +
                               " are incomparable; inputs are not plateaux over one tree");
    }
  }
  Plateau out{least, std::move(common)};
  TreeCheck c = plateau_ok(t, out);
  if (!c.ok) throw TreeInvariantError("intersection is not a plateau: " + c.why);
  return out;
}

}  // namespace renormlab

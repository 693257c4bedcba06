#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "renormlab/asym.hpp"
#include "renormlab/expr.hpp"
#include "renormlab/plateau.hpp"
#include "renormlab/tree.hpp"
#include "renormlab/zfamily.hpp"
#include "renormlab/zseq.hpp"

namespace renormlab {

struct PreconditionFailure : std::runtime_error {
  std::string witness;
  PreconditionFailure(const std::string& what, std::string w)
      : std::runtime_error(what + " (witness: " + w + ")"), witness(std::move(w)) {}
};

// Declared successor family with rational values: finitely many materialized
// children plus a closed-form value for the n-th virtual successor.
struct RatSuccessorFamily {
  std::string node;
  std::vector<std::string> members;
  ExprPtr tail;
  long long n_start = 1;
};

// Same with Z-valued successors, the virtual values given as a ZFamily.
struct ZSuccessorFamily {
  std::string node;
  std::vector<std::string> members;
  ZFamily tail;
};

struct BadPointCert {
  std::string node;
  std::string certificate;
  int case_id = 0;
};

inline void check_rat_increasing(const TreeSpec& t, const std::map<std::string, Rational>& rho) {
  for (const auto& n : t.nodes)
    if (!rho.count(n)) throw TreeInvariantError("map misses node " + n);
  for (const auto& [child, par] : t.parent)
    if (rho.at(child) < rho.at(par)) throw NotIncreasing(par, child);
}

inline void check_z_increasing(const TreeSpec& t, const std::map<std::string, ZSeq>& rho,
                               bool strict) {
  for (const auto& n : t.nodes)
    if (!rho.count(n)) throw TreeInvariantError("map misses node " + n);
  for (const auto& [child, par] : t.parent) {
    Cmp c = z_compare(rho.at(par), rho.at(child));
    if (c == Cmp::Greater || (strict && c == Cmp::Equal)) throw NotIncreasing(par, child);
  }
}

inline PlateauPartition plateau_partition_z(const TreeSpec& t,
                                            const std::map<std::string, ZSeq>& rho) {
  return plateau_partition_by(
      t, rho, [](const ZSeq& a, const ZSeq& b) { return z_equal(a, b); },
      [](const ZSeq& a, const ZSeq& b) { return z_less(a, b); });
}

inline std::vector<ZSeq> family_sample(const ZFamily& f, int count) {
  long long hi = f.n_start + count - 1;
  if (f.kind == ZFamily::Kind::FiniteList)
    hi = std::min(hi, f.n_start + static_cast<long long>(f.items.size()) - 1);
  std::vector<ZSeq> out;
  for (long long n = f.n_start; n <= hi; ++n) out.push_back(family_member(f, n));
  return out;
}

namespace detail {

inline void check_family_members(const TreeSpec& t, const std::string& node,
                                 const std::vector<std::string>& members) {
  require_node(t, node);
  std::set<std::string> seen;
  for (const auto& m : members) {
    if (!seen.insert(m).second) throw TreeInvariantError("family member " + m + " repeats");
    auto it = t.parent.find(m);
    if (it == t.parent.end() || it->second != node)
      throw TreeInvariantError("family member " + m + " is not an immediate successor of " + node);
  }
}

}  // namespace detail

// A node is flagged iff a declared family's values converge to the node's
// own value. Finite families carry no tail, so they never flag; a tree
// without families has no infinite successor sequences at all.
inline std::vector<BadPointCert> detect_bad_points(const TreeSpec& t,
                                                   const std::map<std::string, Rational>& rho,
                                                   const std::vector<RatSuccessorFamily>& families) {
  check_rat_increasing(t, rho);
  std::vector<BadPointCert> out;
  for (const auto& f : families) {
    detail::check_family_members(t, f.node, f.members);
    if (!f.tail) continue;
    const Rational& at = rho.at(f.node);
    for (long long n = f.n_start; n < f.n_start + 4; ++n)
      if (eval(f.tail, n) < at) throw NotIncreasing(f.node, "virtual successor " + std::to_string(n));
    asym::LimitVal lv = asym::limit(asym::canonicalize(f.tail));
    if (lv.kind == asym::LimitVal::Kind::MinusInf ||
        (lv.kind == asym::LimitVal::Kind::Finite && lv.value < at))
      throw NotIncreasing(f.node, "virtual successor tail");
    if (lv.kind == asym::LimitVal::Kind::Finite && lv.value == at)
      out.push_back({f.node, "successor values converge to " + rat_to_string(at), 0});
  }
  return out;
}

// Z-valued version, classified through the convergence rules. A family whose
// members all equal the node's value is flagged directly: infinitely many
// successors sharing the value is the degenerate route to a bad point.
inline std::vector<BadPointCert> detect_zbad_points(const TreeSpec& t,
                                                    const std::map<std::string, ZSeq>& rho,
                                                    const std::vector<ZSuccessorFamily>& families) {
  check_z_increasing(t, rho, false);
  std::vector<BadPointCert> out;
  for (const auto& f : families) {
    detail::check_family_members(t, f.node, f.members);
    if (f.tail.kind == ZFamily::Kind::FiniteList) continue;
    const ZSeq& x = rho.at(f.node);
    std::vector<ZSeq> samples = family_sample(f.tail, 4);
    bool shared = !samples.empty();
    for (const auto& s : samples)
      if (!z_equal(s, x)) {
        shared = false;
        break;
      }
    if (shared) {
      out.push_back({f.node, "infinitely many declared successors share the node's value", 1});
      continue;
    }
    ConvergenceResult r;
    try {
      r = z_converges(x, f.tail);
    } catch (const MalformedFamily& e) {
      std::string why = e.what();
      if (why.find("equal the target") != std::string::npos) {
        out.push_back({f.node, "infinitely many declared successors share the node's value", 1});
        continue;
      }
      throw NotIncreasing(f.node, "declared successors (" + why + ")");
    }
    if (r.yes) out.push_back({f.node, r.detail, r.case_id});
  }
  return out;
}

// Separation of the product map: pi = nu * tau is strictly increasing when
// tau is, and inherits freedom from bad points from nu. Each node then picks
// a plain value strictly between pi(t) and the infimum cap over successors:
// materialized ones contribute pi(u) directly; a declared family contributes
// separate(nu(t)) * tau(t), which sits strictly between pi(t) and every
// virtual pi(u_n) by order-respect of the product.
inline std::map<std::string, ZSeq> strictify(const TreeSpec& t,
                                             const std::map<std::string, ZSeq>& nu,
                                             const std::map<std::string, ZSeq>& tau,
                                             const std::vector<ZSuccessorFamily>& families) {
  check_z_increasing(t, nu, false);
  check_z_increasing(t, tau, true);
  std::vector<BadPointCert> bad = detect_zbad_points(t, nu, families);
  if (!bad.empty())
    throw PreconditionFailure("first map has a bad point",
                              bad.front().node + ": " + bad.front().certificate);

  std::map<std::string, ZSeq> pi;
  for (const auto& n : t.nodes) pi.emplace(n, z_product(nu.at(n), tau.at(n)));

  std::map<std::string, std::vector<const ZSuccessorFamily*>> fams_at;
  for (const auto& f : families) fams_at[f.node].push_back(&f);

  std::map<std::string, ZSeq> rho;
  for (const auto& n : t.nodes) {
    std::vector<ZSeq> caps;
    for (const auto& u : successors(t, n)) caps.push_back(pi.at(u));
    auto fit = fams_at.find(n);
    if (fit != fams_at.end())
      for (const ZSuccessorFamily* f : fit->second)
        caps.push_back(z_product(z_separate(nu.at(n), f->tail), tau.at(n)));
    if (caps.empty())
      caps.push_back(zseq_finite({*z_value_at(pi.at(n), Ordinal::finite(0)) - 1}));
    ZSeq cap = caps.front();
    for (const auto& c : caps)
      if (z_less(c, cap)) cap = c;
    rho.emplace(n, y_between(pi.at(n), cap));
  }

  for (const auto& n : t.nodes) {
    if (rho.at(n).terminal_repeat) throw TreeInvariantError("pick at " + n + " is not plain");
    ValidationReport r = z_validate(rho.at(n));
    if (!r.ok) throw TreeInvariantError("pick at " + n + " is invalid: " + r.clause);
  }
  for (const auto& [child, par] : t.parent)
    if (z_compare(rho.at(par), rho.at(child)) != Cmp::Less)
      throw TreeInvariantError("result fails to increase from " + par + " to " + child);
  return rho;
}

// Pairs each value with a per-plateau rank, defined when every plateau is a
// chain; the paired map is strictly increasing lexicographically.
inline std::map<std::string, std::pair<ZSeq, Rational>> chain_refine(
    const TreeSpec& t, const std::map<std::string, ZSeq>& pi) {
  PlateauPartition p = plateau_partition_z(t, pi);
  std::map<std::string, std::pair<ZSeq, Rational>> out;
  for (const auto& v : p.plateaux) {
    for (const auto& a : v.members)
      for (const auto& b : v.members)
        if (a < b && !comparable(t, a, b)) throw NonChainPlateau(a, b);
    std::vector<std::string> chain(v.members.begin(), v.members.end());
    std::sort(chain.begin(), chain.end(), [&](const std::string& a, const std::string& b) {
      return node_depth(t, a) < node_depth(t, b);
    });
    for (std::size_t i = 0; i < chain.size(); ++i)
      out.emplace(chain[i], std::make_pair(pi.at(chain[i]), Rational(static_cast<int>(i))));
  }
  return out;
}

}  // namespace renormlab

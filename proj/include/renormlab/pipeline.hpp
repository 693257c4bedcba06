#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "renormlab/norm.hpp"
#include "renormlab/plateau.hpp"
#include "renormlab/rational.hpp"
#include "renormlab/tree.hpp"
#include "renormlab/treemaps.hpp"
#include "renormlab/zseq.hpp"

namespace renormlab {

// Finite numeric counterpart of a transfinite value sequence; `repeat` marks
// a duplicated final value.
struct NumSeq {
  std::vector<double> values;
  bool repeat = false;
};

inline std::vector<double> numseq_full(const NumSeq& s) {
  auto v = s.values;
  if (s.repeat) {
    if (v.empty()) throw std::logic_error("repeat flag on an empty sequence");
    v.push_back(v.back());
  }
  return v;
}

// Same order as on the exact sequences: a strict extension is larger, and at
// the first coordinate difference the smaller value wins.
inline Cmp numseq_compare(const NumSeq& a, const NumSeq& b, double tol = 1e-9) {
  auto fa = numseq_full(a), fb = numseq_full(b);
  std::size_t n = std::min(fa.size(), fb.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (fa[i] < fb[i] - tol) return Cmp::Greater;
    if (fb[i] < fa[i] - tol) return Cmp::Less;
  }
  if (fa.size() == fb.size()) return Cmp::Equal;
  return fa.size() < fb.size() ? Cmp::Less : Cmp::Greater;
}

inline NumSeq numseq_phi(const NumSeq& s) {
  auto f = numseq_full(s);
  NumSeq r;
  r.values.resize(f.size());
  r.values[0] = 2 * f[0];
  for (std::size_t i = 1; i < f.size(); ++i) r.values[i] = f[i] + f[i - 1] + 1;
  return r;
}

namespace detail {

struct ExactPolicy {
  using V = Rational;
  using F = CtFunction;
  using Seq = ZSeq;

  const TreeSpec& t;
  const NormModel& norm;
  Rational eps;

  V mu_point(const std::string& u) const {
    return mu_eval(t, norm, ct_indicator(t, u), Rational(0), u).exact_value;
  }
  V mu_of(const F& f, const std::string& u) const {
    return mu_eval(t, norm, f, Rational(0), u).exact_value;
  }
  V lambda_of(const Plateau& v, const F& f, const std::string& u) const {
    return lambda_eval(t, norm, eps, v, f, u).exact_value;
  }
  F indicator(const std::string& u) const { return ct_indicator(t, u); }
  F extend(const F& f, const V& bump, const std::string& to) const {
    F g = f;
    for (const auto& n : interval(t, f.node, to)) g.values[n] = bump;
    g.node = to;
    return g;
  }
  V fval(const F& f, const std::string& u) const { return f.values.at(u); }
  V fsup(const F& f) const { return ct_sup(f); }
  V negate(const V& x) const { return -x; }
  V abs_diff(const V& a, const V& b) const { return rat_abs(a - b); }
  V cond2_excess(const V& base, const V& sup) const {
    return (base - 1) - eps / 2 * (sup - 1);
  }
  V step(const V& cur, const V& lam) const { return cur + eps / 2 * lam; }
  bool is_zero(const V& x) const { return x == 0; }
  bool near(const V& a, const V& b) const { return a == b; }
  bool cond1_ok(const V& r) const { return r == 0; }
  bool cond2_ok(const V& r) const { return r <= 0; }
  bool sup_ok(const V& s) const { return s <= 2 / eps - 1; }
  PlateauPartition base_partition(const std::map<std::string, V>& m) const {
    return plateau_partition(t, m);
  }
  PlateauPartition lambda_partition(const TreeSpec& sub, const std::map<std::string, V>& m) const {
    return plateau_partition_by(
        sub, m, [](const V& a, const V& b) { return a == b; },
        [](const V& a, const V& b) { return a > b; });
  }
  Seq make_seq(const std::vector<V>& coords, bool repeat) const {
    ZSeq z = zseq_finite(coords, repeat);
    auto rep = z_validate(z);
    if (!rep.ok) throw ToleranceBreach("assembled sequence is invalid: " + rep.detail);
    return z;
  }
  std::vector<V> seq_coords(const Seq& s) const { return s.tail; }
  Cmp seq_compare(const Seq& a, const Seq& b) const { return z_compare(a, b); }
  bool seq_plain(const Seq& s) const { return !s.terminal_repeat; }
  double report(const V& x) const { return to_double(x); }
};

struct NumPolicy {
  using V = double;
  using F = CtFunctionNum;
  using Seq = NumSeq;

  const TreeSpec& t;
  const NormModel& norm;
  Rational eps_q;
  double eps;
  double tol_plateau;
  double tol_cond;

  V mu_point(const std::string& u) const { return mu_of(indicator(u), u); }
  V mu_of(const F& f, const std::string& u) const { return mu_eval_num(t, norm, f, 0, u); }
  V lambda_of(const Plateau& v, const F& f, const std::string& u) const {
    return lambda_eval_num(t, norm, eps, v, f, u, tol_plateau);
  }
  F indicator(const std::string& u) const {
    F f;
    f.node = u;
    for (const auto& n : predecessors(t, u)) f.values[n] = 1.0;
    return f;
  }
  F extend(const F& f, V bump, const std::string& to) const {
    F g = f;
    for (const auto& n : interval(t, f.node, to)) g.values[n] = bump;
    g.node = to;
    return g;
  }
  V fval(const F& f, const std::string& u) const { return f.values.at(u); }
  V fsup(const F& f) const { return ct_sup(f); }
  V negate(V x) const { return -x; }
  V abs_diff(V a, V b) const { return std::fabs(a - b); }
  V cond2_excess(V base, V sup) const { return (base - 1) - eps / 2 * (sup - 1); }
  V step(V cur, V lam) const { return cur + eps / 2 * lam; }
  bool is_zero(V x) const { return x <= tol_plateau; }
  bool near(V a, V b) const { return std::fabs(a - b) <= tol_cond; }
  bool cond1_ok(V r) const { return r <= tol_cond; }
  bool cond2_ok(V r) const { return r <= tol_cond; }
  bool sup_ok(V s) const { return s <= 2 / eps - 1 + tol_cond; }
  PlateauPartition base_partition(const std::map<std::string, V>& m) const {
    return plateau_partition_num(t, m, tol_plateau);
  }
  PlateauPartition lambda_partition(const TreeSpec& sub, const std::map<std::string, V>& m) const {
    double tp = tol_plateau;
    return plateau_partition_by(
        sub, m, [tp](V a, V b) { return std::fabs(a - b) <= tp; },
        [tp](V a, V b) { return a > b + tp; });
  }
  Seq make_seq(const std::vector<V>& coords, bool repeat) const {
    for (std::size_t i = 1; i < coords.size(); ++i)
      if (coords[i] <= coords[i - 1])
        throw ToleranceBreach("assembled sequence is not strictly increasing");
    return NumSeq{coords, repeat};
  }
  std::vector<V> seq_coords(const Seq& s) const { return s.values; }
  Cmp seq_compare(const Seq& a, const Seq& b) const { return numseq_compare(a, b, tol_cond); }
  bool seq_plain(const Seq& s) const { return !s.repeat; }
  double report(V x) const { return x; }
};

}  // namespace detail

template <typename P>
struct PipelineLevelT {
  PlateauPartition partition;
  std::map<std::string, typename P::F> f;
  std::map<std::string, typename P::V> mu;
  std::map<std::string, typename P::V> lambda;
  typename P::V cond1{};
  typename P::V cond2{};
  typename P::V fsup{};
};

template <typename P>
struct PipelineLedgerT {
  Rational epsilon;
  std::map<std::string, typename P::V> mu_t;
  std::vector<PipelineLevelT<P>> levels;
  std::map<std::string, typename P::Seq> pi;
};

using PipelineLedger = PipelineLedgerT<detail::ExactPolicy>;
using NumPipelineLedger = PipelineLedgerT<detail::NumPolicy>;

namespace detail {

// The recursion: partition by mu, then repeatedly peel each plateau's least
// element off and split the rest along the lambda-function, extending f
// across the connecting interval. On a finite tree every class is a
// singleton after at most |nodes| rounds.
template <typename P>
PipelineLedgerT<P> run_pipeline(const P& pol, const TreeSpec& t, const Rational& eps) {
  using V = typename P::V;
  using F = typename P::F;

  if (t.kind != TreeSpec::Kind::Explicit)
    throw TreeInvariantError("the renorming pipeline needs an explicit finite tree");
  auto tc = tree_validate(t);
  if (!tc.ok) throw TreeInvariantError(tc.why);
  auto sc = norm_spot_check(pol.norm, t.nodes);
  if (!sc.ok) throw SandwichViolation(sc.why);

  PipelineLedgerT<P> led;
  led.epsilon = eps;
  for (const auto& u : t.nodes) led.mu_t[u] = pol.mu_point(u);

  PlateauPartition part = pol.base_partition(led.mu_t);
  std::map<std::string, F> fs;
  for (const auto& pl : part.plateaux) fs[pl.least] = pol.indicator(pl.least);

  const std::size_t cap = t.nodes.size() + 2;
  for (std::size_t level = 0; level < cap; ++level) {
    PipelineLevelT<P> data;
    data.partition = part;
    data.f = fs;

    bool first_excess = true;
    for (const auto& pl : part.plateaux) {
      const F& f = fs.at(pl.least);
      V base = pol.mu_of(f, pl.least);
      V sup = pol.fsup(f);
      if (sup > data.fsup) data.fsup = sup;
      for (const auto& u : pl.members) {
        V m = pol.mu_of(f, u);
        data.mu[u] = m;
        V d = pol.abs_diff(m, base);
        if (d > data.cond1) data.cond1 = d;
      }
      V excess = pol.cond2_excess(base, sup);
      if (first_excess || excess > data.cond2) {
        data.cond2 = excess;
        first_excess = false;
      }
      if (pl.members.size() > 1)
        for (const auto& u : pl.members)
          if (u != pl.least) data.lambda[u] = pol.lambda_of(pl, f, u);
    }
    if (!pol.cond1_ok(data.cond1))
      throw ToleranceBreach("mu is not constant on a plateau at level " + std::to_string(level));
    if (!pol.cond2_ok(data.cond2))
      throw ToleranceBreach("the norm excess bound fails at level " + std::to_string(level));
    if (!pol.sup_ok(data.fsup))
      throw ToleranceBreach("||f|| escapes 2/eps - 1 at level " + std::to_string(level));

    led.levels.push_back(std::move(data));
    const PipelineLevelT<P>& rec = led.levels.back();

    bool all_single = true;
    for (const auto& pl : part.plateaux)
      if (pl.members.size() > 1) {
        all_single = false;
        break;
      }
    if (all_single) break;

    PlateauPartition next;
    std::map<std::string, F> next_fs;
    for (const auto& pl : part.plateaux) {
      const F& f = fs.at(pl.least);
      if (pl.members.size() == 1) {
        next.plateaux.push_back(pl);
        next_fs[pl.least] = f;
        continue;
      }
      next.plateaux.push_back(Plateau{pl.least, {pl.least}});
      next_fs[pl.least] = f;
      std::set<std::string> rest = pl.members;
      rest.erase(pl.least);
      TreeSpec sub = induced_subtree(t, rest);
      std::map<std::string, V> lam;
      for (const auto& u : rest) lam[u] = rec.lambda.at(u);
      for (const auto& w : pol.lambda_partition(sub, lam).plateaux) {
        next.plateaux.push_back(w);
        V bump = pol.fval(f, pl.least) + lam.at(w.least);
        next_fs[w.least] = pol.extend(f, bump, w.least);
      }
    }
    for (const auto& pl : next.plateaux) next.least_elements.insert(pl.least);
    part = std::move(next);
    fs = std::move(next_fs);
  }

  for (const auto& pl : led.levels.back().partition.plateaux)
    if (pl.members.size() > 1)
      throw TreeInvariantError("plateau recursion failed to stabilize");

  const std::size_t top = led.levels.size() - 1;
  for (const auto& u : t.nodes) {
    std::vector<V> coords{pol.negate(led.mu_t.at(u))};
    bool repeat = false;
    for (std::size_t b = 0; b < top; ++b) {
      if (plateau_of(led.levels[b].partition, u).least == u) break;
      V lam = led.levels[b].lambda.at(u);
      V next = led.levels[b + 1].mu.at(u);
      if (pol.is_zero(lam)) {
        if (b == 0) {
          coords.push_back(next);
        } else {
          if (!pol.near(next, coords.back()))
            throw ToleranceBreach("vanishing step fails to duplicate the value at " + u);
          repeat = true;
        }
        break;
      }
      coords.push_back(next);
    }
    led.pi[u] = pol.make_seq(coords, repeat);
  }
  return led;
}

}  // namespace detail

inline PipelineLedger build_pi(const TreeSpec& t, const NormModel& norm, const Rational& eps) {
  if (!norm_is_exact(norm))
    throw std::logic_error("the exact pipeline needs a sup-kind norm");
  detail::ExactPolicy pol{t, norm, eps};
  return detail::run_pipeline(pol, t, eps);
}

inline NumPipelineLedger build_pi_num(const TreeSpec& t, const NormModel& norm, const Rational& eps,
                                      double tol_plateau = 1e-9, double tol_cond = 1e-6) {
  detail::NumPolicy pol{t, norm, eps, to_double(eps), tol_plateau, tol_cond};
  return detail::run_pipeline(pol, t, eps);
}

struct PipelineReport {
  bool ok = true;
  std::vector<std::string> failures;
  double worst_cond1 = 0;
  double worst_cond2 = 0;
  double worst_step = 0;
  double max_fsup = 0;
  std::vector<std::string> lambda_zero_sites;
  bool pi_strict = true;
  bool pi_signed = true;
  bool partitions_refine = true;
};

namespace detail {

template <typename P>
PipelineReport check_pipeline(const P& pol, const TreeSpec& t, const PipelineLedgerT<P>& led) {
  PipelineReport rep;
  auto fail = [&](const std::string& why) {
    rep.ok = false;
    rep.failures.push_back(why);
  };

  for (std::size_t b = 0; b < led.levels.size(); ++b) {
    const auto& lv = led.levels[b];
    rep.worst_cond1 = std::max(rep.worst_cond1, pol.report(lv.cond1));
    rep.worst_cond2 = std::max(rep.worst_cond2, pol.report(lv.cond2));
    rep.max_fsup = std::max(rep.max_fsup, pol.report(lv.fsup));
    if (!pol.cond1_ok(lv.cond1)) fail("mu wanders on a plateau at level " + std::to_string(b));
    if (!pol.cond2_ok(lv.cond2)) fail("excess bound fails at level " + std::to_string(b));
    if (!pol.sup_ok(lv.fsup)) fail("||f|| escapes 2/eps - 1 at level " + std::to_string(b));
    for (const auto& [u, lam] : lv.lambda) {
      if (pol.is_zero(lam))
        rep.lambda_zero_sites.push_back(u + "@" + std::to_string(b));
      if (b + 1 < led.levels.size() && led.levels[b + 1].mu.count(u)) {
        auto disc = pol.abs_diff(led.levels[b + 1].mu.at(u), pol.step(lv.mu.at(u), lam));
        rep.worst_step = std::max(rep.worst_step, pol.report(disc));
        if (!pol.cond1_ok(disc))
          fail("increment identity fails at " + u + " between levels " + std::to_string(b) +
               " and " + std::to_string(b + 1));
      }
    }
    if (b + 1 < led.levels.size())
      for (const auto& pl : led.levels[b + 1].partition.plateaux) {
        const auto& coarse = plateau_of(lv.partition, pl.least).members;
        for (const auto& u : pl.members)
          if (!coarse.count(u)) {
            rep.partitions_refine = false;
            fail("level " + std::to_string(b + 1) + " fails to refine level " + std::to_string(b));
          }
      }
  }

  for (const auto& [u, seq] : led.pi) {
    auto coords = pol.seq_coords(seq);
    if (coords.empty() || !(pol.report(coords.front()) < 0)) {
      rep.pi_signed = false;
      fail("leading coordinate is not negative at " + u);
    }
    for (std::size_t i = 1; i < coords.size(); ++i)
      if (!(pol.report(coords[i]) > 0)) {
        rep.pi_signed = false;
        fail("later coordinate is not positive at " + u);
      }
  }

  auto vanished = [&](const std::string& u) {
    for (const auto& lv : led.levels) {
      auto it = lv.lambda.find(u);
      if (it != lv.lambda.end() && pol.is_zero(it->second)) return true;
    }
    return false;
  };
  for (const auto& a : t.nodes)
    for (const auto& b : t.nodes) {
      if (a == b || !tree_leq(t, a, b)) continue;
      Cmp c = pol.seq_compare(led.pi.at(a), led.pi.at(b));
      if (c == Cmp::Greater) fail("pi decreases from " + a + " to " + b);
      if (c == Cmp::Equal) {
        rep.pi_strict = false;
        if (!vanished(b))
          fail("pi collapses from " + a + " to " + b + " without a vanishing lambda");
      }
    }
  return rep;
}

}  // namespace detail

inline PipelineReport pipeline_check(const TreeSpec& t, const NormModel& norm,
                                     const PipelineLedger& led) {
  detail::ExactPolicy pol{t, norm, led.epsilon};
  return detail::check_pipeline(pol, t, led);
}

inline PipelineReport pipeline_check(const TreeSpec& t, const NormModel& norm,
                                     const NumPipelineLedger& led, double tol_plateau = 1e-9,
                                     double tol_cond = 1e-6) {
  detail::NumPolicy pol{t, norm, led.epsilon, to_double(led.epsilon), tol_plateau, tol_cond};
  return detail::check_pipeline(pol, t, led);
}

struct RhoReport {
  bool ok = true;
  std::vector<std::string> failures;
  std::map<std::string, ZSeq> rho;
  std::map<std::string, NumSeq> rho_num;
  bool plain = true;
  bool partition_match = true;
  std::size_t bad_points = 0;
  std::size_t max_sharing = 0;
  bool vanishing_cores_empty = true;
};

namespace detail {

inline void rho_common_checks(const TreeSpec& t, RhoReport& rep,
                              const std::vector<PlateauPartition>& pi_parts,
                              const std::vector<PlateauPartition>& rho_parts) {
  auto fail = [&](const std::string& why) {
    rep.ok = false;
    rep.failures.push_back(why);
  };
  for (std::size_t i = 0; i < pi_parts.size(); ++i) {
    std::set<std::set<std::string>> a, b;
    for (const auto& pl : pi_parts[i].plateaux) a.insert(pl.members);
    for (const auto& pl : rho_parts[i].plateaux) b.insert(pl.members);
    if (a != b) {
      rep.partition_match = false;
      fail("rho reshuffles the plateau partition");
    }
  }
  (void)t;
}

}  // namespace detail

// rho = phi(pi): the composition kills duplicated final values at successor
// positions, so on a finite tree rho lands in the plain part while keeping
// the same plateau structure.
inline RhoReport build_rho(const TreeSpec& t, const PipelineLedger& led,
                           const std::vector<ZSuccessorFamily>& families = {}) {
  RhoReport rep;
  auto fail = [&](const std::string& why) {
    rep.ok = false;
    rep.failures.push_back(why);
  };

  for (const auto& [u, seq] : led.pi) rep.rho[u] = phi_map(seq);

  for (const auto& [u, seq] : rep.rho) {
    auto v = z_validate(seq);
    if (!v.ok) fail("rho at " + u + " is invalid: " + v.detail);
    if (seq.terminal_repeat) {
      rep.plain = false;
      fail("rho keeps a duplicated value at " + u);
    }
  }

  for (const auto& a : t.nodes)
    for (const auto& b : t.nodes) {
      if (a == b || !tree_leq(t, a, b)) continue;
      if (z_compare(rep.rho.at(a), rep.rho.at(b)) == Cmp::Greater)
        fail("rho decreases from " + a + " to " + b);
    }

  detail::rho_common_checks(t, rep, {plateau_partition_z(t, led.pi)},
                            {plateau_partition_z(t, rep.rho)});

  for (const auto& u : t.nodes) {
    std::size_t sharing = 0;
    for (const auto& s : successors(t, u))
      if (z_equal(rep.rho.at(u), rep.rho.at(s))) ++sharing;
    rep.max_sharing = std::max(rep.max_sharing, sharing);
  }

  for (std::size_t b = 0; b < led.levels.size(); ++b)
    for (const auto& pl : led.levels[b].partition.plateaux) {
      bool vanishing = false;
      for (const auto& u : pl.members) {
        auto it = led.levels[b].lambda.find(u);
        if (it != led.levels[b].lambda.end() && it->second == 0) vanishing = true;
      }
      if (!vanishing) continue;
      if (!ever_branching_core(t, pl.members).empty()) {
        rep.vanishing_cores_empty = false;
        fail("a vanishing plateau keeps an ever-branching core");
      }
    }

  rep.bad_points = detect_zbad_points(t, rep.rho, families).size();
  if (rep.bad_points) fail("rho has flagged bad points among declared families");
  return rep;
}

inline RhoReport build_rho_num(const TreeSpec& t, const NumPipelineLedger& led,
                               double tol = 1e-9) {
  RhoReport rep;
  auto fail = [&](const std::string& why) {
    rep.ok = false;
    rep.failures.push_back(why);
  };
  for (const auto& [u, seq] : led.pi) rep.rho_num[u] = numseq_phi(seq);
  for (const auto& [u, seq] : rep.rho_num)
    if (seq.repeat) {
      rep.plain = false;
      fail("rho keeps a duplicated value at " + u);
    }
  for (const auto& a : t.nodes)
    for (const auto& b : t.nodes) {
      if (a == b || !tree_leq(t, a, b)) continue;
      if (numseq_compare(rep.rho_num.at(a), rep.rho_num.at(b), tol) == Cmp::Greater)
        fail("rho decreases from " + a + " to " + b);
    }

  auto eq = [tol](const NumSeq& x, const NumSeq& y) {
    return numseq_compare(x, y, tol) == Cmp::Equal;
  };
  auto lt = [tol](const NumSeq& x, const NumSeq& y) {
    return numseq_compare(x, y, tol) == Cmp::Less;
  };
  std::map<std::string, NumSeq> pi = led.pi;
  detail::rho_common_checks(
      t, rep, {plateau_partition_by(t, pi, eq, lt)},
      {plateau_partition_by(t, rep.rho_num, eq, lt)});
  return rep;
}

struct CorollaryReport {
  enum class Status { Holds, NotApplicable, Failed };
  Status status = Status::Holds;
  std::string witness;
};

// Lattice norms with one-sided directional derivatives keep every lambda
// strictly positive, so pi never duplicates a value and lands in the plain
// part, strictly increasing. Without the hypotheses the verdict is
// NotApplicable, with a vanishing lambda as witness when one exists.
inline CorollaryReport verify_lattice_corollary(const TreeSpec& t, const NormModel& norm,
                                                const Rational& eps) {
  CorollaryReport rep;
  std::vector<std::string> zero_sites;
  bool plain = true, strict = true;
  std::string where;

  if (norm_is_exact(norm)) {
    auto led = build_pi(t, norm, eps);
    auto check = pipeline_check(t, norm, led);
    zero_sites = check.lambda_zero_sites;
    strict = check.pi_strict;
    for (const auto& [u, seq] : led.pi)
      if (seq.terminal_repeat) {
        plain = false;
        where = u;
      }
  } else {
    auto led = build_pi_num(t, norm, eps);
    auto check = pipeline_check(t, norm, led);
    zero_sites = check.lambda_zero_sites;
    strict = check.pi_strict;
    for (const auto& [u, seq] : led.pi)
      if (seq.repeat) {
        plain = false;
        where = u;
      }
  }

  if (!(norm.lattice && norm.gateaux)) {
    rep.status = CorollaryReport::Status::NotApplicable;
    rep.witness = zero_sites.empty() ? "hypotheses unmet; no vanishing lambda sampled"
                                     : "lambda vanishes at " + zero_sites.front();
    return rep;
  }
  if (!zero_sites.empty()) {
    rep.status = CorollaryReport::Status::Failed;
    rep.witness = "lambda vanishes at " + zero_sites.front();
    return rep;
  }
  if (!plain) {
    rep.status = CorollaryReport::Status::Failed;
    rep.witness = "pi duplicates its final value at " + where;
    return rep;
  }
  if (!strict) {
    rep.status = CorollaryReport::Status::Failed;
    rep.witness = "pi is not strictly increasing";
    return rep;
  }
  rep.status = CorollaryReport::Status::Holds;
  rep.witness = "every lambda positive; pi plain and strictly increasing";
  return rep;
}

}  // namespace renormlab

#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "renormlab/plateau.hpp"
#include "renormlab/rational.hpp"
#include "renormlab/tree.hpp"

namespace renormlab {

struct WedgeViolation : std::runtime_error {
  WedgeViolation(const std::string& u, const std::string& t)
      : std::runtime_error("node " + u + " is not in the wedge above " + t) {}
};

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PlateauViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SandwichViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ToleranceBreach : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// A norm on the finite coordinate space of a tree, sandwiched between
// eps*sup and sup. Sup and weighted-sup kinds evaluate exactly; the others
// evaluate in doubles. Flags declare lattice monotonicity and directional
// smoothness; spot checks sample them.
struct NormModel {
  enum class Kind { SupNorm, WeightedSup, ScaledLp, Custom };
  Kind kind = Kind::SupNorm;
  std::map<std::string, Rational> weights;
  double p = 2.0;
  double scale = 1.0;
  std::function<double(const std::map<std::string, double>&)> custom;
  Rational epsilon = Rational(1, 2);
  bool lattice = true;
  bool gateaux = false;
};

inline NormModel norm_sup(Rational eps) {
  NormModel m;
  m.kind = NormModel::Kind::SupNorm;
  m.epsilon = std::move(eps);
  m.lattice = true;
  m.gateaux = false;
  return m;
}

inline NormModel norm_weighted_sup(std::map<std::string, Rational> weights, Rational eps) {
  NormModel m;
  m.kind = NormModel::Kind::WeightedSup;
  m.weights = std::move(weights);
  m.epsilon = std::move(eps);
  m.lattice = true;
  m.gateaux = false;
  return m;
}

inline NormModel norm_scaled_l2(double scale, Rational eps) {
  NormModel m;
  m.kind = NormModel::Kind::ScaledLp;
  m.p = 2.0;
  m.scale = scale;
  m.epsilon = std::move(eps);
  m.lattice = true;
  m.gateaux = true;
  return m;
}

inline NormModel norm_custom(std::function<double(const std::map<std::string, double>&)> fn,
                             Rational eps, bool lattice, bool gateaux) {
  NormModel m;
  m.kind = NormModel::Kind::Custom;
  m.custom = std::move(fn);
  m.epsilon = std::move(eps);
  m.lattice = lattice;
  m.gateaux = gateaux;
  return m;
}

inline Rational weight_of(const NormModel& m, const std::string& v) {
  auto it = m.weights.find(v);
  return it == m.weights.end() ? Rational(1) : it->second;
}

inline bool norm_is_exact(const NormModel& m) {
  return m.kind == NormModel::Kind::SupNorm || m.kind == NormModel::Kind::WeightedSup;
}

inline Rational norm_exact(const NormModel& m, const std::map<std::string, Rational>& x) {
  if (!norm_is_exact(m)) throw std::logic_error("exact evaluation needs a sup-kind norm");
  Rational best(0);
  for (const auto& [v, value] : x) {
    Rational w = m.kind == NormModel::Kind::SupNorm ? Rational(1) : weight_of(m, v);
    Rational c = w * rat_abs(value);
    if (c > best) best = c;
  }
  return best;
}

inline double norm_num(const NormModel& m, const std::map<std::string, double>& x) {
  switch (m.kind) {
    case NormModel::Kind::SupNorm:
    case NormModel::Kind::WeightedSup: {
      double best = 0;
      for (const auto& [v, value] : x) {
        double w = m.kind == NormModel::Kind::SupNorm ? 1.0 : to_double(weight_of(m, v));
        best = std::max(best, w * std::fabs(value));
      }
      return best;
    }
    case NormModel::Kind::ScaledLp: {
      double acc = 0;
      for (const auto& [v, value] : x) acc += std::pow(std::fabs(value), m.p);
      return m.scale * std::pow(acc, 1.0 / m.p);
    }
    case NormModel::Kind::Custom:
      return m.custom(x);
  }
  throw std::logic_error("corrupt norm kind");
}

inline double sup_num(const std::map<std::string, double>& x) {
  double best = 0;
  for (const auto& [v, value] : x) best = std::max(best, std::fabs(value));
  return best;
}

// Forward and backward difference quotients of the norm at x along d; they
// split at a kink, while a directionally smooth norm keeps them together.
struct GateauxProbe {
  double forward = 0;
  double backward = 0;
};

inline GateauxProbe gateaux_probe(const NormModel& m, const std::map<std::string, double>& x,
                                  const std::map<std::string, double>& d, double h = 1e-6) {
  auto shift = [&](double s) {
    std::map<std::string, double> y = x;
    for (const auto& [v, value] : d) y[v] += s * value;
    return norm_num(m, y);
  };
  double at = norm_num(m, x);
  return {(shift(h) - at) / h, (at - shift(-h)) / h};
}

struct SpotCheck {
  bool ok = true;
  std::string why;
};

inline SpotCheck norm_spot_check(const NormModel& m, const std::vector<std::string>& space,
                                 unsigned seed = 7) {
  if (!(m.epsilon > 0 && m.epsilon < 1)) return {false, "sandwich constant outside (0,1)"};
  if (m.kind == NormModel::Kind::WeightedSup)
    for (const auto& [v, w] : m.weights)
      if (w < m.epsilon || w > 1) return {false, "weight at " + v + " outside [eps,1]"};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  std::uniform_real_distribution<double> stretch(1.0, 2.0);
  double eps = to_double(m.epsilon);
  for (int rep = 0; rep < 48; ++rep) {
    std::map<std::string, double> x;
    for (const auto& v : space) x[v] = coord(rng);
    double n = norm_num(m, x), s = sup_num(x);
    if (n < eps * s - 1e-9 || n > s + 1e-9)
      return {false, "sandwich fails at a sampled vector"};
    if (m.lattice) {
      std::map<std::string, double> ax, grown;
      for (const auto& [v, value] : x) {
        ax[v] = std::fabs(value);
        grown[v] = ax[v] * stretch(rng);
      }
      if (std::fabs(n - norm_num(m, ax)) > 1e-9)
        return {false, "lattice monotonicity fails under a sign change"};
      if (norm_num(m, ax) > norm_num(m, grown) + 1e-9)
        return {false, "lattice monotonicity fails at a sampled pair"};
    }
    if (m.gateaux) {
      std::map<std::string, double> d;
      for (const auto& v : space) d[v] = coord(rng);
      if (sup_num(x) < 0.1 || sup_num(d) < 0.1) continue;
      GateauxProbe g = gateaux_probe(m, x, d);
      if (std::fabs(g.forward - g.backward) > 1e-4)
        return {false, "directional derivative splits at a sampled point"};
    }
  }
  if (m.gateaux) {
    std::map<std::string, double> ties;
    for (const auto& v : space) ties[v] = 1.0;
    for (const auto& v : space) {
      GateauxProbe g = gateaux_probe(m, ties, {{v, 1.0}});
      if (std::fabs(g.forward - g.backward) > 1e-4)
        return {false, "directional derivative splits at a tie point"};
    }
  }
  return {true, ""};
}

// A function vanishing outside (0,t] and increasing along it.
struct CtFunction {
  std::string node;
  std::map<std::string, Rational> values;
};

struct CtFunctionNum {
  std::string node;
  std::map<std::string, double> values;
};

inline CtFunction ct_indicator(const TreeSpec& t, const std::string& node) {
  CtFunction f{node, {}};
  for (const auto& v : predecessors(t, node)) f.values[v] = 1;
  return f;
}

inline SpotCheck ct_validate(const TreeSpec& t, const CtFunction& f) {
  auto chain = predecessors(t, f.node);
  if (f.values.size() != chain.size()) return {false, "support differs from (0,t]"};
  Rational prev(0);
  bool first = true;
  for (const auto& v : chain) {
    auto it = f.values.find(v);
    if (it == f.values.end()) return {false, "missing value at " + v};
    if (!first && it->second < prev) return {false, "values decrease at " + v};
    prev = it->second;
    first = false;
  }
  return {true, ""};
}

inline Rational ct_sup(const CtFunction& f) {
  Rational best(0);
  for (const auto& [v, value] : f.values) best = std::max(best, rat_abs(value));
  return best;
}

inline double ct_sup(const CtFunctionNum& f) {
  double best = 0;
  for (const auto& [v, value] : f.values) best = std::max(best, std::fabs(value));
  return best;
}

namespace detail {

// g = f + (f(t)+delta)*1_{(t,u]}, the vector whose norm mu minimizes over
// tail perturbations.
inline std::map<std::string, Rational> mu_vector(const TreeSpec& t, const CtFunction& f,
                                                 const Rational& delta, const std::string& u) {
  if (!tree_leq(t, f.node, u)) throw WedgeViolation(u, f.node);
  std::map<std::string, Rational> g = f.values;
  Rational bump = f.values.at(f.node) + delta;
  for (const auto& v : interval(t, f.node, u)) g[v] = bump;
  return g;
}

inline std::map<std::string, double> mu_vector_num(const TreeSpec& t, const CtFunctionNum& f,
                                                   double delta, const std::string& u) {
  if (!tree_leq(t, f.node, u)) throw WedgeViolation(u, f.node);
  std::map<std::string, double> g = f.values;
  double bump = f.values.at(f.node) + delta;
  for (const auto& v : interval(t, f.node, u)) g[v] = bump;
  return g;
}

// Convex minimization of ||g + phi|| over phi supported on the open wedge
// above u: cyclic coordinate descent, each coordinate minimized by ternary
// search over the sandwich box.
inline double minimize_tail(const NormModel& m, const TreeSpec& t,
                            std::map<std::string, double> g, const std::string& u,
                            std::map<std::string, double>* opt = nullptr) {
  std::vector<std::string> free_nodes;
  for (const auto& v : wedge(t, u))
    if (v != u) free_nodes.push_back(v);
  double box = sup_num(g) / to_double(m.epsilon) + 1.0;
  for (const auto& v : free_nodes) g[v] = 0;

  auto value = [&]() { return norm_num(m, g); };
  double best = value();
  if (free_nodes.empty()) {
    if (opt) opt->clear();
    return best;
  }
  const double eta = 1e-9;
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double before = best;
    for (const auto& v : free_nodes) {
      double lo = -box, hi = box;
      for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        g[v] = m1;
        double f1 = value();
        g[v] = m2;
        double f2 = value();
        if (f1 < f2)
          hi = m2;
        else
          lo = m1;
      }
      g[v] = (lo + hi) / 2;
      best = value();
    }
    if (before - best < eta) {
      if (opt) {
        opt->clear();
        for (const auto& v : free_nodes) (*opt)[v] = g[v];
      }
      return best;
    }
  }
  throw NonConvergence("tail minimization exceeded the sweep cap");
}

}  // namespace detail

struct MuResult {
  bool exact = false;
  Rational exact_value;
  double value = 0;
  std::map<std::string, double> phi;
};

// mu(f,delta,u): infimum of ||f + (f(t)+delta)1_{(t,u]} + phi|| over phi
// supported beyond u. Lattice norms attain it at phi = 0, since the supports
// are disjoint and tail mass can only grow the norm; sup-kind norms then
// evaluate exactly.
inline MuResult mu_eval(const TreeSpec& t, const NormModel& m, const CtFunction& f,
                        const Rational& delta, const std::string& u) {
  MuResult r;
  if (norm_is_exact(m)) {
    auto g = detail::mu_vector(t, f, delta, u);
    r.exact = true;
    r.exact_value = norm_exact(m, g);
    r.value = to_double(r.exact_value);
    return r;
  }
  std::map<std::string, double> g;
  for (const auto& [v, value] : detail::mu_vector(t, f, delta, u)) g[v] = to_double(value);
  if (m.lattice) {
    r.value = norm_num(m, g);
    return r;
  }
  r.value = detail::minimize_tail(m, t, std::move(g), u, &r.phi);
  return r;
}

// Forced numeric path: always runs the descent, even for lattice norms.
// Cross-checks the exact closed form.
inline double mu_eval_numeric(const TreeSpec& t, const NormModel& m, const CtFunction& f,
                              const Rational& delta, const std::string& u) {
  std::map<std::string, double> g;
  for (const auto& [v, value] : detail::mu_vector(t, f, delta, u)) g[v] = to_double(value);
  return detail::minimize_tail(m, t, std::move(g), u);
}

inline double mu_eval_num(const TreeSpec& t, const NormModel& m, const CtFunctionNum& f,
                          double delta, const std::string& u) {
  auto g = detail::mu_vector_num(t, f, delta, u);
  if (m.lattice) return norm_num(m, g);
  return detail::minimize_tail(m, t, std::move(g), u);
}

struct LambdaResult {
  bool exact = false;
  Rational exact_value;
  double value = 0;
};

namespace detail {

inline void check_mu_plateau_exact(const TreeSpec& t, const NormModel& m, const CtFunction& f,
                                   const Plateau& v) {
  Rational at0 = mu_eval(t, m, f, Rational(0), v.least).exact_value;
  for (const auto& u : v.members)
    if (mu_eval(t, m, f, Rational(0), u).exact_value != at0)
      throw PlateauViolation("mu(f,0,.) is not constant on the plateau at " + u);
}

}  // namespace detail

// lambda(t) = sup{delta >= 0 : mu(f,delta,t) <= mu(f,0_V) + eps*delta/2}.
// Sup-kind norms admit a closed form: with M = ||f||, c = f(0_V) and W the
// heaviest weight on (0_V,t], feasibility reads delta*(W - eps/2) <= M - cW,
// and W >= eps keeps the denominator positive.
inline LambdaResult lambda_eval(const TreeSpec& t, const NormModel& m, const Rational& eps,
                                const Plateau& v, const CtFunction& f, const std::string& node) {
  if (f.node != v.least)
    throw PlateauViolation("function is anchored at " + f.node + ", not at the plateau least");
  if (!v.members.count(node) || node == v.least)
    throw PlateauViolation("lambda is defined on the plateau above its least element");
  if (!norm_is_exact(m))
    throw std::logic_error("exact lambda needs a sup-kind norm");
  detail::check_mu_plateau_exact(t, m, f, v);

  Rational big = norm_exact(m, f.values);
  Rational c = f.values.at(v.least);
  Rational heavy(0);
  for (const auto& w : interval(t, v.least, node)) heavy = std::max(heavy, weight_of(m, w));
  if (m.kind == NormModel::Kind::SupNorm) heavy = 1;
  if (heavy <= eps / 2) throw SandwichViolation("tail weight fell to " + rat_to_string(heavy));

  LambdaResult r;
  r.exact = true;
  r.exact_value = std::max(Rational(0), Rational((big - c * heavy) / (heavy - eps / 2)));
  r.value = to_double(r.exact_value);
  return r;
}

// Numeric lambda: F(delta) = mu(f,delta,t) - M - eps*delta/2 is coercive, so
// expand a bracket, scan for the last sign change, then bisect.
inline double lambda_eval_num(const TreeSpec& t, const NormModel& m, double eps, const Plateau& v,
                              const CtFunctionNum& f, const std::string& node,
                              double tol_plateau = 1e-9) {
  if (f.node != v.least)
    throw PlateauViolation("function is anchored at " + f.node + ", not at the plateau least");
  if (!v.members.count(node) || node == v.least)
    throw PlateauViolation("lambda is defined on the plateau above its least element");
  double at0 = mu_eval_num(t, m, f, 0, v.least);
  for (const auto& u : v.members)
    if (std::fabs(mu_eval_num(t, m, f, 0, u) - at0) > tol_plateau)
      throw PlateauViolation("mu(f,0,.) is not constant on the plateau at " + u);

  auto F = [&](double delta) { return mu_eval_num(t, m, f, delta, node) - at0 - eps * delta / 2; };

  double hi = 1;
  int grow = 0;
  while (F(hi) <= 0) {
    hi *= 2;
    if (++grow > 200) throw NonConvergence("lambda bracket never turned positive");
  }
  const int grid = 128;
  double lo = 0;
  for (int k = grid - 1; k >= 1; --k) {
    double x = hi * k / grid;
    if (F(x) <= 0) {
      lo = x;
      break;
    }
    hi = x;
  }
  if (F(lo) > 0) return 0;
  while (hi - lo > 1e-9) {
    double mid = (lo + hi) / 2;
    if (F(mid) <= 0)
      lo = mid;
    else
      hi = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace renormlab

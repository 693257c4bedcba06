#pragma once

// File formats and report plumbing. Specs travel as JSON: trees as node
// lists or generator names, norms by kind with exact rational parameters,
// sequences as rational tails plus optional omega blocks with expression
// terms. Reports carry a schema version, echo the seed, and tag every value
// exact or numeric-with-tolerance; rationals are serialized as "p/q" strings
// so reruns produce identical bytes.

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "renormlab/expr.hpp"
#include "renormlab/norm.hpp"
#include "renormlab/tree.hpp"
#include "renormlab/zfamily.hpp"
#include "renormlab/zseq.hpp"

namespace renormlab {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& require_field(const Json& j, const char* field, const std::string& where) {
  if (!j.is_object() || !j.contains(field))
    throw ParseError(where + ": missing field '" + field + "'");
  return j.at(field);
}

inline std::string require_string(const Json& j, const char* field, const std::string& where) {
  const Json& v = require_field(j, field, where);
  if (!v.is_string()) throw ParseError(where + "." + field + ": expected a string");
  return v.get<std::string>();
}

// Exact values only: "p/q" strings, decimal-literal strings, or JSON
// integers. Floating JSON numbers are refused to keep reports drift-free.
inline Rational json_rational(const Json& v, const std::string& where) {
  if (v.is_string()) {
    auto r = try_parse_rational(v.get<std::string>());
    if (!r) throw ParseError(where + ": not a rational literal '" + v.get<std::string>() + "'");
    return *r;
  }
  if (v.is_number_integer()) return Rational(v.get<long long>());
  throw ParseError(where + ": expected a rational as a string, e.g. \"1/2\"");
}

inline ExprPtr json_expr(const Json& v, const std::string& where) {
  if (!v.is_string()) throw ParseError(where + ": expected an expression string");
  try {
    return parse_expr(v.get<std::string>());
  } catch (const std::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

}  // namespace detail

// --- trees -------------------------------------------------------------------

inline TreeSpec tree_from_json(const Json& j) {
  if (j.is_object() && j.contains("generator")) {
    std::string g = detail::require_string(j, "generator", "tree");
    if (g == "omega_chain") return lazy_omega_chain();
    if (g == "binary_tree") return lazy_binary_tree();
    throw ParseError("tree.generator: unknown generator '" + g + "'");
  }
  const Json& nodes = detail::require_field(j, "nodes", "tree");
  if (!nodes.is_array()) throw ParseError("tree.nodes: expected an array");
  std::vector<std::string> ids;
  std::map<std::string, std::string> parent;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Json& n = nodes[i];
    std::string where = "tree.nodes[" + std::to_string(i) + "]";
    if (n.is_string()) {
      ids.push_back(n.get<std::string>());
      continue;
    }
    std::string id = detail::require_string(n, "id", where);
    ids.push_back(id);
    if (n.contains("parent")) parent[id] = detail::require_string(n, "parent", where);
  }
  TreeSpec t = tree_explicit(std::move(ids), std::move(parent));
  TreeCheck chk = tree_validate(t);
  if (!chk.ok) throw ValidationError("tree invariant: " + chk.why);
  return t;
}

inline Json tree_to_json(const TreeSpec& t) {
  if (t.kind != TreeSpec::Kind::Explicit)
    throw TreeInvariantError("generated trees have no file form");
  Json nodes = Json::array();
  for (const auto& n : t.nodes) {
    Json e{{"id", n}};
    auto it = t.parent.find(n);
    if (it != t.parent.end()) e["parent"] = it->second;
    nodes.push_back(e);
  }
  return Json{{"nodes", nodes}};
}

// --- norms -------------------------------------------------------------------

inline NormModel norm_from_json(const Json& j) {
  std::string kind = detail::require_string(j, "kind", "norm");
  Rational eps = detail::json_rational(detail::require_field(j, "epsilon", "norm"), "norm.epsilon");
  if (!(eps > 0 && eps < 1))
    throw ValidationError("sandwich range: epsilon must lie in (0,1), got " + rat_to_string(eps));

  NormModel m;
  if (kind == "sup") {
    m = norm_sup(eps);
  } else if (kind == "weighted_sup") {
    const Json& w = detail::require_field(j, "weights", "norm");
    if (!w.is_object() || w.empty()) throw ParseError("norm.weights: expected a nonempty object");
    std::map<std::string, Rational> weights;
    for (const auto& [k, v] : w.items()) {
      Rational wv = detail::json_rational(v, "norm.weights." + k);
      if (!(wv >= eps && wv <= 1))
        throw ValidationError("sandwich range: weight " + k + " = " + rat_to_string(wv) +
                              " outside [epsilon, 1]");
      weights[k] = wv;
    }
    m = norm_weighted_sup(weights, eps);
  } else if (kind == "scaled_l2") {
    Rational s = detail::json_rational(detail::require_field(j, "scale", "norm"), "norm.scale");
    if (!(s > 0 && s <= 1))
      throw ValidationError("sandwich range: scale must lie in (0,1], got " + rat_to_string(s));
    m = norm_scaled_l2(to_double(s), eps);
  } else {
    throw ParseError("norm.kind: unknown kind '" + kind + "'");
  }
  if (j.contains("lattice")) m.lattice = j.at("lattice").get<bool>();
  if (j.contains("gateaux")) m.gateaux = j.at("gateaux").get<bool>();

  std::vector<std::string> probe;
  if (m.kind == NormModel::Kind::WeightedSup)
    for (const auto& [k, v] : m.weights) probe.push_back(k);
  else
    probe = {"v0", "v1"};
  SpotCheck sc = norm_spot_check(m, probe);
  if (!sc.ok) throw ValidationError("norm spot check: " + sc.why);
  return m;
}

inline Json norm_to_json(const NormModel& m) {
  Json j;
  switch (m.kind) {
    case NormModel::Kind::SupNorm:
      j["kind"] = "sup";
      break;
    case NormModel::Kind::WeightedSup: {
      j["kind"] = "weighted_sup";
      Json w = Json::object();
      for (const auto& [k, v] : m.weights) w[k] = rat_to_string(v);
      j["weights"] = w;
      break;
    }
    case NormModel::Kind::ScaledLp:
      j["kind"] = "scaled_l2";
      j["scale"] = m.scale;
      break;
    case NormModel::Kind::Custom:
      throw ValidationError("custom norms have no file form");
  }
  j["epsilon"] = rat_to_string(m.epsilon);
  j["lattice"] = m.lattice;
  j["gateaux"] = m.gateaux;
  return j;
}

// --- sequences and families --------------------------------------------------

inline ZSeq zseq_from_json(const Json& j) {
  ZSeq z;
  if (j.contains("blocks")) {
    const Json& bs = j.at("blocks");
    if (!bs.is_array()) throw ParseError("zseq.blocks: expected an array");
    for (std::size_t i = 0; i < bs.size(); ++i) {
      std::string where = "zseq.blocks[" + std::to_string(i) + "]";
      const Json& b = bs[i];
      OmegaBlock ob;
      if (b.contains("prefix"))
        for (std::size_t k = 0; k < b.at("prefix").size(); ++k)
          ob.prefix.push_back(
              detail::json_rational(b.at("prefix")[k], where + ".prefix[" + std::to_string(k) + "]"));
      ob.term = detail::json_expr(detail::require_field(b, "term", where), where + ".term");
      ob.limit = detail::json_rational(detail::require_field(b, "limit", where), where + ".limit");
      z.blocks.push_back(std::move(ob));
    }
  }
  if (j.contains("tail")) {
    const Json& tl = j.at("tail");
    if (!tl.is_array()) throw ParseError("zseq.tail: expected an array");
    for (std::size_t k = 0; k < tl.size(); ++k)
      z.tail.push_back(detail::json_rational(tl[k], "zseq.tail[" + std::to_string(k) + "]"));
  }
  if (j.contains("repeat")) z.terminal_repeat = j.at("repeat").get<bool>();
  ValidationReport rep = z_validate(z);
  if (!rep.ok) throw ValidationError(rep.clause + ": " + rep.detail);
  return z;
}

inline Json zseq_to_json(const ZSeq& z) {
  Json j = Json::object();
  if (!z.blocks.empty()) {
    Json bs = Json::array();
    for (const auto& b : z.blocks) {
      Json e = Json::object();
      if (!b.prefix.empty()) {
        Json p = Json::array();
        for (const auto& v : b.prefix) p.push_back(rat_to_string(v));
        e["prefix"] = p;
      }
      e["term"] = expr_to_string(b.term);
      e["limit"] = rat_to_string(b.limit);
      bs.push_back(e);
    }
    j["blocks"] = bs;
  }
  Json tl = Json::array();
  for (const auto& v : z.tail) tl.push_back(rat_to_string(v));
  j["tail"] = tl;
  j["repeat"] = z.terminal_repeat;
  return j;
}

inline ZFamily family_from_json(const Json& j) {
  std::string kind = detail::require_string(j, "kind", "family");
  long long n_start = j.contains("n_start") ? j.at("n_start").get<long long>() : 1;
  if (kind == "list") {
    std::vector<ZSeq> items;
    const Json& it = detail::require_field(j, "items", "family");
    for (const auto& e : it) items.push_back(zseq_from_json(e));
    return zfam_list(std::move(items), n_start);
  }
  if (kind == "tail_template") {
    std::vector<ExprPtr> terms;
    const Json& ts = detail::require_field(j, "terms", "family");
    for (std::size_t k = 0; k < ts.size(); ++k)
      terms.push_back(detail::json_expr(ts[k], "family.terms[" + std::to_string(k) + "]"));
    std::vector<OmegaBlock> blocks;
    if (j.contains("blocks")) {
      ZSeq carrier = zseq_from_json(Json{{"blocks", j.at("blocks")}, {"tail", Json::array({"0"})}});
      blocks = carrier.blocks;
    }
    bool rep = j.contains("repeat") && j.at("repeat").get<bool>();
    return zfam_tail_template(std::move(blocks), std::move(terms), rep, n_start);
  }
  if (kind == "growing_prefix")
    return zfam_growing_prefix(
        detail::json_expr(detail::require_field(j, "growth", "family"), "family.growth"), n_start);
  if (kind == "prefix_deviation")
    return zfam_prefix_deviation(
        zseq_from_json(detail::require_field(j, "base", "family")),
        detail::require_field(j, "block", "family").get<std::size_t>(),
        detail::json_expr(detail::require_field(j, "offset", "family"), "family.offset"),
        detail::json_expr(detail::require_field(j, "value", "family"), "family.value"), n_start);
  throw ParseError("family.kind: unknown kind '" + kind + "'");
}

inline std::map<std::string, ZSeq> rho_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("rho: expected an object mapping node ids to sequences");
  std::map<std::string, ZSeq> out;
  for (const auto& [k, v] : j.items()) out[k] = zseq_from_json(v);
  return out;
}

// --- files ---------------------------------------------------------------------

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

using ParsedSpec = std::variant<TreeSpec, NormModel, ZSeq>;

inline ParsedSpec parse_spec_json(const Json& j) {
  if (j.is_object() && (j.contains("nodes") || j.contains("generator")))
    return tree_from_json(j);
  if (j.is_object() && j.contains("kind")) return norm_from_json(j);
  if (j.is_object() && (j.contains("tail") || j.contains("blocks"))) return zseq_from_json(j);
  throw ParseError("unrecognized spec shape: expected tree, norm, or sequence fields");
}

inline ParsedSpec parse_spec(const std::string& path) { return parse_spec_json(load_json(path)); }

// --- reports -------------------------------------------------------------------

inline Json j_exact(const Rational& r) { return Json{{"exact", rat_to_string(r)}}; }

inline Json j_numeric(double v, double tol) { return Json{{"numeric", v}, {"tol", tol}}; }

// Compact display of a finite sequence with the duplicate written out, the
// form reports quote: (-1, 3/2).
inline std::string zseq_display(const ZSeq& z) {
  std::string out = "(";
  for (std::size_t i = 0; i < z.tail.size(); ++i) {
    if (i) out += ", ";
    out += rat_to_string(z.tail[i]);
  }
  if (z.terminal_repeat && !z.tail.empty()) out += ", " + rat_to_string(z.tail.back());
  out += ")";
  if (!z.blocks.empty()) return "(omega-block sequence " + z_to_string(z) + ")";
  return out;
}

inline Json report_skeleton(const std::string& command, std::uint64_t seed) {
  Json r;
  r["schema"] = 1;
  r["command"] = command;
  r["seed"] = seed;
  r["inputs"] = Json::object();
  r["results"] = Json::object();
  r["checks"] = Json::array();
  r["failures"] = Json::array();
  return r;
}

inline void add_check(Json& r, const std::string& name, bool pass, const std::string& why = "") {
  Json c{{"name", name}, {"pass", pass}};
  if (!why.empty()) c["why"] = why;
  r["checks"].push_back(c);
  if (!pass) r["failures"].push_back(name);
}

inline bool report_ok(const Json& r) { return r.at("failures").empty(); }

inline std::string report_dump(const Json& r) { return r.dump(2) + "\n"; }

}  // namespace renormlab

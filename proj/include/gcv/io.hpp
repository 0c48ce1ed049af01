#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcv/critical.hpp"
#include "gcv/error.hpp"
#include "gcv/expr.hpp"
#include "gcv/pointcloud.hpp"
#include "gcv/puiseux.hpp"

namespace gcv {

using json = nlohmann::ordered_json;

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("invalid JSON in " + path + ": " + e.what(),
                     static_cast<std::size_t>(e.byte));
  }
  return j;
}

// ---------------------------------------------------------------------------
// Map files: {"vars": ["x","y"], "components": ["x + x^2*y"]}
// ---------------------------------------------------------------------------

inline PolynomialMap map_from_json(const json& j) {
  if (!j.is_object() || !j.contains("vars") || !j.contains("components"))
    throw ParseError("map JSON must have \"vars\" and \"components\"", 0);
  std::vector<std::string> vars;
  for (const auto& v : j.at("vars")) vars.push_back(v.get<std::string>());
  std::string text;
  for (const auto& c : j.at("components")) {
    if (!text.empty()) text += "; ";
    text += c.get<std::string>();
  }
  return parse_map(text, std::move(vars));
}

inline PolynomialMap load_map(const std::string& path) {
  return map_from_json(load_json_file(path));
}

inline json map_to_json(const PolynomialMap& map) {
  json j;
  j["vars"] = map.vars;
  j["components"] = json::array();
  for (const auto& c : map.components)
    j["components"].push_back(to_string(c, map.vars));
  return j;
}

// ---------------------------------------------------------------------------
// Domain files: {"box": [[-2,2],[-2,2]], "constraints": ["x"]}
// ---------------------------------------------------------------------------

inline Domain domain_from_json(const json& j, const std::vector<std::string>& vars) {
  if (!j.is_object() || !j.contains("box"))
    throw ParseError("domain JSON must have \"box\"", 0);
  Domain domain;
  for (const auto& side : j.at("box")) {
    if (!side.is_array() || side.size() != 2)
      throw ParseError("domain box sides must be [lo, hi] pairs", 0);
    domain.box.push_back({side[0].get<double>(), side[1].get<double>()});
  }
  if (j.contains("constraints")) {
    for (const auto& g : j.at("constraints")) {
      std::string text = g.get<std::string>();
      auto parsed = parse_map(text, vars);
      domain.constraints.push_back(parsed.components.at(0));
      domain.constraint_text.push_back(text);
    }
  }
  domain.validate();
  if (domain.dim() != vars.size())
    throw DimensionError("domain box has " + std::to_string(domain.dim()) +
                         " sides for " + std::to_string(vars.size()) + " variables");
  return domain;
}

inline Domain load_domain(const std::string& path, const std::vector<std::string>& vars) {
  return domain_from_json(load_json_file(path), vars);
}

inline json domain_to_json(const Domain& d) {
  json j;
  j["box"] = json::array();
  for (const auto& [lo, hi] : d.box) j["box"].push_back({lo, hi});
  j["constraints"] = d.constraint_text;
  return j;
}

// ---------------------------------------------------------------------------
// Puiseux expression JSON:
//   leaf: [[q, c], ...] term list (rationals as integers or "p/q" strings)
//   node: {"op": "add"|"sub"|"mul"|"neg"|"inv", "args": [ ... ]}
// ---------------------------------------------------------------------------

inline Rational rational_from_json(const json& v) {
  if (v.is_number_integer())
    return Rational(static_cast<long long>(v.get<std::int64_t>()));
  if (v.is_string()) {
    auto r = rational_from_string(v.get<std::string>());
    if (!r) throw ParseError("malformed rational '" + v.get<std::string>() + "'", 0);
    return *r;
  }
  throw ParseError("rationals must be integers or \"p/q\" strings "
                   "(floating literals are not exact)", 0);
}

inline PuiseuxSeries puiseux_from_json(const json& node, const Rational& trunc) {
  if (node.is_array()) {
    std::vector<PuiseuxTerm> terms;
    for (const auto& term : node) {
      if (!term.is_array() || term.size() != 2)
        throw ParseError("series terms must be [exponent, coefficient] pairs", 0);
      terms.push_back({rational_from_json(term[0]), rational_from_json(term[1])});
    }
    return PuiseuxSeries::from_terms(std::move(terms), trunc);
  }
  if (!node.is_object() || !node.contains("op") || !node.contains("args"))
    throw ParseError("series nodes must be {\"op\": ..., \"args\": [...]}", 0);
  const std::string op = node.at("op").get<std::string>();
  const auto& args = node.at("args");
  auto arity = [&](std::size_t want) {
    if (args.size() != want)
      throw ParseError("op '" + op + "' takes " + std::to_string(want) + " argument(s)", 0);
  };
  if (op == "add") {
    arity(2);
    return puiseux_from_json(args[0], trunc) + puiseux_from_json(args[1], trunc);
  }
  if (op == "sub") {
    arity(2);
    return puiseux_from_json(args[0], trunc) - puiseux_from_json(args[1], trunc);
  }
  if (op == "mul") {
    arity(2);
    return puiseux_from_json(args[0], trunc) * puiseux_from_json(args[1], trunc);
  }
  if (op == "neg") {
    arity(1);
    return -puiseux_from_json(args[0], trunc);
  }
  if (op == "inv") {
    arity(1);
    return inv(puiseux_from_json(args[0], trunc));
  }
  throw ParseError("unknown op '" + op + "'", 0);
}

inline json puiseux_to_json(const PuiseuxSeries& s) {
  json j;
  j["terms"] = json::array();
  for (const auto& t : s.terms())
    j["terms"].push_back({rational_to_string(t.exponent), rational_to_string(t.coefficient)});
  auto v = s.valuation();
  j["valuation"] = v ? json(rational_to_string(*v)) : json("inf");
  j["trunc_order"] =
      s.trunc_order() ? json(rational_to_string(*s.trunc_order())) : json("inf");
  return j;
}

// ---------------------------------------------------------------------------
// Witness CSV (header x1..xn,f1..fk,nu,scale)
// ---------------------------------------------------------------------------

inline void write_witness_csv(std::ostream& out, const CriticalValueEstimate& e,
                              std::size_t n, std::size_t k) {
  for (std::size_t j = 0; j < n; ++j) out << 'x' << (j + 1) << ',';
  for (std::size_t j = 0; j < k; ++j) out << 'f' << (j + 1) << ',';
  out << "nu,scale\n";
  for (const auto& cluster : e.clusters)
    for (const auto& w : cluster.witnesses) {
      for (std::size_t j = 0; j < n; ++j) out << detail::format_double(w.x[j]) << ',';
      for (std::size_t j = 0; j < k; ++j) out << detail::format_double(w.value[j]) << ',';
      out << detail::format_double(w.nu) << ',' << detail::format_double(w.scale) << '\n';
    }
}

/// The same witness layout for a z-critical cloud: f columns carry the map
/// values, nu the Rabier value, scale the z threshold used.
inline void write_critical_cloud_csv(std::ostream& out, const PointCloud& cloud,
                                     const PolynomialMap& map, double z) {
  MapEvaluator ev(map);
  const std::size_t n = map.n(), k = map.k();
  for (std::size_t j = 0; j < n; ++j) out << 'x' << (j + 1) << ',';
  for (std::size_t j = 0; j < k; ++j) out << 'f' << (j + 1) << ',';
  out << "nu,scale\n";
  for (const auto& x : cloud.points) {
    auto value = ev.value(x);
    for (std::size_t j = 0; j < n; ++j) out << detail::format_double(x[j]) << ',';
    for (std::size_t j = 0; j < k; ++j) out << detail::format_double(value[j]) << ',';
    out << detail::format_double(ev.nu(x)) << ',' << detail::format_double(z) << '\n';
  }
}

/// Concatenated per-z critical clouds of a sard run, scale column = z.
inline void write_sard_cloud_csv(std::ostream& out, const SardReport& report,
                                 const PolynomialMap& map) {
  MapEvaluator ev(map);
  const std::size_t n = map.n(), k = map.k();
  for (std::size_t j = 0; j < n; ++j) out << 'x' << (j + 1) << ',';
  for (std::size_t j = 0; j < k; ++j) out << 'f' << (j + 1) << ',';
  out << "nu,scale\n";
  for (std::size_t zi = 0; zi < report.clouds.size(); ++zi) {
    const double z = report.entries[zi].z;
    for (const auto& x : report.clouds[zi].points) {
      auto value = ev.value(x);
      for (std::size_t j = 0; j < n; ++j) out << detail::format_double(x[j]) << ',';
      for (std::size_t j = 0; j < k; ++j) out << detail::format_double(value[j]) << ',';
      out << detail::format_double(ev.nu(x)) << ',' << detail::format_double(z) << '\n';
    }
  }
}

}  // namespace gcv

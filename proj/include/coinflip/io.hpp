#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "coinflip/dominated.hpp"
#include "coinflip/inverter.hpp"
#include "coinflip/numerics.hpp"
#include "coinflip/pruning.hpp"

namespace coinflip {

using json = nlohmann::json;

// ---- protocol files ----
// {"depth": m, "nodes": {"<bits>": {"ctrl": "A"|"B", "p0": "num/den"}}, "leaves": {"<bits>": 0|1}}

inline Party parse_party(const std::string& s) {
  if (s == "A") return Party::A;
  if (s == "B") return Party::B;
  throw std::invalid_argument("ctrl must be \"A\" or \"B\", got \"" + s + "\"");
}

inline json protocol_to_json(const ProtocolTree& t) {
  require_defined(t);
  json nodes = json::object(), leaves = json::object();
  for (const auto& n : t.nodes()) {
    if (n.leaf()) {
      leaves[n.id] = n.out;
    } else {
      json e = {{"ctrl", std::string(1, party_char(n.ctrl))}, {"p0", to_string(n.edge[0])}};
      if (n.edge[0] + n.edge[1] != 1) e["p1"] = to_string(n.edge[1]);
      nodes[n.id] = e;
    }
  }
  return {{"depth", t.depth()}, {"nodes", nodes}, {"leaves", leaves}};
}

inline ProtocolTree protocol_from_json(const json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("leaves"))
    throw std::invalid_argument("protocol file needs \"nodes\" and \"leaves\"");
  TreeBuilder b;
  for (const auto& [id, e] : j.at("nodes").items()) {
    Party p = parse_party(e.at("ctrl").get<std::string>());
    auto rat = [](const json& x) {
      return x.is_string() ? parse_rational(x.get<std::string>()) : parse_rational(x.dump());
    };
    Rational p0 = rat(e.at("p0"));
    Rational p1 = e.contains("p1") ? rat(e.at("p1")) : Rational(1 - p0);
    b.internal(id, p, p0, p1);
  }
  for (const auto& [id, out] : j.at("leaves").items()) b.leaf(id, out.get<int>());
  ProtocolTree t = b.build();
  if (j.contains("depth") && j.at("depth").get<int>() != t.depth())
    throw std::invalid_argument("declared depth " + std::to_string(j.at("depth").get<int>()) +
                                " does not match the tree (" + std::to_string(t.depth()) + ")");
  return t;
}

inline ProtocolTree read_protocol(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return protocol_from_json(j);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

inline void write_protocol(const std::string& path, const ProtocolTree& t) {
  write_text(path, protocol_to_json(t).dump(2) + "\n");
}

// ---- measures and sequences ----

inline json measure_to_json(const ProtocolTree& t, const LeafMeasure& m) {
  json out = json::object();
  for (int l : t.leaves()) out[t[l].id] = to_string(m[l]);
  return out;
}

// [{index, protocol, measure, alpha_or_beta}], protocol null once ⊥.
inline json sequence_to_json(const DominatedSequence& seq) {
  json out = json::array();
  for (const auto& e : seq.entries) {
    json row;
    row["index"] = e.index.str();
    row["protocol"] = e.protocol.is_bottom() ? json(nullptr) : protocol_to_json(e.protocol);
    row["measure"] = measure_to_json(e.protocol, e.measure.measure);
    row["expectation"] = to_string(e.expectation);
    auto best = best_valid(e.protocol);
    row["alpha_or_beta"] = to_string(e.index.party == Party::A ? Rational(1 - best.best_b) : Rational(1 - best.best_a));
    out.push_back(row);
  }
  return out;
}

// ---- degradation plans: [{"node": "<bits>", "replacement": "uniform" | "fixed:<leaf>"}] ----

inline CorruptionPlan plan_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("degradation plan must be a JSON array");
  CorruptionPlan plan;
  for (const auto& e : j) {
    CorruptionEntry c{e.at("node").get<std::string>(), e.value("replacement", std::string("uniform"))};
    parse_replacement(c.replacement);
    plan.push_back(c);
  }
  return plan;
}

inline CorruptionPlan read_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return plan_from_json(j);
}

inline json plan_to_json(const CorruptionPlan& plan) {
  json out = json::array();
  for (const auto& e : plan) out.push_back({{"node", e.node}, {"replacement", e.replacement}});
  return out;
}

// ---- DOT ----

inline std::string dot_label(const NodeId& id) { return id.empty() ? "λ" : id; }

// Nodes carry controller and exact value; edges carry exact probabilities.
inline std::string to_dot(const ProtocolTree& t, const std::string& name = "protocol") {
  require_defined(t);
  auto val = node_values(t);
  std::ostringstream os;
  os << "digraph \"" << name << "\" {\n  node [fontname=\"Helvetica\"];\n";
  for (int i = 0; i < t.size(); ++i) {
    const auto& n = t[i];
    os << "  n" << i << " [label=\"" << dot_label(n.id);
    if (n.leaf()) os << "\\nχ=" << n.out << "\", shape=box";
    else os << "\\n" << party_char(n.ctrl) << "  val=" << to_string(val[static_cast<std::size_t>(i)]) << "\"";
    os << "];\n";
  }
  for (int i : t.internals())
    for (int b = 0; b < 2; ++b)
      os << "  n" << i << " -> n" << t[i].child[b] << " [label=\"" << to_string(t[i].edge[b]) << "\"];\n";
  os << "}\n";
  return os.str();
}

// ---- CSV helpers ----

inline std::string fmt_double(double x, int digits = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

inline std::string sweep_csv(const SweepReport& rep) {
  std::ostringstream os;
  os << "delta_prime,delta_prime_decimal,value,radius,prune_rate\n";
  for (const auto& r : rep.rows)
    os << to_string(r.delta) << "," << fmt_double(to_double(r.delta)) << "," << fmt_double(r.value) << ","
       << fmt_double(r.radius) << "," << fmt_double(r.prune_rate) << "\n";
  return os.str();
}

inline json sweep_to_json(const SweepReport& rep) {
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"delta_prime", to_string(r.delta)}, {"value", r.value}, {"radius", r.radius},
                    {"prune_rate", r.prune_rate}});
  json out = {{"attacker", std::string(1, party_char(rep.attacker))},
              {"rows", rows},
              {"best_delta_prime", to_string(rep.best_delta())},
              {"estimator_samples", rep.estimator_samples}};
  if (rep.final.runs) out["final"] = {{"runs", rep.final.runs}, {"value", rep.final.mean}, {"radius", rep.final.radius}};
  return out;
}

inline json audit_to_json(const SampledInequalityReport& r) {
  return {{"trials", r.trials},
          {"violations", r.violations},
          {"worst_slack", r.worst_slack},
          {"ranges", r.ranges},
          {"pass", r.pass()}};
}

inline json alpha_to_json(double delta, const FindAlphaReport& r) {
  return {{"delta", delta},
          {"ok", r.ok},
          {"alpha", r.alpha},
          {"grid_points", r.points},
          {"worst_relative_slack", r.worst_slack},
          {"certificate", "sampled grid"}};
}

}  // namespace coinflip

#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "coinflip/rational.hpp"
#include "coinflip/tree.hpp"

namespace coinflip {

struct undefined_protocol : std::logic_error {
  undefined_protocol() : std::logic_error("undefined protocol") {}
};

inline void require_defined(const ProtocolTree& t) {
  if (t.is_bottom() || t.empty()) throw undefined_protocol();
}

// Node-indexed leaf measure. Entries at internal nodes are ignored and kept at 0.
struct LeafMeasure {
  std::vector<Rational> v;

  static LeafMeasure zeros(const ProtocolTree& t) {
    return LeafMeasure{std::vector<Rational>(static_cast<std::size_t>(t.size()))};
  }
  const Rational& operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
  Rational& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  bool operator==(const LeafMeasure& o) const { return v == o.v; }
};

// The output function χ as a measure.
inline LeafMeasure output_measure(const ProtocolTree& t) {
  auto m = LeafMeasure::zeros(t);
  for (int l : t.leaves()) m[l] = t[l].out;
  return m;
}

using NodeSet = std::set<NodeId>;

// v(u) for every node: product of edges along the root path.
inline std::vector<Rational> visit_probs(const ProtocolTree& t) {
  require_defined(t);
  std::vector<Rational> v(static_cast<std::size_t>(t.size()));
  v[0] = 1;
  for (int i : t.internals()) {
    const auto& n = t[i];
    for (int b = 0; b < 2; ++b) {
      auto& c = v[static_cast<std::size_t>(n.child[b])];
      if (v[static_cast<std::size_t>(i)] != 0) c = v[static_cast<std::size_t>(i)] * n.edge[b];
    }
  }
  return v;
}

inline Rational visit_prob(const ProtocolTree& t, const NodeId& u) {
  return visit_probs(t)[static_cast<std::size_t>(t.index(u))];
}

// val(Π_u) for every node by the value recursion. Entries of unreachable nodes are
// whatever their (arbitrary) edges give and carry no meaning.
inline std::vector<Rational> node_values(const ProtocolTree& t) {
  require_defined(t);
  std::vector<Rational> val(static_cast<std::size_t>(t.size()));
  for (int i = t.size() - 1; i >= 0; --i) {
    const auto& n = t[i];
    if (n.leaf()) {
      val[static_cast<std::size_t>(i)] = n.out;
    } else {
      Rational s;
      for (int b = 0; b < 2; ++b)
        if (n.edge[b] != 0) s += n.edge[b] * val[static_cast<std::size_t>(n.child[b])];
      val[static_cast<std::size_t>(i)] = s;
    }
  }
  return val;
}

inline Rational node_value(const ProtocolTree& t, const NodeId& u) {
  int i = t.index(u);
  if (visit_probs(t)[static_cast<std::size_t>(i)] == 0)
    throw std::domain_error("node '" + u + "' is unreachable");
  return node_values(t)[static_cast<std::size_t>(i)];
}

inline Rational value(const ProtocolTree& t) {
  require_defined(t);
  return node_values(t)[0];
}

// Π_u with ids re-rooted at u; ⊥ when v(u) = 0.
inline ProtocolTree sub_protocol(const ProtocolTree& t, const NodeId& u) {
  if (t.is_bottom()) return ProtocolTree::bottom();
  int ui = t.index(u);
  if (visit_probs(t)[static_cast<std::size_t>(ui)] == 0) return ProtocolTree::bottom();
  TreeBuilder b;
  for (int i = ui; i < t.size() && is_prefix(u, t[i].id); ++i) {
    const auto& n = t[i];
    NodeId rel = n.id.substr(u.size());
    if (n.leaf()) b.leaf(rel, n.out);
    else b.internal(rel, n.ctrl, n.edge[0], n.edge[1]);
  }
  return b.build();
}

// E_{⟨Π_u⟩}[M] for every node u, with the ⊥ convention (0) on unreachable subtrees.
inline std::vector<Rational> sub_expectations(const ProtocolTree& t, const LeafMeasure& m) {
  std::vector<Rational> e(static_cast<std::size_t>(t.size()));
  if (t.is_bottom()) return e;
  auto v = visit_probs(t);
  for (int i = t.size() - 1; i >= 0; --i) {
    const auto& n = t[i];
    if (v[static_cast<std::size_t>(i)] == 0) continue;
    if (n.leaf()) {
      e[static_cast<std::size_t>(i)] = m[i];
    } else {
      Rational s;
      for (int b = 0; b < 2; ++b)
        if (n.edge[b] != 0) s += n.edge[b] * e[static_cast<std::size_t>(n.child[b])];
      e[static_cast<std::size_t>(i)] = s;
    }
  }
  return e;
}

inline Rational measure_expectation(const ProtocolTree& t, const LeafMeasure& m) {
  if (t.is_bottom()) return 0;
  auto v = visit_probs(t);
  Rational s;
  for (int l : t.leaves())
    if (v[static_cast<std::size_t>(l)] != 0) s += v[static_cast<std::size_t>(l)] * m[l];
  return s;
}

inline Rational leaf_statistical_distance(const ProtocolTree& p, const ProtocolTree& q) {
  if (p.depth() != q.depth()) throw std::invalid_argument("depth mismatch");
  auto vp = visit_probs(p), vq = visit_probs(q);
  Rational s;
  for (int l : p.leaves()) {
    int j = q.find(p[l].id);
    Rational other = (j >= 0 && q[j].leaf()) ? vq[static_cast<std::size_t>(j)] : Rational(0);
    s += abs(vp[static_cast<std::size_t>(l)] - other);
  }
  for (int l : q.leaves()) {
    int j = p.find(q[l].id);
    if (j < 0 || !p[j].leaf()) s += abs(vq[static_cast<std::size_t>(l)]);
  }
  return s / 2;
}

// ---- node-set algebra ----

inline NodeSet desc(const ProtocolTree& t, const NodeSet& s) {
  NodeSet out;
  for (const auto& n : t.nodes())
    for (const auto& u : s)
      if (is_prefix(u, n.id)) {
        out.insert(n.id);
        break;
      }
  return out;
}

inline NodeSet proper_desc(const ProtocolTree& t, const NodeSet& s) {
  NodeSet out;
  for (const auto& n : t.nodes())
    for (const auto& u : s)
      if (u.size() < n.id.size() && is_prefix(u, n.id)) {
        out.insert(n.id);
        break;
      }
  return out;
}

inline NodeSet frontier(const NodeSet& s) {
  NodeSet out;
  for (const auto& u : s) {
    bool covered = false;
    for (std::size_t len = 0; len < u.size() && !covered; ++len) covered = s.count(u.substr(0, len)) > 0;
    if (!covered) out.insert(u);
  }
  return out;
}

inline NodeSet set_union(const NodeSet& a, const NodeSet& b) {
  NodeSet out = a;
  out.insert(b.begin(), b.end());
  return out;
}

inline NodeSet set_minus(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  for (const auto& u : a)
    if (!b.count(u)) out.insert(u);
  return out;
}

inline bool is_subset(const NodeSet& a, const NodeSet& b) {
  for (const auto& u : a)
    if (!b.count(u)) return false;
  return true;
}

// Pr_{⟨Π⟩}[desc(S)]: probability that a random leaf passes through S.
inline Rational prob_desc(const ProtocolTree& t, const NodeSet& s) {
  if (t.is_bottom()) return 0;
  auto v = visit_probs(t);
  Rational p;
  for (const auto& u : frontier(s)) {
    int i = t.find(u);
    if (i >= 0) p += v[static_cast<std::size_t>(i)];
  }
  return p;
}

// Small^δ and Large^δ over reachable internal nodes, optionally restricted to one controller.
inline std::pair<NodeSet, NodeSet> low_high_sets(const ProtocolTree& t, const Rational& delta,
                                                 std::optional<Party> party = std::nullopt) {
  std::pair<NodeSet, NodeSet> out;
  if (t.is_bottom()) return out;
  auto v = visit_probs(t);
  auto val = node_values(t);
  for (int i : t.internals()) {
    if (v[static_cast<std::size_t>(i)] == 0) continue;
    if (party && t[i].ctrl != *party) continue;
    if (val[static_cast<std::size_t>(i)] <= delta) out.first.insert(t[i].id);
    if (val[static_cast<std::size_t>(i)] >= 1 - delta) out.second.insert(t[i].id);
  }
  return out;
}

inline bool in_border(const Rational& val, const Rational& delta, const Rational& xi) {
  bool low = val > delta - xi && val <= delta + xi;
  bool high = val >= 1 - delta - xi && val < 1 - delta + xi;
  return low || high;
}

inline NodeSet border_set(const ProtocolTree& t, const Rational& delta, const Rational& xi) {
  NodeSet out;
  if (t.is_bottom()) return out;
  auto v = visit_probs(t);
  auto val = node_values(t);
  for (int i : t.internals())
    if (v[static_cast<std::size_t>(i)] != 0 && in_border(val[static_cast<std::size_t>(i)], delta, xi))
      out.insert(t[i].id);
  return out;
}

inline Rational border_prob(const ProtocolTree& t, const Rational& delta, const Rational& xi) {
  return prob_desc(t, border_set(t, delta, xi));
}

// Smallest J >= 0 with J >= m/sqrt(xi), i.e. J^2 * xi >= m^2.
inline long grid_top(int m, const Rational& xi) {
  if (m == 0) return 0;
  long j = static_cast<long>(std::ceil(m / std::sqrt(to_double(xi))));
  if (j < 0) j = 0;
  auto ok = [&](long c) { return Rational(c) * c * xi >= Rational(m) * m; };
  while (j > 0 && ok(j - 1)) --j;
  while (!ok(j)) ++j;
  return j;
}

// The grid δ/2 + j·2ξ, j = 0..⌈m/√ξ⌉.
inline std::vector<Rational> threshold_grid(int m, const Rational& delta, const Rational& xi) {
  std::vector<Rational> g;
  long top = grid_top(m, xi);
  for (long j = 0; j <= top; ++j) g.push_back(delta / 2 + Rational(j) * 2 * xi);
  return g;
}

// First grid threshold δ' with border(δ', ξ) <= m·√ξ.
inline Rational pick_safe_threshold(const ProtocolTree& t, const Rational& delta, const Rational& xi) {
  require_defined(t);
  int m = t.depth();
  if (xi <= 0 || xi >= 1 || delta <= 0 || delta > Rational(1, 2))
    throw std::invalid_argument("pick_safe_threshold: parameters out of range");
  if (Rational(16) * m * m * xi > delta * delta)
    throw std::invalid_argument("pick_safe_threshold: requires xi <= delta^2/(16 m^2)");
  for (const auto& d : threshold_grid(m, delta, xi)) {
    Rational b = border_prob(t, d, xi);
    // b <= m·√ξ  <=>  b^2 <= m^2·ξ (both sides non-negative)
    if (b * b <= Rational(m) * m * xi) return d;
  }
  throw std::logic_error("pick_safe_threshold: no grid point passed");
}

}  // namespace coinflip

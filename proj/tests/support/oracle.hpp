#pragma once

// Brute-force reference computations for the tests. These read a tree's raw
// fields (ids, controllers, edges, outputs) and recompute everything from scratch
// over string-keyed maps, without calling the library's analysis code.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "coinflip/rational.hpp"
#include "coinflip/rng.hpp"
#include "coinflip/tree.hpp"

namespace oracle {

using coinflip::NodeId;
using coinflip::Party;
using coinflip::ProtocolTree;
using coinflip::Rational;

using EdgeTable = std::map<NodeId, std::array<Rational, 2>>;
using LeafLaw = std::map<NodeId, Rational>;

struct Shape {
  std::map<NodeId, Party> ctrl;
  std::map<NodeId, int> out;  // leaves only
  EdgeTable edges;

  bool leaf(const NodeId& u) const { return out.count(u) > 0; }
};

inline Shape shape_of(const ProtocolTree& t) {
  Shape s;
  for (const auto& n : t.nodes()) {
    if (n.leaf()) {
      s.out[n.id] = n.out;
    } else {
      s.ctrl[n.id] = n.ctrl;
      s.edges[n.id] = n.edge;
    }
  }
  return s;
}

// Probability of each leaf below u, starting at u, under `edges`.
inline LeafLaw leaf_law_from(const Shape& s, const EdgeTable& edges, const NodeId& u) {
  LeafLaw out;
  for (const auto& [l, o] : s.out) {
    if (l.size() < u.size() || l.compare(0, u.size(), u) != 0) continue;
    Rational p = 1;
    for (std::size_t i = u.size(); i < l.size() && p != 0; ++i) p *= edges.at(l.substr(0, i))[l[i] - '0'];
    out[l] = p;
  }
  return out;
}

inline LeafLaw leaf_law(const ProtocolTree& t) {
  auto s = shape_of(t);
  return leaf_law_from(s, s.edges, "");
}

inline Rational visit(const Shape& s, const EdgeTable& edges, const NodeId& u) {
  Rational p = 1;
  for (std::size_t i = 0; i < u.size(); ++i) p *= edges.at(u.substr(0, i))[u[i] - '0'];
  return p;
}

inline Rational sd(const LeafLaw& p, const LeafLaw& q) {
  std::map<NodeId, Rational> diff;
  for (const auto& [l, x] : p) diff[l] += x;
  for (const auto& [l, x] : q) diff[l] -= x;
  Rational s;
  for (const auto& [l, d] : diff) s += abs(d);
  return s / 2;
}

inline Rational expect(const Shape& s, const LeafLaw& law, const std::function<Rational(const NodeId&)>& f) {
  Rational e;
  for (const auto& [l, p] : law)
    if (p != 0) e += p * f(l);
  (void)s;
  return e;
}

inline Rational value_of(const Shape& s, const LeafLaw& law) {
  return expect(s, law, [&](const NodeId& l) { return Rational(s.out.at(l)); });
}

inline Rational value(const ProtocolTree& t) {
  auto s = shape_of(t);
  return value_of(s, leaf_law_from(s, s.edges, ""));
}

// val(Π_u) by direct summation; 0 when u's subtree has no leaf mass (cannot happen for valid edges).
inline Rational node_value(const Shape& s, const EdgeTable& edges, const NodeId& u) {
  return value_of(s, leaf_law_from(s, edges, u));
}

// Best value of `party` over every deterministic valid strategy: at each controlled
// node the strategy picks a child with positive honest edge.
inline Rational best_by_enumeration(const ProtocolTree& t, Party party) {
  auto s = shape_of(t);
  std::vector<NodeId> nodes;
  std::vector<std::vector<int>> choices;
  for (const auto& [u, p] : s.ctrl)
    if (p == party) {
      nodes.push_back(u);
      std::vector<int> c;
      for (int b = 0; b < 2; ++b)
        if (s.edges.at(u)[b] != 0) c.push_back(b);
      if (c.empty()) c.push_back(0);  // unreachable node with no edge mass; the choice is irrelevant
      choices.push_back(c);
    }
  const int target = party == Party::A ? 1 : 0;
  Rational best = -1;
  std::vector<std::size_t> idx(nodes.size(), 0);
  for (;;) {
    EdgeTable e = s.edges;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      int b = choices[i][idx[i]];
      e[nodes[i]] = {Rational(b == 0 ? 1 : 0), Rational(b == 1 ? 1 : 0)};
    }
    auto law = leaf_law_from(s, e, "");
    Rational v = expect(s, law, [&](const NodeId& l) { return Rational(s.out.at(l) == target ? 1 : 0); });
    if (v > best) best = v;
    std::size_t i = 0;
    while (i < nodes.size() && ++idx[i] == choices[i].size()) idx[i++] = 0;
    if (i == nodes.size()) break;
  }
  return best;
}

// Edge table of the level-k recursive biased-continuation attack: at each attacker
// node, the first step of a leaf drawn from the level-(k-1) continuation conditioned
// on the target output. Honest edges where no such leaf has mass.
inline EdgeTable attacked_edges(const ProtocolTree& t, Party attacker, int k) {
  auto s = shape_of(t);
  const int target = attacker == Party::A ? 1 : 0;
  EdgeTable cur = s.edges;
  for (int level = 1; level <= k; ++level) {
    EdgeTable next = cur;
    for (const auto& [u, p] : s.ctrl) {
      if (p != attacker) continue;
      Rational hit, hit0;
      for (const auto& [l, q] : leaf_law_from(s, cur, u)) {
        if (s.out.at(l) != target) continue;
        hit += q;
        if (l[u.size()] == '0') hit0 += q;
      }
      if (hit == 0) continue;
      next[u] = {hit0 / hit, 1 - hit0 / hit};
    }
    cur = std::move(next);
  }
  return cur;
}

inline LeafLaw attacked_law(const ProtocolTree& t, Party attacker, int k) {
  auto s = shape_of(t);
  return leaf_law_from(s, attacked_edges(t, attacker, k), "");
}

// Σ|p-q|/2 over a common index set.
inline Rational sd_vec(const std::vector<Rational>& p, const std::vector<Rational>& q) {
  Rational s;
  for (std::size_t i = 0; i < p.size(); ++i) s += abs(p[i] - q[i]);
  return s / 2;
}

// Least t with ln(2/γ) <= 2ε²t, from the closed form.
inline std::uint64_t hoeffding(double eps, double gamma) {
  double t = std::log(2 / gamma) / (2 * eps * eps);
  auto n = static_cast<std::uint64_t>(t);
  return static_cast<double>(n) < t ? n + 1 : n;
}

// Every complete tree of depth m over `grid`, every control scheme and every labeling.
inline void for_each_complete_tree(int m, const std::vector<Rational>& grid,
                                   const std::function<void(const ProtocolTree&)>& f) {
  const int internal = (1 << m) - 1, leaves = 1 << m;
  std::uint64_t edge_count = 1;
  for (int i = 0; i < internal; ++i) edge_count *= grid.size();
  for (std::uint64_t ctrl = 0; ctrl < (std::uint64_t{1} << internal); ++ctrl)
    for (std::uint64_t e = 0; e < edge_count; ++e)
      for (std::uint64_t lab = 0; lab < (std::uint64_t{1} << leaves); ++lab) {
        coinflip::TreeBuilder b;
        int ii = 0, li = 0;
        std::uint64_t ee = e;
        std::function<void(const NodeId&)> rec = [&](const NodeId& u) {
          if (static_cast<int>(u.size()) == m) {
            b.leaf(u, static_cast<int>((lab >> li++) & 1));
            return;
          }
          Party p = (ctrl >> ii++) & 1 ? Party::B : Party::A;
          b.internal(u, p, grid[ee % grid.size()]);
          ee /= grid.size();
          rec(u + "0");
          rec(u + "1");
        };
        rec("");
        f(b.build());
      }
}

// Depth-3 sweep: every control scheme and labeling; the seven edges are drawn from `grid`
// by a generator keyed on (seed, ctrl, labeling).
inline void for_each_depth3_tree(const std::vector<Rational>& grid, std::uint64_t seed,
                                 const std::function<void(const ProtocolTree&)>& f) {
  for (std::uint64_t ctrl = 0; ctrl < 128; ++ctrl)
    for (std::uint64_t lab = 0; lab < 256; ++lab) {
      coinflip::Rng rng(coinflip::derive_seed(seed, ctrl, lab));
      coinflip::TreeBuilder b;
      int ii = 0, li = 0;
      std::function<void(const NodeId&)> rec = [&](const NodeId& u) {
        if (u.size() == 3) {
          b.leaf(u, static_cast<int>((lab >> li++) & 1));
          return;
        }
        Party p = (ctrl >> ii++) & 1 ? Party::B : Party::A;
        b.internal(u, p, grid[coinflip::uniform_below(rng, grid.size())]);
        rec(u + "0");
        rec(u + "1");
      };
      rec("");
      f(b.build());
    }
}

inline std::vector<Rational> quarter_grid() {
  return {Rational(1, 4), Rational(1, 2), Rational(3, 4)};
}

// The five-leaf example protocol used throughout the tests.
inline ProtocolTree e2() {
  return coinflip::TreeBuilder()
      .internal("", Party::B, Rational(1, 2))
      .internal("0", Party::A, Rational(1, 4))
      .internal("01", Party::B, Rational(1, 2))
      .internal("1", Party::A, Rational(1, 2))
      .leaf("00", 1)
      .leaf("010", 0)
      .leaf("011", 1)
      .leaf("10", 1)
      .leaf("11", 0)
      .build();
}

}  // namespace oracle

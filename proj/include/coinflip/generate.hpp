#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coinflip/core.hpp"
#include "coinflip/rng.hpp"

namespace coinflip {

enum class ControlScheme { Alternating, Random, AllA, AllB };

inline ControlScheme parse_control_scheme(const std::string& s) {
  if (s == "alternating") return ControlScheme::Alternating;
  if (s == "random") return ControlScheme::Random;
  if (s == "all-a") return ControlScheme::AllA;
  if (s == "all-b") return ControlScheme::AllB;
  throw std::invalid_argument("unknown control scheme '" + s + "' (alternating|random|all-a|all-b)");
}

struct GenerateSpec {
  int depth = 3;
  std::vector<Rational> edge_grid{make_rational(1, 4), make_rational(1, 2), make_rational(3, 4)};
  ControlScheme scheme = ControlScheme::Random;
  bool fair = false;    // keep only trees with val = 1/2
  bool dyadic = false;  // keep only grid values with power-of-two denominators
  int max_tries = 10000;
};

// One complete tree of the given depth; ids are drawn in preorder from `rng`.
inline ProtocolTree random_protocol(int depth, const std::vector<Rational>& grid, ControlScheme scheme, Rng& rng) {
  if (depth < 1) throw std::invalid_argument("depth must be at least 1");
  if (grid.empty()) throw std::invalid_argument("empty edge grid");
  for (const auto& g : grid)
    if (g < 0 || g > 1) throw std::invalid_argument("edge grid value " + to_string(g) + " outside [0,1]");
  TreeBuilder b;
  std::function<void(const NodeId&)> rec = [&](const NodeId& u) {
    if (static_cast<int>(u.size()) == depth) {
      b.leaf(u, static_cast<int>(rng() & 1));
      return;
    }
    Party p = scheme == ControlScheme::Alternating ? (u.size() % 2 ? Party::B : Party::A)
              : scheme == ControlScheme::AllA      ? Party::A
              : scheme == ControlScheme::AllB      ? Party::B
              : (rng() & 1 ? Party::B : Party::A);
    const Rational& e = grid[uniform_below(rng, grid.size())];
    b.internal(u, p, e);
    rec(u + "0");
    rec(u + "1");
  };
  rec("");
  return b.build();
}

// Draws until the constraints hold; throws after max_tries.
inline ProtocolTree generate_protocol(const GenerateSpec& spec, Rng& rng) {
  std::vector<Rational> grid;
  for (const auto& g : spec.edge_grid)
    if (!spec.dyadic || is_dyadic(g)) grid.push_back(g);
  if (grid.empty()) throw std::invalid_argument("--dyadic leaves no usable edge value in the grid");
  for (int i = 0; i < spec.max_tries; ++i) {
    auto t = random_protocol(spec.depth, grid, spec.scheme, rng);
    if (!spec.fair || value(t) == Rational(1, 2)) return t;
  }
  throw std::runtime_error("no tree satisfying the constraints after " + std::to_string(spec.max_tries) + " tries");
}

// Edges from {1..den-1}/den, depth uniform in [1, max_depth]. Used by the randomized audits.
inline ProtocolTree random_audit_tree(Rng& rng, int max_depth, long den = 8, ControlScheme scheme = ControlScheme::Random) {
  std::vector<Rational> grid;
  for (long i = 1; i < den; ++i) grid.push_back(make_rational(i, den));
  int d = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(max_depth)));
  return random_protocol(d, grid, scheme, rng);
}

}  // namespace coinflip

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "coinflip/core.hpp"

namespace coinflip {

// Attacker A biases toward 1, attacker B toward 0.
struct AttackSpec {
  Party attacker = Party::A;
  int k = 0;

  int target() const { return attacker == Party::A ? 1 : 0; }
};

// First-step distribution of a random leaf below u conditioned on χ = b.
// Falls back to the honest edges when no such leaf has positive probability.
inline std::array<Rational, 2> ideal_biased_cont(const ProtocolTree& t, const NodeId& u, int b) {
  int ui = t.index(u);
  auto v = visit_probs(t);
  if (v[static_cast<std::size_t>(ui)] == 0) throw std::domain_error("node '" + u + "' is unreachable");
  const auto& n = t[ui];
  if (n.leaf()) throw std::domain_error("node '" + u + "' is a leaf");
  auto val = node_values(t);
  auto hit = [&](int i) {
    const Rational& x = val[static_cast<std::size_t>(i)];
    return b == 1 ? x : Rational(1 - x);
  };
  Rational total = hit(ui);
  if (total == 0) return {n.edge[0], n.edge[1]};
  Rational p0 = n.edge[0] == 0 ? Rational(0) : Rational(n.edge[0] * hit(n.child[0]) / total);
  return {p0, Rational(1 - p0)};
}

struct AttackedProtocol {
  ProtocolTree base;
  AttackSpec spec;
  std::vector<ProtocolTree> levels;             // levels[i] = (A^(i), B) or (A, B^(i))
  std::vector<std::vector<Rational>> values;    // values[i][u] = val of levels[i] at u

  const ProtocolTree& derived() const { return levels.back(); }
  const Rational& value(int i) const { return values.at(static_cast<std::size_t>(i))[0]; }
};

// One more level of the closed-form edge transform.
inline ProtocolTree attack_step(const ProtocolTree& prev, const std::vector<Rational>& val, Party attacker) {
  ProtocolTree next = prev;
  auto v = visit_probs(prev);
  for (int i : prev.internals()) {
    auto ui = static_cast<std::size_t>(i);
    const auto& n = prev[i];
    if (n.ctrl != attacker || v[ui] == 0) continue;
    auto w = [&](int c) {
      const Rational& x = val[static_cast<std::size_t>(c)];
      return attacker == Party::A ? x : Rational(1 - x);
    };
    Rational denom = w(i);
    if (denom == 0) continue;  // zero-value subtree: honest edges kept
    Rational e0 = n.edge[0] == 0 ? Rational(0) : Rational(n.edge[0] * w(n.child[0]) / denom);
    next.set_edges(i, e0, Rational(1 - e0));
  }
  return next;
}

inline AttackedProtocol attacked_protocol(const ProtocolTree& t, AttackSpec spec) {
  require_defined(t);
  if (spec.k < 0) throw std::invalid_argument("attack depth must be non-negative");
  AttackedProtocol out{t, spec, {t}, {node_values(t)}};
  for (int i = 1; i <= spec.k; ++i) {
    out.levels.push_back(attack_step(out.levels.back(), out.values.back(), spec.attacker));
    out.values.push_back(node_values(out.levels.back()));
  }
  return out;
}

// κ(ε) = ⌈log(2/ε) / log((1-ε/2)/(1-ε))⌉, certified by exact powers: the least n with q^n >= 2/ε.
inline int kappa(const Rational& eps) {
  if (eps <= 0 || eps > Rational(1, 2)) throw std::invalid_argument("kappa: eps must lie in (0, 1/2]");
  Rational q = (1 - eps / 2) / (1 - eps);
  Rational target = 2 / eps;
  double guess = std::log(to_double(target)) / std::log(to_double(q));
  long n = std::max(0L, static_cast<long>(std::ceil(guess)));
  while (n > 0 && pow(q, static_cast<unsigned long>(n - 1)) >= target) --n;
  while (pow(q, static_cast<unsigned long>(n)) < target) ++n;
  return static_cast<int>(n);
}

// Internal u (with v(u) > 0) whose visit probability under (A^(1), B) is at least γ·v(u).
inline NodeSet unbalanced_set(const ProtocolTree& t, AttackSpec spec, const Rational& gamma) {
  if (gamma < 1) throw std::invalid_argument("gamma must be at least 1");
  spec.k = 1;
  auto att = attacked_protocol(t, spec);
  auto v = visit_probs(t);
  auto va = visit_probs(att.derived());
  NodeSet out;
  for (int i : t.internals()) {
    auto ui = static_cast<std::size_t>(i);
    if (v[ui] != 0 && va[ui] >= gamma * v[ui]) out.insert(t[i].id);
  }
  return out;
}

struct MainIdealVerdict {
  bool a_wins = false;
  bool b_wins = false;
  int kappa = 0;
  Rational val_a;  // val(A^(κ), B)
  Rational val_b;  // val(A, B^(κ))
};

struct theorem_violation : std::logic_error {
  using std::logic_error::logic_error;
};

inline MainIdealVerdict verify_main_ideal(const ProtocolTree& t, const Rational& eps) {
  MainIdealVerdict out;
  out.kappa = kappa(eps);
  out.val_a = attacked_protocol(t, {Party::A, out.kappa}).value(out.kappa);
  out.val_b = attacked_protocol(t, {Party::B, out.kappa}).value(out.kappa);
  out.a_wins = out.val_a > 1 - eps;
  out.b_wins = out.val_b < eps;
  if (!out.a_wins && !out.b_wins)
    throw theorem_violation("neither attacked value crosses its threshold at kappa = " +
                            std::to_string(out.kappa));
  return out;
}

}  // namespace coinflip

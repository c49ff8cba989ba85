#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "coinflip/attack.hpp"
#include "coinflip/numerics.hpp"
#include "coinflip/oracles.hpp"

namespace coinflip {

// Same edges; from the first node in Small^δ ∪ Large^δ on each path, that node and
// its whole subtree belong to A (Large, checked first) or B (Small).
inline ProtocolTree ideal_pruned(const ProtocolTree& t, const Rational& delta) {
  require_defined(t);
  if (delta <= 0 || delta >= Rational(1, 2)) throw std::invalid_argument("ideal_pruned: delta must lie in (0,1/2)");
  auto v = visit_probs(t);
  auto val = node_values(t);
  ProtocolTree out = t;
  std::vector<std::optional<Party>> side(static_cast<std::size_t>(t.size()));
  for (int i : t.internals()) {
    auto ui = static_cast<std::size_t>(i);
    int p = t[i].parent;
    if (p >= 0 && side[static_cast<std::size_t>(p)]) {
      side[ui] = side[static_cast<std::size_t>(p)];
    } else if (v[ui] != 0) {
      if (val[ui] >= 1 - delta) side[ui] = Party::A;
      else if (val[ui] <= delta) side[ui] = Party::B;
    }
    if (side[ui]) out.set_ctrl(i, *side[ui]);
  }
  return out;
}

// Nodes of the prune frontier: reachable internal nodes in Small ∪ Large with no such proper prefix.
inline NodeSet prune_frontier(const ProtocolTree& t, const Rational& delta) {
  auto [lo, hi] = low_high_sets(t, delta);
  return frontier(set_union(lo, hi));
}

// ---- execution ----

// A party's move at u.
using Strategy = std::function<int(int, Rng&)>;

inline Strategy honest_strategy(const ProtocolTree& t) {
  auto tp = std::make_shared<const ProtocolTree>(t);
  auto edges = std::make_shared<const EdgeSampler>(*tp);
  return [tp, edges](int u, Rng& rng) { return edges->step(u, rng); };
}

inline Strategy hc_strategy(const ContinuationOracle& hc) {
  return [hc](int u, Rng& rng) { return hc.next_bit(u, rng); };
}

// Plays the edges of `t` (e.g. an attacked protocol) at every node it is asked about.
inline Strategy tree_strategy(const ProtocolTree& t) { return honest_strategy(t); }

inline Strategy approx_attacker_strategy(const BiasedContinuatorStack& stack) {
  return [stack](int u, Rng& rng) { return approx_recursive_attacker(stack, u, rng); };
}

struct EmpiricalValue {
  std::uint64_t runs = 0;
  std::uint64_t ones = 0;
  double mean = 0;
  double radius = 0;  // 99% Hoeffding radius
  std::vector<std::uint64_t> leaf_counts;

  double value() const { return mean; }
};

struct RunOptions {
  unsigned threads = 1;
  double confidence_gamma = 0.01;
};

// Runs (strategyA, strategyB) on the real control scheme of `t`. Run r uses the
// generator seeded by derive_seed(seed, r); totals are integer sums, so the result
// does not depend on the thread count.
inline EmpiricalValue empirical_value(const Strategy& a, const Strategy& b, const ProtocolTree& t,
                                      std::uint64_t n_runs, std::uint64_t seed, RunOptions opt = {}) {
  require_defined(t);
  if (n_runs < 1) throw std::invalid_argument("empirical_value: need at least one run");
  unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(n_runs)));
  std::vector<std::vector<std::uint64_t>> counts(threads, std::vector<std::uint64_t>(static_cast<std::size_t>(t.size())));
  auto work = [&](unsigned w) {
    auto& c = counts[w];
    for (std::uint64_t r = w; r < n_runs; r += threads) {
      Rng rng(derive_seed(seed, r));
      int u = 0;
      while (!t[u].leaf()) u = t[u].child[(t[u].ctrl == Party::A ? a : b)(u, rng)];
      ++c[static_cast<std::size_t>(u)];
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  EmpiricalValue out;
  out.runs = n_runs;
  out.leaf_counts.assign(static_cast<std::size_t>(t.size()), 0);
  for (const auto& c : counts)
    for (std::size_t i = 0; i < c.size(); ++i) out.leaf_counts[i] += c[i];
  for (int l : t.leaves())
    if (t[l].out == 1) out.ones += out.leaf_counts[static_cast<std::size_t>(l)];
  out.mean = static_cast<double>(out.ones) / static_cast<double>(n_runs);
  out.radius = hoeffding_radius(n_runs, opt.confidence_gamma);
  return out;
}

// SD between an empirical leaf histogram and an exact leaf distribution.
inline double empirical_sd(const ProtocolTree& t, const std::vector<std::uint64_t>& counts,
                           const std::vector<Rational>& exact) {
  std::uint64_t n = 0;
  for (int l : t.leaves()) n += counts[static_cast<std::size_t>(l)];
  double s = 0;
  for (int l : t.leaves()) {
    auto ul = static_cast<std::size_t>(l);
    s += std::abs(static_cast<double>(counts[ul]) / static_cast<double>(n) - to_double(exact[ul]));
  }
  return s / 2;
}

// Leaf distribution as a node-indexed vector.
inline std::vector<Rational> leaf_distribution(const ProtocolTree& t) {
  auto v = visit_probs(t);
  std::vector<Rational> out(v.size());
  for (int l : t.leaves()) out[static_cast<std::size_t>(l)] = v[static_cast<std::size_t>(l)];
  return out;
}

// ---- pruning in the head ----

// On u: honest (HC's next bit) once some prefix of u is in Small^{2δ,Est} ∪ Large^{2δ,Est};
// otherwise the level-k approximated attacker on the head protocol pruned at 2δ.
class PruningInHeadAttacker {
 public:
  PruningInHeadAttacker(const ContinuationOracle& hc, const EstimatorOracle& est, Party attacker, int k,
                        const Rational& xi, const Rational& delta)
      : stack_(HeadProtocol(hc, est, 2 * delta), attacker, xi, delta, k) {
    if (k < 1) throw std::invalid_argument("in-head attacker needs k >= 1");
  }

  int move(int u, Rng& rng) const {
    const HeadProtocol& head = stack_.head();
    if (head.prune_side(u)) return head.honest_step(u, rng);
    return approx_recursive_attacker(stack_, u, rng);
  }

  Strategy strategy() const {
    return [self = *this](int u, Rng& rng) { return self.move(u, rng); };
  }

  bool pruned(int u) const { return stack_.head().prune_side(u).has_value(); }
  const BiasedContinuatorStack& stack() const { return stack_; }

 private:
  BiasedContinuatorStack stack_;
};

inline PruningInHeadAttacker pruning_in_head_attacker(const ContinuationOracle& hc, const EstimatorOracle& est,
                                                      int k, const Rational& xi, const Rational& delta,
                                                      Party attacker = Party::A) {
  return PruningInHeadAttacker(hc, est, attacker, k, xi, delta);
}

struct SweepRow {
  Rational delta;
  double value = 0;
  double radius = 0;
  double prune_rate = 0;
};

struct SweepReport {
  Party attacker = Party::A;
  std::vector<SweepRow> rows;
  std::size_t best = 0;         // index of δ* in rows
  EmpiricalValue final;         // fresh runs at δ* (runs = 0 when skipped)
  std::uint64_t estimator_samples = 0;

  const Rational& best_delta() const { return rows.at(best).delta; }
};

struct SweepOptions {
  Party attacker = Party::A;
  std::uint64_t select_runs = 4000;   // runs per grid point
  std::uint64_t final_runs = 100000;  // runs at the chosen δ*
  std::uint64_t seed = 1;
  std::uint64_t estimator_seed = 2;
  std::uint64_t estimator_samples = 0;  // 0: the Hoeffding count for (m, ξ)
  RunOptions run;
};

// Pr[the run passed a pruned node], from the leaf histogram.
inline double prune_rate(const PruningInHeadAttacker& att, const ProtocolTree& t, const EmpiricalValue& ev) {
  std::uint64_t hit = 0;
  for (int l : t.leaves())
    if (att.pruned(l)) hit += ev.leaf_counts[static_cast<std::size_t>(l)];
  return static_cast<double>(hit) / static_cast<double>(ev.runs);
}

// Evaluates the in-head attacker at every grid threshold δ' = δ/2 + j·2ξ and keeps the
// best one (highest value for A, lowest for B). The honest opponent plays the true edges.
inline SweepReport threshold_sweep(const ProtocolTree& t, const Rational& delta, const Rational& xi, int k,
                                   const ContinuationOracle& hc, const SweepOptions& opt = {}) {
  require_defined(t);
  const int m = t.depth();
  if (xi <= 0 || xi >= 1 || delta <= 0 || delta > Rational(1, 2))
    throw std::invalid_argument("threshold_sweep: parameters out of range");
  if (Rational(16) * m * m * xi > delta * delta)
    throw std::invalid_argument("threshold_sweep: requires xi <= delta^2/(16 m^2)");
  auto grid = threshold_grid(m, delta, xi);
  if (grid.empty()) throw std::logic_error("threshold_sweep: empty grid");

  SweepReport rep;
  rep.attacker = opt.attacker;
  auto est = estimator_from_hc(hc, xi, opt.estimator_seed, opt.estimator_samples);
  rep.estimator_samples = opt.estimator_samples ? opt.estimator_samples : estimator_samples(m, xi);
  Strategy honest = honest_strategy(t);
  auto run = [&](const PruningInHeadAttacker& att, std::uint64_t n, std::uint64_t seed) {
    Strategy s = att.strategy();
    return opt.attacker == Party::A ? empirical_value(s, honest, t, n, seed, opt.run)
                                    : empirical_value(honest, s, t, n, seed, opt.run);
  };
  for (std::size_t j = 0; j < grid.size(); ++j) {
    PruningInHeadAttacker att(hc, est, opt.attacker, k, xi, grid[j]);
    auto ev = run(att, opt.select_runs, derive_seed(opt.seed, j));
    rep.rows.push_back({grid[j], ev.mean, ev.radius, prune_rate(att, t, ev)});
    const auto& b = rep.rows[rep.best];
    bool better = opt.attacker == Party::A ? ev.mean > b.value : ev.mean < b.value;
    if (better) rep.best = j;
  }
  if (opt.final_runs > 0) {
    PruningInHeadAttacker att(hc, est, opt.attacker, k, xi, rep.best_delta());
    rep.final = run(att, opt.final_runs, derive_seed(opt.seed, grid.size(), 1));
  }
  return rep;
}

}  // namespace coinflip

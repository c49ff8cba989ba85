#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "coinflip/core.hpp"
#include "coinflip/rng.hpp"

namespace coinflip {

// ---- tree helpers shared by the sampling code ----

// One past the last preorder index of each node's subtree.
inline std::vector<int> subtree_ends(const ProtocolTree& t) {
  std::vector<int> end(static_cast<std::size_t>(t.size()));
  for (int i = t.size() - 1; i >= 0; --i)
    end[static_cast<std::size_t>(i)] = t[i].leaf() ? i + 1 : end[static_cast<std::size_t>(t[i].child[1])];
  return end;
}

// ⟨Π_u⟩ as a node-indexed vector (non-zero only at leaves below u).
inline std::vector<Rational> continuation_law(const ProtocolTree& t, int u) {
  std::vector<Rational> p(static_cast<std::size_t>(t.size()));
  p[static_cast<std::size_t>(u)] = 1;
  int end = subtree_ends(t)[static_cast<std::size_t>(u)];
  for (int i = u; i < end; ++i) {
    const auto& n = t[i];
    if (n.leaf() || p[static_cast<std::size_t>(i)] == 0) continue;
    for (int b = 0; b < 2; ++b)
      p[static_cast<std::size_t>(n.child[b])] = p[static_cast<std::size_t>(i)] * n.edge[b];
    p[static_cast<std::size_t>(i)] = 0;
  }
  return p;
}

inline int next_bit_of(const ProtocolTree& t, int u, int leaf) {
  return t[leaf].id[static_cast<std::size_t>(t[u].depth())] - '0';
}

// ---- continuation oracles ----

// u -> a leaf in desc(u). Randomness comes from the caller's generator, so
// (seed, caller coins) fixes the answer.
class ContinuationOracle {
 public:
  using Sampler = std::function<int(int, Rng&)>;
  using Law = std::function<std::vector<Rational>(int)>;

  ContinuationOracle() = default;
  ContinuationOracle(std::shared_ptr<const ProtocolTree> tree, Sampler sampler, std::string backing, Law law = {})
      : s_(std::make_shared<State>()) {
    s_->tree = std::move(tree);
    s_->sampler = std::move(sampler);
    s_->backing = std::move(backing);
    s_->law = std::move(law);
  }

  int operator()(int u, Rng& rng) const {
    s_->calls.fetch_add(1, std::memory_order_relaxed);
    if (tree()[u].leaf()) return u;
    return s_->sampler(u, rng);
  }
  int operator()(const NodeId& u, Rng& rng) const { return (*this)(tree().index(u), rng); }

  int next_bit(int u, Rng& rng) const { return next_bit_of(tree(), u, (*this)(u, rng)); }

  const ProtocolTree& tree() const { return *s_->tree; }
  std::shared_ptr<const ProtocolTree> tree_ptr() const { return s_->tree; }
  const std::string& backing() const { return s_->backing; }
  bool has_law() const { return static_cast<bool>(s_->law); }
  // The exact answer distribution at u, when the backing can state it.
  std::vector<Rational> law(int u) const {
    if (!s_->law) throw std::logic_error("oracle has no closed-form law");
    if (tree()[u].leaf()) {
      std::vector<Rational> p(static_cast<std::size_t>(tree().size()));
      p[static_cast<std::size_t>(u)] = 1;
      return p;
    }
    return s_->law(u);
  }
  std::uint64_t calls() const { return s_->calls.load(std::memory_order_relaxed); }
  void reset_calls() const { s_->calls.store(0, std::memory_order_relaxed); }

 private:
  struct State {
    std::shared_ptr<const ProtocolTree> tree;
    Sampler sampler;
    Law law;
    std::string backing;
    std::atomic<std::uint64_t> calls{0};
  };
  std::shared_ptr<State> s_;
};

// Per-node Bernoulli(e(u,u0)) samplers for exact leaf walks.
class EdgeSampler {
 public:
  explicit EdgeSampler(const ProtocolTree& t) : t_(&t), zero_(static_cast<std::size_t>(t.size())) {
    for (int i : t.internals()) zero_[static_cast<std::size_t>(i)] = ExactBernoulli(t[i].edge[0]);
  }
  int step(int u, Rng& rng) const { return zero_[static_cast<std::size_t>(u)](rng) ? 0 : 1; }
  int walk(int u, Rng& rng) const {
    while (!(*t_)[u].leaf()) u = (*t_)[u].child[step(u, rng)];
    return u;
  }

 private:
  const ProtocolTree* t_;
  std::vector<ExactBernoulli> zero_;
};

inline ContinuationOracle honest_continuator_exact(const ProtocolTree& tree, std::uint64_t seed) {
  require_defined(tree);
  auto t = std::make_shared<const ProtocolTree>(tree);
  auto edges = std::make_shared<const EdgeSampler>(*t);
  auto sampler = [t, edges, seed](int u, Rng& rng) {
    Rng local(derive_seed(seed, rng()));
    return edges->walk(u, local);
  };
  auto law = [t](int u) { return continuation_law(*t, u); };
  return ContinuationOracle(t, sampler, "exact-sampler", law);
}

struct CorruptionEntry {
  NodeId node;
  std::string replacement;  // "uniform" or "fixed:<leaf>"
};
using CorruptionPlan = std::vector<CorruptionEntry>;

struct Replacement {
  bool uniform = true;
  NodeId leaf;
};

inline Replacement parse_replacement(const std::string& r) {
  if (r == "uniform") return {true, {}};
  if (r.rfind("fixed:", 0) == 0) return {false, r.substr(6)};
  throw std::invalid_argument("unknown replacement '" + r + "'");
}

// Reachable leaves in desc(u); all leaves of desc(u) if none is reachable.
inline std::vector<int> reachable_leaves_below(const ProtocolTree& t, int u) {
  auto v = visit_probs(t);
  int end = subtree_ends(t)[static_cast<std::size_t>(u)];
  std::vector<int> out, all;
  for (int i = u; i < end; ++i)
    if (t[i].leaf()) {
      all.push_back(i);
      if (v[static_cast<std::size_t>(i)] != 0) out.push_back(i);
    }
  return out.empty() ? all : out;
}

// Answers for nodes in desc(S) follow the plan; everywhere else the base answers.
// A fixed leaf that does not extend the query falls back to the base answer.
inline ContinuationOracle corrupted_continuator(const ContinuationOracle& base, const Rational& xi,
                                                const CorruptionPlan& plan) {
  if (xi <= 0 || xi >= 1) throw std::invalid_argument("corrupted_continuator: xi must lie in (0,1)");
  const ProtocolTree& t = base.tree();
  NodeSet s;
  std::map<int, Replacement> by_node;
  for (const auto& e : plan) {
    int i = t.index(e.node);
    auto r = parse_replacement(e.replacement);
    if (!r.uniform) {
      int l = t.index(r.leaf);
      if (!t[l].leaf() || !is_prefix(e.node, r.leaf))
        throw std::invalid_argument("fixed replacement '" + r.leaf + "' is not a leaf below " + e.node);
    }
    s.insert(e.node);
    by_node[i] = r;
  }
  Rational mass = prob_desc(t, s);
  if (mass > xi)
    throw std::invalid_argument("corruption mass " + to_string(mass) + " exceeds xi = " + to_string(xi));

  // owner[u]: the plan node governing u (its closest planned ancestor), or -1.
  auto owner = std::make_shared<std::vector<int>>(static_cast<std::size_t>(t.size()), -1);
  for (int i = 0; i < t.size(); ++i) {
    if (by_node.count(i)) (*owner)[static_cast<std::size_t>(i)] = i;
    else if (t[i].parent >= 0) (*owner)[static_cast<std::size_t>(i)] = (*owner)[static_cast<std::size_t>(t[i].parent)];
  }
  auto reps = std::make_shared<std::map<int, Replacement>>(std::move(by_node));
  auto tp = base.tree_ptr();
  auto pools = std::make_shared<std::vector<std::vector<int>>>(static_cast<std::size_t>(t.size()));
  for (int i = 0; i < t.size(); ++i)
    if ((*owner)[static_cast<std::size_t>(i)] >= 0 && !t[i].leaf())
      (*pools)[static_cast<std::size_t>(i)] = reachable_leaves_below(t, i);

  auto pick = [tp, owner, reps](int u) -> std::optional<const Replacement*> {
    int o = (*owner)[static_cast<std::size_t>(u)];
    if (o < 0) return std::nullopt;
    const Replacement* r = &reps->at(o);
    if (!r->uniform && !is_prefix((*tp)[u].id, r->leaf)) return std::nullopt;
    return r;
  };
  auto sampler = [base, tp, pools, pick](int u, Rng& rng) {
    auto r = pick(u);
    if (!r) return base(u, rng);
    if (!(*r)->uniform) return tp->index((*r)->leaf);
    const auto& pool = (*pools)[static_cast<std::size_t>(u)];
    return pool[static_cast<std::size_t>(uniform_below(rng, pool.size()))];
  };
  ContinuationOracle::Law law;
  if (base.has_law()) {
    law = [base, tp, pools, pick](int u) {
      auto r = pick(u);
      if (!r) return base.law(u);
      std::vector<Rational> p(static_cast<std::size_t>(tp->size()));
      if (!(*r)->uniform) {
        p[static_cast<std::size_t>(tp->index((*r)->leaf))] = 1;
      } else {
        const auto& pool = (*pools)[static_cast<std::size_t>(u)];
        for (int l : pool) p[static_cast<std::size_t>(l)] = Rational(1, static_cast<long>(pool.size()));
      }
      return p;
    };
  }
  return ContinuationOracle(tp, sampler, "corrupted", law);
}

// Pr_{ℓ←⟨Π⟩}[∃ prefix u of ℓ (internal): SD(HC(u), ⟨Π_u⟩) > ξ], exact; needs a closed-form law.
inline Rational continuator_failure_mass(const ContinuationOracle& hc, const Rational& xi) {
  const ProtocolTree& t = hc.tree();
  auto v = visit_probs(t);
  std::vector<char> bad(static_cast<std::size_t>(t.size()), 0);
  for (int i = 0; i < t.size(); ++i) {
    auto ui = static_cast<std::size_t>(i);
    if (t[i].parent >= 0 && bad[static_cast<std::size_t>(t[i].parent)]) bad[ui] = 1;
    if (bad[ui] || t[i].leaf() || v[ui] == 0) continue;
    auto got = hc.law(i);
    auto want = continuation_law(t, i);
    Rational sd;
    for (std::size_t j = 0; j < got.size(); ++j) sd += abs(got[j] - want[j]);
    if (sd / 2 > xi) bad[ui] = 1;
  }
  Rational mass;
  for (int l : t.leaves())
    if (bad[static_cast<std::size_t>(l)]) mass += v[static_cast<std::size_t>(l)];
  return mass;
}

// ---- biased continuation from an honest continuator ----

// Least t with (1-δ)^t <= ξ, i.e. ⌈log(1/ξ)/log(1/(1-δ))⌉.
inline int retry_bound(const Rational& xi, const Rational& delta) {
  if (xi <= 0 || xi >= 1 || delta <= 0 || delta >= 1)
    throw std::invalid_argument("retry_bound: xi and delta must lie in (0,1)");
  Rational q = 1 - delta;
  double guess = std::log(to_double(xi)) / std::log(to_double(q));
  long n = std::max(0L, static_cast<long>(std::ceil(guess)));
  while (n > 0 && pow(q, static_cast<unsigned long>(n - 1)) <= xi) --n;
  while (pow(q, static_cast<unsigned long>(n)) > xi) ++n;
  return static_cast<int>(n);
}

struct TraceRecord {
  int level = 0;
  NodeId node;
  int tries = 0;
  std::optional<int> result;  // next bit, or ⊥
};
using TraceSink = std::function<void(const TraceRecord&)>;

// Rejection sampling: up to t continuations from `source`, return the first step of
// one whose output is b, else ⊥.
class BiasedContinuator {
 public:
  using Source = std::function<int(int, Rng&)>;

  BiasedContinuator(std::shared_ptr<const ProtocolTree> tree, Source source, int tries)
      : tree_(std::move(tree)), source_(std::move(source)), tries_(tries) {}

  std::optional<int> operator()(int u, int b, Rng& rng) const {
    for (int i = 0; i < tries_; ++i) {
      int l = source_(u, rng);
      if ((*tree_)[l].out == b) return next_bit_of(*tree_, u, l);
    }
    return std::nullopt;
  }

  int tries() const { return tries_; }

 private:
  std::shared_ptr<const ProtocolTree> tree_;
  Source source_;
  int tries_;
};

inline BiasedContinuator biased_cont_from_hc(const ContinuationOracle& hc, const Rational& xi,
                                             const Rational& delta) {
  return BiasedContinuator(hc.tree_ptr(), [hc](int u, Rng& rng) { return hc(u, rng); }, retry_bound(xi, delta));
}

// ---- estimator ----

// ⌈ln(2^m/ξ) / (ξ²/2)⌉
inline std::uint64_t estimator_samples(int m, const Rational& xi) {
  if (xi <= 0 || xi >= 1) throw std::invalid_argument("estimator: xi must lie in (0,1)");
  long double x = to_long_double(xi);
  long double s = (m * std::log(2.0L) - std::log(x)) / (x * x / 2);
  return static_cast<std::uint64_t>(std::ceil(s));
}

// Deterministic node -> [0,1]. Values are memoized; concurrent queries are safe.
class EstimatorOracle {
 public:
  using Fn = std::function<Rational(int)>;

  EstimatorOracle() = default;
  EstimatorOracle(std::shared_ptr<const ProtocolTree> tree, Fn fn) : s_(std::make_shared<State>()) {
    s_->tree = std::move(tree);
    s_->fn = std::move(fn);
  }

  Rational operator()(int u) const {
    {
      std::lock_guard<std::mutex> lock(s_->mu);
      auto it = s_->cache.find(u);
      if (it != s_->cache.end()) return it->second;
    }
    Rational r = s_->fn(u);
    std::lock_guard<std::mutex> lock(s_->mu);
    s_->evaluations++;
    return s_->cache.emplace(u, std::move(r)).first->second;
  }
  Rational operator()(const NodeId& u) const { return (*this)(tree().index(u)); }

  const ProtocolTree& tree() const { return *s_->tree; }
  std::uint64_t evaluations() const {
    std::lock_guard<std::mutex> lock(s_->mu);
    return s_->evaluations;
  }

 private:
  struct State {
    std::shared_ptr<const ProtocolTree> tree;
    Fn fn;
    mutable std::mutex mu;
    std::map<int, Rational> cache;
    std::uint64_t evaluations = 0;
  };
  std::shared_ptr<State> s_;
};

// Est(u) = (1/s)·Σ_j χ(HC(u)) with the j-th call's coins keyed by (coin_seed, u, j).
// `samples` overrides s (0 = use the formula).
inline EstimatorOracle estimator_from_hc(const ContinuationOracle& hc, const Rational& xi, std::uint64_t coin_seed,
                                         std::uint64_t samples = 0) {
  auto tp = hc.tree_ptr();
  std::uint64_t s = samples ? samples : estimator_samples(tp->depth(), xi);
  auto fn = [hc, tp, s, coin_seed](int u) {
    std::uint64_t key = derive_seed(coin_seed, hash_path((*tp)[u].id));
    std::uint64_t sum = 0;
    for (std::uint64_t j = 0; j < s; ++j) {
      Rng rng(derive_seed(key, j));
      sum += static_cast<std::uint64_t>((*tp)[hc(u, rng)].out);
    }
    Rational r(Integer(static_cast<unsigned long>(sum)), Integer(static_cast<unsigned long>(s)));
    r.canonicalize();
    return r;
  };
  return EstimatorOracle(tp, fn);
}

// Est(u) = val(Π_u), with 0 on unreachable nodes.
inline EstimatorOracle exact_estimator(const ProtocolTree& tree) {
  auto tp = std::make_shared<const ProtocolTree>(tree);
  auto v = visit_probs(*tp);
  auto val = node_values(*tp);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == 0) val[i] = 0;
  auto table = std::make_shared<std::vector<Rational>>(std::move(val));
  return EstimatorOracle(tp, [table](int u) { return (*table)[static_cast<std::size_t>(u)]; });
}

// Pr_{ℓ←⟨Π⟩}[∃ internal prefix u of ℓ: |Est(u) - val(Π_u)| > ξ], exact.
inline Rational estimator_failure_mass(const EstimatorOracle& est, const Rational& xi) {
  const ProtocolTree& t = est.tree();
  auto v = visit_probs(t);
  auto val = node_values(t);
  std::vector<char> bad(static_cast<std::size_t>(t.size()), 0);
  for (int i = 0; i < t.size(); ++i) {
    auto ui = static_cast<std::size_t>(i);
    if (t[i].parent >= 0 && bad[static_cast<std::size_t>(t[i].parent)]) bad[ui] = 1;
    if (bad[ui] || t[i].leaf() || v[ui] == 0) continue;
    if (abs(est(i) - val[ui]) > xi) bad[ui] = 1;
  }
  Rational mass;
  for (int l : t.leaves())
    if (bad[static_cast<std::size_t>(l)]) mass += v[static_cast<std::size_t>(l)];
  return mass;
}

// ---- oracle-driven (approximately pruned) protocol ----

// Every move is the next bit of HC(u). With an estimator, control passes to A at the
// first prefix with Est >= 1-δ, or to B at the first prefix with Est <= δ (A checked first).
class HeadProtocol {
 public:
  HeadProtocol(ContinuationOracle hc, std::optional<EstimatorOracle> est = std::nullopt, Rational delta = 0)
      : hc_(std::move(hc)), est_(std::move(est)), delta_(std::move(delta)), cache_(std::make_shared<Cache>()) {
    cache_->status.assign(static_cast<std::size_t>(tree().size()), kUnknown);
  }

  const ProtocolTree& tree() const { return hc_.tree(); }
  const ContinuationOracle& hc() const { return hc_; }
  const std::optional<EstimatorOracle>& estimator() const { return est_; }
  const Rational& threshold() const { return delta_; }

  // Side that took control at the first pruned prefix of u (u included), if any.
  std::optional<Party> prune_side(int u) const {
    std::int8_t s = status(u);
    if (s == kNone) return std::nullopt;
    return s == kA ? Party::A : Party::B;
  }

  Party controller(int u) const {
    auto p = prune_side(u);
    return p ? *p : tree()[u].ctrl;
  }

  int honest_step(int u, Rng& rng) const { return hc_.next_bit(u, rng); }

  // The explicit control scheme this protocol induces.
  ProtocolTree control_tree() const {
    ProtocolTree out = tree();
    for (int i : out.internals()) out.set_ctrl(i, controller(i));
    return out;
  }

 private:
  static constexpr std::int8_t kUnknown = -1, kNone = 0, kA = 1, kB = 2;
  struct Cache {
    std::mutex mu;
    std::vector<std::int8_t> status;
  };

  std::int8_t own_status(int u) const {
    if (!est_ || tree()[u].leaf()) return kNone;
    Rational e = (*est_)(u);
    if (e >= 1 - delta_) return kA;
    if (e <= delta_) return kB;
    return kNone;
  }

  std::int8_t status(int u) const {
    {
      std::lock_guard<std::mutex> lock(cache_->mu);
      std::int8_t s = cache_->status[static_cast<std::size_t>(u)];
      if (s != kUnknown) return s;
    }
    int p = tree()[u].parent;
    std::int8_t s = p >= 0 ? status(p) : kNone;
    if (s == kNone) s = own_status(u);
    std::lock_guard<std::mutex> lock(cache_->mu);
    cache_->status[static_cast<std::size_t>(u)] = s;
    return s;
  }

  ContinuationOracle hc_;
  std::optional<EstimatorOracle> est_;
  Rational delta_;
  std::shared_ptr<Cache> cache_;
};

inline HeadProtocol approx_pruned(const ContinuationOracle& hc, const EstimatorOracle& est, const Rational& delta) {
  return HeadProtocol(hc, est, delta);
}

// Exact leaf law of the oracle-driven protocol, from the oracle's closed-form law.
inline std::vector<Rational> head_leaf_law(const HeadProtocol& head) {
  const ProtocolTree& t = head.tree();
  std::vector<Rational> p(static_cast<std::size_t>(t.size()));
  p[0] = 1;
  for (int i : t.internals()) {
    auto ui = static_cast<std::size_t>(i);
    if (p[ui] == 0) continue;
    auto law = head.hc().law(i);
    Rational zero;
    for (std::size_t l = 0; l < law.size(); ++l)
      if (law[l] != 0 && next_bit_of(t, i, static_cast<int>(l)) == 0) zero += law[l];
    p[static_cast<std::size_t>(t[i].child[0])] = p[ui] * zero;
    p[static_cast<std::size_t>(t[i].child[1])] = p[ui] * (1 - zero);
    p[ui] = 0;
  }
  return p;
}

// ---- biased-continuators sequence ----

struct StackCounters {
  std::atomic<std::uint64_t> queries{0};
  std::atomic<std::uint64_t> bottoms{0};
};

// D^(i)(u,b) rejection-samples full re-executions from u of level i of the head
// protocol, in which the attacker's moves are D^(i-1)(·, target) (D^(-1): honest).
// ⊥ from D^(i-1) means an honest step.
class BiasedContinuatorStack {
 public:
  BiasedContinuatorStack(HeadProtocol head, Party attacker, const Rational& xi, const Rational& delta, int k)
      : head_(std::move(head)), attacker_(attacker), k_(k), tries_(retry_bound(xi, delta)),
        counters_(std::make_shared<StackCounters>()) {
    if (k < 0) throw std::invalid_argument("stack depth must be non-negative");
  }

  const HeadProtocol& head() const { return head_; }
  Party attacker() const { return attacker_; }
  int target() const { return attacker_ == Party::A ? 1 : 0; }
  int depth() const { return k_; }
  int tries() const { return tries_; }
  const StackCounters& counters() const { return *counters_; }
  void set_trace(TraceSink sink) { trace_ = std::move(sink); }

  std::optional<int> query(int level, int u, int b, Rng& rng) const {
    if (level < 0 || level > k_) throw std::out_of_range("stack level out of range");
    const ProtocolTree& t = head_.tree();
    counters_->queries.fetch_add(1, std::memory_order_relaxed);
    std::optional<int> out;
    int i = 0;
    while (i < tries_) {
      ++i;
      int l = run(level, u, rng);
      if (t[l].out == b) {
        out = next_bit_of(t, u, l);
        break;
      }
    }
    if (!out) counters_->bottoms.fetch_add(1, std::memory_order_relaxed);
    if (trace_) trace_({level, t[u].id, i, out});
    return out;
  }

  // The level-i attacker's message at u (level 0: honest).
  int attacker_move(int level, int u, Rng& rng) const {
    if (level > 0) {
      auto m = query(level - 1, u, target(), rng);
      if (m) return *m;
    }
    return head_.honest_step(u, rng);
  }

  // Leaf reached by executing level i of the head protocol from u.
  int run(int level, int u, Rng& rng) const {
    const ProtocolTree& t = head_.tree();
    while (!t[u].leaf()) {
      int bit = head_.controller(u) == attacker_ ? attacker_move(level, u, rng) : head_.honest_step(u, rng);
      u = t[u].child[bit];
    }
    return u;
  }

 private:
  HeadProtocol head_;
  Party attacker_;
  int k_;
  int tries_;
  std::shared_ptr<StackCounters> counters_;
  TraceSink trace_;
};

// D^(0..k) over the (δ, Est, HC)-pruned head protocol; pass no estimator for the unpruned one.
inline BiasedContinuatorStack build_bc_stack(const ContinuationOracle& hc, std::optional<EstimatorOracle> est,
                                             const Rational& prune_threshold, const Rational& xi,
                                             const Rational& delta, int k, Party attacker = Party::A) {
  return BiasedContinuatorStack(HeadProtocol(hc, std::move(est), prune_threshold), attacker, xi, delta, k);
}

// A^(k,ξ,δ) at u: D^(k-1)(u, target), honest on ⊥.
inline int approx_recursive_attacker(const BiasedContinuatorStack& stack, int u, Rng& rng) {
  return stack.attacker_move(stack.depth(), u, rng);
}

}  // namespace coinflip

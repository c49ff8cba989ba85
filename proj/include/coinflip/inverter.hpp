#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coinflip/oracles.hpp"
#include "coinflip/pruning.hpp"

namespace coinflip {

// Each party owns a tape of `width`-bit words; its j-th controlled node on the
// execution path reads word j and sends 0 iff word < e(u,u0)·2^width.
struct TapeLayout {
  int width = 0;
  int words_a = 0;
  int words_b = 0;
  std::vector<std::uint64_t> thresholds;  // per node: e(u,u0)·2^width

  int words(Party p) const { return p == Party::A ? words_a : words_b; }
  std::uint64_t word_range() const { return std::uint64_t{1} << width; }
  std::uint64_t bits(Party p) const { return static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(words(p)); }
};

struct CoinTapes {
  std::vector<std::uint64_t> a;
  std::vector<std::uint64_t> b;

  std::vector<std::uint64_t>& of(Party p) { return p == Party::A ? a : b; }
  const std::vector<std::uint64_t>& of(Party p) const { return p == Party::A ? a : b; }
  bool operator==(const CoinTapes&) const = default;
  auto operator<=>(const CoinTapes&) const = default;
};

inline bool is_dyadic(const ProtocolTree& t) {
  for (int i : t.internals())
    if (!is_dyadic(t[i].edge[0]) || !is_dyadic(t[i].edge[1])) return false;
  return true;
}

inline TapeLayout tape_layout(const ProtocolTree& t) {
  require_defined(t);
  if (!is_dyadic(t)) throw std::invalid_argument("explicit-tape path requires dyadic edges");
  TapeLayout lay;
  for (int i : t.internals())
    for (int b = 0; b < 2; ++b) {
      int bits = static_cast<int>(mpz_sizeinbase(t[i].edge[b].get_den().get_mpz_t(), 2)) - 1;
      lay.width = std::max(lay.width, bits);
    }
  lay.width = std::max(lay.width, 1);
  if (lay.width > 62) throw std::invalid_argument("coin width above 62 bits");
  // Most controlled nodes of each party on one root-leaf path.
  std::vector<std::array<int, 2>> cnt(static_cast<std::size_t>(t.size()));
  for (int i : t.internals()) {
    auto c = cnt[static_cast<std::size_t>(i)];
    c[static_cast<int>(t[i].ctrl)]++;
    for (int b = 0; b < 2; ++b) cnt[static_cast<std::size_t>(t[i].child[b])] = c;
  }
  lay.thresholds.assign(static_cast<std::size_t>(t.size()), 0);
  Rational range(Integer(static_cast<unsigned long>(lay.word_range())));
  for (int i : t.internals()) {
    Rational x = t[i].edge[0] * range;
    lay.thresholds[static_cast<std::size_t>(i)] = x.get_num().get_ui();
  }
  for (int l : t.leaves()) {
    lay.words_a = std::max(lay.words_a, cnt[static_cast<std::size_t>(l)][0]);
    lay.words_b = std::max(lay.words_b, cnt[static_cast<std::size_t>(l)][1]);
  }
  return lay;
}

inline std::uint64_t zero_threshold(const ProtocolTree&, int u, const TapeLayout& lay) {
  return lay.thresholds[static_cast<std::size_t>(u)];
}

// Leaf reached from the root under the tapes.
inline int replay(const ProtocolTree& t, const TapeLayout& lay, const CoinTapes& tapes) {
  std::array<int, 2> used{0, 0};
  int u = 0;
  while (!t[u].leaf()) {
    Party p = t[u].ctrl;
    std::uint64_t w = tapes.of(p).at(static_cast<std::size_t>(used[static_cast<int>(p)]++));
    u = t[u].child[w < zero_threshold(t, u, lay) ? 0 : 1];
  }
  return u;
}

// The first i messages of the execution under (r_A, r_B); shorter if a leaf comes first.
inline NodeId transcript_function(const ProtocolTree& t, const CoinTapes& tapes, int i) {
  auto lay = tape_layout(t);
  if (i < 0 || i > t.depth()) throw std::invalid_argument("transcript length out of range");
  const NodeId& leaf = t[replay(t, lay, tapes)].id;
  return leaf.substr(0, std::min<std::size_t>(leaf.size(), static_cast<std::size_t>(i)));
}

// Uniform tapes among those whose execution passes through u.
inline CoinTapes sample_consistent_tapes(const ProtocolTree& t, const TapeLayout& lay, int u, Rng& rng) {
  CoinTapes out;
  out.a.resize(static_cast<std::size_t>(lay.words_a));
  out.b.resize(static_cast<std::size_t>(lay.words_b));
  std::vector<int> path;
  for (int w = u; w >= 0; w = t[w].parent) path.push_back(w);
  std::array<std::size_t, 2> used{0, 0};
  for (std::size_t k = path.size(); k-- > 1;) {
    int w = path[k];
    int bit = t[path[k - 1]].id.back() - '0';
    std::uint64_t thr = zero_threshold(t, w, lay);
    std::uint64_t lo = bit == 0 ? 0 : thr, hi = bit == 0 ? thr : lay.word_range();
    if (lo >= hi) throw std::domain_error("node '" + t[u].id + "' is unreachable");
    Party p = t[w].ctrl;
    out.of(p)[used[static_cast<int>(p)]++] = lo + uniform_below(rng, hi - lo);
  }
  for (Party p : {Party::A, Party::B})
    for (std::size_t j = used[static_cast<int>(p)]; j < out.of(p).size(); ++j)
      out.of(p)[j] = uniform_below(rng, lay.word_range());
  return out;
}

// An inverter answer: tapes for dyadic trees, otherwise the continuation leaf itself.
struct InverterAnswer {
  std::optional<CoinTapes> tapes;
  int leaf = -1;
};

class InverterOracle {
 public:
  using Fn = std::function<InverterAnswer(int, Rng&)>;
  using Law = std::function<std::vector<Rational>(int)>;

  InverterOracle(std::shared_ptr<const ProtocolTree> tree, std::optional<TapeLayout> layout, Fn fn, Law law,
                 std::string fidelity, Rational mass)
      : tree_(std::move(tree)), layout_(layout), fn_(std::move(fn)), law_(std::move(law)),
        fidelity_(std::move(fidelity)), mass_(std::move(mass)) {
    auto v = visit_probs(*tree_);
    for (const auto& x : v) reachable_.push_back(x != 0);
  }

  InverterAnswer operator()(int u, Rng& rng) const {
    if (!reachable_[static_cast<std::size_t>(u)])
      throw std::domain_error("node '" + (*tree_)[u].id + "' is unreachable");
    return fn_(u, rng);
  }

  const ProtocolTree& tree() const { return *tree_; }
  std::shared_ptr<const ProtocolTree> tree_ptr() const { return tree_; }
  const std::optional<TapeLayout>& layout() const { return layout_; }
  // Law of the continuation leaf f_u(Inv(u)).
  std::vector<Rational> leaf_law(int u) const { return law_(u); }
  const std::string& fidelity() const { return fidelity_; }
  // Pr_{i, ℓ←⟨Π⟩}[ℓ_{1..i} is a corrupted image], with i uniform over the m prefix lengths.
  const Rational& mass() const { return mass_; }

 private:
  std::shared_ptr<const ProtocolTree> tree_;
  std::optional<TapeLayout> layout_;
  Fn fn_;
  Law law_;
  std::string fidelity_;
  Rational mass_;
  std::vector<bool> reachable_;
};

inline InverterOracle perfect_inverter(const ProtocolTree& tree, std::uint64_t seed) {
  require_defined(tree);
  auto tp = std::make_shared<const ProtocolTree>(tree);
  std::optional<TapeLayout> lay;
  if (is_dyadic(*tp)) lay = tape_layout(*tp);
  auto edges = std::make_shared<const EdgeSampler>(*tp);
  auto fn = [tp, lay, edges, seed](int u, Rng& rng) {
    Rng local(derive_seed(seed, rng()));
    InverterAnswer a;
    if (lay) a.tapes = sample_consistent_tapes(*tp, *lay, u, local);
    else a.leaf = edges->walk(u, local);
    return a;
  };
  auto law = [tp](int u) { return continuation_law(*tp, u); };
  return InverterOracle(tp, lay, fn, law, "perfect", 0);
}

// Perfect except on the planned images u ∈ S, which are answered with tapes for a
// replacement leaf (uniform reachable leaf below u, or a fixed one).
inline InverterOracle degraded_inverter(const ProtocolTree& tree, const CorruptionPlan& plan, const Rational& xi,
                                        std::uint64_t seed) {
  require_defined(tree);
  auto tp = std::make_shared<const ProtocolTree>(tree);
  std::optional<TapeLayout> lay;
  if (is_dyadic(*tp)) lay = tape_layout(*tp);
  auto v = visit_probs(*tp);
  auto reps = std::make_shared<std::map<int, std::vector<int>>>();  // u -> replacement leaf pool
  Rational mass;
  for (const auto& e : plan) {
    int u = tp->index(e.node);
    if ((*tp)[u].leaf()) throw std::invalid_argument("degradation plan names a leaf: " + e.node);
    auto r = parse_replacement(e.replacement);
    if (r.uniform) {
      (*reps)[u] = reachable_leaves_below(*tp, u);
    } else {
      int l = tp->index(r.leaf);
      if (!(*tp)[l].leaf() || !is_prefix(e.node, r.leaf))
        throw std::invalid_argument("fixed replacement '" + r.leaf + "' is not a leaf below " + e.node);
      (*reps)[u] = {l};
    }
  }
  for (const auto& [u, pool] : *reps) mass += v[static_cast<std::size_t>(u)];
  if (tp->depth() > 0) mass /= tp->depth();
  if (mass > xi)
    throw std::invalid_argument("inverter corruption mass " + to_string(mass) + " exceeds xi = " + to_string(xi));
  auto edges = std::make_shared<const EdgeSampler>(*tp);
  auto fn = [tp, lay, edges, reps, seed](int u, Rng& rng) {
    Rng local(derive_seed(seed, rng()));
    InverterAnswer a;
    int target = u;
    auto it = reps->find(u);
    if (it != reps->end()) target = it->second[static_cast<std::size_t>(uniform_below(local, it->second.size()))];
    if (lay) a.tapes = sample_consistent_tapes(*tp, *lay, target, local);
    else a.leaf = edges->walk(target, local);
    return a;
  };
  auto law = [tp, reps](int u) {
    auto it = reps->find(u);
    if (it == reps->end()) return continuation_law(*tp, u);
    std::vector<Rational> p(static_cast<std::size_t>(tp->size()));
    for (int l : it->second) p[static_cast<std::size_t>(l)] += Rational(1, static_cast<long>(it->second.size()));
    return p;
  };
  return InverterOracle(tp, lay, fn, law, "degraded", mass);
}

// HC(u) = f_u(Inv(u)): replay the tapes the inverter returns for u.
inline ContinuationOracle hc_from_inverter(const InverterOracle& inv) {
  auto tp = inv.tree_ptr();
  auto sampler = [inv, tp](int u, Rng& rng) {
    auto a = inv(u, rng);
    if (!a.tapes) return a.leaf;
    return replay(*tp, *inv.layout(), *a.tapes);
  };
  auto law = [inv](int u) { return inv.leaf_law(u); };
  return ContinuationOracle(tp, sampler, "derived-from-inverter", law);
}

struct EndToEndOptions {
  int k = 3;
  Rational delta{1, 4};
  Rational xi;  // 0: δ²/(16m²)
  SweepOptions sweep;
  std::uint64_t inverter_seed = 3;
  std::optional<CorruptionPlan> degradation;
  Rational degradation_xi{1, 2};  // budget the degraded inverter is checked against
};

struct EndToEndReport {
  Rational eps;
  Party side = Party::A;
  bool success = false;
  double value = 0;
  double radius = 0;
  Rational xi;
  std::string fidelity;
  Rational inverter_mass;
  std::vector<SweepReport> sweeps;  // A side, then B side when tried
};

// Inverter -> honest continuator -> threshold sweep of the in-head attacker.
// The A side runs first; the B side only when A misses 1-ε.
inline EndToEndReport end_to_end_attack(const ProtocolTree& tree, const Rational& eps, EndToEndOptions opt = {}) {
  require_defined(tree);
  if (eps <= 0 || eps > Rational(1, 2)) throw std::invalid_argument("end_to_end_attack: eps must lie in (0,1/2]");
  const int m = tree.depth();
  EndToEndReport rep;
  rep.eps = eps;
  rep.xi = opt.xi != 0 ? opt.xi : opt.delta * opt.delta / (16 * std::max(1, m * m));
  auto inv = opt.degradation ? degraded_inverter(tree, *opt.degradation, opt.degradation_xi, opt.inverter_seed)
                             : perfect_inverter(tree, opt.inverter_seed);
  rep.fidelity = inv.fidelity();
  rep.inverter_mass = inv.mass();
  auto hc = hc_from_inverter(inv);
  for (Party side : {Party::A, Party::B}) {
    SweepOptions so = opt.sweep;
    so.attacker = side;
    auto sw = threshold_sweep(tree, opt.delta, rep.xi, opt.k, hc, so);
    bool fresh = sw.final.runs > 0;
    double value = fresh ? sw.final.mean : sw.rows[sw.best].value;
    double radius = fresh ? sw.final.radius : sw.rows[sw.best].radius;
    rep.sweeps.push_back(std::move(sw));
    rep.side = side;
    rep.value = value;
    rep.radius = radius;
    rep.success = side == Party::A ? value >= to_double(1 - eps) : value <= to_double(eps);
    if (rep.success) break;
  }
  return rep;
}

}  // namespace coinflip

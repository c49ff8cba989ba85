#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "coinflip/core.hpp"

namespace coinflip {

struct BestValues {
  Rational best_a;
  Rational best_b;
};

// Backward induction for the optimal valid attackers. Best(⊥) = 1 for both parties.
inline BestValues best_valid(const ProtocolTree& t) {
  if (t.is_bottom()) return {1, 1};
  auto v = visit_probs(t);
  std::vector<Rational> ba(static_cast<std::size_t>(t.size())), bb(ba.size());
  for (int i = t.size() - 1; i >= 0; --i) {
    auto ui = static_cast<std::size_t>(i);
    if (v[ui] == 0) continue;
    const auto& n = t[i];
    if (n.leaf()) {
      ba[ui] = n.out;
      bb[ui] = 1 - n.out;
      continue;
    }
    auto c0 = static_cast<std::size_t>(n.child[0]), c1 = static_cast<std::size_t>(n.child[1]);
    Rational avg_a = n.edge[0] * ba[c0] + n.edge[1] * ba[c1];
    Rational avg_b = n.edge[0] * bb[c0] + n.edge[1] * bb[c1];
    auto best_of = [&](const std::vector<Rational>& x) {
      if (n.edge[0] == 0) return x[c1];
      if (n.edge[1] == 0) return x[c0];
      return std::max(x[c0], x[c1]);
    };
    ba[ui] = n.ctrl == Party::A ? best_of(ba) : avg_a;
    bb[ui] = n.ctrl == Party::B ? best_of(bb) : avg_b;
  }
  return {ba[0], bb[0]};
}

struct DominatedMeasure {
  Party party = Party::A;
  LeafMeasure measure;
};

// The party's dominated measure, via the four-case recursion on the root edges.
// factor[c] scales the child's own dominated measure; the final leaf value is the
// product of factors along the path times the base value (χ for A, 1-χ for B).
inline DominatedMeasure dominated_measure(const ProtocolTree& t, Party party) {
  DominatedMeasure out{party, LeafMeasure::zeros(t)};
  if (t.is_bottom()) return out;
  auto v = visit_probs(t);
  const auto n_nodes = static_cast<std::size_t>(t.size());
  std::vector<Rational> expect(n_nodes), factor(n_nodes);
  for (int i = t.size() - 1; i >= 0; --i) {
    auto ui = static_cast<std::size_t>(i);
    if (v[ui] == 0) continue;
    const auto& n = t[i];
    if (n.leaf()) {
      expect[ui] = party == Party::A ? n.out : 1 - n.out;
      continue;
    }
    Rational s;
    for (int b = 0; b < 2; ++b) {
      auto c = static_cast<std::size_t>(n.child[b]);
      auto d = static_cast<std::size_t>(n.child[1 - b]);
      const Rational& e = n.edge[b];
      if (e == 0) {
        factor[c] = 0;
      } else if (e == 1) {
        factor[c] = 1;
      } else if (n.ctrl == party || expect[c] <= expect[d]) {
        factor[c] = 1;
      } else {
        factor[c] = expect[d] / expect[c];
      }
      if (e != 0) s += e * factor[c] * expect[c];
    }
    expect[ui] = s;
  }
  std::vector<Rational> scale(n_nodes);
  scale[0] = 1;
  for (int i : t.internals()) {
    const auto& n = t[i];
    for (int b = 0; b < 2; ++b) {
      auto c = static_cast<std::size_t>(n.child[b]);
      scale[c] = v[c] == 0 ? Rational(0) : Rational(scale[static_cast<std::size_t>(i)] * factor[c]);
    }
  }
  for (int l : t.leaves()) {
    auto ul = static_cast<std::size_t>(l);
    if (v[ul] == 0) continue;
    out.measure[l] = scale[ul] * (party == Party::A ? t[l].out : 1 - t[l].out);
  }
  return out;
}

// Π|¬M. ⊥ (keeping the shape) when E[M] = 1 or Π = ⊥.
inline ProtocolTree conditional_protocol(const ProtocolTree& t, const LeafMeasure& m) {
  if (t.is_bottom()) return t;
  auto em = sub_expectations(t, m);
  if (em[0] == 1) return t.as_bottom();
  auto v = visit_probs(t);
  ProtocolTree out = t;
  for (int i : t.internals()) {
    auto ui = static_cast<std::size_t>(i);
    if (v[ui] == 0) continue;
    const auto& n = t[i];
    if (em[ui] == 1) {
      out.set_edges(i, 0, 0);
      continue;
    }
    Rational denom = 1 - em[ui];
    Rational e0 = n.edge[0] * (1 - em[static_cast<std::size_t>(n.child[0])]) / denom;
    Rational e1 = n.edge[1] * (1 - em[static_cast<std::size_t>(n.child[1])]) / denom;
    out.set_edges(i, std::move(e0), std::move(e1));
  }
  return out;
}

// (C, j) under (A,0) < (B,0) < (A,1) < ...
struct SequenceIndex {
  Party party = Party::A;
  int j = 0;

  int ordinal() const { return 2 * j + (party == Party::B ? 1 : 0); }
  static SequenceIndex from_ordinal(int o) { return {o % 2 ? Party::B : Party::A, o / 2}; }
  SequenceIndex succ() const { return from_ordinal(ordinal() + 1); }
  SequenceIndex pred() const {
    if (ordinal() == 0) throw std::out_of_range("(A,0) has no predecessor");
    return from_ordinal(ordinal() - 1);
  }
  auto operator<=>(const SequenceIndex& o) const { return ordinal() <=> o.ordinal(); }
  bool operator==(const SequenceIndex& o) const { return ordinal() == o.ordinal(); }
  std::string str() const { return std::string("(") + party_char(party) + "," + std::to_string(j) + ")"; }
};

struct SequenceEntry {
  SequenceIndex index;
  ProtocolTree protocol;
  DominatedMeasure measure;
  Rational expectation;  // E_{⟨Π_(C,j)⟩}[M_(C,j)]
};

struct DominatedSequence {
  std::vector<SequenceEntry> entries;
  bool terminal = false;  // some entry became ⊥

  const SequenceEntry& at(SequenceIndex i) const { return entries.at(static_cast<std::size_t>(i.ordinal())); }
};

// Materializes Π_(A,0) = Π, Π_(C,j) = pred | ¬M_pred, up to and including `up_to`.
inline DominatedSequence dominated_sequence(const ProtocolTree& t, SequenceIndex up_to) {
  require_defined(t);
  DominatedSequence seq;
  ProtocolTree cur = t;
  for (int o = 0; o <= up_to.ordinal(); ++o) {
    auto idx = SequenceIndex::from_ordinal(o);
    auto dm = dominated_measure(cur, idx.party);
    Rational e = measure_expectation(cur, dm.measure);
    if (cur.is_bottom()) seq.terminal = true;
    ProtocolTree next = conditional_protocol(cur, dm.measure);
    seq.entries.push_back({idx, std::move(cur), std::move(dm), std::move(e)});
    cur = std::move(next);
  }
  return seq;
}

// M^C_z(ℓ) = Σ_{j<=z} M_(C,j)(ℓ) Π_{t<j} (1 - M_(C,t)(ℓ)).
inline LeafMeasure combined_measure(const ProtocolTree& t, const DominatedSequence& seq, Party party, int z) {
  if (z < 0) throw std::invalid_argument("z must be non-negative");
  auto out = LeafMeasure::zeros(t);
  for (int l : t.leaves()) {
    Rational keep = 1, s;
    for (int j = 0; j <= z; ++j) {
      const Rational& mj = seq.at({party, j}).measure.measure[l];
      s += mj * keep;
      keep *= 1 - mj;
    }
    out[l] = s;
  }
  return out;
}

inline LeafMeasure combined_measure(const ProtocolTree& t, Party party, int z) {
  auto seq = dominated_sequence(t, {party, z});
  return combined_measure(t, seq, party, z);
}

// α_j = 1 - Best_B(Π_(A,j)),  β_j = 1 - Best_A(Π_(B,j)).
inline Rational alpha_of(const DominatedSequence& seq, int j) {
  return 1 - best_valid(seq.at({Party::A, j}).protocol).best_b;
}
inline Rational beta_of(const DominatedSequence& seq, int j) {
  return 1 - best_valid(seq.at({Party::B, j}).protocol).best_a;
}

struct FindZResult {
  Party party = Party::A;  // A: first case (A side), B: second case
  int z = 0;
  Rational expectation;    // E_{⟨Π⟩}[M^party_z]
  Rational other_sum;      // Σ_{j<z} β_j (A side) or Σ_{j<=z} α_j (B side)
};

// Minimal z where the partial α or β sum reaches c (α checked first).
inline FindZResult find_z(const ProtocolTree& t, const Rational& c) {
  require_defined(t);
  if (c <= 0 || c > Rational(1, 2)) throw std::invalid_argument("find_z: c must lie in (0, 1/2]");
  const long cap = 1L << std::min(t.depth() + 2, 40);
  DominatedSequence seq;
  ProtocolTree cur = t;
  Rational sa, sb;
  for (long z = 0; z <= cap; ++z) {
    for (Party p : {Party::A, Party::B}) {
      auto dm = dominated_measure(cur, p);
      Rational e = measure_expectation(cur, dm.measure);
      ProtocolTree next = conditional_protocol(cur, dm.measure);
      seq.entries.push_back({{p, static_cast<int>(z)}, std::move(cur), std::move(dm), std::move(e)});
      cur = std::move(next);
    }
    Rational a = alpha_of(seq, static_cast<int>(z)), b = beta_of(seq, static_cast<int>(z));
    Rational sb_before = sb;
    sa += a;
    sb += b;
    if (sa >= c) {
      auto m = combined_measure(t, seq, Party::A, static_cast<int>(z));
      return {Party::A, static_cast<int>(z), measure_expectation(t, m), sb_before};
    }
    if (sb >= c) {
      auto m = combined_measure(t, seq, Party::B, static_cast<int>(z));
      return {Party::B, static_cast<int>(z), measure_expectation(t, m), sa};
    }
  }
  throw std::runtime_error("find_z: no index found below the cap 2^(m+2)");
}

}  // namespace coinflip

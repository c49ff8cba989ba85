#include <gtest/gtest.h>

#include "coinflip/coinflip.hpp"
#include "support/oracle.hpp"

using namespace coinflip;

namespace {

const ProtocolTree E2 = oracle::e2();

Rational R(long n, long d = 1) { return make_rational(n, d); }

ProtocolTree single_leaf(int out) { return TreeBuilder().leaf("", out).build(); }

LeafMeasure restrict_to(const ProtocolTree& t, const LeafMeasure& m, const NodeId& u, const ProtocolTree& sub) {
  auto out = LeafMeasure::zeros(sub);
  for (int l : sub.leaves()) out[l] = m[t.index(u + sub[l].id)];
  return out;
}

}  // namespace

TEST(BestValid, Examples) {
  auto b = best_valid(E2);
  EXPECT_EQ(b.best_a, 1);
  EXPECT_EQ(b.best_b, R(3, 4));
  EXPECT_EQ(best_valid(single_leaf(1)).best_a, 1);
  EXPECT_EQ(best_valid(single_leaf(1)).best_b, 0);
  EXPECT_EQ(best_valid(single_leaf(0)).best_a, 0);
  EXPECT_EQ(best_valid(single_leaf(0)).best_b, 1);
  auto bot = best_valid(ProtocolTree::bottom());
  EXPECT_EQ(bot.best_a, 1);
  EXPECT_EQ(bot.best_b, 1);
}

TEST(BestValid, MatchesStrategyEnumerationOnDepthTwoGrid) {
  for (int m = 1; m <= 2; ++m)
    oracle::for_each_complete_tree(m, oracle::quarter_grid(), [](const ProtocolTree& t) {
      auto b = best_valid(t);
      ASSERT_EQ(b.best_a, oracle::best_by_enumeration(t, Party::A));
      ASSERT_EQ(b.best_b, oracle::best_by_enumeration(t, Party::B));
    });
}

TEST(DominatedMeasure, ExampleProtocol) {
  auto m = dominated_measure(E2, Party::A).measure;
  EXPECT_EQ(m[E2.index("00")], 1);
  EXPECT_EQ(m[E2.index("10")], R(1, 2));
  EXPECT_EQ(m[E2.index("010")], 0);
  EXPECT_EQ(m[E2.index("011")], 0);
  EXPECT_EQ(m[E2.index("11")], 0);
}

// The symbolic example family with α0=1/4, α1=1/2, β=1/2, β01=1/2 is the example protocol.
TEST(DominatedMeasure, InstantiatedFamily) {
  auto t = TreeBuilder()
               .internal("", Party::B, R(1, 2))
               .internal("0", Party::A, R(1, 4))
               .internal("1", Party::A, R(1, 2))
               .internal("01", Party::B, R(1, 2))
               .leaf("00", 1)
               .leaf("010", 0)
               .leaf("011", 1)
               .leaf("10", 1)
               .leaf("11", 0)
               .build();
  auto m = dominated_measure(t, Party::A).measure;
  std::map<NodeId, Rational> want{{"00", 1}, {"10", R(1, 2)}, {"010", 0}, {"011", 0}, {"11", 0}};
  for (const auto& [id, w] : want) EXPECT_EQ(m[t.index(id)], w) << id;
}

TEST(DominatedMeasure, AllOnesTree) {
  auto t = complete_tree(
      3, [](const NodeId& u) { return u.size() % 2 ? Party::A : Party::B; }, [](const NodeId&) { return R(1, 3); },
      [](const NodeId&) { return 1; });
  auto m = dominated_measure(t, Party::A).measure;
  for (int l : t.leaves()) EXPECT_EQ(m[l], 1);
}

TEST(DominatedMeasure, SupportAndRange) {
  Rng rng(3);
  for (int i = 0; i < 150; ++i) {
    auto t = random_audit_tree(rng, 5);
    for (Party p : {Party::A, Party::B}) {
      auto m = dominated_measure(t, p).measure;
      int target = p == Party::A ? 1 : 0;
      for (int l : t.leaves()) {
        ASSERT_GE(m[l], 0);
        ASSERT_LE(m[l], 1);
        if (t[l].out != target) ASSERT_EQ(m[l], 0);
      }
    }
  }
}

TEST(Conditional, ExampleProtocol) {
  auto c = conditional_protocol(E2, dominated_measure(E2, Party::A).measure);
  EXPECT_EQ(c[c.index("")].edge[0], R(1, 2));
  EXPECT_EQ(c[c.index("0")].edge[0], 0);
  EXPECT_EQ(c[c.index("0")].edge[1], 1);
  EXPECT_EQ(c[c.index("1")].edge[0], R(1, 3));
  EXPECT_EQ(c[c.index("1")].edge[1], R(2, 3));
}

TEST(Conditional, ZeroMeasureIsIdentity) { EXPECT_EQ(conditional_protocol(E2, LeafMeasure::zeros(E2)), E2); }

TEST(Conditional, OutputMeasureLeavesOnlyZeroLeaves) {
  auto c = conditional_protocol(E2, output_measure(E2));
  auto law = oracle::leaf_law(c);
  for (const auto& [l, p] : law)
    if (E2[E2.index(l)].out == 1) EXPECT_EQ(p, 0) << l;
  EXPECT_EQ(oracle::value(c), 0);
}

TEST(Conditional, FullMeasureGivesBottom) {
  auto m = LeafMeasure::zeros(E2);
  for (int l : E2.leaves()) m[l] = 1;
  EXPECT_TRUE(conditional_protocol(E2, m).is_bottom());
}

// Restricting the conditional protocol to a subtree equals conditioning the sub-protocol.
TEST(Conditional, LocalityOnRandomTrees) {
  Rng rng(9);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    auto t = random_audit_tree(rng, 4);
    auto m = dominated_measure(t, Party::A).measure;
    auto c = conditional_protocol(t, m);
    if (c.is_bottom()) continue;
    for (int u : t.internals()) {
      auto cu = sub_protocol(c, t[u].id);
      if (cu.is_bottom()) continue;
      auto su = sub_protocol(t, t[u].id);
      ASSERT_EQ(cu, conditional_protocol(su, restrict_to(t, m, t[u].id, su))) << t[u].id;
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Sequence, ExampleUpToB0) {
  auto seq = dominated_sequence(E2, {Party::B, 0});
  ASSERT_EQ(seq.entries.size(), 2u);
  EXPECT_EQ(seq.entries[0].protocol, E2);
  const auto& b0 = seq.entries[1];
  EXPECT_EQ(b0.protocol, conditional_protocol(E2, dominated_measure(E2, Party::A).measure));
  for (int l : E2.leaves()) EXPECT_EQ(b0.measure.measure[l], E2[l].id == "010" ? 1 : 0) << E2[l].id;
}

TEST(Sequence, SingleOneLeafTerminates) {
  auto seq = dominated_sequence(single_leaf(1), {Party::B, 0});
  EXPECT_TRUE(seq.entries[1].protocol.is_bottom());
  EXPECT_TRUE(seq.terminal);
}

TEST(Sequence, IndexOrder) {
  SequenceIndex a0{Party::A, 0}, b0{Party::B, 0}, a1{Party::A, 1};
  EXPECT_LT(a0, b0);
  EXPECT_LT(b0, a1);
  EXPECT_EQ(a0.succ(), b0);
  EXPECT_EQ(a1.pred(), b0);
  EXPECT_THROW(a0.pred(), std::out_of_range);
}

// Some dominated measure in the sequence reaches expectation 1 (depth ≤ 2 exhaustive).
TEST(Sequence, HitsExpectationOne) {
  for (int m = 1; m <= 2; ++m)
    oracle::for_each_complete_tree(m, oracle::quarter_grid(), [&](const ProtocolTree& t) {
      auto seq = dominated_sequence(t, SequenceIndex::from_ordinal(1 << (m + 3)));
      bool hit = false;
      for (const auto& e : seq.entries) hit = hit || (!e.protocol.is_bottom() && e.expectation == 1);
      ASSERT_TRUE(hit);
    });
}

TEST(Combined, ZAndOne) {
  auto seq = dominated_sequence(E2, {Party::B, 1});
  EXPECT_EQ(combined_measure(E2, seq, Party::A, 0), dominated_measure(E2, Party::A).measure);
  auto m1 = combined_measure(E2, seq, Party::A, 1);
  const auto& a0 = seq.at({Party::A, 0}).measure.measure;
  const auto& a1 = seq.at({Party::A, 1}).measure.measure;
  for (int l : E2.leaves()) EXPECT_EQ(m1[l], a0[l] + a1[l] * (1 - a0[l]));
}

TEST(Combined, ExpectationIdentityOnRandomTrees) {
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    auto t = random_audit_tree(rng, 5);
    auto seq = dominated_sequence(t, {Party::B, 3});
    auto law = oracle::leaf_law(t);
    for (int z = 0; z <= 3; ++z) {
      auto m = combined_measure(t, seq, Party::A, z);
      Rational lhs, rhs, keep = 1;
      for (const auto& [l, p] : law) lhs += p * m[t.index(l)];
      for (int j = 0; j <= z; ++j) {
        rhs += alpha_of(seq, j) * keep;
        keep *= (1 - beta_of(seq, j)) * (1 - alpha_of(seq, j));
      }
      ASSERT_EQ(lhs, rhs) << "tree " << i << " z " << z;
    }
  }
}

TEST(FindZ, Examples) {
  auto r = find_z(E2, R(1, 4));
  EXPECT_EQ(r.party, Party::A);
  EXPECT_EQ(r.z, 0);
  auto s = find_z(single_leaf(0), R(1, 3));
  EXPECT_EQ(s.party, Party::B);
  EXPECT_EQ(s.z, 0);
  EXPECT_THROW(find_z(E2, R(3, 4)), std::invalid_argument);
}

TEST(FindZ, TerminatesOnGrid) {
  for (int m = 1; m <= 2; ++m)
    oracle::for_each_complete_tree(m, oracle::quarter_grid(), [](const ProtocolTree& t) {
      for (const auto& c : {R(1, 8), R(1, 4), R(1, 2)}) ASSERT_NO_THROW(find_z(t, c));
    });
  int n = 0;
  oracle::for_each_depth3_tree(oracle::quarter_grid(), 5, [&](const ProtocolTree& t) {
    if (n++ % 16) return;  // every 16th depth-3 tree
    for (const auto& c : {R(1, 8), R(1, 4), R(1, 2)}) ASSERT_NO_THROW(find_z(t, c));
  });
}

#include <gtest/gtest.h>

#include <cmath>

#include "coinflip/coinflip.hpp"
#include "support/oracle.hpp"

using namespace coinflip;

namespace {

const ProtocolTree E2 = oracle::e2();

Rational R(long n, long d = 1) { return make_rational(n, d); }

}  // namespace

TEST(IdealPruned, ExampleAtTwoFifths) {
  auto p = ideal_pruned(E2, R(2, 5));
  EXPECT_EQ(leaf_statistical_distance(E2, p), 0);
  EXPECT_EQ(prune_frontier(E2, R(2, 5)), NodeSet{"0"});
  EXPECT_EQ(p[p.index("0")].ctrl, Party::A);
  EXPECT_EQ(p[p.index("01")].ctrl, Party::A);
  EXPECT_EQ(p[p.index("1")].ctrl, Party::A);
  EXPECT_EQ(p[p.index("")].ctrl, Party::B);
}

TEST(IdealPruned, ThresholdRange) {
  EXPECT_THROW(ideal_pruned(E2, R(0)), std::invalid_argument);
  EXPECT_THROW(ideal_pruned(E2, R(1, 2)), std::invalid_argument);
  EXPECT_THROW(ideal_pruned(ProtocolTree::bottom(), R(1, 4)), undefined_protocol);
}

// Same leaf law; control unchanged above the frontier; Large frontier nodes go to A, Small to B.
TEST(IdealPruned, InvariantsOnRandomTrees) {
  Rng rng(51);
  for (int i = 0; i < 200; ++i) {
    auto t = random_audit_tree(rng, 6);
    for (const auto& d : {R(1, 10), R(1, 4), R(2, 5)}) {
      auto p = ideal_pruned(t, d);
      ASSERT_EQ(leaf_statistical_distance(t, p), 0);
      auto front = prune_frontier(t, d);
      for (int u : t.internals()) {
        const NodeId& id = t[u].id;
        NodeId hit;
        bool below = false;
        for (const auto& f : front)
          if (is_prefix(f, id)) below = true, hit = f;
        if (!below) {
          ASSERT_EQ(p[u].ctrl, t[u].ctrl) << id;
          continue;
        }
        Rational v = node_value(t, hit);
        ASSERT_EQ(p[u].ctrl, v >= 1 - d ? Party::A : Party::B) << id;
      }
    }
  }
}

TEST(Empirical, HonestExampleValue) {
  auto s = honest_strategy(E2);
  auto ev = empirical_value(s, s, E2, 100000, 61);
  EXPECT_LE(ev.radius, 0.0054);
  EXPECT_NEAR(ev.mean, 9.0 / 16, 0.0054);
  EXPECT_LE(empirical_sd(E2, ev.leaf_counts, leaf_distribution(E2)), 0.01);
}

TEST(Empirical, ThreadCountDoesNotChangeResults) {
  auto s = honest_strategy(E2);
  auto one = empirical_value(s, s, E2, 5000, 62, {1, 0.01});
  auto three = empirical_value(s, s, E2, 5000, 62, {3, 0.01});
  EXPECT_EQ(one.leaf_counts, three.leaf_counts);
  EXPECT_THROW(empirical_value(s, s, E2, 0, 1), std::invalid_argument);
}

TEST(InHead, ExampleLevelTwoReachesThreeQuarters) {
  auto hc = honest_continuator_exact(E2, 63);
  auto est = estimator_from_hc(hc, R(1, 1000), 64, 20000);
  PruningInHeadAttacker att(hc, est, Party::A, 2, R(1, 1000), R(1, 20));
  auto ev = empirical_value(att.strategy(), honest_strategy(E2), E2, 20000, 65);
  EXPECT_GE(ev.mean, 0.75);
}

TEST(InHead, LargeRootPlaysHonestly) {
  auto t = complete_tree(
      2, [](const NodeId& u) { return u.empty() ? Party::A : Party::B; }, [](const NodeId&) { return R(1, 4); },
      [](const NodeId&) { return 1; });
  auto hc = honest_continuator_exact(t, 66);
  PruningInHeadAttacker att(hc, exact_estimator(t), Party::A, 1, R(1, 1000), R(1, 10));
  EXPECT_TRUE(att.pruned(0));
  auto ev = empirical_value(att.strategy(), honest_strategy(t), t, 20000, 67);
  EXPECT_LE(empirical_sd(t, ev.leaf_counts, leaf_distribution(t)), 0.02);
  EXPECT_THROW(PruningInHeadAttacker(hc, exact_estimator(t), Party::A, 0, R(1, 1000), R(1, 10)),
               std::invalid_argument);
}

TEST(Sweep, RowCountAndPreconditions) {
  auto hc = honest_continuator_exact(E2, 68);
  const Rational delta = R(1, 4), xi = delta * delta / 144;
  SweepOptions so;
  so.select_runs = 50;
  so.final_runs = 200;
  so.estimator_samples = 200;
  auto rep = threshold_sweep(E2, delta, xi, 1, hc, so);
  EXPECT_EQ(rep.rows.size(), threshold_grid(3, delta, xi).size());
  EXPECT_EQ(rep.final.runs, 200u);
  EXPECT_EQ(rep.estimator_samples, 200u);
  for (const auto& r : rep.rows) EXPECT_LE(r.value, rep.rows[rep.best].value);
  EXPECT_THROW(threshold_sweep(E2, delta, 2 * xi, 1, hc, so), std::invalid_argument);
}

TEST(Sweep, SideB) {
  auto hc = honest_continuator_exact(E2, 69);
  const Rational delta = R(1, 4), xi = delta * delta / 144;
  SweepOptions so;
  so.attacker = Party::B;
  so.select_runs = 50;
  so.final_runs = 0;
  so.estimator_samples = 200;
  auto rep = threshold_sweep(E2, delta, xi, 1, hc, so);
  EXPECT_EQ(rep.final.runs, 0u);
  for (const auto& r : rep.rows) EXPECT_GE(r.value, rep.rows[rep.best].value);
}

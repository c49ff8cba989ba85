#include <gtest/gtest.h>

#include <cmath>

#include "coinflip/coinflip.hpp"
#include "support/oracle.hpp"

using namespace coinflip;

namespace {

const ProtocolTree E2 = oracle::e2();

Rational R(long n, long d = 1) { return make_rational(n, d); }

}  // namespace

TEST(HonestContinuator, RootFrequenciesWithinThreeSigma) {
  auto hc = honest_continuator_exact(E2, 11);
  Rng rng(12);
  const int n = 20000;
  std::map<NodeId, int> hits;
  for (int i = 0; i < n; ++i) ++hits[E2[hc(0, rng)].id];
  for (const auto& [l, p] : oracle::leaf_law(E2)) {
    double q = to_double(p);
    double sigma = std::sqrt(q * (1 - q) / n);
    EXPECT_NEAR(static_cast<double>(hits[l]) / n, q, 3 * sigma) << l;
  }
}

TEST(HonestContinuator, LeafQueryReturnsTheLeaf) {
  auto hc = honest_continuator_exact(E2, 1);
  Rng rng(1);
  int l = E2.index("011");
  EXPECT_EQ(hc(l, rng), l);
  EXPECT_EQ(continuator_failure_mass(hc, R(1, 100)), 0);
}

TEST(Corrupted, PlanValidation) {
  auto hc = honest_continuator_exact(E2, 1);
  EXPECT_THROW(corrupted_continuator(hc, R(1, 4), {{"0", "uniform"}}), std::invalid_argument);
  EXPECT_THROW(corrupted_continuator(hc, R(1, 2), {{"01", "fixed:10"}}), std::invalid_argument);
  EXPECT_THROW(corrupted_continuator(hc, R(1, 2), {{"01", "sideways"}}), std::invalid_argument);
}

TEST(Corrupted, FailureMassOfFixedReplacement) {
  auto hc = honest_continuator_exact(E2, 1);
  auto bad = corrupted_continuator(hc, R(1, 2), {{"01", "fixed:010"}});
  EXPECT_EQ(continuator_failure_mass(bad, R(1, 4)), R(3, 8));
  Rng rng(2);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(bad(E2.index("01"), rng), E2.index("010"));
  // uniform over two equally likely leaves is exact
  auto uni = corrupted_continuator(hc, R(1, 2), {{"01", "uniform"}});
  EXPECT_EQ(continuator_failure_mass(uni, R(1, 100)), 0);
}

TEST(RetryBound, Examples) {
  EXPECT_EQ(retry_bound(R(1, 16), R(1, 2)), 4);
  EXPECT_EQ(retry_bound(R(1, 1000), R(1, 10)), 66);
  EXPECT_THROW(retry_bound(R(0), R(1, 2)), std::invalid_argument);
}

TEST(BiasedFromHc, TracksIdealBiasedContinuation) {
  auto hc = honest_continuator_exact(E2, 3);
  auto bc = biased_cont_from_hc(hc, R(1, 1000), R(1, 10));
  Rng rng(4);
  const int n = 20000;
  int zero = 0, bottom = 0;
  int u = E2.index("0");
  for (int i = 0; i < n; ++i) {
    auto r = bc(u, 1, rng);
    if (!r) ++bottom;
    else if (*r == 0) ++zero;
  }
  double p0 = static_cast<double>(zero) / n, p1 = static_cast<double>(n - zero - bottom) / n;
  auto want = ideal_biased_cont(E2, "0", 1);
  double sd = (std::abs(p0 - to_double(want[0])) + std::abs(p1 - to_double(want[1])) +
               static_cast<double>(bottom) / n) / 2;
  EXPECT_LE(sd, 0.02);
}

TEST(Estimator, SampleCount) {
  EXPECT_EQ(estimator_samples(6, R(1, 5)), 289u);
  EXPECT_THROW(estimator_samples(3, R(0)), std::invalid_argument);
}

TEST(Estimator, ParentOfTwoOneLeaves) {
  auto t = TreeBuilder().internal("", Party::A, R(1, 3)).leaf("0", 1).leaf("1", 1).build();
  auto est = estimator_from_hc(honest_continuator_exact(t, 5), R(1, 5), 6);
  EXPECT_EQ(est(0), 1);
}

TEST(Estimator, DeterministicAndMemoized) {
  auto hc = honest_continuator_exact(E2, 7);
  auto a = estimator_from_hc(hc, R(1, 5), 8, 500);
  auto b = estimator_from_hc(hc, R(1, 5), 8, 500);
  for (int u : E2.internals()) EXPECT_EQ(a(u), b(u));
  auto before = a.evaluations();
  for (int u : E2.internals()) a(u);
  EXPECT_EQ(a.evaluations(), before);
}

TEST(Estimator, XiEstimatorOnExample) {
  auto est = estimator_from_hc(honest_continuator_exact(E2, 9), R(1, 5), 10);
  EXPECT_LE(estimator_failure_mass(est, R(1, 5)), R(1, 5));
  EXPECT_EQ(estimator_failure_mass(exact_estimator(E2), R(1, 1000)), 0);
}

TEST(Stack, LevelOneMatchesIdealAttack) {
  auto hc = honest_continuator_exact(E2, 13);
  auto stack = build_bc_stack(hc, std::nullopt, 0, R(1, 1000), R(1, 10), 1);
  auto ev = empirical_value(approx_attacker_strategy(stack), honest_strategy(E2), E2, 20000, 14);
  auto want = leaf_distribution(attacked_protocol(E2, {Party::A, 1}).derived());
  EXPECT_LE(empirical_sd(E2, ev.leaf_counts, want), 0.05);
}

// One level-k move makes at most Σ_{j<k} (t·m)^j oracle queries.
TEST(Stack, QueryCountBound) {
  auto hc = honest_continuator_exact(E2, 15);
  const int m = E2.depth();
  for (int k = 1; k <= 3; ++k) {
    auto stack = build_bc_stack(hc, std::nullopt, 0, R(1, 16), R(1, 2), k);
    const double tm = stack.tries() * m;
    double bound = 0;
    for (int j = 0; j < k; ++j) bound += std::pow(tm, j);
    Rng rng(16);
    std::uint64_t prev = 0;
    for (int r = 0; r < 200; ++r) {
      approx_recursive_attacker(stack, E2.index("0"), rng);
      std::uint64_t q = stack.counters().queries.load();
      ASSERT_LE(static_cast<double>(q - prev), bound) << "k " << k;
      prev = q;
    }
  }
}

TEST(Stack, TraceRecordsEveryQuery) {
  auto hc = honest_continuator_exact(E2, 17);
  auto stack = build_bc_stack(hc, std::nullopt, 0, R(1, 16), R(1, 2), 2);
  std::vector<TraceRecord> seen;
  stack.set_trace([&](const TraceRecord& r) { seen.push_back(r); });
  Rng rng(18);
  approx_recursive_attacker(stack, 0, rng);
  EXPECT_EQ(seen.size(), stack.counters().queries.load());
  for (const auto& r : seen) EXPECT_LE(r.tries, stack.tries());
}

TEST(Head, ExactEstimatorPruningMatchesIdealControl) {
  Rng rng(19);
  for (int i = 0; i < 80; ++i) {
    auto t = random_audit_tree(rng, 5);
    for (const auto& d : {R(1, 10), R(1, 4)}) {
      auto head = approx_pruned(honest_continuator_exact(t, 1), exact_estimator(t), d);
      auto ideal = ideal_pruned(t, d);
      auto v = visit_probs(t);
      for (int u : t.internals())
        if (v[static_cast<std::size_t>(u)] != 0) ASSERT_EQ(head.controller(u), ideal[u].ctrl) << i << " " << t[u].id;
      ASSERT_EQ(oracle::sd_vec(head_leaf_law(head), leaf_distribution(t)), 0);
    }
  }
}

#pragma once

// Self-check suites behind `coinflip_lab verify`.

#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "coinflip/coinflip.hpp"
#include "coinflip/io.hpp"

namespace lab {

using namespace coinflip;

struct Check {
  std::string suite;
  std::string name;
  bool gating = true;
  bool pass = false;
  std::string detail;
};

struct SuiteContext {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::vector<Check>* out = nullptr;
  std::string suite;

  void add(std::string name, bool pass, std::string detail, bool gating = true) const {
    out->push_back({suite, std::move(name), gating, pass, std::move(detail)});
  }
};

inline ProtocolTree e2() {
  return TreeBuilder()
      .internal("", Party::B, make_rational(1, 2))
      .internal("0", Party::A, make_rational(1, 4))
      .internal("01", Party::B, make_rational(1, 2))
      .internal("1", Party::A, make_rational(1, 2))
      .leaf("00", 1)
      .leaf("010", 0)
      .leaf("011", 1)
      .leaf("10", 1)
      .leaf("11", 0)
      .build();
}

// Every complete tree of depth m over the edge grid, every control scheme and labeling.
inline void for_each_grid_tree(int m, const std::vector<Rational>& grid, const std::function<void(const ProtocolTree&)>& f) {
  const int internal = (1 << m) - 1, leaves = 1 << m;
  long edges = 1;
  for (int i = 0; i < internal; ++i) edges *= static_cast<long>(grid.size());
  for (long ctrl = 0; ctrl < (1L << internal); ++ctrl)
    for (long e = 0; e < edges; ++e)
      for (long lab = 0; lab < (1L << leaves); ++lab) {
        int ii = 0, li = 0;
        long ee = e;
        TreeBuilder b;
        std::function<void(const NodeId&)> rec = [&](const NodeId& u) {
          if (static_cast<int>(u.size()) == m) {
            b.leaf(u, static_cast<int>((lab >> li++) & 1));
            return;
          }
          Party p = (ctrl >> ii++) & 1 ? Party::B : Party::A;
          b.internal(u, p, grid[static_cast<std::size_t>(ee % static_cast<long>(grid.size()))]);
          ee /= static_cast<long>(grid.size());
          rec(u + "0");
          rec(u + "1");
        };
        rec("");
        f(b.build());
      }
}

// Every control scheme and labeling of depth 3; the seven edges are drawn from `grid`
// with a generator keyed on (seed, ctrl, labeling).
inline void for_each_depth3_tree(const std::vector<Rational>& grid, std::uint64_t seed,
                                 const std::function<void(const ProtocolTree&)>& f) {
  for (std::uint64_t ctrl = 0; ctrl < 128; ++ctrl)
    for (std::uint64_t lab = 0; lab < 256; ++lab) {
      Rng rng(derive_seed(seed, ctrl, lab));
      int ii = 0, li = 0;
      TreeBuilder b;
      std::function<void(const NodeId&)> rec = [&](const NodeId& u) {
        if (u.size() == 3) {
          b.leaf(u, static_cast<int>((lab >> li++) & 1));
          return;
        }
        Party p = (ctrl >> ii++) & 1 ? Party::B : Party::A;
        b.internal(u, p, grid[static_cast<std::size_t>(uniform_below(rng, grid.size()))]);
        rec(u + "0");
        rec(u + "1");
      };
      rec("");
      f(b.build());
    }
}

inline std::vector<Rational> quarter_grid() { return {make_rational(1, 4), make_rational(1, 2), make_rational(3, 4)}; }

inline void suite_core(const SuiteContext& c) {
  auto t = e2();
  c.add("e2 validates", validate(t).empty(), "violations=" + std::to_string(validate(t).size()));
  c.add("e2 value", value(t) == Rational(9, 16), "val=" + to_string(value(t)));
  auto p = TreeBuilder().internal("", Party::A, make_rational(1, 2)).leaf("0", 0).leaf("1", 1).build();
  auto q = TreeBuilder().internal("", Party::A, make_rational(3, 4)).leaf("0", 0).leaf("1", 1).build();
  Rational sd = leaf_statistical_distance(p, q);
  c.add("leaf SD (1/2,1/2) vs (3/4,1/4)", sd == Rational(1, 4), "sd=" + to_string(sd));

  Rng rng(derive_seed(c.seed, 1));
  long bad = 0;
  for (int i = 0; i < 200; ++i) {
    auto r = random_audit_tree(rng, 5);
    auto v = visit_probs(r);
    Rational mass, weighted;
    for (int l : r.leaves()) {
      mass += v[static_cast<std::size_t>(l)];
      weighted += v[static_cast<std::size_t>(l)] * r[l].out;
    }
    if (mass != 1 || weighted != value(r)) ++bad;
  }
  c.add("leaf mass 1 and val = E[chi] on 200 random trees", bad == 0, "violations=" + std::to_string(bad));
}

inline void suite_dominated(const SuiteContext& c) {
  long trees = 0, bad_perfect = 0, bad_exp = 0, bad_switch = 0, bad_cond = 0;
  auto check = [&](const ProtocolTree& t) {
    ++trees;
    auto best = best_valid(t);
    if ((best.best_a == 1) == (best.best_b == 1)) ++bad_perfect;
    auto ma = dominated_measure(t, Party::A), mb = dominated_measure(t, Party::B);
    if (best.best_b != 1 - measure_expectation(t, ma.measure)) ++bad_exp;
    if (best.best_a != 1 - measure_expectation(t, mb.measure)) ++bad_exp;
    auto cond = conditional_protocol(t, ma.measure);
    if (value(t) < 1 && best_valid(cond).best_b != 1) ++bad_switch;
    Rational e = measure_expectation(t, ma.measure);
    if (e != 1) {
      auto v = visit_probs(t), vc = visit_probs(cond);
      for (int l : t.leaves()) {
        auto ul = static_cast<std::size_t>(l);
        if (vc[ul] != v[ul] * (1 - ma.measure[l]) / (1 - e)) {
          ++bad_cond;
          break;
        }
      }
    } else if (!cond.is_bottom()) {
      ++bad_cond;
    }
  };
  auto report = [&](const std::string& name) {
    std::ostringstream os;
    os << "trees=" << trees << " perfect=" << bad_perfect << " expectation=" << bad_exp << " switch=" << bad_switch
       << " conditional=" << bad_cond;
    c.add(name, bad_perfect + bad_exp + bad_switch + bad_cond == 0, os.str());
    trees = bad_perfect = bad_exp = bad_switch = bad_cond = 0;
  };
  for (int m = 1; m <= 2; ++m) for_each_grid_tree(m, quarter_grid(), check);
  report("exhaustive depth<=2 grid");
  for_each_depth3_tree(quarter_grid(), derive_seed(c.seed, 2), check);
  report("depth-3 grid, all schemes and labelings, seeded edges");

  auto t = e2();
  auto ma = dominated_measure(t, Party::A);
  bool ok = ma.measure[t.index("00")] == 1 && ma.measure[t.index("10")] == Rational(1, 2) &&
            ma.measure[t.index("011")] == 0 && measure_expectation(t, ma.measure) == Rational(1, 4);
  c.add("e2 dominated measure", ok, "E[M_A]=" + to_string(measure_expectation(t, ma.measure)));
  auto fz = find_z(t, make_rational(1, 4));
  c.add("find_z on e2 terminates", true, std::string("side=") + party_char(fz.party) + " z=" + std::to_string(fz.z));
}

inline void suite_ideal_attack(const SuiteContext& c) {
  auto t = e2();
  auto att = attacked_protocol(t, {Party::A, 3});
  bool ok = att.value(1) == Rational(17, 20) && att.value(2) == Rational(25, 28) && att.value(3) == Rational(41, 44);
  c.add("e2 attacked values", ok,
        to_string(att.value(1)) + " " + to_string(att.value(2)) + " " + to_string(att.value(3)));
  c.add("kappa(1/4) = 14", kappa(make_rational(1, 4)) == 14, "kappa=" + std::to_string(kappa(make_rational(1, 4))));

  Rng rng(derive_seed(c.seed, 2));
  long bad_main = 0, bad_single = 0;
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    auto r = random_audit_tree(rng, 5);
    try {
      verify_main_ideal(r, make_rational(1, 4));
    } catch (const theorem_violation&) {
      ++bad_main;
    }
    if (value(r) == 0) continue;
    auto a = attacked_protocol(r, {Party::A, 3});
    Rational prod = 1, floor = 1 - best_valid(r).best_b;
    for (int k = 1; k <= 3; ++k) {
      prod *= a.value(k - 1);
      if (a.value(k) < floor / prod) ++bad_single;
    }
  }
  c.add("main ideal theorem at eps=1/4 on 100 random trees", bad_main == 0, "violations=" + std::to_string(bad_main));
  c.add("single-measure bound k<=3 on 100 random trees", bad_single == 0, "violations=" + std::to_string(bad_single));
}

inline void suite_approx(const SuiteContext& c) {
  auto t = e2();
  auto hc = honest_continuator_exact(t, derive_seed(c.seed, 3));
  c.add("perfect hc has zero failure mass", continuator_failure_mass(hc, make_rational(1, 100)) == 0, "exact");
  c.add("retry_bound(1/16,1/2) = 4", retry_bound(make_rational(1, 16), make_rational(1, 2)) == 4,
        "t=" + std::to_string(retry_bound(make_rational(1, 16), make_rational(1, 2))));

  auto stack = build_bc_stack(hc, std::nullopt, 0, make_rational(1, 1000), make_rational(1, 10), 1);
  RunOptions ro{c.threads, 0.01};
  auto ev = empirical_value(approx_attacker_strategy(stack), honest_strategy(t), t, 20000, derive_seed(c.seed, 4), ro);
  double exact = to_double(attacked_protocol(t, {Party::A, 1}).value(1));
  std::ostringstream os;
  os << "sampled=" << fmt_double(ev.mean) << " exact=" << fmt_double(exact) << " radius=" << fmt_double(ev.radius);
  c.add("k=1 approximate attacker tracks 17/20", std::abs(ev.mean - exact) <= ev.radius + 0.01, os.str());

  auto est = estimator_from_hc(hc, make_rational(1, 5), derive_seed(c.seed, 5));
  Rational fail = estimator_failure_mass(est, make_rational(1, 5));
  c.add("estimator at xi=1/5 is a xi-estimator for e2", fail <= Rational(1, 5), "failure mass=" + to_string(fail));
}

inline void suite_pruning(const SuiteContext& c) {
  long trees = 0, bad = 0;
  for (const char* d : {"1/10", "1/4", "2/5"}) {
    Rational delta = parse_rational(d);
    for (int m = 1; m <= 2; ++m)
      for_each_grid_tree(m, quarter_grid(), [&](const ProtocolTree& t) {
        ++trees;
        if (leaf_statistical_distance(t, ideal_pruned(t, delta)) != 0) ++bad;
      });
  }
  c.add("ideal pruning keeps the leaf distribution", bad == 0,
        "trees=" + std::to_string(trees) + " violations=" + std::to_string(bad));

  auto t = e2();
  auto hc = honest_continuator_exact(t, derive_seed(c.seed, 6));
  SweepOptions so;
  so.select_runs = 400;
  so.final_runs = 20000;
  so.seed = derive_seed(c.seed, 7);
  so.estimator_samples = 20000;
  so.run.threads = c.threads;
  auto rep = threshold_sweep(t, make_rational(1, 4), make_rational(1, 2304), 3, hc, so);
  std::ostringstream os;
  os << "delta*=" << to_string(rep.best_delta()) << " value=" << fmt_double(rep.final.mean)
     << " radius=" << fmt_double(rep.final.radius);
  c.add("e2 in-head attacker reaches 3/4", rep.final.mean >= 0.75, os.str());
}

inline void suite_inverter(const SuiteContext& c) {
  auto t = e2();
  auto lay = tape_layout(t);
  Rng rng(derive_seed(c.seed, 8));
  const int n = 40000;
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(t.size()));
  for (int i = 0; i < n; ++i) {
    auto tapes = sample_consistent_tapes(t, lay, 0, rng);
    ++counts[static_cast<std::size_t>(replay(t, lay, tapes))];
  }
  double sd = empirical_sd(t, counts, leaf_distribution(t));
  c.add("uniform tapes replay to the leaf distribution", sd <= 0.02, "sd=" + fmt_double(sd));

  auto inv = perfect_inverter(t, derive_seed(c.seed, 9));
  auto hc = hc_from_inverter(inv);
  c.add("hc from perfect inverter is exact", continuator_failure_mass(hc, make_rational(1, 1000)) == 0,
        "fidelity=" + inv.fidelity());
}

inline void suite_numerics(const SuiteContext& c) {
  auto a = audit_calculus1(10000, derive_seed(c.seed, 10));
  c.add("calculus1 audit", a.pass(), "trials=" + std::to_string(a.trials) + " violations=" + std::to_string(a.violations));
  for (double d : {0.1, 0.25, 0.5}) {
    auto r = find_alpha(d);
    std::ostringstream os;
    os << "alpha=" << r.alpha << " points=" << r.points;
    c.add("find_alpha delta=" + fmt_double(d, 2), r.ok, os.str());
  }
  Distribution p{make_rational(3, 4), make_rational(1, 4)}, q{make_rational(1, 2), make_rational(1, 2)};
  Rational dis = disagreement(optimal_coupling(p, q));
  c.add("coupling disagreement = SD", dis == statistical_distance(p, q) && dis == Rational(1, 4),
        "disagreement=" + to_string(dis));
  c.add("hoeffding_samples(0.1,0.01)", hoeffding_samples(0.1, 0.01) == 265,
        "n=" + std::to_string(hoeffding_samples(0.1, 0.01)));
}

inline const std::vector<std::pair<std::string, void (*)(const SuiteContext&)>>& suites() {
  static const std::vector<std::pair<std::string, void (*)(const SuiteContext&)>> s{
      {"core", suite_core},       {"dominated", suite_dominated}, {"ideal-attack", suite_ideal_attack},
      {"approx", suite_approx},   {"pruning", suite_pruning},     {"inverter", suite_inverter},
      {"numerics", suite_numerics}};
  return s;
}

}  // namespace lab

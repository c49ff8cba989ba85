// Walks a small protocol through the exact pipeline and prints each step.
//
//   e2_walkthrough [protocol.json]

#include <iostream>

#include "coinflip/io.hpp"

using namespace coinflip;

int main(int argc, char** argv) {
  try {
    ProtocolTree t = argc > 1 ? read_protocol(argv[1]) : read_protocol(COINFLIP_DEMO_DIR "/protocols/e2.json");

    std::cout << "val = " << to_string(value(t)) << "\n";
    auto best = best_valid(t);
    std::cout << "Best_A = " << to_string(best.best_a) << ", Best_B = " << to_string(best.best_b) << "\n";

    auto ma = dominated_measure(t, Party::A);
    std::cout << "M_A:";
    for (int l : t.leaves()) std::cout << " " << t[l].id << "=" << to_string(ma.measure[l]);
    std::cout << "  E[M_A] = " << to_string(measure_expectation(t, ma.measure)) << "\n";

    auto cond = conditional_protocol(t, ma.measure);
    std::cout << "conditional protocol edges:";
    for (int i : cond.internals())
      std::cout << " " << dot_label(cond[i].id) << "=(" << to_string(cond[i].edge[0]) << ","
                << to_string(cond[i].edge[1]) << ")";
    std::cout << "\n";

    auto att = attacked_protocol(t, {Party::A, 3});
    for (int k = 0; k <= 3; ++k) std::cout << "val(A^(" << k << "),B) = " << to_string(att.value(k)) << "\n";

    auto eps = make_rational(1, 4);
    auto verdict = verify_main_ideal(t, eps);
    std::cout << "kappa(1/4) = " << verdict.kappa << ", A wins: " << verdict.a_wins << ", B wins: " << verdict.b_wins
              << "\n";

    auto hc = honest_continuator_exact(t, 1);
    auto stack = build_bc_stack(hc, std::nullopt, 0, make_rational(1, 1000), make_rational(1, 10), 2);
    auto ev = empirical_value(approx_attacker_strategy(stack), honest_strategy(t), t, 20000, 7);
    std::cout << "sampled val(A^(2,xi,delta),B) = " << ev.mean << " +- " << ev.radius
              << "  (exact ideal " << to_double(att.value(2)) << ")\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

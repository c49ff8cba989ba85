// coinflip_lab: generate protocols, run attacks, run self-check suites.
//
// Exit codes: 0 pass, 1 gating failure, 2 usage or input error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "coinflip/coinflip.hpp"
#include "coinflip/io.hpp"
#include "suites.hpp"

using namespace coinflip;

namespace {

struct usage_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

unsigned env_threads() {
  const char* s = std::getenv("COINFLIP_LAB_THREADS");
  if (!s || !*s) return 1;
  char* end = nullptr;
  long n = std::strtol(s, &end, 10);
  if (*end || n < 1) throw usage_error("COINFLIP_LAB_THREADS must be a positive integer");
  return static_cast<unsigned>(n);
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") std::cout << text;
  else write_text(out, text);
}

std::vector<Rational> parse_grid(const std::string& s) {
  std::vector<Rational> g;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) g.push_back(parse_rational(item));
  if (g.empty()) throw usage_error("empty --edge-grid");
  return g;
}

// ---- generate ----

struct GenerateArgs {
  int depth = 3;
  std::string grid = "1/4,1/2,3/4";
  std::string scheme = "random";
  int count = 1;
  std::uint64_t seed = 1;
  bool fair = false;
  bool dyadic = false;
  std::string out = ".";
};

int cmd_generate(const GenerateArgs& a) {
  GenerateSpec spec;
  spec.depth = a.depth;
  spec.edge_grid = parse_grid(a.grid);
  spec.scheme = parse_control_scheme(a.scheme);
  spec.fair = a.fair;
  spec.dyadic = a.dyadic;
  std::filesystem::create_directories(a.out);
  for (int i = 0; i < a.count; ++i) {
    Rng rng(derive_seed(a.seed, static_cast<std::uint64_t>(i)));
    auto t = generate_protocol(spec, rng);
    auto path = std::filesystem::path(a.out) / ("protocol_" + std::to_string(i) + ".json");
    write_protocol(path.string(), t);
    std::cout << path.string() << "  val=" << to_string(value(t)) << "\n";
  }
  return 0;
}

// ---- attack ----

struct AttackArgs {
  std::string protocol;
  std::string mode = "ideal";
  int k = 3;
  std::string eps;
  std::string delta = "1/4";
  std::string xi;
  std::uint64_t runs = 100000;
  std::uint64_t select_runs = 4000;
  std::uint64_t seed = 1;
  std::string side = "A";
  std::string out;
  std::string format = "csv";
};

json config_json(const AttackArgs& a) {
  return {{"protocol", a.protocol}, {"mode", a.mode},  {"k", a.k},       {"eps", a.eps},
          {"delta", a.delta},       {"xi", a.xi},      {"runs", a.runs}, {"select_runs", a.select_runs},
          {"seed", a.seed},         {"side", a.side}};
}

int attack_ideal(const ProtocolTree& t, const AttackArgs& a) {
  auto ra = attacked_protocol(t, {Party::A, a.k});
  auto rb = attacked_protocol(t, {Party::B, a.k});
  if (a.format == "dot") {
    std::string dot = to_dot(t, "base");
    dot += to_dot(ra.derived(), "A^(" + std::to_string(a.k) + "),B");
    dot += to_dot(rb.derived(), "A,B^(" + std::to_string(a.k) + ")");
    emit(a.out, dot);
    return 0;
  }
  if (a.format == "json") {
    json rows = json::array();
    for (int k = 0; k <= a.k; ++k)
      rows.push_back({{"k", k}, {"val_a", to_string(ra.value(k))}, {"val_b", to_string(rb.value(k))},
                      {"val_a_decimal", to_double(ra.value(k))}, {"val_b_decimal", to_double(rb.value(k))}});
    json j = {{"config", config_json(a)}, {"rows", rows}};
    if (!a.eps.empty()) {
      Rational eps = parse_rational(a.eps);
      int kap = kappa(eps);
      auto v = verify_main_ideal(t, eps);
      j["kappa"] = kap;
      j["a_wins"] = v.a_wins;
      j["b_wins"] = v.b_wins;
    }
    emit(a.out, j.dump(2) + "\n");
    return 0;
  }
  std::ostringstream os;
  os << "k,val_a,val_b,val_a_decimal,val_b_decimal\n";
  for (int k = 0; k <= a.k; ++k)
    os << k << "," << to_string(ra.value(k)) << "," << to_string(rb.value(k)) << ","
       << fmt_double(to_double(ra.value(k))) << "," << fmt_double(to_double(rb.value(k))) << "\n";
  emit(a.out, os.str());
  return 0;
}

int attack_approx(const ProtocolTree& t, const AttackArgs& a, unsigned threads) {
  Rational xi = a.xi.empty() ? make_rational(1, 1000) : parse_rational(a.xi);
  Rational delta = parse_rational(a.delta);
  auto hc = honest_continuator_exact(t, derive_seed(a.seed, 1));
  RunOptions ro{threads, 0.01};
  struct Row {
    int k;
    Party side;
    EmpiricalValue ev;
    Rational exact;
  };
  std::vector<Row> rows;
  for (Party side : {Party::A, Party::B}) {
    auto exact = attacked_protocol(t, {side, a.k});
    for (int k = 0; k <= a.k; ++k) {
      auto stack = build_bc_stack(hc, std::nullopt, 0, xi, delta, k, side);
      Strategy att = approx_attacker_strategy(stack), hon = honest_strategy(t);
      std::uint64_t s = derive_seed(a.seed, 2 + static_cast<std::uint64_t>(side), static_cast<std::uint64_t>(k));
      auto ev = side == Party::A ? empirical_value(att, hon, t, a.runs, s, ro) : empirical_value(hon, att, t, a.runs, s, ro);
      rows.push_back({k, side, ev, exact.value(k)});
    }
  }
  if (a.format == "json") {
    json jr = json::array();
    for (const auto& r : rows)
      jr.push_back({{"k", r.k}, {"attacker", std::string(1, party_char(r.side))}, {"value", r.ev.mean},
                    {"radius", r.ev.radius}, {"runs", r.ev.runs}, {"ideal", to_string(r.exact)}});
    emit(a.out, json({{"config", config_json(a)}, {"rows", jr}}).dump(2) + "\n");
  } else if (a.format == "csv") {
    std::ostringstream os;
    os << "k,attacker,value,radius,runs,ideal,ideal_decimal\n";
    for (const auto& r : rows)
      os << r.k << "," << party_char(r.side) << "," << fmt_double(r.ev.mean) << "," << fmt_double(r.ev.radius) << ","
         << r.ev.runs << "," << to_string(r.exact) << "," << fmt_double(to_double(r.exact)) << "\n";
    emit(a.out, os.str());
  } else {
    throw usage_error("--format dot is only available in ideal mode");
  }
  return 0;
}

int attack_in_head(const ProtocolTree& t, const AttackArgs& a, unsigned threads) {
  if (a.format == "dot") throw usage_error("--format dot is only available in ideal mode");
  Party side = parse_party(a.side);
  SweepOptions so;
  so.attacker = side;
  so.select_runs = a.select_runs;
  so.final_runs = a.runs;
  so.seed = derive_seed(a.seed, 10);
  so.estimator_seed = derive_seed(a.seed, 11);
  so.run.threads = threads;
  Rational delta = parse_rational(a.delta);

  if (!a.eps.empty()) {
    // Full pipeline: perfect inverter -> honest continuator -> sweep.
    EndToEndOptions eo;
    eo.k = a.k;
    eo.delta = delta;
    if (!a.xi.empty()) eo.xi = parse_rational(a.xi);
    eo.sweep = so;
    eo.inverter_seed = derive_seed(a.seed, 12);
    auto rep = end_to_end_attack(t, parse_rational(a.eps), eo);
    if (a.format == "json") {
      json sweeps = json::array();
      for (const auto& s : rep.sweeps) sweeps.push_back(sweep_to_json(s));
      json j = {{"config", config_json(a)},
                {"side", std::string(1, party_char(rep.side))},
                {"success", rep.success},
                {"value", rep.value},
                {"radius", rep.radius},
                {"xi", to_string(rep.xi)},
                {"inverter", rep.fidelity},
                {"sweeps", sweeps}};
      emit(a.out, j.dump(2) + "\n");
    } else {
      std::ostringstream os;
      for (const auto& s : rep.sweeps) os << "# attacker " << party_char(s.attacker) << "\n" << sweep_csv(s);
      os << "# side=" << party_char(rep.side) << " value=" << fmt_double(rep.value) << " radius="
         << fmt_double(rep.radius) << " success=" << (rep.success ? "yes" : "no") << "\n";
      emit(a.out, os.str());
    }
    return rep.success ? 0 : 1;
  }

  const int m = t.depth();
  Rational xi = a.xi.empty() ? Rational(delta * delta / (16 * std::max(1, m * m))) : parse_rational(a.xi);
  auto hc = honest_continuator_exact(t, derive_seed(a.seed, 13));
  auto rep = threshold_sweep(t, delta, xi, a.k, hc, so);
  if (a.format == "json") {
    json j = sweep_to_json(rep);
    j["config"] = config_json(a);
    emit(a.out, j.dump(2) + "\n");
  } else {
    std::ostringstream os;
    os << sweep_csv(rep);
    if (rep.final.runs)
      os << "# delta*=" << to_string(rep.best_delta()) << " value=" << fmt_double(rep.final.mean)
         << " radius=" << fmt_double(rep.final.radius) << " runs=" << rep.final.runs << "\n";
    emit(a.out, os.str());
  }
  return 0;
}

int cmd_attack(const AttackArgs& a) {
  unsigned threads = env_threads();
  if (a.k < 0) throw usage_error("--k must be non-negative");
  if (a.runs < 1) throw usage_error("--runs must be positive");
  auto t = read_protocol(a.protocol);
  if (auto v = validate(t); !v.empty()) throw usage_error(a.protocol + ": node '" + v[0].node + "': " + v[0].rule);
  if (a.mode == "ideal") return attack_ideal(t, a);
  if (a.mode == "approx") return attack_approx(t, a, threads);
  if (a.mode == "in-head") return attack_in_head(t, a, threads);
  throw usage_error("unknown --mode '" + a.mode + "'");
}

// ---- verify ----

struct VerifyArgs {
  std::string suite = "all";
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "text";
};

int cmd_verify(const VerifyArgs& a) {
  std::vector<lab::Check> checks;
  bool known = a.suite == "all";
  const auto& all = lab::suites();
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& [name, fn] = all[i];
    if (a.suite != "all" && a.suite != name) continue;
    known = true;
    lab::SuiteContext c{derive_seed(a.seed, i), env_threads(), &checks, name};
    fn(c);
  }
  if (!known) throw usage_error("unknown suite '" + a.suite + "'");
  bool gating_ok = true;
  for (const auto& c : checks)
    if (c.gating && !c.pass) gating_ok = false;
  if (a.format == "json") {
    json arr = json::array();
    for (const auto& c : checks)
      arr.push_back({{"suite", c.suite}, {"check", c.name}, {"gating", c.gating}, {"pass", c.pass}, {"detail", c.detail}});
    emit(a.out, json({{"suite", a.suite}, {"seed", a.seed}, {"pass", gating_ok}, {"checks", arr}}).dump(2) + "\n");
  } else {
    std::ostringstream os;
    for (const auto& c : checks)
      os << (c.pass ? "PASS" : c.gating ? "FAIL" : "SOFT") << "  [" << c.suite << "] " << c.name << "  (" << c.detail
         << ")\n";
    os << (gating_ok ? "PASS" : "FAIL") << "  " << checks.size() << " checks\n";
    emit(a.out, os.str());
  }
  return gating_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coin-flipping protocol attack lab"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file");

  GenerateArgs g;
  auto* gen = app.add_subcommand("generate", "Write random protocol files");
  gen->add_option("--depth", g.depth, "Tree depth")->check(CLI::PositiveNumber);
  gen->add_option("--edge-grid", g.grid, "Comma-separated edge values for e(u,u0)");
  gen->add_option("--control", g.scheme, "alternating|random|all-a|all-b");
  gen->add_option("--count", g.count, "Number of files")->check(CLI::PositiveNumber);
  gen->add_option("--seed", g.seed);
  gen->add_flag("--fair", g.fair, "Keep only trees with val = 1/2");
  gen->add_flag("--dyadic", g.dyadic, "Keep only power-of-two denominators");
  gen->add_option("--out", g.out, "Output directory");

  AttackArgs at;
  auto* att = app.add_subcommand("attack", "Run an attack on a protocol file");
  att->add_option("--protocol", at.protocol)->required();
  att->add_option("--mode", at.mode)->check(CLI::IsMember({"ideal", "approx", "in-head"}));
  att->add_option("--k", at.k, "Attack depth");
  att->add_option("--eps", at.eps, "Target bias (ideal: kappa verdict; in-head: end-to-end pipeline)");
  att->add_option("--delta", at.delta);
  att->add_option("--xi", at.xi);
  att->add_option("--runs", at.runs, "Sampled runs (in-head: final runs at the chosen threshold)");
  att->add_option("--select-runs", at.select_runs, "In-head: runs per threshold grid point");
  att->add_option("--side", at.side, "In-head attacker: A or B")->check(CLI::IsMember({"A", "B"}));
  att->add_option("--seed", at.seed);
  att->add_option("--out", at.out);
  att->add_option("--format", at.format)->check(CLI::IsMember({"csv", "json", "dot"}));

  VerifyArgs ve;
  auto* ver = app.add_subcommand("verify", "Run self-check suites");
  ver->add_option("suite", ve.suite, "core|dominated|ideal-attack|approx|pruning|inverter|numerics|all");
  ver->add_option("--seed", ve.seed);
  ver->add_option("--out", ve.out);
  ver->add_option("--format", ve.format)->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (*gen) return cmd_generate(g);
    if (*att) return cmd_attack(at);
    if (*ver) return cmd_verify(ve);
  } catch (const theorem_violation& e) {
    std::cerr << "FAIL: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

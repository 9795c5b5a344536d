// foliant: run named experiments from JSON configs.
//
//   foliant run <config> [--out DIR] [--seed N] [--threads N]
//   foliant list [--json]
//
// Output directory: --out, else $FOLIANT_OUT, else the config's "output".
// Exit codes: 0 all checks pass, 1 a check failed or the run errored, 2 invalid config or usage.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>

#include <foliant/scenarios.hpp>

using namespace foliant;

namespace {

int list_scenarios(bool as_json) {
  const auto& cat = scenario_catalog();
  if (as_json) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& s : cat) a.push_back({{"name", s.name}, {"dims", s.dims}, {"runtime", s.runtime}, {"summary", s.summary}});
    std::cout << a.dump(2) << "\n";
    return 0;
  }
  std::printf("%-20s %-14s %-8s %s\n", "scenario", "dims", "runtime", "checks");
  for (const auto& s : cat)
    std::printf("%-20s %-14s %-8s %s\n", s.name.c_str(), s.dims.c_str(), s.runtime.c_str(), s.summary.c_str());
  return 0;
}

int run(const std::string& path, const std::string& out_flag, std::optional<std::uint64_t> seed, int threads) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const Error& e) {
    std::cerr << "foliant: " << e.what() << "\n";
    return 2;
  }
  if (seed) cfg.seed = *seed;
  if (threads > 0) set_thread_count(threads);
  std::string out = cfg.output;
  if (const char* env = std::getenv("FOLIANT_OUT"); env && *env) out = env;
  if (!out_flag.empty()) out = out_flag;

  ScenarioResult r;
  try {
    r = run_scenario(cfg);
    write_artifacts(r, out);
  } catch (const Error& e) {
    std::cerr << "foliant: " << e.what() << "\n";
    return e.kind() == ErrorKind::ConfigInvalid ? 2 : 1;
  }
  for (const auto& c : r.checks)
    std::printf("%s %-36s %.6g %s %.6g\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.relation.c_str(),
                c.threshold);
  if (!r.passed()) {
    for (const auto& c : r.checks)
      if (!c.pass) std::cerr << "foliant: AssertionFailed: " << r.scenario << ": " << c.name << "\n";
    return 1;
  }
  std::printf("%s: all %zu checks passed, output in %s\n", r.scenario.c_str(), r.checks.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transverse symbol calculus experiments on torus-bundle foliations"};
  app.require_subcommand(1);

  std::string config, out;
  std::uint64_t seed = 0;
  int threads = 0;
  bool as_json = false;

  auto* run_cmd = app.add_subcommand("run", "Run the scenario named in a config file");
  run_cmd->add_option("config", config, "Config file (JSON)")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Seed for randomized probe sets");
  run_cmd->add_option("--out", out, "Output directory (overrides FOLIANT_OUT)");
  run_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* list_cmd = app.add_subcommand("list", "List the available scenarios");
  list_cmd->add_flag("--json", as_json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "foliant: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  if (list_cmd->parsed()) return list_scenarios(as_json);
  return run(config, out, seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt, threads);
}

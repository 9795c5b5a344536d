// Acceptance run: executes the scenario configs and applies the acceptance thresholds
// directly to the measured metrics (config tolerances are ignored here).
//
//   acceptance <configs-dir> [criterion numbers...]

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <foliant/scenarios.hpp>

using namespace foliant;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    note << (ok ? "" : "[fail] ") << what << "; ";
  }
};

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

double value_at(const json& scales, double lambda, const char* key = "error") {
  for (const auto& s : scales)
    if (s.at("lambda").get<double>() == lambda) return s.at(key).get<double>();
  throw Error(ErrorKind::AssertionFailed, "no probe scale " + fmt(lambda));
}

struct Criterion {
  int id;
  std::string title;
  double budget;  // seconds
  std::function<void(const std::string&, Verdict&)> body;
};

ScenarioResult run(const std::string& dir, const std::string& name) {
  return run_scenario(load_config(dir + "/" + name + ".json"));
}

void composition(const std::string& dir, Verdict& v) {
  const ExperimentConfig cfg = load_config(dir + "/symbol-composition.json");
  v.require(cfg.trans_cutoff == 64, "Lambda = 64");
  v.require(cfg.lambdas == std::vector<double>{8, 16, 32}, "lambda in {8, 16, 32}");
  const ScenarioResult r = run_scenario(cfg);
  const json& rows = r.details.at("rows");
  std::set<int> cases, depths;
  double margin = -1e300;
  int exact = 0;
  for (const auto& row : rows) {
    cases.insert(row.at("case").get<int>());
    depths.insert(row.at("N").get<int>());
    const double bound = row.at("m1").get<double>() + row.at("m2").get<double>() - row.at("N").get<double>() - 1 + 0.3;
    if (row.at("exact").get<bool>()) {
      ++exact;
      continue;
    }
    margin = std::max(margin, row.at("slope").get<double>() - bound);
  }
  v.require(cases.size() == 5, std::to_string(cases.size()) + " symbols");
  v.require(depths == std::set<int>{0, 1, 2}, "N = 0, 1, 2");
  v.require(margin <= 0, "worst slope - bound " + fmt(margin));
  for (const auto& c : r.checks)
    if (c.name.find("exact_remainder") != std::string::npos) v.require(c.pass, c.name + " " + fmt(c.value));
  v.note << exact << " expansions exact to rounding";
}

void commutator(const std::string& dir, Verdict& v) {
  const ScenarioResult r = run(dir, "commutator");
  const auto lams = r.details.at("lambdas").get<std::vector<double>>();
  const auto rel = r.metrics.at("rel_errors").get<std::vector<double>>();
  double e16 = -1, e32 = -1;
  for (std::size_t i = 0; i < lams.size(); ++i) {
    if (lams[i] == 16) e16 = rel[i];
    if (lams[i] == 32) e32 = rel[i];
  }
  v.require(e32 >= 0 && e32 <= 0.1, "rel error at 32 " + fmt(e32));
  v.require(e16 >= 1.5 * e32, "e16/e32 " + fmt(e16 / e32));
}

void egorov_scalar(const std::string& dir, Verdict& v) {
  const ScenarioResult f = run(dir, "egorov-scalar-flat");
  v.require(f.metrics.at("rho").get<double>() >= 0.7, "flat rho " + fmt(f.metrics["rho"]));
  v.require(f.metrics.contains("oracle_difference") && f.metrics["oracle_difference"].get<double>() <= 1e-10,
            "closed-form oracle " + fmt(f.metrics.value("oracle_difference", 1.0)));
  const ScenarioResult k = run(dir, "egorov-scalar-kk");
  v.require(k.metrics.at("rho").get<double>() >= 0.7, "Kaluza-Klein rho " + fmt(k.metrics["rho"]));
  v.require(k.metrics.contains("rho_without_subprincipal") && k.metrics["rho_without_subprincipal"].get<double>() <= 0.2,
            "without sigma_sub rho " + fmt(k.metrics.value("rho_without_subprincipal", 1.0)));
}

void egorov_dirac(const std::string& dir, Verdict& v) {
  const ExperimentConfig cfg = load_config(dir + "/egorov-dirac.json");
  v.require(cfg.trans_cutoff == 24 && cfg.times.at(0) == 1.0, "Lambda = 24, t = 1");
  const ScenarioResult r = run_scenario(cfg);
  v.require(r.metrics.at("rho").get<double>() >= 0.6, "rho " + fmt(r.metrics["rho"]));
  const double ratio = value_at(r.metrics.at("errors_zero_connection"), 12) / value_at(r.metrics.at("errors"), 12);
  v.require(ratio >= 3, "zero-connection degradation at 12: " + fmt(ratio) + "x");
}

void dirac_adjoint(const std::string& dir, Verdict& v) {
  const ScenarioResult r = run(dir, "dirac-adjoint");
  const json& m = r.metrics;
  v.require(m.at("defect").get<double>() <= 1e-10, "defect " + fmt(m["defect"]));
  v.require(m.at("ctau_norm").get<double>() > 1e-3, "warped: |c(tau)| " + fmt(m["ctau_norm"]));
  v.require(std::abs(m.at("omitted_defect").get<double>() - m["ctau_norm"].get<double>()) <= 1e-10,
            "without c(tau) " + fmt(m["omitted_defect"]));
}

void dirac_symbols(const std::string& dir, Verdict& v) {
  const ScenarioResult r = run(dir, "dirac-symbols");
  const json& m = r.metrics;
  v.require(m.at("probes").get<int>() >= 10, std::to_string(m["probes"].get<int>()) + " probes");
  v.require(std::max(m.at("s2_error").get<double>(), m.at("s2_vs_dual_norm").get<double>()) <= 1e-8,
            "s^2 " + fmt(std::max(m["s2_error"].get<double>(), m["s2_vs_dual_norm"].get<double>())));
  v.require(m.at("s1_error").get<double>() <= 1e-6, "s^1 " + fmt(m["s1_error"]));
  v.require(m.at("psub_three_way").get<double>() <= 1e-6, "three-way " + fmt(m["psub_three_way"]));
}

void signature(const std::string& dir, Verdict& v) {
  const ExperimentConfig cfg = load_config(dir + "/signature-isotypic.json");
  v.require(cfg.params.value("leaf_modes", std::vector<int>{}) == std::vector<int>{0, 1, 2}, "n in {0, 1, 2}");
  const ScenarioResult r = run_scenario(cfg);
  v.require(r.metrics.at("identity_defect").get<double>() <= 1e-10, "identity " + fmt(r.metrics["identity_defect"]));
  v.require(r.metrics.at("isotypic_defect").get<double>() <= 1e-10, "isotypic " + fmt(r.metrics["isotypic_defect"]));
}

void flows(const std::string& dir, Verdict& v) {
  const ExperimentConfig cfg = load_config(dir + "/flow-invariants.json");
  v.require(cfg.params.value("time", 0.0) == 10.0 && cfg.params.value("step", 0.0) == 1e-3, "t = 10, h = 1e-3");
  const ScenarioResult r = run_scenario(cfg);
  for (const char* k : {"frame_integrals", "so2_equivariance", "frame_orthonormality", "hamiltonian_drift"})
    v.require(r.metrics.at(k).get<double>() <= 1e-8, std::string(k) + " " + fmt(r.metrics[k]));
}

void transport(const std::string& dir, Verdict& v) {
  const ExperimentConfig cfg = load_config(dir + "/flow-invariants.json");
  const auto deltas = cfg.params.at("transport").value("deltas", std::vector<double>{});
  v.require(deltas == std::vector<double>{1e-2, 5e-3, 2.5e-3}, "delta in {1e-2, 5e-3, 2.5e-3}");
  const ScenarioResult r = run_scenario(cfg);
  v.require(r.metrics.at("transport_order").get<double>() >= 1.7, "observed order " + fmt(r.metrics["transport_order"]));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <configs-dir> [criterion numbers...]\n");
    return 2;
  }
  const std::string dir = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> all{
      {1, "composition fidelity", 120, composition},
      {2, "commutator formula", 60, commutator},
      {3, "Egorov scalar", 180, egorov_scalar},
      {4, "Egorov Dirac", 900, egorov_dirac},
      {5, "Dirac adjoint", 60, dirac_adjoint},
      {6, "symbols of D^2", 120, dirac_symbols},
      {7, "signature identities", 60, signature},
      {8, "flow invariants", 60, flows},
      {9, "transport equation", 60, transport},
  };
  // cheap criteria first
  std::vector<const Criterion*> order;
  for (const auto& c : all)
    if (c.id != 4) order.push_back(&c);
  order.push_back(&all[3]);

  int failed = 0;
  for (const Criterion* c : order) {
    if (!only.empty() && !only.count(c->id)) continue;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c->body(dir, v);
    } catch (const std::exception& e) {
      v.require(false, e.what());
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.require(sec <= c->budget, "runtime " + fmt(sec) + " s of " + fmt(c->budget));
    failed += !v.pass;
    std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", c->id, c->title.c_str(), v.note.str().c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}

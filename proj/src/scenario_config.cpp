#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "foliant/json_util.hpp"
#include "foliant/scenarios.hpp"

namespace foliant {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::ConfigInvalid, what); }

ScaledField scaled_from_json(const json& j, int n, int q) {
  ScaledField f;
  if (j.is_null()) {
    f.base = TrigMatrix::constant(Eigen::MatrixXd::Identity(n, n));
    return f;
  }
  if (j.is_object()) {
    f.base = j.contains("base") ? trigmatrix_from_json(j["base"], n, n, q)
                                : TrigMatrix::constant(Eigen::MatrixXd::Identity(n, n));
    if (j.contains("log_scale")) f.log_scale = trigpoly_from_json(j["log_scale"], q);
    return f;
  }
  f.base = trigmatrix_from_json(j, n, n, q);
  return f;
}

bool needs_q2(const std::string& s) {
  return s == "dirac-adjoint" || s == "dirac-symbols" || s == "signature-isotypic" || s == "egorov-dirac" ||
         s == "flow-invariants";
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string write_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorKind::ConfigInvalid, "cannot write " + p.string());
  f << s;
  return hex(fnv1a(s));
}

}  // namespace

ModelGeometry geometry_from_json(const json& j) {
  ModelGeometry g;
  g.p = j.value("p", 1);
  g.q = j.value("q", 1);
  if (g.p < 1 || g.p > 2 || g.q < 1 || g.q > 2) invalid("geometry needs p, q in {1, 2}");
  g.g_F = scaled_from_json(j.value("g_F", json()), g.p, g.q);
  g.g_B = scaled_from_json(j.value("g_B", json()), g.q, g.q);
  g.A = j.contains("A") ? trigmatrix_from_json(j["A"], g.p, g.q, g.q)
                        : TrigMatrix::constant(Eigen::MatrixXd::Zero(g.p, g.q));
  g.validate();
  return g;
}

BundleData bundle_from_json(const json& j, int q) {
  BundleData E = BundleData::trivial(j.value("rank", 1));
  if (E.rank < 1) invalid("bundle rank must be positive");
  if (!j.contains("connection")) return E;
  const json& conn = j["connection"];
  if (!conn.is_array() || int(conn.size()) != q)
    invalid("bundle connection needs one term list per transverse direction (" + std::to_string(q) + ")");
  for (const auto& terms : conn) {
    FourierField B(q, E.rank, E.rank);
    for (const auto& t : terms) {
      const IVec m = ivec_from_json(t.value("mode", json::array()), q);
      const Eigen::MatrixXcd Hc = t.contains("cos") ? cmatrix_from_json(t["cos"], E.rank)
                                                    : Eigen::MatrixXcd::Zero(E.rank, E.rank);
      const Eigen::MatrixXcd Hs = t.contains("sin") ? cmatrix_from_json(t["sin"], E.rank)
                                                    : Eigen::MatrixXcd::Zero(E.rank, E.rank);
      if (Hc.rows() != E.rank || Hs.rows() != E.rank) invalid("connection term has the wrong size");
      // i (cos H_c + sin H_s) = i H_c (e + e^-)/2 + H_s (e - e^-)/2
      auto add = [&](IVec k, const Eigen::MatrixXcd& v) {
        auto it = B.modes().find(k);
        if (it == B.modes().end()) B.modes()[k] = v;
        else it->second += v;
      };
      if (m == IVec{0, 0}) {
        add(m, kI * Hc);
      } else {
        add(m, 0.5 * kI * Hc + 0.5 * Hs);
        add(-m, 0.5 * kI * Hc - 0.5 * Hs);
      }
    }
    E.B.push_back(B);
  }
  E.validate(q);
  return E;
}

ExperimentConfig parse_config(const json& j) {
  static const std::set<std::string> keys{"scenario", "geometry", "bundle", "cutoffs", "times",
                                          "lambdas",  "seed",     "output", "params"};
  if (!j.is_object()) invalid("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) invalid("unknown config key '" + k + "'");
  ExperimentConfig c;
  c.source = j;
  try {
    c.scenario = j.at("scenario").get<std::string>();
    bool known = false;
    for (const auto& s : scenario_catalog()) known |= s.name == c.scenario;
    if (!known) invalid("unknown scenario '" + c.scenario + "'");
    c.geometry = geometry_from_json(j.value("geometry", json::object()));
    if (needs_q2(c.scenario) && c.geometry.q != 2)
      invalid("scenario '" + c.scenario + "' requires codimension q = 2, got q = " + std::to_string(c.geometry.q));
    c.bundle = bundle_from_json(j.value("bundle", json::object()), c.geometry.q);
    if (j.contains("cutoffs")) {
      c.leaf_cutoff = j["cutoffs"].value("leaf", c.leaf_cutoff);
      c.trans_cutoff = j["cutoffs"].value("trans", c.trans_cutoff);
    }
    if (c.leaf_cutoff < 0 || c.trans_cutoff < 1) invalid("cutoffs must be positive");
    if (j.contains("times")) c.times = j["times"].get<std::vector<double>>();
    if (j.contains("lambdas")) c.lambdas = j["lambdas"].get<std::vector<double>>();
    for (double l : c.lambdas)
      if (!(l > 0)) invalid("lambdas must be positive");
    for (double t : c.times)
      if (!std::isfinite(t)) invalid("times must be finite");
    c.seed = j.value("seed", std::uint64_t(1));
    c.output = j.value("output", "out/" + c.scenario);
    c.params = j.value("params", json::object());
    if (!c.params.is_object()) invalid("params must be an object");
  } catch (const json::exception& e) {
    invalid(e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigInvalid) throw;
    invalid(e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) invalid("cannot open config " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    invalid(path + ": " + e.what());
  }
  return parse_config(j);
}

const std::vector<ScenarioInfo>& scenario_catalog() {
  static const std::vector<ScenarioInfo> cat{
      {"geometry-checks", "p,q in {1,2}", "<1 s", "adapted frames, transverse connection, mean curvature"},
      {"flow-invariants", "q = 2", "~5 s", "flow conservation laws, frame flow, transport generator"},
      {"symbol-composition", "p = q = 1", "~10 s", "composition remainders against exact products"},
      {"commutator", "p = q = 1", "~5 s", "principal symbol of [B, K]"},
      {"dirac-adjoint", "q = 2", "~2 s", "adjoint of D' and the mean-curvature correction"},
      {"dirac-symbols", "q = 2", "~30 s", "conjugation expansion and subprincipal symbol of D^2"},
      {"signature-isotypic", "q = 2", "~2 s", "signature operator identity and leaf-mode blocks"},
      {"egorov-scalar", "q = 1", "~30 s", "Heisenberg evolution vs transported symbol, Bochner model"},
      {"egorov-dirac", "q = 2", "~7 min", "Heisenberg evolution vs transported symbol, Dirac model"},
  };
  return cat;
}

void ScenarioResult::check(const std::string& name, double value, const std::string& relation, double threshold) {
  const bool ok = relation == "<=" ? value <= threshold : value >= threshold;
  checks.push_back({name, value, relation, threshold, ok && std::isfinite(value)});
}

bool ScenarioResult::passed() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

json ScenarioResult::report() const {
  json cs = json::array();
  for (const auto& c : checks)
    cs.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"threshold", c.threshold},
                  {"pass", c.pass}});
  return {{"scenario", scenario}, {"property", property}, {"pass", passed()},
          {"checks", cs},         {"metrics", metrics},   {"details", details}};
}

RunArtifacts write_artifacts(const ScenarioResult& r, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) invalid("cannot create output directory " + dir + ": " + ec.message());
  RunArtifacts out;
  out.files.emplace_back("report.json", write_file(fs::path(dir) / "report.json", r.report().dump(2) + "\n"));
  for (const auto& [name, t] : r.tables) {
    std::ostringstream s;
    for (std::size_t i = 0; i < t.header.size(); ++i) s << (i ? "," : "") << t.header[i];
    s << "\n";
    char buf[32];
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", row[i]);
        s << (i ? "," : "") << buf;
      }
      s << "\n";
    }
    out.files.emplace_back(name, write_file(fs::path(dir) / name, s.str()));
  }
  json run;
  run["files"] = json::array();
  for (const auto& [n, h] : out.files) run["files"].push_back({{"name", n}, {"fnv1a64", h}});
  run["timings"] = json::object();
  for (const auto& [stage, sec] : r.timings) run["timings"][stage] = sec;
  write_file(fs::path(dir) / "run.json", run.dump(2) + "\n");
  return out;
}

}  // namespace foliant

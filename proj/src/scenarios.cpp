#include "foliant/scenarios.hpp"

#include <chrono>
#include <random>

#include "foliant/evolution.hpp"
#include "foliant/flows.hpp"
#include "foliant/json_util.hpp"
#include "foliant/symbols.hpp"

namespace foliant {

using nlohmann::json;

namespace {

class Stopwatch {
 public:
  explicit Stopwatch(ScenarioResult& r) : r_(r), t0_(Clock::now()) {}
  void lap(const std::string& stage) {
    const auto t = Clock::now();
    r_.timings.emplace_back(stage, std::chrono::duration<double>(t - t0_).count());
    t0_ = t;
  }

 private:
  using Clock = std::chrono::steady_clock;
  ScenarioResult& r_;
  Clock::time_point t0_;
};

double tol(const ExperimentConfig& c, const std::string& key, double def) {
  return c.params.contains("tolerances") ? c.params["tolerances"].value(key, def) : def;
}

std::vector<double> lambdas_or(const ExperimentConfig& c, std::vector<double> def) {
  return c.lambdas.empty() ? def : c.lambdas;
}

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  return -fit_decay(x, y)[0];
}

// ------------------------------------------------------------------ geometry-checks

ScenarioResult geometry_checks(const ExperimentConfig& cfg) {
  ScenarioResult r;
  r.property = "adapted frames are orthonormal; the transverse connection is metric and torsion free; "
               "tau is minus the frame derivative of the log fiber volume";
  Stopwatch sw(r);
  const ModelGeometry& g = cfg.geometry;
  const int q = g.q;
  const int grid = cfg.params.value("grid", 16);
  const FrameData f = build_frames(g);
  const ConnectionData c = transverse_connection(g, f);
  double compat = 0, antisym = 0, tau_id = 0, conormal = 0, tau_max = 0;
  CsvTable tau{{"y1", "y2", "tau1", "tau2"}, {}};
  if (q == 1) tau.header = {"y1", "tau1"};
  for (const auto& y : torus_grid(grid, q)) {
    const ConnectionPoint cp = c.at(y.data());
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) {
        for (int d = 0; d < q; ++d) compat = std::max(compat, std::abs(cp.Gamma(d, a, b) + cp.Gamma(b, a, d)));
        antisym = std::max(antisym, (cp.curvature(a, b) + cp.curvature(b, a)).norm());
      }
    const Eigen::VectorXd t = cp.tau();
    const Jet ld = 0.5 * log_det(g.fiber_metric(y.data()));
    for (int a = 0; a < q; ++a) {
      double fl = 0;
      for (int k = 0; k < q; ++k) fl += cp.frame.LB.v(a, k) * ld.d[k];
      tau_id = std::max(tau_id, std::abs(t(a) + fl));
    }
    tau_max = std::max(tau_max, t.norm());
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(g.p), eta(q);
    for (int l = 0; l < q; ++l) eta(l) = 1.0 + 0.5 * l - 0.3 * std::sin(y[l]);
    const Eigen::MatrixXd GB = g.base_metric(y.data()).v;
    const double expect = std::sqrt(eta.dot(GB.inverse() * eta));
    conormal = std::max(conormal, std::abs(dual_norm_at(g, y.data(), xi, eta).norm - expect));
    std::vector<double> row(y.begin(), y.begin() + q);
    for (int a = 0; a < q; ++a) row.push_back(t(a));
    tau.rows.push_back(row);
  }
  const double orth = f.orthonormality_defect(grid), tors = c.torsion_defect(grid);
  sw.lap("checks");
  r.metrics = {{"orthonormality", orth}, {"torsion", tors},         {"metric_compatibility", compat},
               {"curvature_antisymmetry", antisym}, {"tau_identity", tau_id}, {"conormal_norm", conormal},
               {"tau_max", tau_max}};
  r.check("orthonormality", orth, "<=", tol(cfg, "orthonormality", 1e-12));
  r.check("torsion", tors, "<=", tol(cfg, "torsion", 1e-10));
  r.check("metric_compatibility", compat, "<=", tol(cfg, "metric_compatibility", 1e-12));
  r.check("curvature_antisymmetry", antisym, "<=", tol(cfg, "curvature_antisymmetry", 1e-12));
  r.check("tau_identity", tau_id, "<=", tol(cfg, "tau_identity", 1e-10));
  r.check("conormal_norm", conormal, "<=", tol(cfg, "conormal_norm", 1e-12));
  r.tables["tau.csv"] = tau;
  return r;
}

// ------------------------------------------------------------------ flow-invariants

State cotangent_state(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& xi,
                      const Eigen::VectorXd& eta) {
  State z(x.size() + y.size() + xi.size() + eta.size());
  z << x, y, xi, eta;
  return z;
}

/// Directional derivative data of one symbol component at (x = x' = 0, y, eta).
Eigen::MatrixXcd generator_exact(const Hamiltonian& H, const TransverseSymbol& k, IVec a, IVec b, const double* y,
                                 const double* eta, const std::function<Eigen::MatrixXcd(const double*, const double*)>& gamma) {
  const int p = k.p(), q = k.q(), r = k.rank();
  State z = State::Zero(2 * p + 2 * q);
  for (int l = 0; l < q; ++l) {
    z(p + l) = y[l];
    z(2 * p + q + l) = eta[l];
  }
  const State grad = H.gradient(z);
  double rn = 0;
  for (int l = 0; l < q; ++l) rn += eta[l] * eta[l];
  rn = std::sqrt(rn);
  const double om[2] = {eta[0] / rn, q == 2 ? eta[1] / rn : 0.0};
  Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(r, r), G = Eigen::MatrixXcd::Zero(r, r);
  for (const auto& [key, s] : k.entries()) {
    if (key.a != a || key.b != b || key.s != k.order()) continue;
    double ph = 0;
    for (int l = 0; l < q; ++l) ph += key.c[l] * y[l];
    const Eigen::MatrixXcd h = k.direction_value(key, om);
    const Eigen::MatrixXcd v = std::polar(std::pow(rn, key.s), ph) * h;
    K += v;
    // x and x' both drift with d_xi p; y with d_eta p; eta with -d_y p
    cplx lin = 0;
    for (int j = 0; j < p; ++j) lin += kI * double(a[j] + b[j]) * grad(p + q + j);
    for (int l = 0; l < q; ++l) lin += kI * double(key.c[l]) * grad(2 * p + q + l);
    G += lin * v;
    // d_eta of |eta|^s h(eta/|eta|): only the radial part survives for direction-constant h
    for (int l = 0; l < q; ++l) G -= grad(p + l) * (key.s * eta[l] / (rn * rn)) * v;
  }
  if (gamma) {
    const Eigen::MatrixXcd Gm = gamma(y, eta);
    G += Gm * K - K * Gm;
  }
  return G;
}

/// Level-0 value of the (a, b) leaf component at (y, eta), phases in x, x' stripped.
Eigen::MatrixXcd leaf_pair_value(const TransverseSymbol& k, IVec a, IVec b, const double* y, const double* eta) {
  const int q = k.q();
  double rn = 0;
  for (int l = 0; l < q; ++l) rn += eta[l] * eta[l];
  rn = std::sqrt(rn);
  const double om[2] = {eta[0] / rn, q == 2 ? eta[1] / rn : 0.0};
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(k.rank(), k.rank());
  for (const auto& [key, s] : k.entries()) {
    if (key.a != a || key.b != b || key.s != k.order()) continue;
    double ph = 0;
    for (int l = 0; l < q; ++l) ph += key.c[l] * y[l];
    v += std::polar(std::pow(rn, key.s), ph) * k.direction_value(key, om);
  }
  return v;
}

bool direction_constant(const TransverseSymbol& k) {
  if (k.q() == 1) return true;  // h(+-1): derivative along the half-line is zero
  for (const auto& [key, s] : k.entries())
    for (const auto& m : s)
      if ((m - s[0]).norm() > 1e-14) return false;
  return true;
}

ScenarioResult flow_invariants(const ExperimentConfig& cfg) {
  ScenarioResult r;
  r.property = "the co-metric flow conserves the Hamiltonian and the leaf momenta; the transverse frame flow "
               "preserves orthonormality and the first integrals I_j and commutes with SO(2); the transported "
               "symbol solves the first-order transport equation";
  Stopwatch sw(r);
  const ModelGeometry& g = cfg.geometry;
  const int p = g.p, q = g.q;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> ang(0, 2 * kPi), u(-1, 1);
  FlowConfig fc;
  fc.step = cfg.params.value("step", 1e-3);
  fc.time = cfg.params.value("time", 10.0);
  fc.record_every = std::max(1, int(std::lround(1.0 / fc.step)));
  const int orbits = cfg.params.value("orbits", 3);

  // co-metric Hamiltonian flow on T*M
  CoMetricHamiltonian H(g);
  double energy = 0, momentum = 0;
  CsvTable energy_tab{{"orbit", "t", "energy_drift"}, {}};
  for (int o = 0; o < orbits; ++o) {
    Eigen::VectorXd x(p), y(q), xi(p), eta(q);
    for (int i = 0; i < p; ++i) x(i) = ang(rng), xi(i) = u(rng);
    for (int l = 0; l < q; ++l) y(l) = ang(rng), eta(l) = u(rng);
    eta(0) += eta(0) < 0 ? -0.5 : 0.5;
    const State z0 = cotangent_state(x, y, xi, eta);
    const Trajectory tr = integrate_flow(hamiltonian_field(H), z0, fc, PhaseLayout::cotangent(p, q));
    const double h0 = H.value(z0);
    for (std::size_t k = 0; k < tr.z.size(); ++k) {
      const double d = std::abs(H.value(tr.z[k]) - h0);
      energy = std::max(energy, d);
      momentum = std::max(momentum, (tr.z[k].segment(p + q, p) - xi).cwiseAbs().maxCoeff());
      energy_tab.rows.push_back({double(o), tr.t[k], d});
    }
  }
  sw.lap("hamiltonian_flow");

  // frame flow on the base: state (y, xi, v1, v2)
  double orth = 0, integrals = 0, equiv = 0, frame_energy = 0;
  CsvTable frame_tab{{"orbit", "t", "orthonormality", "integral_drift", "equivariance"}, {}};
  const VectorField ff = frame_flow_field(g);
  for (int o = 0; o < orbits; ++o) {
    const double y0[2] = {ang(rng), ang(rng)};
    const Eigen::Matrix2d G0 = g.base_metric(y0).v;
    const Eigen::Matrix2d L = Eigen::LLT<Eigen::Matrix2d>(G0).matrixU().toDenseMatrix().inverse();
    State s(8);
    s << y0[0], y0[1], u(rng), u(rng), L(0, 0), L(1, 0), L(0, 1), L(1, 1);
    const double th = ang(rng);
    State s2 = s;
    for (int k = 0; k < 2; ++k) {
      s2(4 + k) = std::cos(th) * s(4 + k) + std::sin(th) * s(6 + k);
      s2(6 + k) = -std::sin(th) * s(4 + k) + std::cos(th) * s(6 + k);
    }
    const Trajectory a = integrate_flow(ff, s, fc, {2, 2});
    const Trajectory b = integrate_flow(ff, s2, fc, {2, 2});
    auto v = [](const State& st, int j) { return Eigen::Vector2d(st(4 + 2 * j), st(5 + 2 * j)); };
    const Eigen::Vector2d xi0 = s.segment<2>(2);
    const double e0 = xi0.dot(G0.inverse() * xi0);
    for (std::size_t k = 0; k < a.z.size(); ++k) {
      const State& z = a.z[k];
      const Eigen::Matrix2d Gk = g.base_metric(z.data()).v;
      const Eigen::Vector2d xk = z.segment<2>(2);
      double o1 = 0, i1 = 0, e1 = 0;
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) o1 = std::max(o1, std::abs(v(z, i).dot(Gk * v(z, j)) - (i == j)));
        i1 = std::max(i1, std::abs(xk.dot(v(z, i)) - xi0.dot(v(s, i))));
      }
      for (int kk = 0; kk < 2; ++kk) {
        e1 = std::max(e1, std::abs(b.z[k](4 + kk) - (std::cos(th) * z(4 + kk) + std::sin(th) * z(6 + kk))));
        e1 = std::max(e1, std::abs(b.z[k](6 + kk) - (-std::sin(th) * z(4 + kk) + std::cos(th) * z(6 + kk))));
      }
      e1 = std::max(e1, (b.z[k].head<4>() - z.head<4>()).cwiseAbs().maxCoeff());
      frame_energy = std::max(frame_energy, std::abs(xk.dot(Gk.inverse() * xk) - e0));
      orth = std::max(orth, o1);
      integrals = std::max(integrals, i1);
      equiv = std::max(equiv, e1);
      frame_tab.rows.push_back({double(o), a.t[k], o1, i1, e1});
    }
  }
  sw.lap("frame_flow");

  // transport generator: central differences of k_t at t = 0 against X_p k + [Gamma, k]
  const json& tp = cfg.params.value("transport", json::object());
  const TransverseSymbol k = tp.contains("symbol") ? TransverseSymbol::from_json(tp["symbol"]) : [&] {
    TransverseSymbol d(p, q, cfg.bundle.rank, 1, 0, 16);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(cfg.bundle.rank, cfg.bundle.rank);
    if (cfg.bundle.rank > 1) m(0, 1) = m(1, 0) = 0.5;
    d.add_constant({0, 0}, {0, 0}, {1, 0}, 0, m);
    d.add_constant({1, 0}, {0, 0}, {0, 1}, 0, 0.5 * m);
    return d;
  }();
  if (k.p() != p || k.q() != q || k.rank() != cfg.bundle.rank)
    throw Error(ErrorKind::ConfigInvalid, "transport symbol must match (p, q, bundle rank)");
  if (!direction_constant(k))
    throw Error(ErrorKind::ConfigInvalid, "transport symbol must have direction-independent components for q = 2");
  const std::vector<double> deltas = tp.value("deltas", std::vector<double>{1e-2, 5e-3, 2.5e-3});
  const int ygrid = tp.value("ygrid", 8);
  const DiracSubprincipal sub = bochner_subprincipal(g, cfg.bundle);
  const SymbolTransport st = sub.transport(tp.value("step", 1e-3));
  // k_{+-delta} from transport_symbol, read back at its own grid nodes where the y-mode
  // expansion interpolates exactly
  std::vector<std::pair<TransverseSymbol, TransverseSymbol>> moved;
  for (double h : deltas) moved.emplace_back(transport_symbol(st, k, h, ygrid, 0.0), transport_symbol(st, k, -h, ygrid, 0.0));
  const auto nodes = torus_grid(ygrid, q);
  std::uniform_int_distribution<int> pick_node(0, int(nodes.size()) - 1), pick_dir(0, k.grid().n - 1);
  std::vector<double> errs(deltas.size(), 0.0);
  double gen_scale = 0;
  for (int pt = 0; pt < tp.value("points", 6); ++pt) {
    const auto y = nodes[pick_node(rng)];
    const auto eta = k.grid().omega(pick_dir(rng));
    for (const auto& [a, b] : k.leaf_pairs()) {
      const Eigen::MatrixXcd ex = generator_exact(*sub.H, k, a, b, y.data(), eta.data(), sub.gamma);
      gen_scale = std::max(gen_scale, ex.norm());
      for (std::size_t i = 0; i < deltas.size(); ++i) {
        const Eigen::MatrixXcd kp = leaf_pair_value(moved[i].first, a, b, y.data(), eta.data());
        const Eigen::MatrixXcd km = leaf_pair_value(moved[i].second, a, b, y.data(), eta.data());
        errs[i] = std::max(errs[i], ((kp - km) / (2 * deltas[i]) - ex).norm());
      }
    }
  }
  double order = 1e300;
  CsvTable tr_tab{{"delta", "error", "observed_order"}, {}};
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    double o = std::nan("");
    if (i > 0) {
      o = std::log(errs[i - 1] / errs[i]) / std::log(deltas[i - 1] / deltas[i]);
      order = std::min(order, o);
    }
    tr_tab.rows.push_back({deltas[i], errs[i], o});
  }
  sw.lap("transport_generator");

  r.metrics = {{"hamiltonian_drift", energy},   {"leaf_momentum_drift", momentum}, {"frame_orthonormality", orth},
               {"frame_integrals", integrals},  {"so2_equivariance", equiv},       {"frame_energy_drift", frame_energy},
               {"transport_errors", errs},      {"transport_order", order},        {"generator_scale", gen_scale}};
  r.details = {{"time", fc.time}, {"step", fc.step}, {"orbits", orbits}, {"deltas", deltas}};
  const double inv = tol(cfg, "invariants", 1e-8);
  r.check("hamiltonian_drift", energy, "<=", inv);
  r.check("leaf_momentum_drift", momentum, "<=", inv);
  r.check("frame_orthonormality", orth, "<=", inv);
  r.check("frame_integrals", integrals, "<=", inv);
  r.check("so2_equivariance", equiv, "<=", inv);
  r.check("frame_energy_drift", frame_energy, "<=", inv);
  r.check("transport_order", order, ">=", tol(cfg, "transport_order", 1.7));
  r.tables["hamiltonian.csv"] = energy_tab;
  r.tables["frame.csv"] = frame_tab;
  r.tables["transport.csv"] = tr_tab;
  return r;
}

}  // namespace

namespace {

// ------------------------------------------------------------------ symbol-composition

double shell_max(const BlockOperator& T, double lam) {
  const ModeSet& tr = T.trans();
  const int r = T.rank();
  double mx = 0;
  for (const auto& [key, blk] : T.blocks())
    for (int j = 0; j < tr.size(); ++j) {
      const double rn = norm2(tr[j], tr.dim());
      if (rn < lam || rn >= 2 * lam) continue;
      mx = std::max(mx, blk.middleCols(j * r, r).cwiseAbs().maxCoeff());
    }
  return mx;
}

Side side_from(const std::string& s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  throw Error(ErrorKind::ConfigInvalid, "side must be 'left' or 'right'");
}

struct ProductCutoffs {
  ModeSet leaf, trans, leaf_ext, trans_ext;
};

ProductCutoffs product_cutoffs(const ExperimentConfig& cfg, int q) {
  const json m = cfg.params.value("product_margin", json::object());
  const int ml = m.value("leaf", 4);
  const double mt = m.value("trans", 16.0);
  return {ModeSet::box(1, cfg.leaf_cutoff), ModeSet::disk(q, cfg.trans_cutoff),
          ModeSet::box(1, cfg.leaf_cutoff + ml), ModeSet::disk(q, cfg.trans_cutoff + mt)};
}

ScenarioResult symbol_composition(const ExperimentConfig& cfg) {
  ScenarioResult r;
  r.property = "quantize(k # b truncated at N) differs from the operator product by a remainder whose "
               "shell norm decays like lambda^(m1 + m2 - N - 1)";
  Stopwatch sw(r);
  const json& cases = cfg.params.at("cases");
  const std::vector<int> depths = cfg.params.value("depths", std::vector<int>{0, 1, 2});
  const std::vector<double> lams = lambdas_or(cfg, {8, 16, 32});
  const double floor = cfg.params.value("exact_floor", 1e-10);
  const double slack = tol(cfg, "slope_slack", 0.3);
  CsvTable tab{{"case", "N", "lambda", "remainder", "product_scale"}, {}};
  json rows = json::array();
  double worst_margin = -1e300;
  int ci = 0;
  for (const auto& c : cases) {
    const TransverseSymbol k = TransverseSymbol::from_json(c.at("symbol"));
    const ScalarFullSymbol b = ScalarFullSymbol::from_json(c.at("operator"));
    const Side side = side_from(c.value("side", "left"));
    if (k.p() != 1 || b.p != 1 || k.q() != b.q) throw Error(ErrorKind::ConfigInvalid, "composition cases need p = 1");
    const ProductCutoffs pc = product_cutoffs(cfg, k.q());
    const BlockOperator K = quantize(k, pc.leaf_ext, pc.trans_ext), B = quantize(b, pc.leaf_ext, pc.trans_ext);
    const BlockOperator M = (side == Side::left ? B * K : K * B).restrict_to(pc.leaf, pc.trans);
    for (int N : depths) {
      const BlockOperator R = quantize(compose(k, b, side, N), pc.leaf, pc.trans) - M;
      std::vector<double> rem, scale;
      bool exact = true;
      for (double l : lams) {
        rem.push_back(shell_max(R, l));
        scale.push_back(shell_max(M, l));
        exact = exact && rem.back() <= floor * scale.back();
        tab.rows.push_back({double(ci), double(N), l, rem.back(), scale.back()});
      }
      const double slope = exact ? std::nan("") : log_slope(lams, rem);
      const double bound = k.order() + b.order - N - 1 + slack;
      if (!exact) worst_margin = std::max(worst_margin, slope - bound);
      rows.push_back({{"case", ci}, {"side", c.value("side", "left")}, {"N", N}, {"m1", k.order()},
                      {"m2", b.order}, {"remainders", rem}, {"exact", exact}, {"slope", exact ? json() : json(slope)},
                      {"bound", bound}});
      const std::string name = "case" + std::to_string(ci) + "_N" + std::to_string(N);
      if (exact) r.check(name + "_exact_remainder", *std::max_element(rem.begin(), rem.end()), "<=",
                         floor * *std::max_element(scale.begin(), scale.end()));
      else r.check(name + "_slope", slope, "<=", bound);
    }
    ++ci;
  }
  sw.lap("composition");
  r.metrics = {{"cases", ci}, {"worst_slope_margin", worst_margin}};
  r.details = {{"rows", rows}, {"lambdas", lams}, {"exact_floor", floor}};
  r.tables["composition.csv"] = tab;
  return r;
}

// ------------------------------------------------------------------ commutator

std::vector<std::array<double, 2>> probe_directions(int q, int n) {
  if (q == 1) return {{1, 0}, {-1, 0}};
  std::vector<std::array<double, 2>> d;
  for (int j = 0; j < n; ++j) d.push_back({std::cos(2 * kPi * j / n), std::sin(2 * kPi * j / n)});
  return d;
}

ScenarioResult commutator(const ExperimentConfig& cfg) {
  ScenarioResult r;
  r.property = "the extracted principal symbol of [B, K] equals (1/i)(H_b k + div(H_b) k / 2) + "
               "(sigma_sub(x) - sigma_sub(x')) k";
  Stopwatch sw(r);
  const TransverseSymbol k = TransverseSymbol::from_json(cfg.params.at("symbol"));
  const ScalarFullSymbol b = ScalarFullSymbol::from_json(cfg.params.at("operator"));
  const ProductCutoffs pc = product_cutoffs(cfg, k.q());
  const BlockOperator K = quantize(k, pc.leaf_ext, pc.trans_ext), B = quantize(b, pc.leaf_ext, pc.trans_ext);
  const BlockOperator C = (B * K - K * B).restrict_to(pc.leaf, pc.trans);
  sw.lap("matrix_commutator");
  const TransverseSymbol cs = commutator_symbol(k, b);
  ProbeSet ps;
  ps.lambdas = lambdas_or(cfg, {8, 16, 32});
  ps.directions = probe_directions(k.q(), cfg.params.value("directions", 8));
  ps.c_window = cfg.params.value("c_window", 2);
  ps.leaf_pairs = cs.leaf_pairs();
  ps.order = cs.order();
  ps.richardson = cfg.params.value("richardson", false);
  const ExtractedSymbol ex = extract_symbol(C, ps);
  CsvTable tab{{"lambda", "abs_error", "ref_scale", "rel_error"}, {}};
  std::vector<double> rel;
  for (double l : ps.lambdas) {
    const SymbolError e = extraction_error(ex, l, cs);
    rel.push_back(e.abs_error / e.ref_scale);
    tab.rows.push_back({l, e.abs_error, e.ref_scale, rel.back()});
  }
  sw.lap("extraction");
  const std::size_t n = rel.size();
  const double ratio = n >= 2 ? rel[n - 2] / rel[n - 1] : std::nan("");
  r.metrics = {{"rel_errors", rel}, {"rel_error_max_lambda", rel.back()}, {"ratio", ratio},
               {"lambda_max", ps.lambdas.back()}};
  r.details = {{"order", cs.order()}, {"richardson", ps.richardson}, {"lambdas", ps.lambdas}};
  r.check("rel_error_at_max_lambda", rel.back(), "<=", tol(cfg, "rel_error", 0.1));
  r.check("halving_ratio", ratio, ">=", tol(cfg, "ratio", 1.5));
  r.tables["commutator.csv"] = tab;
  return r;
}

// ------------------------------------------------------------------ dirac-adjoint

ScenarioResult dirac_adjoint(const ExperimentConfig& cfg) {
  ScenarioResult r;
  r.property = "(D'_E)^* = D'_E - c(tau) on interior modes; omitting c(tau) leaves a defect of |c(tau)|";
  Stopwatch sw(r);
  const ModelGeometry& g = cfg.geometry;
  const DiracAssembly d = build_dirac(g, cfg.bundle, ModeSet::box(g.p, cfg.leaf_cutoff), ModeSet::disk(2, cfg.trans_cutoff));
  sw.lap("assemble");
  const AdjointReport a = adjoint_defect(d);
  sw.lap("adjoint");
  const double gap = std::abs(a.omitted_defect - a.ctau_norm);
  r.metrics = {{"defect", a.defect},       {"omitted_defect", a.omitted_defect}, {"ctau_norm", a.ctau_norm},
               {"omitted_gap", gap},       {"symmetry_defect", a.symmetry_defect}, {"full_defect", a.full_defect},
               {"interior_radius", a.interior_radius}};
  r.check("interior_defect", a.defect, "<=", tol(cfg, "defect", 1e-10));
  r.check("omitted_minus_ctau", gap, "<=", tol(cfg, "defect", 1e-10));
  r.check("symmetry_defect", a.symmetry_defect, "<=", tol(cfg, "defect", 1e-10));
  r.check("ctau_norm", a.ctau_norm, ">=", tol(cfg, "min_ctau", 1e-3));
  r.tables["adjoint.csv"] = {{"interior_radius", "defect", "omitted_defect", "ctau_norm", "symmetry_defect"},
                             {{double(a.interior_radius), a.defect, a.omitted_defect, a.ctau_norm, a.symmetry_defect}}};
  return r;
}

// ------------------------------------------------------------------ dirac-symbols

Section section_from_json(const json& j, int p, int rank) {
  Section a{p, 2, rank, {}};
  for (const auto& e : j) {
    const IVec m = ivec_from_json(e.value("x", json::array()), p), n = ivec_from_json(e.value("y", json::array()), 2);
    const json& v = e.at("value");
    Eigen::VectorXcd c(rank);
    if (!v.is_array() || int(v.size()) != rank) throw Error(ErrorKind::ConfigInvalid, "section value has wrong size");
    for (int i = 0; i < rank; ++i) c(i) = cplx_from_json(v[i]);
    a.c[{m, n}] = c;
  }
  return a;
}

Section default_section(int p, int rank) {
  Section a{p, 2, rank, {}};
  Eigen::VectorXcd c0(rank), c1(rank);
  for (int i = 0; i < rank; ++i) {
    c0(i) = cplx(1.0 / (1 + i), 0.2 * i);
    c1(i) = cplx(0.3 - 0.1 * i, 0.1);
  }
  a.c[{{0, 0}, {0, 0}}] = c0;
  a.c[{{1, 0}, {0, 1}}] = c1;
  return a;
}

ScenarioResult dirac_symbols(const ExperimentConfig& cfg) {
  ScenarioResult r;
  r.property = "the s^2 conjugation coefficient of D_E^2 is |P_H dphi|^2 and the s^1 coefficient matches the "
               "subprincipal prediction; closed form, full symbol and fit give the same subprincipal symbol";
  Stopwatch sw(r);
  const ModelGeometry& g = cfg.geometry;
  const DiracAssembly d = build_dirac(g, cfg.bundle, ModeSet::box(g.p, cfg.leaf_cutoff), ModeSet::disk(2, cfg.trans_cutoff));
  sw.lap("assemble");
  const int rank = d.rank();
  const Section a = cfg.params.contains("section") ? section_from_json(cfg.params["section"], g.p, rank)
                                                   : default_section(g.p, rank);
  std::mt19937_64 rng(cfg.seed);
  const int mr = cfg.params.value("mode_range", 3);
  std::uniform_int_distribution<int> mode(-mr, mr);
  std::uniform_real_distribution<double> ang(0, 2 * kPi);
  const int probes = cfg.params.value("probes", 12);
  CsvTable tab{{"m1", "m2", "n1", "n2", "x1", "x2", "y1", "y2", "s2_error", "s2_vs_dual_norm", "s1_error"}, {}};
  double e2 = 0, e2n = 0, e1 = 0;
  for (int t = 0; t < probes; ++t) {
    IVec m{0, 0}, n{0, 0};
    do {
      for (int i = 0; i < g.p; ++i) m[i] = mode(rng);
      n = {mode(rng), mode(rng)};
    } while (m == IVec{0, 0} && n == IVec{0, 0});
    const std::array<double, 4> pt{ang(rng), g.p == 2 ? ang(rng) : 0.0, ang(rng), ang(rng)};
    const ConjugationFit fit = conjugation_fit(dirac_squared(d), 2, m, n, a, {pt});
    const ConjugationPrediction pr = predict_conjugation(d, m, n, a, pt);
    const double scale = std::max(1.0, pr.s2.norm());
    Eigen::VectorXd xi(g.p), eta(2);
    for (int i = 0; i < g.p; ++i) xi(i) = m[i];
    eta << n[0], n[1];
    const double nn = dual_norm_at(g, pt.data() + 2, xi, eta).norm;
    const double a2 = (fit.leading[0] - pr.s2).norm() / scale;
    const double a2n = (fit.leading[0] - nn * nn * a.eval(pt.data(), pt.data() + 2)).norm() / scale;
    const double a1 = (fit.subleading[0] - pr.s1).norm();
    e2 = std::max(e2, a2);
    e2n = std::max(e2n, a2n);
    e1 = std::max(e1, a1);
    tab.rows.push_back({double(m[0]), double(m[1]), double(n[0]), double(n[1]), pt[0], pt[1], pt[2], pt[3], a2, a2n, a1});
  }
  sw.lap("conjugation");
  CsvTable ps{{"n1", "n2", "y1", "y2", "closed_vs_symbol", "closed_vs_fit", "symbol_vs_fit", "closed_norm"}, {}};
  double three = 0, psub_scale = 1e300;
  const json lattice = cfg.params.value("psub_modes", json::array({json::array({1, 0}), json::array({2, -3}),
                                                                   json::array({-1, 4})}));
  for (const auto& jn : lattice) {
    const IVec n = ivec_from_json(jn, 2);
    const double y[2] = {ang(rng), ang(rng)};
    const Eigen::VectorXd xi = Eigen::VectorXd::Zero(g.p);
    const Eigen::Vector2d eta(n[0], n[1]);
    const Eigen::MatrixXcd A = dirac_psub_closed_form(d, y, xi, eta);
    const Eigen::MatrixXcd B = dirac_psub_from_symbol(d, y, eta);
    const Eigen::MatrixXcd C = dirac_psub_from_fit(d, y, n);
    const double ab = (A - B).norm(), ac = (A - C).norm(), bc = (B - C).norm();
    three = std::max({three, ab, ac, bc});
    psub_scale = std::min(psub_scale, A.norm());
    ps.rows.push_back({double(n[0]), double(n[1]), y[0], y[1], ab, ac, bc, A.norm()});
  }
  sw.lap("subprincipal");
  r.metrics = {{"probes", probes},   {"s2_error", e2},     {"s2_vs_dual_norm", e2n},
               {"s1_error", e1},     {"psub_three_way", three}, {"psub_min_norm", psub_scale}};
  r.check("probe_count", probes, ">=", 10);
  r.check("s2_error", e2, "<=", tol(cfg, "s2", 1e-8));
  r.check("s2_vs_dual_norm", e2n, "<=", tol(cfg, "s2", 1e-8));
  r.check("s1_error", e1, "<=", tol(cfg, "s1", 1e-6));
  r.check("psub_three_way", three, "<=", tol(cfg, "psub", 1e-6));
  r.tables["probes.csv"] = tab;
  r.tables["subprincipal.csv"] = ps;
  return r;
}

// ------------------------------------------------------------------ signature-isotypic

ScenarioResult signature_isotypic(const ExperimentConfig& cfg) {
  ScenarioResult r;
  r.property = "D_{F(Q)*} = d_H + d_H^* - (eps_tau + i_tau)/2, and each leaf-mode block of D_H is the "
               "twisted signature operator of the base";
  Stopwatch sw(r);
  const ModelGeometry& g = cfg.geometry;
  const SignatureOperator s = signature_operator(g, ModeSet::box(g.p, cfg.leaf_cutoff), ModeSet::disk(2, cfg.trans_cutoff));
  sw.lap("assemble");
  const SignatureReport rep = signature_report(s);
  double iso = 0;
  CsvTable tab{{"n", "isotypic_defect"}, {}};
  for (int n : cfg.params.value("leaf_modes", std::vector<int>{0, 1, 2})) {
    if (n > cfg.leaf_cutoff) throw Error(ErrorKind::ConfigInvalid, "leaf mode beyond the leaf cutoff");
    const Eigen::MatrixXcd blk = isotypic_block(s, {n, 0});
    const Eigen::MatrixXcd base = base_signature_block(g, {n, 0}, s.trans());
    const double e = (blk - base).cwiseAbs().maxCoeff();
    iso = std::max(iso, e);
    tab.rows.push_back({double(n), e});
  }
  sw.lap("isotypic");
  r.metrics = {{"identity_defect", rep.identity_defect}, {"difference_vs_correction", rep.difference_vs_corr},
               {"dH_vs_DFQ", rep.dH_vs_DFQ},             {"adjoint_defect", rep.adjoint_defect},
               {"isotypic_defect", iso}};
  r.check("identity_defect", rep.identity_defect, "<=", tol(cfg, "identity", 1e-10));
  r.check("adjoint_defect", rep.adjoint_defect, "<=", tol(cfg, "identity", 1e-10));
  r.check("isotypic_defect", iso, "<=", tol(cfg, "isotypic", 1e-10));
  r.tables["isotypic.csv"] = tab;
  return r;
}

}  // namespace

namespace {

// ------------------------------------------------------------------ Egorov

EgorovOptions egorov_options(const ExperimentConfig& cfg, std::vector<double> def) {
  EgorovOptions o;
  o.lambdas = lambdas_or(cfg, std::move(def));
  o.directions = cfg.params.value("directions", o.directions);
  o.c_window = cfg.params.value("c_window", o.c_window);
  o.ygrid = cfg.params.value("ygrid", o.ygrid);
  return o;
}

/// Closed-form evolution for constant g_F, g_B = I, A = 0 and a trivial bundle: P is diagonal with
/// omega(a, n) = sqrt(a.g_F^-1 a + |n|^2 + 1).
BlockOperator diagonal_evolution(const BlockOperator& K, const Eigen::MatrixXd& gF_inv, double t) {
  const ModeSet& L = K.leaf();
  const ModeSet& T = K.trans();
  const int r = K.rank(), p = L.dim(), q = T.dim();
  auto omega = [&](IVec a, IVec n) {
    Eigen::VectorXd av(p);
    for (int i = 0; i < p; ++i) av(i) = a[i];
    const double nn = norm2(n, q);
    return std::sqrt(av.dot(gF_inv * av) + nn * nn + 1);
  };
  BlockOperator out(L, T, r);
  for (const auto& [key, M] : K.blocks()) {
    Eigen::MatrixXcd R = M;
    for (int i = 0; i < T.size(); ++i)
      for (int j = 0; j < T.size(); ++j)
        R.block(i * r, j * r, r, r) *= std::polar(1.0, t * (omega(L[key.first], T[i]) - omega(L[key.second], T[j])));
    out.set_block(key.first, key.second, R);
  }
  return out;
}

bool is_constant(const TrigPoly& t) {
  for (const auto& e : t.terms)
    if (e.mode != IVec{0, 0} && (e.c != 0 || e.s != 0)) return false;
  return true;
}

/// Eligibility of the diagonal oracle; returns g_F^-1 or throws ConfigInvalid.
Eigen::MatrixXd oracle_metric(const ExperimentConfig& cfg) {
  const ModelGeometry& g = cfg.geometry;
  bool ok = cfg.bundle.B.empty() && is_constant(g.g_F.log_scale) && g.g_B.log_scale.empty();
  for (const auto& e : g.g_F.base.entries) ok = ok && is_constant(e);
  for (const auto& e : g.A.entries) ok = ok && e.empty();
  const double y0[2] = {0, 0};
  ok = ok && (g.base_metric(y0).v - Eigen::MatrixXd::Identity(g.q, g.q)).norm() == 0.0;
  for (const auto& e : g.g_B.base.entries) ok = ok && is_constant(e);
  if (!ok)
    throw Error(ErrorKind::ConfigInvalid,
                "closed_form_oracle needs constant g_F, g_B = I, A = 0 and a trivial bundle");
  return g.fiber_metric(y0).v.inverse();
}

json scales_json(const EgorovReport& e) {
  json a = json::array();
  for (const auto& s : e.scales) a.push_back({{"lambda", s.lambda}, {"error", s.error}, {"ref_scale", s.ref_scale}});
  return a;
}

void egorov_table(ScenarioResult& r, const EgorovReport& pos, const EgorovReport* neg) {
  CsvTable tab{{"lambda", "error", "ref_scale"}, {}};
  if (neg) tab.header.push_back("error_without_subprincipal");
  for (std::size_t i = 0; i < pos.scales.size(); ++i) {
    std::vector<double> row{pos.scales[i].lambda, pos.scales[i].error, pos.scales[i].ref_scale};
    if (neg) row.push_back(neg->scales[i].error);
    tab.rows.push_back(row);
  }
  r.tables["egorov.csv"] = tab;
}

ScenarioResult egorov_scalar(const ExperimentConfig& cfg) {
  ScenarioResult r;
  r.property = "Heisenberg evolution under (Delta_E + 1)^(1/2) of an order-0 operator has the transported "
               "symbol (lifted flow plus the subprincipal partial connection) as its principal symbol";
  Stopwatch sw(r);
  const ModelGeometry& g = cfg.geometry;
  const TransverseSymbol k = TransverseSymbol::from_json(cfg.params.at("symbol"));
  if (k.rank() != cfg.bundle.rank || k.p() != g.p || k.q() != g.q)
    throw Error(ErrorKind::ConfigInvalid, "symbol must match (p, q, bundle rank)");
  const double t = cfg.times.at(0);
  const BochnerAssembly b =
      build_bochner(g, cfg.bundle, ModeSet::box(g.p, cfg.leaf_cutoff), ModeSet::disk(g.q, cfg.trans_cutoff));
  const QuantumHamiltonian H = assemble_hamiltonian(b);
  sw.lap("assemble");
  const DiracSubprincipal sub = bochner_subprincipal(g, cfg.bundle);  // owns the Hamiltonian tr points to
  const SymbolTransport tr = sub.transport(cfg.params.value("step", 1e-2));
  const EgorovOptions o = egorov_options(cfg, {4, 8, 16, 32});
  const EgorovReport pos = egorov_compare(H, k, t, tr, o);
  sw.lap("egorov");
  r.metrics = {{"rho", pos.rho}, {"fit_residual", pos.residual}, {"errors", scales_json(pos)},
               {"hermiticity_defect", H.hermiticity_defect()}};
  r.check("rho", pos.rho, ">=", tol(cfg, "rho", 0.7));
  if (cfg.params.value("closed_form_oracle", false)) {
    const Eigen::MatrixXd gi = oracle_metric(cfg);
    const BlockOperator K = quantize(k, b.leaf(), b.trans());
    const double diff = (heisenberg_evolve(H, K, t) - diagonal_evolution(K, gi, t)).max_abs();
    sw.lap("closed_form_oracle");
    r.metrics["oracle_difference"] = diff;
    r.check("closed_form_oracle", diff, "<=", tol(cfg, "oracle", 1e-10));
  }
  const bool negative = cfg.params.value("negative_control", !cfg.bundle.B.empty());
  if (negative) {
    SymbolTransport tn = tr;
    tn.gamma = nullptr;
    const EgorovReport neg = egorov_compare(H, k, t, tn, o);
    sw.lap("negative_control");
    r.metrics["rho_without_subprincipal"] = neg.rho;
    r.metrics["errors_without_subprincipal"] = scales_json(neg);
    r.check("rho_without_subprincipal", neg.rho, "<=", tol(cfg, "rho_negative", 0.2));
    egorov_table(r, pos, &neg);
  } else {
    egorov_table(r, pos, nullptr);
  }
  r.details = {{"t", t}, {"lambdas", o.lambdas}, {"ygrid", o.ygrid}, {"c_window", o.c_window}};
  return r;
}

ScenarioResult egorov_dirac(const ExperimentConfig& cfg) {
  ScenarioResult r;
  r.property = "Heisenberg evolution under <D_E> of an order-0 operator has the symbol transported with "
               "the subprincipal connection of <D_E> as its principal symbol";
  Stopwatch sw(r);
  const ModelGeometry& g = cfg.geometry;
  const TransverseSymbol k = TransverseSymbol::from_json(cfg.params.at("symbol"));
  if (k.rank() != 2 * cfg.bundle.rank || k.p() != g.p || k.q() != 2)
    throw Error(ErrorKind::ConfigInvalid, "symbol must act on spinors (rank 2 x bundle rank)");
  if (cfg.bundle.B.empty())
    throw Error(ErrorKind::ConfigInvalid, "egorov-dirac needs a bundle with nonzero connection");
  const double t = cfg.times.at(0);
  const DiracAssembly d =
      build_dirac(g, cfg.bundle, ModeSet::box(g.p, cfg.leaf_cutoff), ModeSet::disk(2, cfg.trans_cutoff));
  std::vector<IVec> modes;
  for (const auto& [a, b] : k.leaf_pairs())
    for (IVec m : {a, IVec(-b)})
      if (std::find(modes.begin(), modes.end(), m) == modes.end()) modes.push_back(m);
  const QuantumHamiltonian H = assemble_hamiltonian(d, modes);
  sw.lap("assemble");
  const DiracSubprincipal sub = dirac_subprincipal(d);
  const SymbolTransport tr = sub.transport(cfg.params.value("step", 1e-2));
  const EgorovOptions o = egorov_options(cfg, {3, 4.5, 6, 9, 12});
  const EgorovReport pos = egorov_compare(H, k, t, tr, o);
  sw.lap("egorov");
  SymbolTransport tn = tr;
  tn.gamma = nullptr;
  const EgorovReport neg = egorov_compare(H, k, t, tn, o);
  sw.lap("negative_control");
  const double lref = cfg.params.value("reference_lambda", o.lambdas.back());
  const double ratio = neg.error_at(lref) / pos.error_at(lref);
  r.metrics = {{"rho", pos.rho},
               {"fit_residual", pos.residual},
               {"errors", scales_json(pos)},
               {"errors_zero_connection", scales_json(neg)},
               {"degradation_ratio", ratio},
               {"reference_lambda", lref},
               {"hermiticity_defect", H.hermiticity_defect()}};
  r.check("rho", pos.rho, ">=", tol(cfg, "rho", 0.6));
  r.check("degradation_ratio", ratio, ">=", tol(cfg, "degradation", 3.0));
  egorov_table(r, pos, &neg);
  r.details = {{"t", t}, {"lambdas", o.lambdas}, {"ygrid", o.ygrid}, {"directions", o.directions},
               {"interior_cutoff", d.interior().cutoff()}};
  return r;
}

}  // namespace

ScenarioResult run_scenario(const ExperimentConfig& cfg) {
  using Runner = ScenarioResult (*)(const ExperimentConfig&);
  static const std::map<std::string, Runner> runners{
      {"geometry-checks", geometry_checks},     {"flow-invariants", flow_invariants},
      {"symbol-composition", symbol_composition}, {"commutator", commutator},
      {"dirac-adjoint", dirac_adjoint},         {"dirac-symbols", dirac_symbols},
      {"signature-isotypic", signature_isotypic}, {"egorov-scalar", egorov_scalar},
      {"egorov-dirac", egorov_dirac}};
  const auto it = runners.find(cfg.scenario);
  if (it == runners.end()) throw Error(ErrorKind::ConfigInvalid, "unknown scenario '" + cfg.scenario + "'");
  ScenarioResult r;
  try {
    r = it->second(cfg);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, std::string("params: ") + e.what());
  }
  r.scenario = cfg.scenario;
  r.details["seed"] = cfg.seed;
  r.details["config"] = cfg.source;
  return r;
}

}  // namespace foliant

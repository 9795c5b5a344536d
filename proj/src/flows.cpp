#include "foliant/flows.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "foliant/fourier.hpp"

namespace foliant {

namespace {

double eta_norm(const State& z, const PhaseLayout& L) {
  double s = 0;
  for (int l = 0; l < L.eta_dim; ++l) s += z(L.eta_offset + l) * z(L.eta_offset + l);
  return std::sqrt(s);
}

int step_count(double t, double h) {
  if (!(h > 0)) throw Error(ErrorKind::StepUnstable, "step size must be positive");
  return std::max(1, int(std::ceil(std::abs(t) / h - 1e-9)));
}

template <class F>
State rk4_step(const F& f, const State& z, double h) {
  const State k1 = f(z);
  const State k2 = f(z + 0.5 * h * k1);
  const State k3 = f(z + 0.5 * h * k2);
  const State k4 = f(z + h * k3);
  return z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Full cotangent vector nu = (xi, eta) and its metric data at y.
struct CoMetricEval {
  double p;
  Eigen::VectorXd dnu;        // d_nu p
  std::array<double, 2> dy;   // d_y p
};

CoMetricEval co_metric(const ModelGeometry& g, const State& z) {
  const int n = g.p + g.q;
  const double* y = z.data() + g.p;
  Eigen::VectorXd nu(n);
  nu << z.segment(g.p + g.q, g.p), z.segment(2 * g.p + g.q, g.q);
  const JetMat G = g.full_metric(y);
  const Eigen::MatrixXd Gi = G.v.inverse();
  const Eigen::VectorXd w = Gi * nu;
  CoMetricEval r;
  r.p = std::sqrt(nu.dot(w));
  if (r.p == 0) throw Error(ErrorKind::EvaluationAtZeroSection, "co-metric Hamiltonian at nu = 0");
  r.dnu = w / r.p;
  r.dy = {0, 0};
  for (int k = 0; k < g.q; ++k) r.dy[k] = -w.dot(G.d[k] * w) / (2 * r.p);
  return r;
}

}  // namespace

double CoMetricHamiltonian::value(const State& z) const { return co_metric(g_, z).p; }

State CoMetricHamiltonian::gradient(const State& z) const {
  const CoMetricEval c = co_metric(g_, z);
  State r = State::Zero(2 * (p_ + q_));
  for (int k = 0; k < q_; ++k) r(p_ + k) = c.dy[k];
  r.segment(p_ + q_, p_) = c.dnu.head(p_);
  r.segment(2 * p_ + q_, q_) = c.dnu.tail(q_);
  return r;
}

namespace {

/// Gradient of Re sum_t coef e^{i(mx.x + my.y)} xi^gamma eta^delta, plus the mixed x-xi trace.
void symbol_gradient(const ScalarFullSymbol& b, const State& z, double* value, State* grad, double* mixed) {
  const int p = b.p, q = b.q;
  const double* x = z.data();
  const double* y = z.data() + p;
  const double* xi = z.data() + p + q;
  const double* eta = z.data() + 2 * p + q;
  if (value) *value = 0;
  if (grad) *grad = State::Zero(2 * (p + q));
  if (mixed) *mixed = 0;
  for (const auto& t : b.principal) {
    // monomial and its partial derivatives
    double mono = 1;
    for (int i = 0; i < p; ++i) mono *= std::pow(xi[i], t.gamma[i]);
    for (int l = 0; l < q; ++l) mono *= std::pow(eta[l], t.delta[l]);
    std::array<double, 2> dxi{0, 0}, deta{0, 0};
    for (int i = 0; i < p; ++i) {
      if (t.gamma[i] == 0) continue;
      double m = t.gamma[i] * std::pow(xi[i], t.gamma[i] - 1);
      for (int j = 0; j < p; ++j)
        if (j != i) m *= std::pow(xi[j], t.gamma[j]);
      for (int l = 0; l < q; ++l) m *= std::pow(eta[l], t.delta[l]);
      dxi[i] = m;
    }
    for (int l = 0; l < q; ++l) {
      if (t.delta[l] == 0) continue;
      double m = t.delta[l] * std::pow(eta[l], t.delta[l] - 1);
      for (int k = 0; k < q; ++k)
        if (k != l) m *= std::pow(eta[k], t.delta[k]);
      for (int i = 0; i < p; ++i) m *= std::pow(xi[i], t.gamma[i]);
      deta[l] = m;
    }
    for (const auto& [md, c] : t.coef) {
      double ph = 0;
      for (int i = 0; i < p; ++i) ph += md.first[i] * x[i];
      for (int l = 0; l < q; ++l) ph += md.second[l] * y[l];
      const cplx e = c * std::polar(1.0, ph);
      if (value) *value += (e * mono).real();
      if (grad) {
        for (int i = 0; i < p; ++i) (*grad)(i) += (kI * double(md.first[i]) * e * mono).real();
        for (int l = 0; l < q; ++l) (*grad)(p + l) += (kI * double(md.second[l]) * e * mono).real();
        for (int i = 0; i < p; ++i) (*grad)(p + q + i) += (e * dxi[i]).real();
        for (int l = 0; l < q; ++l) (*grad)(2 * p + q + l) += (e * deta[l]).real();
      }
      if (mixed)
        for (int i = 0; i < p; ++i) *mixed += (kI * double(md.first[i]) * e * dxi[i]).real();
    }
  }
}

}  // namespace

double SymbolHamiltonian::value(const State& z) const {
  double v;
  symbol_gradient(b_, z, &v, nullptr, nullptr);
  return v;
}

State SymbolHamiltonian::gradient(const State& z) const {
  State g;
  symbol_gradient(b_, z, nullptr, &g, nullptr);
  return g;
}

double SymbolHamiltonian::leaf_divergence(const State& z) const {
  double m;
  symbol_gradient(b_, z, nullptr, nullptr, &m);
  return m;
}

VectorField hamiltonian_field(const Hamiltonian& H, double eta_min) {
  const int p = H.p(), q = H.q();
  return [&H, p, q, eta_min](const State& z) {
    if (eta_norm(z, PhaseLayout::cotangent(p, q)) < eta_min)
      throw Error(ErrorKind::EvaluationAtZeroSection, "|eta| below eta_min");
    const State g = H.gradient(z);
    State r(2 * (p + q));
    r.head(p + q) = g.tail(p + q);
    r.tail(p + q) = -g.head(p + q);
    return r;
  };
}

Trajectory integrate_flow(const VectorField& field, const State& z0, const FlowConfig& cfg,
                          const PhaseLayout& layout) {
  const int n = step_count(cfg.time, cfg.step);
  const double h = cfg.time / n;
  Trajectory tr;
  tr.t.push_back(0);
  tr.z.push_back(z0);
  State z = z0;
  for (int i = 1; i <= n; ++i) {
    z = rk4_step(field, z, h);
    if (layout.eta_dim > 0) {
      const double e = eta_norm(z, layout);
      if (!(e >= cfg.eta_min && e <= 1.0 / cfg.eta_min))
        throw Error(ErrorKind::StepUnstable, "|eta| left [eta_min, 1/eta_min]");
    }
    if (!z.allFinite()) throw Error(ErrorKind::StepUnstable, "non-finite state");
    if (i == n || (cfg.record_every > 0 && i % cfg.record_every == 0)) {
      tr.t.push_back(i * h);
      tr.z.push_back(z);
    }
  }
  return tr;
}

VectorField lifted_flow_field(const Hamiltonian& H, double eta_min) {
  const int p = H.p(), q = H.q();
  return [&H, p, q, eta_min](const State& w) {
    State z(2 * (p + q));
    z << w.head(p), w.segment(2 * p, q), State::Zero(p), w.segment(2 * p + q, q);
    if (eta_norm(z, PhaseLayout::cotangent(p, q)) < eta_min)
      throw Error(ErrorKind::EvaluationAtZeroSection, "|eta| below eta_min");
    const State g = H.gradient(z);
    State zs = z;
    zs.head(p) = w.segment(p, p);
    const State gs = H.gradient(zs);
    State r(2 * p + 2 * q);
    r.head(p) = g.segment(p + q, p);
    r.segment(p, p) = gs.segment(p + q, p);
    r.segment(2 * p, q) = g.segment(2 * p + q, q);
    r.segment(2 * p + q, q) = -g.segment(p, q);
    return r;
  };
}

namespace {

std::pair<State, Eigen::MatrixXcd> transport_rk4(const PartialConnection& c, const State& z0, double t, double h,
                                                 const FlowConfig& cfg) {
  const int n = step_count(t, h);
  const double hh = t / n;
  State z = z0;
  Eigen::MatrixXcd T = Eigen::MatrixXcd::Identity(c.rank, c.rank);
  auto gam = [&](const State& s) {
    return c.gamma ? c.gamma(s) : Eigen::MatrixXcd(Eigen::MatrixXcd::Zero(c.rank, c.rank));
  };
  for (int i = 0; i < n; ++i) {
    const State k1 = c.field(z);
    const Eigen::MatrixXcd K1 = -gam(z) * T;
    const State z2 = z + 0.5 * hh * k1;
    const State k2 = c.field(z2);
    const Eigen::MatrixXcd K2 = -gam(z2) * (T + 0.5 * hh * K1);
    const State z3 = z + 0.5 * hh * k2;
    const State k3 = c.field(z3);
    const Eigen::MatrixXcd K3 = -gam(z3) * (T + 0.5 * hh * K2);
    const State z4 = z + hh * k3;
    const State k4 = c.field(z4);
    const Eigen::MatrixXcd K4 = -gam(z4) * (T + hh * K3);
    z += (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    T += (hh / 6.0) * (K1 + 2 * K2 + 2 * K3 + K4);
    if (c.layout.eta_dim > 0) {
      const double e = eta_norm(z, c.layout);
      if (!(e >= cfg.eta_min && e <= 1.0 / cfg.eta_min))
        throw Error(ErrorKind::StepUnstable, "|eta| left [eta_min, 1/eta_min]");
    }
  }
  return {z, T};
}

}  // namespace

TransportResult parallel_transport(const PartialConnection& conn, const State& z0, const FlowConfig& cfg) {
  TransportResult r;
  auto [z, T] = transport_rk4(conn, z0, cfg.time, cfg.step, cfg);
  r.z = z;
  r.T = T;
  if (cfg.estimate_error) {
    auto [z2, T2] = transport_rk4(conn, z0, cfg.time, 0.5 * cfg.step, cfg);
    r.error_estimate = std::max((T2 - T).norm(), (z2 - z).norm()) / 15.0;
    if (r.error_estimate > cfg.tolerance)
      throw Error(ErrorKind::OdeTolerance, "transport error estimate " + std::to_string(r.error_estimate));
    r.z = z2;
    r.T = T2;
  }
  if (conn.hermitian) {
    const double u = (r.T.adjoint() * r.T - Eigen::MatrixXcd::Identity(conn.rank, conn.rank)).norm();
    if (u > std::max(cfg.tolerance, 1e-8)) throw Error(ErrorKind::OdeTolerance, "transport lost unitarity");
  }
  return r;
}

Eigen::MatrixXcd transport_pointwise(const SymbolTransport& tr, const TransverseSymbol& k, IVec a, IVec b,
                                     const double* y, const double* eta, double t, int max_level) {
  const int p = tr.H->p(), q = tr.H->q();
  const int r = k.rank();
  PartialConnection c;
  c.field = lifted_flow_field(*tr.H);
  c.rank = r;
  c.layout = PhaseLayout::cotangent(p, q);
  if (tr.gamma) c.gamma = [&](const State& s) { return tr.gamma(s.data() + 2 * p, s.data() + 2 * p + q); };
  State w = State::Zero(2 * p + 2 * q);
  for (int l = 0; l < q; ++l) {
    w(2 * p + l) = y[l];
    w(2 * p + q + l) = eta[l];
  }
  FlowConfig cfg;
  cfg.step = tr.step;
  cfg.time = t;
  Eigen::MatrixXcd T = Eigen::MatrixXcd::Identity(r, r);
  State z = w;
  if (t != 0) std::tie(z, T) = transport_rk4(c, w, t, tr.step, cfg);
  double phx = 0;
  for (int i = 0; i < p; ++i) phx += a[i] * z(i) + b[i] * z(p + i);
  const double* yt = z.data() + 2 * p;
  const double* et = z.data() + 2 * p + q;
  double rn = 0;
  for (int l = 0; l < q; ++l) rn += et[l] * et[l];
  rn = std::sqrt(rn);
  const double om[2] = {et[0] / rn, q == 2 ? et[1] / rn : 0.0};
  Eigen::MatrixXcd val = Eigen::MatrixXcd::Zero(r, r);
  for (const auto& [key, s] : k.entries()) {
    if (key.a != a || key.b != b || k.order() - key.s > max_level) continue;
    double ph = phx;
    for (int l = 0; l < q; ++l) ph += key.c[l] * yt[l];
    val += std::polar(std::pow(rn, key.s), ph) * k.direction_value(key, om);
  }
  return T.partialPivLu().solve(val * T);
}

TransverseSymbol transport_symbol(const SymbolTransport& tr, const TransverseSymbol& k, double t, int ygrid,
                                  double prune_tol) {
  const int q = k.q(), r = k.rank();
  k.prepare();
  TransverseSymbol out(k.p(), q, r, k.order(), 0, k.grid().n);
  const auto pts = torus_grid(ygrid, q);
  const int nd = k.grid().n;
  for (const auto& [a, b] : k.leaf_pairs()) {
    // values[dir][point]
    std::vector<std::vector<Eigen::MatrixXcd>> vals(nd, std::vector<Eigen::MatrixXcd>(pts.size()));
    parallel_for(int(nd * pts.size()), [&](int idx) {
      const int d = idx / int(pts.size()), i = idx % int(pts.size());
      const auto om = k.grid().omega(d);
      vals[d][i] = transport_pointwise(tr, k, a, b, pts[i].data(), om.data(), t, 0);
    });
    std::map<IVec, TransverseSymbol::Samples> coef;
    std::vector<cplx> s(pts.size());
    for (int d = 0; d < nd; ++d)
      for (int u = 0; u < r; ++u)
        for (int v = 0; v < r; ++v) {
          for (std::size_t i = 0; i < pts.size(); ++i) s[i] = vals[d][i](u, v);
          const auto f = grid_dft(s, ygrid, q);
          for (std::size_t idx = 0; idx < f.size(); ++idx) {
            const IVec c{signed_freq(int(idx % ygrid), ygrid), q == 2 ? signed_freq(int(idx / ygrid), ygrid) : 0};
            auto& e = coef[c];
            if (e.empty()) e.assign(nd, Eigen::MatrixXcd::Zero(r, r));
            e[d](u, v) = f[idx];
          }
        }
    for (const auto& [c, smp] : coef) out.add(a, b, c, 0, smp);
  }
  out.prune(prune_tol);
  return out;
}

VectorField frame_flow_field(const ModelGeometry& g) {
  if (g.q != 2) throw Error(ErrorKind::UnsupportedDimension, "frame flow needs q = 2");
  return [g](const State& s) {
    const double* y = s.data();
    const Eigen::Vector2d xi = s.segment<2>(2);
    const JetMat G = g.base_metric(y);
    const Eigen::Matrix2d Gi = G.v.inverse();
    const Eigen::Vector2d w = Gi * xi;
    const double H = std::sqrt(xi.dot(w));
    if (H == 0) throw Error(ErrorKind::EvaluationAtZeroSection, "frame flow at xi = 0");
    const Eigen::Vector2d ydot = w / H;
    State r(8);
    r.head<2>() = ydot;
    for (int k = 0; k < 2; ++k) r(2 + k) = w.dot(G.d[k] * w) / (2 * H);
    // Christoffel symbols of g_B
    double Gam[2][2][2];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          double acc = 0;
          for (int d = 0; d < 2; ++d) acc += Gi(a, d) * (G.d[b](d, c) + G.d[c](d, b) - G.d[d](b, c));
          Gam[a][b][c] = 0.5 * acc;
        }
    for (int j = 0; j < 2; ++j) {
      const Eigen::Vector2d v = s.segment<2>(4 + 2 * j);
      for (int a = 0; a < 2; ++a) {
        double acc = 0;
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c) acc += Gam[a][b][c] * ydot(b) * v(c);
        r(4 + 2 * j + a) = -acc;
      }
    }
    return r;
  };
}

State frame_flow(const ModelGeometry& g, const State& frame_point, const FlowConfig& cfg) {
  return integrate_flow(frame_flow_field(g), frame_point, cfg, {2, 2}).final_state();
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
  std::ofstream f(path);
  f << std::setprecision(17);
  const int n = tr.z.empty() ? 0 : int(tr.z[0].size());
  f << "t";
  for (int i = 0; i < n; ++i) f << ",z" << i;
  f << "\n";
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    f << tr.t[k];
    for (int i = 0; i < n; ++i) f << "," << tr.z[k](i);
    f << "\n";
  }
}

}  // namespace foliant

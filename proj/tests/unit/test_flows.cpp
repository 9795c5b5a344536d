#include <doctest.h>

#include <cmath>
#include <foliant/flows.hpp>

#include "models.hpp"

using namespace foliant;

namespace {

State vec(std::initializer_list<double> v) {
  State s(v.size());
  int i = 0;
  for (double x : v) s(i++) = x;
  return s;
}

/// q = 1 base metric e^{2u}, u = 0.3 cos y.
ModelGeometry warped_base() {
  ModelGeometry g = models::flat(1, 1);
  g.g_B.log_scale = TrigPoly::cos_mode({1, 0}, 0.3);
  return g;
}

Eigen::Matrix2d base_metric(const ModelGeometry& g, const double* y) { return g.base_metric(y).v; }

}  // namespace

TEST_CASE("flat co-metric flow is a straight line") {
  CoMetricHamiltonian H(models::flat(1, 1));
  FlowConfig cfg;
  cfg.time = 1.3;
  const State z = integrate_flow(hamiltonian_field(H), vec({0.1, 0.2, 0.6, -0.8}), cfg).final_state();
  CHECK(std::abs(z(0) - (0.1 + 1.3 * 0.6)) < 1e-13);
  CHECK(std::abs(z(1) - (0.2 - 1.3 * 0.8)) < 1e-13);
  CHECK(std::abs(z(2) - 0.6) < 1e-14);
  CHECK(std::abs(z(3) + 0.8) < 1e-14);
}

TEST_CASE("constant anisotropic base metric") {
  ModelGeometry g = models::flat(1, 2);
  Eigen::Matrix2d gb;
  gb << 1, 0, 0, 4;
  g.g_B.base = TrigMatrix::constant(gb);
  CoMetricHamiltonian H(g);
  FlowConfig cfg;
  const State z0 = vec({0, 0, 0, 0.5, 1.0, 2.0});
  const State z = integrate_flow(hamiltonian_field(H), z0, cfg).final_state();
  const double p = std::sqrt(0.25 + 1.0 + 1.0);
  CHECK(std::abs(z(0) - 0.5 / p) < 1e-13);
  CHECK(std::abs(z(1) - 1.0 / p) < 1e-13);
  CHECK(std::abs(z(2) - 2.0 / (4 * p)) < 1e-13);
}

TEST_CASE("energy and leaf momentum are conserved on a generic model") {
  CoMetricHamiltonian H(models::generic());
  FlowConfig cfg;
  cfg.record_every = 100;
  const State z0 = vec({0.3, -0.2, 0.7, 1.1, 0.4, -0.3, 0.9, 0.5});
  const auto tr = integrate_flow(hamiltonian_field(H), z0, cfg, PhaseLayout::cotangent(2, 2));
  CHECK(tr.t.size() == 11);
  const double e0 = H.value(z0);
  for (const auto& z : tr.z) {
    CHECK(std::abs(H.value(z) - e0) < 1e-8);
    CHECK(std::abs(z(4) - 0.4) < 1e-14);
    CHECK(std::abs(z(5) + 0.3) < 1e-14);
  }
}

TEST_CASE("lifted flow projects to the Hamiltonian flow on N*F") {
  const ModelGeometry g = models::generic();
  CoMetricHamiltonian H(g);
  FlowConfig cfg;
  cfg.time = 0.8;
  const State w0 = vec({0.1, 0.2, 1.0, -0.5, 0.4, 0.7, -0.6, 0.8});
  const State w = integrate_flow(lifted_flow_field(H), w0, cfg).final_state();
  const State z0 = vec({0.1, 0.2, 0.4, 0.7, 0, 0, -0.6, 0.8});
  const State z = integrate_flow(hamiltonian_field(H), z0, cfg).final_state();
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(w(i) - z(i)) < 1e-13);
    CHECK(std::abs((w(2 + i) - w(i)) - (w0(2 + i) - w0(i))) < 1e-13);
    CHECK(std::abs(w(4 + i) - z(2 + i)) < 1e-13);
    CHECK(std::abs(w(6 + i) - z(6 + i)) < 1e-13);
  }
}

TEST_CASE("flow guards") {
  CoMetricHamiltonian H(models::flat(1, 1));
  FlowConfig cfg;
  CHECK_THROWS_WITH_AS(hamiltonian_field(H)(vec({0, 0, 1, 0})), doctest::Contains("eta"), Error);
  try {
    hamiltonian_field(H)(vec({0, 0, 1, 0}));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EvaluationAtZeroSection);
  }
  cfg.step = 0;
  try {
    integrate_flow(hamiltonian_field(H), vec({0, 0, 0, 1}), cfg);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StepUnstable);
  }
}

TEST_CASE("constant scalar connection gives a phase") {
  CoMetricHamiltonian H(models::flat(1, 1));
  PartialConnection c;
  c.field = hamiltonian_field(H);
  c.rank = 1;
  c.hermitian = true;
  c.layout = PhaseLayout::cotangent(1, 1);
  const double th = 0.7;
  c.gamma = [th](const State&) { return Eigen::MatrixXcd::Constant(1, 1, cplx(0, th)); };
  FlowConfig cfg;
  cfg.step = 1e-2;
  cfg.time = 2.0;
  const auto r = parallel_transport(c, vec({0, 0, 0, 1}), cfg);
  CHECK(std::abs(r.T(0, 0) - std::polar(1.0, -th * 2.0)) < 1e-10);
  CHECK(r.error_estimate < 1e-10);
}

TEST_CASE("non-commuting connection: unitarity, cocycle, tolerance") {
  CoMetricHamiltonian H(warped_base());
  PartialConnection c;
  c.field = hamiltonian_field(H);
  c.rank = 2;
  c.hermitian = true;
  c.layout = PhaseLayout::cotangent(1, 1);
  c.gamma = [](const State& z) {
    Eigen::Matrix2cd m;
    m << cplx(0, 0.5 * std::cos(z(1))), cplx(0.3, 0.2 * std::sin(z(1))),
        cplx(-0.3, 0.2 * std::sin(z(1))), cplx(0, -0.4);
    return Eigen::MatrixXcd(m);
  };
  FlowConfig cfg;
  cfg.step = 1e-2;
  const State z0 = vec({0, 0.4, 0, 1.3});
  cfg.time = 1.5;
  const auto full = parallel_transport(c, z0, cfg);
  CHECK((full.T.adjoint() * full.T - Eigen::Matrix2cd::Identity()).norm() < 1e-10);
  cfg.time = 0.5;
  const auto first = parallel_transport(c, z0, cfg);
  cfg.time = 1.0;
  const auto second = parallel_transport(c, first.z, cfg);
  CHECK((full.T - second.T * first.T).norm() < 1e-9);
  CHECK((full.z - second.z).norm() < 1e-9);

  cfg.tolerance = 1e-20;
  try {
    parallel_transport(c, z0, cfg);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OdeTolerance);
  }
}

TEST_CASE("flat transport of a y-mode is a translation") {
  CoMetricHamiltonian H(models::flat(1, 1));
  SymbolTransport tr{&H, {}, 1e-2};
  TransverseSymbol k(1, 1, 1, 0, 0);
  k.add_constant({0, 0}, {0, 0}, {3, 0}, 0, Eigen::MatrixXcd::Constant(1, 1, 1.0));
  const double y = 0.3, t = 0.9;
  for (double eta : {1.0, -2.0}) {
    const auto v = transport_pointwise(tr, k, {0, 0}, {0, 0}, &y, &eta, t);
    CHECK(std::abs(v(0, 0) - std::polar(1.0, 3 * (y + t * (eta > 0 ? 1 : -1)))) < 1e-12);
  }
}

TEST_CASE("transported symbols are homogeneous and pick up the leaf drift") {
  const ModelGeometry g = models::kaluza_klein();
  CoMetricHamiltonian H(g);
  SymbolTransport tr{&H, {}, 1e-2};
  TransverseSymbol k(1, 2, 1, 1, 0);
  k.add_harmonic({1, 0}, {0, 0}, {0, 1}, 0, 1, Eigen::MatrixXcd::Constant(1, 1, cplx(0.5, 0.2)));
  k.add_constant({1, 0}, {0, 0}, {0, 0}, 0, Eigen::MatrixXcd::Constant(1, 1, 1.0));
  k.prepare();
  const double y[2] = {0.2, -0.4}, eta[2] = {0.6, 0.8}, eta3[2] = {1.8, 2.4};
  const auto v1 = transport_pointwise(tr, k, {1, 0}, {0, 0}, y, eta, 0.7);
  const auto v3 = transport_pointwise(tr, k, {1, 0}, {0, 0}, y, eta3, 0.7);
  CHECK(std::abs(v3(0, 0) - 3.0 * v1(0, 0)) < 1e-11);

  // the leaf phase equals e^{i x_t} from the Hamiltonian flow started at xi = 0
  const State z = integrate_flow(hamiltonian_field(H), vec({0, 0.2, -0.4, 0, 0.6, 0.8}), FlowConfig{1e-2, 0.7})
                      .final_state();
  const auto v0 = transport_pointwise(tr, k, {0, 0}, {0, 0}, y, eta, 0.7);
  CHECK(std::abs(v0(0, 0)) < 1e-15);
  TransverseSymbol k1(1, 2, 1, 1, 0);
  k1.add_constant({1, 0}, {0, 0}, {0, 0}, 0, Eigen::MatrixXcd::Constant(1, 1, 1.0));
  const auto w = transport_pointwise(tr, k1, {1, 0}, {0, 0}, y, eta, 0.7);
  const double r = std::hypot(z(4), z(5));
  CHECK(std::abs(w(0, 0) - r * std::polar(1.0, z(0))) < 1e-10);
}

TEST_CASE("transport solves the first-order transport equation") {
  const ModelGeometry g = warped_base();
  CoMetricHamiltonian H(g);
  Eigen::Matrix2cd G;
  G << cplx(0, 0.2), cplx(0, 0.5), cplx(0, 0.5), cplx(0, -0.1);
  SymbolTransport tr{&H, [G](const double* y, const double*) { return Eigen::MatrixXcd(G * std::cos(y[0])); },
                     1e-3};
  TransverseSymbol k(1, 1, 2, 0, 0);
  Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
  d(0, 0) = 1.0;
  d(1, 1) = 2.0;
  const int c = 2;
  k.add_constant({0, 0}, {0, 0}, {c, 0}, 0, d);
  const double y = 0.5, eta = 1.0;
  // d/dt k_t at t = 0: X_p k + Gamma k - k Gamma
  const double u = 0.3 * std::cos(y);
  const double ydot = std::exp(-u);
  const Eigen::Matrix2cd kv = d * std::polar(1.0, c * y);
  const Eigen::Matrix2cd Gy = G * std::cos(y);
  const Eigen::Matrix2cd exact = cplx(0, c * ydot) * kv + Gy * kv - kv * Gy;
  double errs[2];
  for (int j = 0; j < 2; ++j) {
    const double h = j == 0 ? 0.02 : 0.01;
    const auto kp = transport_pointwise(tr, k, {0, 0}, {0, 0}, &y, &eta, h);
    const auto km = transport_pointwise(tr, k, {0, 0}, {0, 0}, &y, &eta, -h);
    errs[j] = ((kp - km) / (2 * h) - exact).norm();
  }
  CHECK(errs[0] < 1e-2);
  CHECK(errs[0] / errs[1] > 3.5);
  CHECK(errs[0] / errs[1] < 4.5);
}

TEST_CASE("transport_symbol satisfies the group law") {
  CoMetricHamiltonian H(warped_base());
  SymbolTransport tr{&H, [](const double* y, const double*) {
                       return Eigen::MatrixXcd::Constant(1, 1, cplx(0, 0.3 * std::sin(y[0])));
                     },
                     1e-2};
  TransverseSymbol k(1, 1, 1, 0, 0);
  k.add_constant({0, 0}, {0, 0}, {1, 0}, 0, Eigen::MatrixXcd::Constant(1, 1, 1.0));
  k.add_constant({0, 0}, {0, 0}, {0, 0}, 0, Eigen::MatrixXcd::Constant(1, 1, 0.5));
  const TransverseSymbol ks = transport_symbol(tr, k, 0.4, 64);
  for (double y : {0.0, 1.3, 4.0})
    for (double eta : {1.0, -1.0}) {
      const auto a = transport_pointwise(tr, ks, {0, 0}, {0, 0}, &y, &eta, 0.6);
      const auto b = transport_pointwise(tr, k, {0, 0}, {0, 0}, &y, &eta, 1.0);
      CHECK(std::abs(a(0, 0) - b(0, 0)) < 1e-8);
    }
}

TEST_CASE("frame flow preserves the metric data and commutes with SO(2)") {
  const ModelGeometry g = models::generic();
  const double y0[2] = {0.3, 1.1};
  const Eigen::Matrix2d G0 = base_metric(g, y0);
  // g_B-orthonormal frame at y0
  const Eigen::Matrix2d L = Eigen::LLT<Eigen::Matrix2d>(G0).matrixU().toDenseMatrix().inverse();
  State s(8);
  s << y0[0], y0[1], 0.7, -0.4, L(0, 0), L(1, 0), L(0, 1), L(1, 1);
  FlowConfig cfg;
  cfg.time = 1.0;
  const State e = frame_flow(g, s, cfg);
  const Eigen::Matrix2d G1 = base_metric(g, e.data());
  auto v = [](const State& st, int j) { return Eigen::Vector2d(st(4 + 2 * j), st(5 + 2 * j)); };
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(v(e, i).dot(G1 * v(e, j)) - (i == j)) < 1e-9);
  const Eigen::Vector2d xi0 = s.segment<2>(2), xi1 = e.segment<2>(2);
  CHECK(std::abs(xi0.dot(G0.inverse() * xi0) - xi1.dot(G1.inverse() * xi1)) < 1e-9);
  // velocity is parallel, so its frame components are constant
  for (int j = 0; j < 2; ++j) CHECK(std::abs(xi0.dot(v(s, j)) - xi1.dot(v(e, j))) < 1e-9);

  const double a = 0.8;
  State s2 = s;
  for (int k = 0; k < 2; ++k) {
    s2(4 + k) = std::cos(a) * s(4 + k) + std::sin(a) * s(6 + k);
    s2(6 + k) = -std::sin(a) * s(4 + k) + std::cos(a) * s(6 + k);
  }
  const State e2 = frame_flow(g, s2, cfg);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(e2(4 + k) - (std::cos(a) * e(4 + k) + std::sin(a) * e(6 + k))) < 1e-12);
    CHECK(std::abs(e2(6 + k) - (-std::sin(a) * e(4 + k) + std::cos(a) * e(6 + k))) < 1e-12);
  }
}

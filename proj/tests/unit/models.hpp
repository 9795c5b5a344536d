#pragma once

// Model geometries shared by the unit tests, plus coordinate-based oracles.

#include <foliant/dirac.hpp>
#include <foliant/geometry.hpp>
#include <foliant/modes.hpp>

namespace models {

using namespace foliant;

inline ModelGeometry flat(int p, int q) {
  ModelGeometry g;
  g.p = p;
  g.q = q;
  g.g_F.base = TrigMatrix::constant(Eigen::MatrixXd::Identity(p, p));
  g.g_B.base = TrigMatrix::constant(Eigen::MatrixXd::Identity(q, q));
  g.A = TrigMatrix::constant(Eigen::MatrixXd::Zero(p, q));
  return g;
}

/// g_F = exp(2c cos y), q = 1.
inline ModelGeometry warped(double c) {
  ModelGeometry g = flat(1, 1);
  g.g_F.log_scale = TrigPoly::cos_mode({1, 0}, c);
  return g;
}

/// p=1, q=2, constant metrics, A with dA != 0.
inline ModelGeometry kaluza_klein() {
  ModelGeometry g = flat(1, 2);
  g.A(0, 0) = TrigPoly::sin_mode({0, 1}, 0.4);
  g.A(0, 1) = TrigPoly::cos_mode({1, 0}, 0.3);
  return g;
}

/// Everything switched on: p=2, q=2, warped non-diagonal g_F, non-flat g_B, twisted A.
inline ModelGeometry generic() {
  ModelGeometry g;
  g.p = 2;
  g.q = 2;
  g.g_F.base = TrigMatrix(2, 2);
  g.g_F.base(0, 0) = TrigPoly(1.5) + TrigPoly::cos_mode({1, 0}, 0.2);
  g.g_F.base(0, 1) = TrigPoly::sin_mode({0, 1}, 0.15);
  g.g_F.base(1, 0) = g.g_F.base(0, 1);
  g.g_F.base(1, 1) = TrigPoly(1.0) + TrigPoly::sin_mode({1, 1}, 0.1);
  g.g_F.log_scale = TrigPoly::cos_mode({0, 1}, 0.25);
  g.g_B.base = TrigMatrix(2, 2);
  g.g_B.base(0, 0) = TrigPoly(1.2) + TrigPoly::cos_mode({0, 1}, 0.3);
  g.g_B.base(0, 1) = TrigPoly::cos_mode({1, 0}, 0.1);
  g.g_B.base(1, 0) = g.g_B.base(0, 1);
  g.g_B.base(1, 1) = TrigPoly(0.9) + TrigPoly::sin_mode({1, 0}, 0.2);
  g.A = TrigMatrix(2, 2);
  g.A(0, 0) = TrigPoly::sin_mode({0, 1}, 0.3);
  g.A(0, 1) = TrigPoly(0.1) + TrigPoly::cos_mode({1, 0}, 0.2);
  g.A(1, 0) = TrigPoly::cos_mode({1, 1}, 0.25);
  g.A(1, 1) = TrigPoly::sin_mode({1, 0}, -0.15);
  return g;
}

/// q=2 conformal base e^{2u} I with u = 0.3 cos y1 + 0.2 sin y2 and a warped fiber.
inline ModelGeometry conformal_warped() {
  ModelGeometry g = flat(1, 2);
  g.g_B.log_scale = TrigPoly::cos_mode({1, 0}, 0.3) + TrigPoly::sin_mode({0, 1}, 0.2);
  g.g_F.log_scale = TrigPoly::sin_mode({1, 0}, 0.2) + TrigPoly::cos_mode({0, 1}, 0.1);
  g.A(0, 0) = TrigPoly::cos_mode({0, 1}, 0.3);
  g.A(0, 1) = TrigPoly::sin_mode({1, 0}, 0.2);
  return g;
}

/// Coordinate Christoffel symbols Gamma^a_{bc} of the full metric (oracle route).
struct Christoffel {
  int n;
  std::vector<double> G;  // [a][b][c]
  double operator()(int a, int b, int c) const { return G[(std::size_t(a) * n + b) * n + c]; }
};

inline Christoffel christoffel(const ModelGeometry& g, const double* y) {
  const JetMat M = g.full_metric(y);
  const int n = g.p + g.q;
  const Eigen::MatrixXd Mi = M.v.inverse();
  auto dM = [&](int b, int d, int c) { return b < g.p ? 0.0 : M.d[b - g.p](d, c); };
  Christoffel ch{n, std::vector<double>(std::size_t(n) * n * n, 0.0)};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double s = 0;
        for (int d = 0; d < n; ++d) s += Mi(a, d) * (dM(b, d, c) + dM(c, d, b) - dM(d, b, c));
        ch.G[(std::size_t(a) * n + b) * n + c] = 0.5 * s;
      }
  return ch;
}

/// nabla_X Y in coordinates for frame vectors X = E_a, Y = E_b.
inline Eigen::VectorXd nabla_frame(const ModelGeometry& g, const FramePoint& f, const Christoffel& ch, int a,
                                   int b) {
  const int n = f.n();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n; ++c) {
    for (int k = 0; k < g.q; ++k) r(c) += f.E[a][g.p + k].v * f.E[b][c].d[k];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(c) += ch(c, i, j) * f.E[a][i].v * f.E[b][j].v;
  }
  return r;
}

/// q = 1 Kaluza-Klein circle: warped fiber, non-flat base, A with nonzero mean (holonomy).
inline ModelGeometry kk_circle() {
  ModelGeometry g = flat(1, 1);
  g.g_F.log_scale = TrigPoly::cos_mode({1, 0}, 0.15);
  g.g_B.base(0, 0) = TrigPoly(1.0) + TrigPoly::cos_mode({1, 0}, 0.3);
  g.A(0, 0) = TrigPoly(0.5) + TrigPoly::sin_mode({1, 0}, 0.3);
  return g;
}

/// Rank-2 connection B = i(0.6 cos y sx + 0.4 sin y sz + 0.3 sy) dy; its values do not commute.
inline BundleData circle_bundle() {
  Eigen::Matrix2cd sx, sy, sz;
  sx << 0, 1, 1, 0;
  sy << 0, cplx(0, -1), cplx(0, 1), 0;
  sz << 1, 0, 0, -1;
  BundleData E;
  E.rank = 2;
  E.B.push_back(FourierField::sample(1, 2, 2, 16, [&](const double* y) {
    return Eigen::MatrixXcd(kI * (0.6 * std::cos(y[0]) * sx + 0.4 * std::sin(y[0]) * sz + 0.3 * sy));
  }));
  return E;
}

/// Exact evolution for a flat scalar model: P is diagonal with
/// omega(a, n) = sqrt(a.a / gF + |n|^2 + 1), so entry (m, n) of block (a, b) picks up e^{it(omega_am - omega_bn)}.
inline BlockOperator flat_evolution(const BlockOperator& K, double gF, double t) {
  const ModeSet& L = K.leaf();
  const ModeSet& T = K.trans();
  const int r = K.rank(), q = T.dim();
  auto omega = [&](IVec a, IVec n) {
    const double aa = (a[0] * a[0] + (L.dim() == 2 ? a[1] * a[1] : 0)) / gF;
    const double nn = norm2(n, q);
    return std::sqrt(aa + nn * nn + 1);
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

}  // namespace models

#pragma once

// First-order jets in the transverse variables y (q <= 2).

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace foliant {

struct Jet {
  double v = 0.0;
  std::array<double, 2> d{0.0, 0.0};

  Jet() = default;
  Jet(double value) : v(value) {}
  Jet(double value, double d0, double d1) : v(value), d{d0, d1} {}
};

inline Jet operator+(const Jet& a, const Jet& b) { return {a.v + b.v, a.d[0] + b.d[0], a.d[1] + b.d[1]}; }
inline Jet operator-(const Jet& a, const Jet& b) { return {a.v - b.v, a.d[0] - b.d[0], a.d[1] - b.d[1]}; }
inline Jet operator-(const Jet& a) { return {-a.v, -a.d[0], -a.d[1]}; }
inline Jet operator*(const Jet& a, const Jet& b) {
  return {a.v * b.v, a.d[0] * b.v + a.v * b.d[0], a.d[1] * b.v + a.v * b.d[1]};
}
inline Jet operator*(double s, const Jet& a) { return {s * a.v, s * a.d[0], s * a.d[1]}; }
inline Jet operator/(const Jet& a, const Jet& b) {
  const double iv = 1.0 / b.v;
  return {a.v * iv, (a.d[0] * b.v - a.v * b.d[0]) * iv * iv, (a.d[1] * b.v - a.v * b.d[1]) * iv * iv};
}
inline Jet& operator+=(Jet& a, const Jet& b) { return a = a + b; }
inline Jet& operator-=(Jet& a, const Jet& b) { return a = a - b; }

inline Jet chain(const Jet& a, double f, double df) { return {f, df * a.d[0], df * a.d[1]}; }
inline Jet exp(const Jet& a) { const double e = std::exp(a.v); return chain(a, e, e); }
inline Jet log(const Jet& a) { return chain(a, std::log(a.v), 1.0 / a.v); }
inline Jet sqrt(const Jet& a) { const double s = std::sqrt(a.v); return chain(a, s, 0.5 / s); }

/// Matrix-valued jet: value plus the two y-derivatives.
struct JetMat {
  Eigen::MatrixXd v;
  std::array<Eigen::MatrixXd, 2> d;

  JetMat() = default;
  JetMat(int rows, int cols)
      : v(Eigen::MatrixXd::Zero(rows, cols)),
        d{Eigen::MatrixXd::Zero(rows, cols), Eigen::MatrixXd::Zero(rows, cols)} {}

  int rows() const { return int(v.rows()); }
  int cols() const { return int(v.cols()); }
  Jet at(int i, int j) const { return {v(i, j), d[0](i, j), d[1](i, j)}; }
  void set(int i, int j, const Jet& x) {
    v(i, j) = x.v;
    d[0](i, j) = x.d[0];
    d[1](i, j) = x.d[1];
  }
  JetMat transpose() const {
    JetMat r;
    r.v = v.transpose();
    r.d = {d[0].transpose(), d[1].transpose()};
    return r;
  }
};

inline JetMat operator*(const JetMat& a, const JetMat& b) {
  JetMat r;
  r.v = a.v * b.v;
  for (int k = 0; k < 2; ++k) r.d[k] = a.d[k] * b.v + a.v * b.d[k];
  return r;
}
inline JetMat operator+(const JetMat& a, const JetMat& b) {
  JetMat r;
  r.v = a.v + b.v;
  for (int k = 0; k < 2; ++k) r.d[k] = a.d[k] + b.d[k];
  return r;
}
inline JetMat operator*(const Jet& s, const JetMat& a) {
  JetMat r;
  r.v = s.v * a.v;
  for (int k = 0; k < 2; ++k) r.d[k] = s.d[k] * a.v + s.v * a.d[k];
  return r;
}

inline JetMat inverse(const JetMat& a) {
  JetMat r;
  r.v = a.v.inverse();
  for (int k = 0; k < 2; ++k) r.d[k] = -r.v * a.d[k] * r.v;
  return r;
}

/// Lower-triangular L with L G L^T = I (inverse Cholesky factor).
/// Derivative of C = chol(G): dC = C Phi(C^-1 dG C^-T), Phi = lower part with halved diagonal.
JetMat inverse_cholesky(const JetMat& g);

/// log det of a symmetric positive matrix jet.
Jet log_det(const JetMat& g);

}  // namespace foliant

#pragma once

// Trigonometric polynomials and sampled Fourier fields on T^q.

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "foliant/core.hpp"
#include "foliant/jet.hpp"

namespace foliant {

/// sum_k c_k cos(k.y) + s_k sin(k.y), real valued.
struct TrigTerm {
  IVec mode{0, 0};
  double c = 0.0;
  double s = 0.0;
};

struct TrigPoly {
  std::vector<TrigTerm> terms;

  TrigPoly() = default;
  TrigPoly(double constant) { if (constant != 0.0) terms.push_back({{0, 0}, constant, 0.0}); }
  static TrigPoly cos_mode(IVec k, double a) { TrigPoly t; t.terms.push_back({k, a, 0.0}); return t; }
  static TrigPoly sin_mode(IVec k, double a) { TrigPoly t; t.terms.push_back({k, 0.0, a}); return t; }

  bool empty() const { return terms.empty(); }
  Jet eval(const double* y, int q) const;
  double value(const double* y, int q) const { return eval(y, q).v; }
  int degree() const;
  TrigPoly operator+(const TrigPoly& o) const;
};

/// Matrix of trig polynomials.
struct TrigMatrix {
  int rows = 0, cols = 0;
  std::vector<TrigPoly> entries;  // row major

  TrigMatrix() = default;
  TrigMatrix(int r, int c) : rows(r), cols(c), entries(std::size_t(r) * c) {}
  static TrigMatrix constant(const Eigen::MatrixXd& m);
  TrigPoly& operator()(int i, int j) { return entries[std::size_t(i) * cols + j]; }
  const TrigPoly& operator()(int i, int j) const { return entries[std::size_t(i) * cols + j]; }
  JetMat eval(const double* y, int q) const;
  int degree() const;
};

/// exp(2 w(y)) G(y): trig matrix with an optional trig-polynomial log-scale.
struct ScaledField {
  TrigMatrix base;
  TrigPoly log_scale;

  JetMat eval(const double* y, int q) const;
};

/// Uniform grid on T^q with N points per axis; point index is i0 + N i1.
std::vector<std::array<double, 2>> torus_grid(int N, int q);

/// Forward DFT of grid samples: fhat_k = N^-q sum_j f(y_j) e^{-i k.y_j}.
/// Output index uses the same layout as the input, k taken mod N.
std::vector<cplx> grid_dft(const std::vector<cplx>& samples, int N, int q);
/// Signed frequency for index i on an N-point axis (Nyquist maps to -N/2).
int signed_freq(int i, int N);

/// Complex matrix-valued Fourier series on T^q: modes -> coefficient matrices.
class FourierField {
 public:
  FourierField() = default;
  FourierField(int q, int rows, int cols) : q_(q), rows_(rows), cols_(cols) {}

  /// Samples f on an N^q grid and keeps modes whose coefficient norm exceeds tol.
  template <class F>
  static FourierField sample(int q, int rows, int cols, int N, F&& f, double tol = 1e-15);

  int q() const { return q_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::map<IVec, Eigen::MatrixXcd>& modes() const { return modes_; }
  std::map<IVec, Eigen::MatrixXcd>& modes() { return modes_; }
  Eigen::MatrixXcd coefficient(IVec k) const;
  Eigen::MatrixXcd eval(const double* y) const;
  /// Spectral partial derivative in y_l.
  FourierField derivative(int l) const;
  FourierField adjoint() const;
  /// Largest |k|_inf among retained modes.
  int band() const;
  /// Largest |k|_inf among modes with coefficient norm above tol.
  int effective_band(double tol) const;

  FourierField operator+(const FourierField& o) const;
  FourierField operator*(cplx s) const;

  /// Field from values at torus_grid(N, q) points.
  static FourierField from_samples(int q, int rows, int cols, int N,
                                   const std::vector<Eigen::MatrixXcd>& vals, double tol = 1e-15);

 private:
  int q_ = 1, rows_ = 1, cols_ = 1;
  std::map<IVec, Eigen::MatrixXcd> modes_;
};

template <class F>
FourierField FourierField::sample(int q, int rows, int cols, int N, F&& f, double tol) {
  const auto pts = torus_grid(N, q);
  std::vector<Eigen::MatrixXcd> vals(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = f(pts[i].data());
  return from_samples(q, rows, cols, N, vals, tol);
}

}  // namespace foliant

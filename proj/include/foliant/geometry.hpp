#pragma once

// Torus-bundle foliation M = T^p x T^q with leaves T^p x {y}.
// Coordinates are ordered (x_1..x_p, y_1..y_q); all data depend on y only.
// Metric: theta^T g_F theta + dy^T g_B dy with theta = dx + A(y) dy.

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "foliant/fourier.hpp"
#include "foliant/jet.hpp"

namespace foliant {

struct ModelGeometry {
  int p = 1, q = 1;
  ScaledField g_F;  // p x p
  ScaledField g_B;  // q x q
  TrigMatrix A;     // p x q

  int dim() const { return p + q; }
  /// Checks dimensions and positivity of g_F, g_B on an N^q grid.
  void validate(int grid = 32) const;

  JetMat fiber_metric(const double* y) const { return g_F.eval(y, q); }
  JetMat base_metric(const double* y) const { return g_B.eval(y, q); }
  JetMat connection_matrix(const double* y) const { return A.eval(y, q); }
  /// Coordinate matrix of g in (dx, dy).
  JetMat full_metric(const double* y) const;
  /// log of the Riemannian density sqrt(det g_F det g_B).
  Jet log_density(const double* y) const;
  /// Largest trig degree among the data (log-scales included).
  int data_degree() const;
};

/// Orthonormal adapted frame at a point: E_a = e_a (a < p), E_{p+alpha} = f_alpha.
/// e = L_F d_x, f = L_B h with h_k = d_{y_k} - sum_j A_jk d_{x_j}.
struct FramePoint {
  int p = 1, q = 1;
  std::array<double, 2> y{0, 0};
  JetMat LF, LB, A;
  Eigen::MatrixXd G;                // coordinate metric value
  std::vector<std::vector<Jet>> E;  // E[a][coordinate]
  Jet log_rho;

  int n() const { return p + q; }
  /// Coordinate values of E_a.
  Eigen::VectorXd vec(int a) const;
};

class FrameData {
 public:
  FrameData() = default;
  explicit FrameData(ModelGeometry g) : geom_(std::move(g)) {}
  const ModelGeometry& geometry() const { return geom_; }
  FramePoint at(const double* y) const;
  /// max |g(E_a, E_b) - delta_ab| on an N^q grid.
  double orthonormality_defect(int grid = 16) const;

 private:
  ModelGeometry geom_;
};

FrameData build_frames(const ModelGeometry& g);

/// Levi-Civita data of g in the adapted frame at one point.
struct ConnectionPoint {
  FramePoint frame;
  std::vector<double> omega;  // omega[a][b][c] = g(nabla_{E_a} E_b, E_c)

  int n() const { return frame.n(); }
  double w(int a, int b, int c) const { return omega[(std::size_t(a) * n() + b) * n() + c]; }
  /// Gamma^gamma_{alpha beta} = g(nabla_{f_alpha} f_beta, f_gamma).
  double Gamma(int gamma, int alpha, int beta) const {
    const int p = frame.p;
    return w(p + alpha, p + beta, p + gamma);
  }
  /// tau_gamma = sum_i g(nabla_{e_i} e_i, f_gamma): mean curvature of the leaves.
  Eigen::VectorXd tau() const;
  /// R(f_alpha, f_beta) = -P_F [f_alpha, f_beta] as coordinate vector.
  Eigen::VectorXd curvature(int alpha, int beta) const;
  /// Coordinate Lie bracket [E_a, E_b].
  Eigen::VectorXd bracket(int a, int b) const;
};

class ConnectionData {
 public:
  ConnectionData() = default;
  explicit ConnectionData(const FrameData& f) : frames_(f) {}
  const FrameData& frames() const { return frames_; }
  const ModelGeometry& geometry() const { return frames_.geometry(); }
  ConnectionPoint at(const double* y) const;
  /// max |nabla_{f_a} f_b - nabla_{f_b} f_a - P_H [f_a, f_b]| over a grid.
  double torsion_defect(int grid = 16) const;

 private:
  FrameData frames_;
};

ConnectionData transverse_connection(const ModelGeometry& g, const FrameData& f);

/// Divergence of X = sum_alpha X^alpha(y) f_alpha with respect to the Riemannian density.
double divergence(const ConnectionData& c, const std::function<std::vector<Jet>(const double*)>& X,
                  const double* y);

struct DualNorm {
  double norm = 0;
  Eigen::VectorXd horizontal;  // covector components in (dx, dy)
};

/// |P_H nu| for nu = xi dx + eta dy at y.
DualNorm dual_norm_at(const ModelGeometry& g, const double* y, const Eigen::VectorXd& xi,
                      const Eigen::VectorXd& eta);

}  // namespace foliant

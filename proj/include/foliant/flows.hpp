#pragma once

// Hamiltonian flows on T*M, the lifted flow on the holonomy groupoid of N*F,
// parallel transport of partial connections and transport of transverse symbols.
//
// Phase points are (x[p], y[q], xi[p], eta[q]); groupoid points on N*F are
// (x[p], x'[p], y[q], eta[q]). In both layouts eta starts at offset 2p + q.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "foliant/geometry.hpp"
#include "foliant/symbols.hpp"

namespace foliant {

using State = Eigen::VectorXd;
using VectorField = std::function<State(const State&)>;

struct FlowConfig {
  double step = 1e-3;
  double time = 1.0;
  double tolerance = 1e-8;
  double eta_min = 1e-6;
  int record_every = 0;       // 0: endpoints only
  bool estimate_error = true; // step doubling in parallel_transport
};

/// Where eta sits in a state vector; eta_dim = 0 disables the zero-section guard.
struct PhaseLayout {
  int eta_offset = 0;
  int eta_dim = 0;
  static PhaseLayout cotangent(int p, int q) { return {2 * p + q, q}; }
};

class Hamiltonian {
 public:
  Hamiltonian(int p, int q) : p_(p), q_(q) {}
  virtual ~Hamiltonian() = default;
  int p() const { return p_; }
  int q() const { return q_; }
  virtual double value(const State& z) const = 0;
  /// (d_x, d_y, d_xi, d_eta) p at z.
  virtual State gradient(const State& z) const = 0;
  /// sum_j d_{x_j} d_{xi_j} p at z (half-density correction).
  virtual double leaf_divergence(const State&) const { return 0.0; }

 protected:
  int p_, q_;
};

/// p = |nu|_{g^M}: principal symbol of sqrt(Laplacian).
class CoMetricHamiltonian : public Hamiltonian {
 public:
  explicit CoMetricHamiltonian(ModelGeometry g) : Hamiltonian(g.p, g.q), g_(std::move(g)) {}
  double value(const State& z) const override;
  State gradient(const State& z) const override;

 private:
  ModelGeometry g_;
};

/// p = Re b_m for a polynomial full symbol.
class SymbolHamiltonian : public Hamiltonian {
 public:
  explicit SymbolHamiltonian(ScalarFullSymbol b) : Hamiltonian(b.p, b.q), b_(std::move(b)) {}
  double value(const State& z) const override;
  State gradient(const State& z) const override;
  double leaf_divergence(const State& z) const override;

 private:
  ScalarFullSymbol b_;
};

/// X_p = sum d_xi p d_x - d_x p d_xi + d_eta p d_y - d_y p d_eta.
VectorField hamiltonian_field(const Hamiltonian& H, double eta_min = 1e-6);

struct Trajectory {
  std::vector<double> t;
  std::vector<State> z;
  const State& final_state() const { return z.back(); }
};

/// Fixed-step RK4.
Trajectory integrate_flow(const VectorField& field, const State& z0, const FlowConfig& cfg,
                          const PhaseLayout& layout = {});

/// Field on (x, x', y, eta): x and x' move with d_xi p evaluated at their own leaf coordinate.
VectorField lifted_flow_field(const Hamiltonian& H, double eta_min = 1e-6);

/// Base flow plus connection coefficient Gamma(z) (r x r) in a fixed trivialization.
struct PartialConnection {
  VectorField field;
  std::function<Eigen::MatrixXcd(const State&)> gamma;
  int rank = 1;
  bool hermitian = false;  // Gamma skew-Hermitian: transport unitary
  PhaseLayout layout;
};

struct TransportResult {
  State z;
  Eigen::MatrixXcd T;
  double error_estimate = 0.0;
};

/// dT/dtau = -Gamma(z_tau) T, T_0 = I, along the base flow.
TransportResult parallel_transport(const PartialConnection& conn, const State& z0, const FlowConfig& cfg);

/// Data for transporting transverse symbols along the lifted flow. The Hamiltonian and
/// Gamma must be x-independent on N*F; Gamma(y, eta) is the range/source endomorphism i sigma_sub.
struct SymbolTransport {
  const Hamiltonian* H = nullptr;
  std::function<Eigen::MatrixXcd(const double* y, const double* eta)> gamma;  // empty: zero
  double step = 1e-2;
};

/// k_t(z) = T(z)^{-1} k(F_t z) T(z) with the x, x' phases e^{i(a.x + b.x')} stripped, for leaf pair (a, b),
/// at (y, eta). Includes all y-modes of k (summed at y_t).
Eigen::MatrixXcd transport_pointwise(const SymbolTransport& tr, const TransverseSymbol& k, IVec a, IVec b,
                                     const double* y, const double* eta, double t, int max_level = 0);

/// k_t sampled on an N^q y-grid and the symbol's direction grid, level 0 only, converted to y-modes.
TransverseSymbol transport_symbol(const SymbolTransport& tr, const TransverseSymbol& k, double t, int ygrid,
                                  double prune_tol = 1e-13);

/// Frame bundle of a q = 2 base metric: state (y[2], xi[2], v1[2], v2[2]).
State frame_flow(const ModelGeometry& g, const State& frame_point, const FlowConfig& cfg);
/// Frame-flow field (geodesic flow of |xi|_{g_B^{-1}} plus Levi-Civita transport of v_j).
VectorField frame_flow_field(const ModelGeometry& g);

/// CSV: t, state components.
void write_trajectory_csv(const std::string& path, const Trajectory& tr);

}  // namespace foliant

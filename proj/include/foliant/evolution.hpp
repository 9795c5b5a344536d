#pragma once

// Heisenberg evolution Phi_t(K) = e^{itP} K e^{-itP} in the truncated Fourier basis and the
// Egorov comparison against transported symbols.
//
// P is block-diagonal over leaf modes because all coefficients depend on y only. Each block
// is eigendecomposed once; evolution is then exact (no time stepping).

#include <Eigen/Dense>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "foliant/dirac.hpp"
#include "foliant/flows.hpp"
#include "foliant/modes.hpp"
#include "foliant/symbols.hpp"

namespace foliant {

/// Bochner Laplacian nabla^* nabla on E-valued functions (half-density trivialization).
/// Leaf block a: sum_alpha G_alpha^dag G_alpha + a.g_F^{-1}(y) a, with
/// G_alpha = f_alpha + B_E(f_alpha) - (1/2) f_alpha(log rho) and f_alpha twisted by d_x -> i a.
class BochnerAssembly {
 public:
  const ModelGeometry& geometry() const { return geom_; }
  const BundleData& bundle() const { return bundle_; }
  const ModeSet& leaf() const { return leaf_; }
  const ModeSet& trans() const { return trans_; }
  int rank() const { return bundle_.rank; }
  /// Galerkin block: G_alpha is applied into an extended mode set, so no truncation enters the product.
  Eigen::MatrixXcd block(IVec a) const;
  const std::vector<FirstOrderFields>& horizontal() const { return G_; }

  friend BochnerAssembly build_bochner(const ModelGeometry&, const BundleData&, const ModeSet&, const ModeSet&,
                                       const DiracOptions&);

 private:
  ModelGeometry geom_;
  BundleData bundle_;
  ModeSet leaf_, trans_;
  std::vector<FirstOrderFields> G_;  // one per base frame vector
  FourierField gF_inv_;              // p x p
};

/// Errors: NonHermitianConnection, RankMismatch.
BochnerAssembly build_bochner(const ModelGeometry& g, const BundleData& E, const ModeSet& leaf,
                              const ModeSet& trans, const DiracOptions& opt = {});

/// Partial connection of (Delta_E + 1)^{1/2} on N*F: Gamma(nu) = |nu|^-1 sum <nu, f_a> B_E(f_a).
DiracSubprincipal bochner_subprincipal(const ModelGeometry& g, const BundleData& E);

/// Eigendecomposition of one leaf block: P_a = V diag(omega) V^dag.
struct SpectralBlock {
  IVec leaf{0, 0};
  Eigen::MatrixXcd V;
  Eigen::VectorXd omega;
};

class QuantumHamiltonian {
 public:
  QuantumHamiltonian() = default;
  QuantumHamiltonian(ModeSet leaf, ModeSet trans, int rank) : leaf_(std::move(leaf)), trans_(std::move(trans)), rank_(rank) {}

  const ModeSet& leaf() const { return leaf_; }
  const ModeSet& trans() const { return trans_; }
  int rank() const { return rank_; }
  const std::map<int, SpectralBlock>& blocks() const { return blocks_; }
  /// CutoffMismatch if the leaf mode was not assembled.
  const SpectralBlock& block(IVec a) const;
  void set_block(int leaf_index, SpectralBlock b) { blocks_[leaf_index] = std::move(b); }
  /// Largest interior Hermiticity defect seen during assembly.
  double hermiticity_defect() const { return herm_; }
  void set_hermiticity_defect(double h) { herm_ = h; }

  /// P as a block-diagonal operator (assembled leaf modes only).
  BlockOperator matrix() const;
  /// e^{itP_a} v.
  Eigen::VectorXcd propagate(IVec a, const Eigen::VectorXcd& v, double t) const;

 private:
  ModeSet leaf_, trans_;
  int rank_ = 1;
  std::map<int, SpectralBlock> blocks_;
  double herm_ = 0;
};

/// P = (Delta_E + 1)^{1/2} on the listed leaf modes (all when empty).
/// NonHermitianBlock if a block's Hermiticity defect exceeds 1e-10.
QuantumHamiltonian assemble_hamiltonian(const BochnerAssembly& b, const std::vector<IVec>& leaf_modes = {});
/// P = (D_E^2 + 1)^{1/2}, from the eigendecomposition of D_E itself.
QuantumHamiltonian assemble_hamiltonian(const DiracAssembly& d, const std::vector<IVec>& leaf_modes = {});
/// From explicit Hermitian blocks P_a (already the Hamiltonian, not its square).
QuantumHamiltonian assemble_hamiltonian(const BlockOperator& P, const ModeSet& interior);

/// Block (a, b) of the result is e^{itP_a} K_ab e^{-itP_b}. CutoffMismatch on differing mode sets.
BlockOperator heisenberg_evolve(const QuantumHamiltonian& H, const BlockOperator& K, double t);

/// Columns of Phi_t(quantize(k)) without forming any matrix. Keeps references to H, k and H.trans().
ColumnProvider evolved_columns(const QuantumHamiltonian& H, const TransverseSymbol& k, double t);

struct EgorovOptions {
  std::vector<double> lambdas{4, 8, 16, 32};
  int directions = 8;  // q = 2 only; q = 1 uses eta = +-1
  int c_window = 2;
  int ygrid = 32;      // y-grid for the transported reference
};

struct EgorovScale {
  double lambda = 0;
  double error = 0;      // max coefficient difference d(lambda)
  double ref_scale = 0;  // max reference coefficient
};

struct EgorovReport {
  double t = 0;
  std::vector<EgorovScale> scales;
  double rho = 0;       // d(lambda) ~ C lambda^-rho
  double log_c = 0;
  double residual = 0;  // rms of log residuals
  nlohmann::json snapshot;

  double error_at(double lambda) const;
  nlohmann::json to_json() const;
  /// lambda,error,ref_scale
  void write_csv(const std::string& path) const;
};

/// Least-squares fit of log d = log C - rho log lambda; returns {rho, log C, rms residual}.
std::array<double, 3> fit_decay(const std::vector<double>& lambda, const std::vector<double>& d);

/// Evolves quantize(k) under H, extracts it at the probe scales and compares with the
/// transported symbol. Errors: OrderMismatch (k not of order 0), ProbeOutOfRange (lambda > Lambda/2).
EgorovReport egorov_compare(const QuantumHamiltonian& H, const TransverseSymbol& k, double t,
                            const SymbolTransport& tr, const EgorovOptions& opt = {});

}  // namespace foliant

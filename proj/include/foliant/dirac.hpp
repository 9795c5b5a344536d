#pragma once

// Transverse Dirac and signature operators for codimension q = 2.
//
// Sections of F(Q) (x) E are C^2 (x) C^r valued; the total index is s * r + e.
// Operators act on half-densities, trivialized by the flat density |dx dy|^{1/2}:
// an operator P on L^2(M, omega_M) is represented by rho^{1/2} P rho^{-1/2},
// rho = sqrt(det g). With this the matrix adjoint in the Fourier basis is the
// Hilbert-space adjoint.

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "foliant/flows.hpp"
#include "foliant/fourier.hpp"
#include "foliant/geometry.hpp"
#include "foliant/modes.hpp"

namespace foliant {

struct CliffordData {
  std::array<Eigen::Matrix2cd, 2> c;  // c(f_1) = i sigma_x, c(f_2) = i sigma_y
  Eigen::Matrix2cd grading;           // sigma_z

  static CliffordData standard();
  /// max over alpha, beta of |c_a c_b + c_b c_a + 2 delta_ab|, skewness and grading anticommutators.
  double relation_defect() const;
  /// c(v) = sum v_alpha c_alpha.
  Eigen::Matrix2cd of(const Eigen::Vector2d& v) const { return v(0) * c[0] + v(1) * c[1]; }
};

/// Spin connection coefficients spin(f_gamma) = 1/4 sum_{ab} Gamma^b_{gamma a} c_a c_b.
class SpinConnection {
 public:
  SpinConnection(ConnectionData conn, CliffordData cl);
  std::array<Eigen::Matrix2cd, 2> at(const double* y) const;
  static std::array<Eigen::Matrix2cd, 2> at(const ConnectionPoint& cp, const CliffordData& cl);
  /// max |[spin(f_g), c(f_a)] - c(nabla_{f_g} f_a)| over an N^2 grid.
  double compatibility_defect(int grid = 12) const;
  /// max |spin + spin^dagger| over a grid.
  double skewness_defect(int grid = 12) const;
  const ConnectionData& connection() const { return conn_; }

 private:
  ConnectionData conn_;
  CliffordData cl_;
};

SpinConnection spin_connection(const ConnectionData& conn, const CliffordData& cl);

/// Operator sum_k W_k(y) d_{y_k} + Z(y) twisted on leaf mode a by d_x -> i a, i.e.
/// h_k = d_{y_k} - sum_j A_jk d_{x_j} becomes d_{y_k} - i a.A_k. The twist enters through
/// WA[j][k] = W_k A_jk, so the leaf-mode-a zero-order term is Z - i sum_jk a_j WA[j][k].
struct FirstOrderFields {
  int q = 2;
  int rank = 1;
  std::vector<FourierField> W;                // q fields
  FourierField Z;
  std::vector<std::vector<FourierField>> WA;  // [j][k]

  /// Zero-order term on leaf mode a.
  FourierField twisted_Z(IVec a) const;
  /// Dense block over `trans` for leaf mode a.
  Eigen::MatrixXcd block(IVec a, const ModeSet& trans) const;
  /// Largest |mode|_inf carried by the fields.
  int band() const;
  FirstOrderFields operator+(const FirstOrderFields& o) const;
  FirstOrderFields operator*(cplx s) const;
};

/// Dense block of a multiplication operator.
Eigen::MatrixXcd multiplication_block(const FourierField& f, const ModeSet& trans);

/// Trigonometric section: (leaf mode, transverse mode) -> coefficient vector.
struct Section {
  int p = 1, q = 2, rank = 2;
  std::map<std::pair<IVec, IVec>, Eigen::VectorXcd> c;

  Eigen::VectorXcd eval(const double* x, const double* y) const;
  /// Partial derivative in y_l (spectral, exact).
  Section dy(int l) const;
  Section dx(int j) const;
  /// Multiply by e^{i s (m.x + n.y)}.
  Section shifted(IVec m, IVec n, int s) const;
};

/// Exact application of a FirstOrderFields operator to a section (no truncation).
Section apply(const FirstOrderFields& f, const Section& u);

/// Bundle E: rank r, Hermitian connection d + sum_k B_k(y) dy_k with B_k skew-Hermitian.
struct BundleData {
  int rank = 1;
  std::vector<FourierField> B;  // q fields of size r x r; empty means zero

  static BundleData trivial(int r = 1) { return {r, {}}; }
  /// NonHermitianConnection unless every B_k is skew-Hermitian (1e-12).
  void validate(int q) const;
};

struct DiracOptions {
  int grid = 32;          // sampling grid for coefficient fields
  double field_tol = 1e-15;
  double interior_tol = 1e-11;  // field coefficients above this define the polluted shell
};

/// D'_E, D_E = D'_E - c(tau)/2 and c(tau) as coefficient fields; blocks are assembled on demand.
class DiracAssembly {
 public:
  DiracAssembly() = default;
  const ModelGeometry& geometry() const { return geom_; }
  const CliffordData& clifford() const { return cl_; }
  const BundleData& bundle() const { return bundle_; }
  const ConnectionData& connection() const { return conn_; }
  int rank() const { return 2 * bundle_.rank; }
  const ModeSet& leaf() const { return leaf_; }
  const ModeSet& trans() const { return trans_; }
  /// Transverse modes at distance > band from the cutoff.
  const ModeSet& interior() const { return interior_; }

  const FirstOrderFields& dprime_fields() const { return dprime_; }
  const FirstOrderFields& dirac_fields() const { return dirac_; }
  const FourierField& ctau_field() const { return ctau_; }

  Eigen::MatrixXcd dprime_block(IVec a) const { return dprime_.block(a, trans_); }
  Eigen::MatrixXcd dirac_block(IVec a) const { return dirac_.block(a, trans_); }
  Eigen::MatrixXcd ctau_block() const { return multiplication_block(ctau_, trans_); }

  /// Full block operators over all leaf modes (memory: one dense block per leaf mode).
  BlockOperator dprime() const;
  BlockOperator dirac() const;
  BlockOperator ctau() const;

  /// Total connection B_tot(f_alpha) = spin(f_alpha) (x) 1 + 1 (x) B_E(f_alpha) at y.
  std::array<Eigen::MatrixXcd, 2> total_connection(const double* y) const;

  friend DiracAssembly build_dirac(const ModelGeometry&, const BundleData&, const ModeSet&, const ModeSet&,
                                   const DiracOptions&);

 private:
  ModelGeometry geom_;
  ConnectionData conn_;
  CliffordData cl_;
  BundleData bundle_;
  ModeSet leaf_, trans_, interior_;
  FirstOrderFields dprime_, dirac_;
  FourierField ctau_;
};

/// Errors: UnsupportedDimension (q != 2), NonHermitianConnection, CutoffTooSmall (no interior modes).
DiracAssembly build_dirac(const ModelGeometry& g, const BundleData& E, const ModeSet& leaf, const ModeSet& trans,
                          const DiracOptions& opt = {});

struct AdjointReport {
  double defect = 0;           // |(D')^dag - (D' - c(tau))| on interior modes
  double omitted_defect = 0;   // |(D')^dag - D'|
  double ctau_norm = 0;        // |c(tau)|
  double symmetry_defect = 0;  // |D_E - D_E^dag|
  double full_defect = 0;      // first quantity on all modes
  int interior_radius = 0;
};

/// Spectral norms, maximized over leaf modes.
AdjointReport adjoint_defect(const DiracAssembly& d);

/// Coefficients of s^order and s^(order-1) of e^{-is phi} T(e^{is phi} a) at the given points,
/// phi = m.x + n.y, fitted from integer s on `s_grid`.
struct ConjugationFit {
  std::vector<Eigen::VectorXcd> leading, subleading;  // per point
  double condition = 0;
};
using SectionOperator = std::function<Section(const Section&)>;
/// FitIllConditioned if the Vandermonde condition number exceeds 1e8.
ConjugationFit conjugation_fit(const SectionOperator& T, int order, IVec m, IVec n, const Section& a,
                               const std::vector<std::array<double, 4>>& points,
                               const std::vector<int>& s_grid = {-2, -1, 0, 1, 2});

/// D_E^2 as a SectionOperator.
SectionOperator dirac_squared(const DiracAssembly& d);

/// Closed form p_sub(x, nu) = -2i sum <nu, f_a> B_tot(f_a) - (i/2) sum c_a c_b <nu, R(f_a, f_b)>.
Eigen::MatrixXcd dirac_psub_closed_form(const DiracAssembly& d, const double* y, const Eigen::VectorXd& xi,
                                        const Eigen::VectorXd& eta);
/// p_sub from the full symbol of D_E^2 on N*F: p_1 - (1/2i) sum d_y d_eta p_2.
Eigen::MatrixXcd dirac_psub_from_symbol(const DiracAssembly& d, const double* y, const Eigen::Vector2d& eta);
/// p_sub from conjugation fits at y with lattice phase n (xi = 0) and constant sections.
Eigen::MatrixXcd dirac_psub_from_fit(const DiracAssembly& d, const double* y, IVec n);

/// Predicted conjugation coefficients for D_E^2 at a point (x, y):
/// s^2: |P_H dphi|^2 a, s^1: p_sub(dphi) a + (1/i)(v(a) + div(v) a / 2), v = 2 sum <dphi, f_a> f_a.
struct ConjugationPrediction {
  Eigen::VectorXcd s2, s1;
};
ConjugationPrediction predict_conjugation(const DiracAssembly& d, IVec m, IVec n, const Section& a,
                                          const std::array<double, 4>& point);

/// Partial connection of <D_E> on N*F: Gamma(nu) = |nu|^-1 sum <nu, f_a> B_tot(f_a) = i sigma_sub.
struct DiracSubprincipal {
  std::shared_ptr<CoMetricHamiltonian> H;
  std::function<Eigen::MatrixXcd(const double* y, const double* eta)> gamma;
  /// sigma_sub(<D_E>)(y, eta) = -i Gamma.
  Eigen::MatrixXcd sigma_sub(const double* y, const double* eta) const;
  SymbolTransport transport(double step = 1e-2) const { return {H.get(), gamma, step}; }
};
DiracSubprincipal dirac_subprincipal(const DiracAssembly& d);

/// Horizontal forms, basis (1, f*1, f*2, f*1^f*2).
struct FormAlgebra {
  std::array<Eigen::Matrix4d, 2> ext, inter;  // epsilon_{f*a}, i_{f_a}
  static FormAlgebra standard();
  /// Unitary U with columns vec(I, c1, c2, c1 c2)/sqrt2: F(Q) (x) F(Q)* -> forms.
  static Eigen::Matrix4cd clifford_to_forms(const CliffordData& cl);
};

class SignatureOperator {
 public:
  const ModeSet& trans() const { return trans_; }
  const ModeSet& leaf() const { return leaf_; }
  const ModeSet& interior() const { return dfq_.interior(); }
  Eigen::MatrixXcd dH_block(IVec a) const { return dH_.block(a, trans_); }
  Eigen::MatrixXcd dH_adj_block(IVec a) const { return dHa_.block(a, trans_); }
  Eigen::MatrixXcd DH_block(IVec a) const { return (dH_ + dHa_).block(a, trans_); }
  /// (epsilon_tau + i_tau) / 2.
  Eigen::MatrixXcd correction_block() const { return multiplication_block(corr_, trans_); }
  /// D_{F(Q)*} from build_dirac, expressed in the forms basis.
  Eigen::MatrixXcd DFQ_block(IVec a) const;
  const DiracAssembly& dfq() const { return dfq_; }

  friend SignatureOperator signature_operator(const ModelGeometry&, const ModeSet&, const ModeSet&,
                                              const DiracOptions&);

 private:
  ModeSet leaf_, trans_;
  FirstOrderFields dH_, dHa_;
  FourierField corr_;
  DiracAssembly dfq_;
};

SignatureOperator signature_operator(const ModelGeometry& g, const ModeSet& leaf, const ModeSet& trans,
                                     const DiracOptions& opt = {});

struct SignatureReport {
  double identity_defect = 0;      // |D_{F(Q)*} - (D_H - (eps_tau + i_tau)/2)| max entry, interior
  double difference_vs_corr = 0;   // | (D_H - D_{F(Q)*}) - correction |, same
  double dH_vs_DFQ = 0;            // |D_H - D_{F(Q)*}|
  double adjoint_defect = 0;       // |(d_H)^dag - d_H^*|
  double dH_squared = 0;           // |d_H^2| on interior rows
};
SignatureReport signature_report(const SignatureOperator& s, bool with_square = false);

/// Leaf-mode-n block of D_H.
Eigen::MatrixXcd isotypic_block(const SignatureOperator& s, IVec n);
/// Signature operator of (T^q, g_B) twisted by the connection -i n.A, with the fiber volume
/// as weight, assembled from base data only.
Eigen::MatrixXcd base_signature_block(const ModelGeometry& g, IVec n, const ModeSet& trans,
                                      const DiracOptions& opt = {});

}  // namespace foliant

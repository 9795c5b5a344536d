#pragma once

// Transverse symbols k(x, x', y, eta) on T^p x T^p x T^q x (R^q \ 0) and polynomial
// full symbols of differential operators, with the quantization
//   T[(a, n + c), (-b, n)] = (2 pi)^p sum_s khat_{a,b,c,s}(n/|n|) |n|^s chi(|n|)
// (output y, input frequency n; chi vanishes only at n = 0).

#include <Eigen/Dense>
#include <map>
#include <nlohmann/json.hpp>
#include <vector>

#include "foliant/core.hpp"
#include "foliant/modes.hpp"

namespace foliant {

/// Uniform grid theta_j = 2 pi j / N on S^{q-1}; q = 1 uses N = 2 (omega = +1, -1).
struct DirectionGrid {
  int q = 1;
  int n = 2;
  static DirectionGrid for_dim(int q, int ntheta = 64) { return {q, q == 1 ? 2 : ntheta}; }
  double theta(int j) const { return 2 * kPi * j / n; }
  std::array<double, 2> omega(int j) const { return {std::cos(theta(j)), std::sin(theta(j))}; }
};

/// Homogeneous component key: x-mode a, x'-mode b, y-mode c, degree s (= order - level).
struct SymbolKey {
  IVec a{0, 0}, b{0, 0}, c{0, 0};
  int s = 0;
  auto operator<=>(const SymbolKey&) const = default;
};

class TransverseSymbol {
 public:
  using Samples = std::vector<Eigen::MatrixXcd>;  // one matrix per direction

  TransverseSymbol() = default;
  TransverseSymbol(int p, int q, int rank, int order, int depth, int ntheta = 64);

  int p() const { return p_; }
  int q() const { return q_; }
  int rank() const { return rank_; }
  int order() const { return order_; }
  int depth() const { return depth_; }
  void set_depth(int d) { depth_ = d; }
  const DirectionGrid& grid() const { return grid_; }
  const std::map<SymbolKey, Samples>& entries() const { return entries_; }

  /// Accumulates samples at level j (degree order - j).
  void add(IVec a, IVec b, IVec c, int level, const Samples& values);
  void add_constant(IVec a, IVec b, IVec c, int level, const Eigen::MatrixXcd& m);
  /// Adds m e^{i h theta} (q = 1: m (+-1)^h on the two half-lines).
  void add_harmonic(IVec a, IVec b, IVec c, int level, int h, const Eigen::MatrixXcd& m);
  void add_entry(const SymbolKey& k, const Samples& values);

  /// Direction function of one component at a unit vector (trig interpolation for q = 2).
  Eigen::MatrixXcd direction_value(const SymbolKey& k, const double* omega) const;
  /// Precomputes interpolation data; call before concurrent evaluation.
  void prepare() const;
  /// Full value at (x, x', y, eta), summing levels <= max_level.
  Eigen::MatrixXcd eval(const double* x, const double* xp, const double* y, const double* eta,
                        int max_level = 1 << 20) const;
  /// Coefficient khat_{a,b,c} at level j as function of a unit direction.
  Eigen::MatrixXcd coefficient(IVec a, IVec b, IVec c, int level, const double* omega) const;

  /// Keeps only levels <= j.
  TransverseSymbol truncated(int j) const;
  /// Drops components below tol (max entry modulus over directions).
  void prune(double tol = 0.0);
  TransverseSymbol operator+(const TransverseSymbol& o) const;
  TransverseSymbol operator-(const TransverseSymbol& o) const;
  TransverseSymbol operator*(cplx s) const;
  /// Pointwise adjoint symbol: khat_{a,b,c} -> khat_{-b,-a,-c}^*.
  TransverseSymbol adjoint() const;
  /// Largest coefficient modulus over all components and directions.
  double max_abs() const;

  /// Leaf-mode pairs (a, b) present.
  std::vector<std::pair<IVec, IVec>> leaf_pairs() const;
  int max_c_degree() const;

  nlohmann::json to_json() const;
  static TransverseSymbol from_json(const nlohmann::json& j);

 private:
  int p_ = 1, q_ = 1, rank_ = 1, order_ = 0, depth_ = 0;
  DirectionGrid grid_;
  std::map<SymbolKey, Samples> entries_;
  mutable std::map<SymbolKey, Samples> harmonics_;  // q = 2 interpolation cache
  void invalidate() { harmonics_.clear(); }
};

/// Monomial xi^gamma eta^delta with a Fourier coefficient series in (x, y).
struct PolyTerm {
  IVec gamma{0, 0};
  IVec delta{0, 0};
  std::map<std::pair<IVec, IVec>, cplx> coef;  // (x-mode, y-mode) -> coefficient
  int degree(int p, int q) const;
};

/// Full symbol b_m + b_{m-1} of a scalar differential operator, polynomial in (xi, eta).
struct ScalarFullSymbol {
  int p = 1, q = 1, order = 1;
  std::vector<PolyTerm> principal;  // homogeneous of degree `order`
  std::vector<PolyTerm> sub;        // homogeneous of degree `order - 1`

  /// Value of b_m (level 0) or b_{m-1} (level 1) at (x, y, xi, eta).
  cplx eval(int level, const double* x, const double* y, const double* xi, const double* eta) const;
  /// Principal part restricted to N*F: sigma(y, eta) = b_m(x, y, 0, eta).
  void check_holonomy_invariant() const;
  nlohmann::json to_json() const;
  static ScalarFullSymbol from_json(const nlohmann::json& j);
};

enum class Side {
  left,   ///< B applied after K: matrix B K
  right,  ///< B applied before K: matrix K B
};

/// KN quantization of a transverse symbol onto the given mode sets.
BlockOperator quantize(const TransverseSymbol& k, const ModeSet& leaf, const ModeSet& trans);
/// Exact matrix of a differential operator with polynomial full symbol.
BlockOperator quantize(const ScalarFullSymbol& b, const ModeSet& leaf, const ModeSet& trans);

/// Applies one block of quantize(k) to a vector without forming the matrix.
class QuantizedApply {
 public:
  QuantizedApply(const TransverseSymbol& k, const ModeSet& trans);
  /// Block with output leaf mode a_out and input leaf mode b_in.
  Eigen::VectorXcd apply(IVec a_out, IVec b_in, const Eigen::VectorXcd& v) const;

 private:
  const TransverseSymbol& k_;
  const ModeSet& trans_;
  // per component: direction values at every input mode (|n|^s folded in)
  std::map<SymbolKey, std::vector<Eigen::MatrixXcd>> cache_;
};

inline constexpr int kMaxExpansion = 4;

/// Composition with a differential operator, expansion truncated at |alpha| + |beta| <= N.
TransverseSymbol compose(const TransverseSymbol& k, const ScalarFullSymbol& b, Side side, int N);

/// sigma_sub(x, y, eta) = b_{m-1}(x,y,0,eta) - (1/2i) sum d_x d_xi b_m - (1/2i) sum d_y d_eta sigma,
/// as a polynomial in eta (terms with gamma = 0).
struct Subprincipal {
  int p = 1, q = 1, degree = 0;
  std::vector<PolyTerm> terms;
  cplx eval(const double* x, const double* y, const double* eta) const;
};
Subprincipal transverse_subprincipal(const ScalarFullSymbol& b);

/// Principal symbol of [B, K] = BK - KB at order m_k + m_b - 1:
/// (1/i)(H_b k + (1/2) div(H_b) k) + (sigma_sub(x) - sigma_sub(x')) k.
TransverseSymbol commutator_symbol(const TransverseSymbol& k, const ScalarFullSymbol& b);

/// Probe specification for symbol extraction.
struct ProbeSet {
  std::vector<double> lambdas;
  std::vector<std::array<double, 2>> directions;  // unit vectors (q = 1: (+-1, 0))
  int c_window = 2;                               // |c|_inf <= c_window
  std::vector<std::pair<IVec, IVec>> leaf_pairs;  // symbol leaf modes (a, b)
  int order = 0;
  bool richardson = false;
};

struct ExtractedSample {
  IVec a, b, c;
  double lambda;
  int direction;
  IVec probe;  // input frequency n
  Eigen::MatrixXcd value;
};

struct ExtractedSymbol {
  std::vector<ExtractedSample> samples;
  nlohmann::json to_json() const;
};

/// Column of block (leaf_out, leaf_in) for input basis index col = mode_index * rank + comp.
using ColumnProvider = std::function<Eigen::VectorXcd(IVec leaf_out, IVec leaf_in, int col)>;

/// Probe frequency for lambda and a direction (nearest lattice point).
IVec probe_frequency(double lambda, const std::array<double, 2>& dir, int q);

ExtractedSymbol extract_symbol(const ColumnProvider& cols, const ModeSet& trans, int p, int rank,
                               const ProbeSet& probes);
ExtractedSymbol extract_symbol(const BlockOperator& T, const ProbeSet& probes);

/// Max entry error between extracted samples at one lambda and a reference symbol
/// evaluated at level 0 (and optionally relative to the reference magnitude).
struct SymbolError {
  double abs_error = 0;
  double ref_scale = 0;
};
SymbolError extraction_error(const ExtractedSymbol& e, double lambda, const TransverseSymbol& ref);

}  // namespace foliant

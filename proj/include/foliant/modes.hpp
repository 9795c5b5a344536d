#pragma once

// Fourier mode sets and block operators on L^2(T^p x T^q, C^r).
// Leaf (x) modes index the blocks; transverse (y) modes and bundle components
// index rows/columns inside a block as mode_index * rank + component.

#include <Eigen/Dense>
#include <map>
#include <unordered_map>
#include <vector>

#include "foliant/core.hpp"

namespace foliant {

class ModeSet {
 public:
  enum class Shape { Disk, Box };

  ModeSet() = default;
  /// Disk |n|_2 <= cutoff (transverse default) or box |n|_inf <= cutoff (leaf default).
  ModeSet(int dim, double cutoff, Shape shape);
  static ModeSet disk(int dim, double cutoff) { return ModeSet(dim, cutoff, Shape::Disk); }
  static ModeSet box(int dim, int cutoff) { return ModeSet(dim, cutoff, Shape::Box); }

  int dim() const { return dim_; }
  double cutoff() const { return cutoff_; }
  Shape shape() const { return shape_; }
  int size() const { return int(modes_.size()); }
  const IVec& operator[](int i) const { return modes_[i]; }
  const std::vector<IVec>& modes() const { return modes_; }
  /// Index of mode or -1.
  int index(const IVec& m) const {
    auto it = index_.find(m);
    return it == index_.end() ? -1 : it->second;
  }
  bool contains(const IVec& m) const { return index_.count(m) > 0; }
  bool operator==(const ModeSet& o) const {
    return dim_ == o.dim_ && cutoff_ == o.cutoff_ && shape_ == o.shape_;
  }

 private:
  int dim_ = 1;
  double cutoff_ = 0;
  Shape shape_ = Shape::Disk;
  std::vector<IVec> modes_;
  std::unordered_map<IVec, int, IVecHash> index_;
};

/// Operator given by dense blocks T_{ab} between leaf modes a (out) and b (in).
class BlockOperator {
 public:
  BlockOperator() = default;
  BlockOperator(ModeSet leaf, ModeSet trans, int rank) : leaf_(std::move(leaf)), trans_(std::move(trans)), rank_(rank) {}

  const ModeSet& leaf() const { return leaf_; }
  const ModeSet& trans() const { return trans_; }
  int rank() const { return rank_; }
  int block_dim() const { return trans_.size() * rank_; }

  using Key = std::pair<int, int>;  // (out leaf index, in leaf index)
  const std::map<Key, Eigen::MatrixXcd>& blocks() const { return blocks_; }
  bool has_block(int a, int b) const { return blocks_.count({a, b}) > 0; }
  /// Block (a, b); zero if absent.
  Eigen::MatrixXcd block(int a, int b) const;
  /// Mutable block, created as zero if absent.
  Eigen::MatrixXcd& block_ref(int a, int b);
  void set_block(int a, int b, Eigen::MatrixXcd m) { blocks_[{a, b}] = std::move(m); }

  BlockOperator adjoint() const;
  BlockOperator operator*(const BlockOperator& o) const;
  BlockOperator operator+(const BlockOperator& o) const;
  BlockOperator operator-(const BlockOperator& o) const;
  BlockOperator operator*(cplx s) const;

  /// Restriction to smaller mode sets (rows and columns).
  BlockOperator restrict_to(const ModeSet& leaf, const ModeSet& trans) const;
  /// Largest entry modulus.
  double max_abs() const;
  double frobenius() const;
  /// Largest entry modulus over rows and columns whose transverse modes lie in `rows`/`cols`.
  double max_abs_on(const ModeSet& rows, const ModeSet& cols) const;
  /// Dense matrix with leaf-major ordering.
  Eigen::MatrixXcd dense() const;

  static BlockOperator identity(const ModeSet& leaf, const ModeSet& trans, int rank);

 private:
  void check_compatible(const BlockOperator& o) const;
  ModeSet leaf_, trans_;
  int rank_ = 1;
  std::map<Key, Eigen::MatrixXcd> blocks_;
};

}  // namespace foliant

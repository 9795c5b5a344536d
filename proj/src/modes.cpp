#include "foliant/modes.hpp"

#include <algorithm>
#include <cmath>

namespace foliant {

ModeSet::ModeSet(int dim, double cutoff, Shape shape) : dim_(dim), cutoff_(cutoff), shape_(shape) {
  if (dim < 1 || dim > 2) throw Error(ErrorKind::UnsupportedDimension, "mode set dimension must be 1 or 2");
  const int R = int(std::floor(cutoff + 1e-9));
  for (int j = (dim == 2 ? -R : 0); j <= (dim == 2 ? R : 0); ++j)
    for (int i = -R; i <= R; ++i) {
      const IVec m{i, j};
      const bool in = shape == Shape::Box ? true : double(i) * i + double(j) * j <= cutoff * cutoff + 1e-9;
      if (in) {
        index_[m] = int(modes_.size());
        modes_.push_back(m);
      }
    }
}

Eigen::MatrixXcd BlockOperator::block(int a, int b) const {
  auto it = blocks_.find({a, b});
  if (it == blocks_.end()) return Eigen::MatrixXcd::Zero(block_dim(), block_dim());
  return it->second;
}

Eigen::MatrixXcd& BlockOperator::block_ref(int a, int b) {
  auto it = blocks_.find({a, b});
  if (it == blocks_.end()) it = blocks_.emplace(Key{a, b}, Eigen::MatrixXcd::Zero(block_dim(), block_dim())).first;
  return it->second;
}

void BlockOperator::check_compatible(const BlockOperator& o) const {
  if (!(leaf_ == o.leaf_) || !(trans_ == o.trans_))
    throw Error(ErrorKind::CutoffMismatch, "block operators built on different mode sets");
  if (rank_ != o.rank_) throw Error(ErrorKind::RankMismatch, "block operators with different ranks");
}

BlockOperator BlockOperator::adjoint() const {
  BlockOperator r(leaf_, trans_, rank_);
  for (const auto& [k, m] : blocks_) r.blocks_[{k.second, k.first}] = m.adjoint();
  return r;
}

BlockOperator BlockOperator::operator*(const BlockOperator& o) const {
  check_compatible(o);
  BlockOperator r(leaf_, trans_, rank_);
  for (const auto& [k1, m1] : blocks_)
    for (const auto& [k2, m2] : o.blocks_)
      if (k1.second == k2.first) {
        auto& t = r.block_ref(k1.first, k2.second);
        t.noalias() += m1 * m2;
      }
  return r;
}

BlockOperator BlockOperator::operator+(const BlockOperator& o) const {
  check_compatible(o);
  BlockOperator r = *this;
  for (const auto& [k, m] : o.blocks_) r.block_ref(k.first, k.second) += m;
  return r;
}

BlockOperator BlockOperator::operator-(const BlockOperator& o) const { return *this + o * cplx(-1.0); }

BlockOperator BlockOperator::operator*(cplx s) const {
  BlockOperator r = *this;
  for (auto& kv : r.blocks_) kv.second *= s;
  return r;
}

BlockOperator BlockOperator::restrict_to(const ModeSet& leaf, const ModeSet& trans) const {
  BlockOperator r(leaf, trans, rank_);
  std::vector<int> tmap(trans.size());
  for (int i = 0; i < trans.size(); ++i) {
    tmap[i] = trans_.index(trans[i]);
    if (tmap[i] < 0) throw Error(ErrorKind::CutoffMismatch, "restriction target is not a subset");
  }
  for (const auto& [k, m] : blocks_) {
    const int a = leaf.index(leaf_[k.first]), b = leaf.index(leaf_[k.second]);
    if (a < 0 || b < 0) continue;
    Eigen::MatrixXcd s(r.block_dim(), r.block_dim());
    for (int i = 0; i < trans.size(); ++i)
      for (int j = 0; j < trans.size(); ++j)
        s.block(i * rank_, j * rank_, rank_, rank_) = m.block(tmap[i] * rank_, tmap[j] * rank_, rank_, rank_);
    r.blocks_[{a, b}] = std::move(s);
  }
  return r;
}

double BlockOperator::max_abs() const {
  double m = 0;
  for (const auto& kv : blocks_)
    if (kv.second.size()) m = std::max(m, kv.second.cwiseAbs().maxCoeff());
  return m;
}

double BlockOperator::frobenius() const {
  double s = 0;
  for (const auto& kv : blocks_) s += kv.second.squaredNorm();
  return std::sqrt(s);
}

double BlockOperator::max_abs_on(const ModeSet& rows, const ModeSet& cols) const {
  std::vector<int> ri, ci;
  for (int i = 0; i < trans_.size(); ++i) {
    if (rows.contains(trans_[i])) ri.push_back(i);
    if (cols.contains(trans_[i])) ci.push_back(i);
  }
  double m = 0;
  for (const auto& kv : blocks_)
    for (int i : ri)
      for (int j : ci)
        m = std::max(m, kv.second.block(i * rank_, j * rank_, rank_, rank_).cwiseAbs().maxCoeff());
  return m;
}

Eigen::MatrixXcd BlockOperator::dense() const {
  const int d = block_dim();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(leaf_.size() * d, leaf_.size() * d);
  for (const auto& [k, b] : blocks_) m.block(k.first * d, k.second * d, d, d) = b;
  return m;
}

BlockOperator BlockOperator::identity(const ModeSet& leaf, const ModeSet& trans, int rank) {
  BlockOperator r(leaf, trans, rank);
  for (int a = 0; a < leaf.size(); ++a) r.set_block(a, a, Eigen::MatrixXcd::Identity(r.block_dim(), r.block_dim()));
  return r;
}

}  // namespace foliant

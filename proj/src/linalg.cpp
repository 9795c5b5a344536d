#include "foliant/linalg.hpp"

#include <lapacke.h>

#include "foliant/core.hpp"

namespace foliant {

HermitianEigen hermitian_eig(Eigen::MatrixXcd a) {
  const lapack_int n = lapack_int(a.rows());
  HermitianEigen r;
  r.values.resize(n);
  if (n == 0) return r;
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                         reinterpret_cast<lapack_complex_double*>(a.data()), n,
                                         r.values.data());
  if (info != 0) throw Error(ErrorKind::NonHermitianBlock, "zheevd failed with info " + std::to_string(info));
  r.vectors = std::move(a);
  return r;
}

double spectral_norm(const Eigen::MatrixXcd& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() <= 64 || a.cols() <= 64) return Eigen::JacobiSVD<Eigen::MatrixXcd>(a).singularValues()(0);
  const Eigen::MatrixXcd g = a.rows() < a.cols() ? Eigen::MatrixXcd(a * a.adjoint()) : Eigen::MatrixXcd(a.adjoint() * a);
  return std::sqrt(std::max(0.0, hermitian_eig(g).values.maxCoeff()));
}

double hermiticity_defect(const Eigen::MatrixXcd& a) {
  if (a.size() == 0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace foliant

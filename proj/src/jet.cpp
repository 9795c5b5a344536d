#include "foliant/jet.hpp"

#include "foliant/core.hpp"

namespace foliant {

JetMat inverse_cholesky(const JetMat& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(g.v);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NonPositiveMetric, "Cholesky failed");
  const Eigen::MatrixXd C = llt.matrixL();
  JetMat r;
  r.v = C.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(g.rows(), g.cols()));
  for (int k = 0; k < 2; ++k) {
    Eigen::MatrixXd X = r.v * g.d[k] * r.v.transpose();
    Eigen::MatrixXd phi = X.triangularView<Eigen::StrictlyLower>();
    phi.diagonal() = 0.5 * X.diagonal();
    const Eigen::MatrixXd dC = C * phi;
    r.d[k] = -r.v * dC * r.v;
  }
  return r;
}

Jet log_det(const JetMat& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(g.v);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NonPositiveMetric, "log_det of non-positive matrix");
  const Eigen::MatrixXd C = llt.matrixL();
  Jet r;
  r.v = 2.0 * C.diagonal().array().log().sum();
  const Eigen::MatrixXd gi = llt.solve(Eigen::MatrixXd::Identity(g.rows(), g.cols()));
  for (int k = 0; k < 2; ++k) r.d[k] = (gi * g.d[k]).trace();
  return r;
}

}  // namespace foliant

#pragma once

#include <Eigen/Dense>

namespace foliant {

struct HermitianEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXcd vectors; // columns
};

/// Divide-and-conquer Hermitian eigensolver (LAPACK zheevd). Only the lower triangle is read.
HermitianEigen hermitian_eig(Eigen::MatrixXcd a);

/// Largest singular value.
double spectral_norm(const Eigen::MatrixXcd& a);

/// max |a_ij - a_ji^*|.
double hermiticity_defect(const Eigen::MatrixXcd& a);

}  // namespace foliant

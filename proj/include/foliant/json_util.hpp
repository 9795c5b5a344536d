#pragma once

// JSON encodings: complex numbers are [re, im]; matrices are arrays of rows.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "foliant/core.hpp"
#include "foliant/fourier.hpp"

namespace foliant {

nlohmann::json ivec_to_json(IVec v, int dim);
IVec ivec_from_json(const nlohmann::json& j, int dim);

nlohmann::json cplx_to_json(cplx z);
/// Accepts a number or [re, im].
cplx cplx_from_json(const nlohmann::json& j);

nlohmann::json cmatrix_to_json(const Eigen::MatrixXcd& m);
/// Accepts a scalar (rank 1 or multiple of identity) or an array of rows.
Eigen::MatrixXcd cmatrix_from_json(const nlohmann::json& j, int rank);

/// Trig polynomial: a number, or {"terms": [{"mode": [..], "cos": a, "sin": b}, ...]} or the term array itself.
TrigPoly trigpoly_from_json(const nlohmann::json& j, int q);
nlohmann::json trigpoly_to_json(const TrigPoly& t, int q);
/// Matrix of trig polynomials: array of rows.
TrigMatrix trigmatrix_from_json(const nlohmann::json& j, int rows, int cols, int q);
nlohmann::json trigmatrix_to_json(const TrigMatrix& m, int q);

}  // namespace foliant

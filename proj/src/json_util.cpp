#include "foliant/json_util.hpp"

namespace foliant {

using nlohmann::json;

json ivec_to_json(IVec v, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(v[i]);
  return a;
}

IVec ivec_from_json(const json& j, int dim) {
  IVec v{0, 0};
  if (j.is_number_integer()) {
    v[0] = j.get<int>();
    return v;
  }
  if (!j.is_array() || int(j.size()) > dim)
    throw Error(ErrorKind::ConfigInvalid, "expected an integer vector of length <= " + std::to_string(dim));
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<int>();
  return v;
}

json cplx_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx cplx_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw Error(ErrorKind::ConfigInvalid, "expected a complex number [re, im]: " + j.dump());
}

json cmatrix_to_json(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int k = 0; k < m.cols(); ++k) r.push_back(cplx_to_json(m(i, k)));
    rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXcd cmatrix_from_json(const json& j, int rank) {
  const bool scalar = j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number());
  if (scalar) return cplx_from_json(j) * Eigen::MatrixXcd::Identity(rank, rank);
  if (!j.is_array() || int(j.size()) != rank)
    throw Error(ErrorKind::RankMismatch, "matrix must have " + std::to_string(rank) + " rows");
  Eigen::MatrixXcd m(rank, rank);
  for (int i = 0; i < rank; ++i) {
    if (!j[i].is_array() || int(j[i].size()) != rank) throw Error(ErrorKind::RankMismatch, "matrix row length");
    for (int k = 0; k < rank; ++k) m(i, k) = cplx_from_json(j[i][k]);
  }
  return m;
}

TrigPoly trigpoly_from_json(const json& j, int q) {
  if (j.is_number()) return TrigPoly(j.get<double>());
  const json& terms = j.is_object() ? j.at("terms") : j;
  if (!terms.is_array()) throw Error(ErrorKind::ConfigInvalid, "trig polynomial must be a number or term list");
  TrigPoly t;
  for (const auto& e : terms) {
    TrigTerm tt;
    tt.mode = ivec_from_json(e.value("mode", json::array()), q);
    tt.c = e.value("cos", 0.0);
    tt.s = e.value("sin", 0.0);
    t.terms.push_back(tt);
  }
  return t;
}

json trigpoly_to_json(const TrigPoly& t, int q) {
  json a = json::array();
  for (const auto& e : t.terms) a.push_back({{"mode", ivec_to_json(e.mode, q)}, {"cos", e.c}, {"sin", e.s}});
  return a;
}

TrigMatrix trigmatrix_from_json(const json& j, int rows, int cols, int q) {
  TrigMatrix m(rows, cols);
  if (!j.is_array() || int(j.size()) != rows)
    throw Error(ErrorKind::UnsupportedDimension, "matrix field must have " + std::to_string(rows) + " rows");
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || int(j[i].size()) != cols)
      throw Error(ErrorKind::UnsupportedDimension, "matrix field row must have " + std::to_string(cols) + " entries");
    for (int k = 0; k < cols; ++k) m(i, k) = trigpoly_from_json(j[i][k], q);
  }
  return m;
}

json trigmatrix_to_json(const TrigMatrix& m, int q) {
  json rows = json::array();
  for (int i = 0; i < m.rows; ++i) {
    json r = json::array();
    for (int k = 0; k < m.cols; ++k) r.push_back(trigpoly_to_json(m(i, k), q));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace foliant

#include "foliant/dirac.hpp"

#include <cmath>
#include <unordered_map>

#include "foliant/jet.hpp"
#include "foliant/linalg.hpp"

namespace foliant {

namespace {

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd r(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

Eigen::MatrixXcd eye(int n) { return Eigen::MatrixXcd::Identity(n, n); }

std::vector<int> interior_indices(const ModeSet& trans, const ModeSet& inner, int rank) {
  std::vector<int> idx;
  for (int i = 0; i < trans.size(); ++i)
    if (inner.contains(trans[i]))
      for (int c = 0; c < rank; ++c) idx.push_back(i * rank + c);
  return idx;
}

Eigen::MatrixXcd sub(const Eigen::MatrixXcd& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  return m(rows, cols);
}

ModeSet shrink(const ModeSet& s, double by) {
  return ModeSet(s.dim(), s.cutoff() - by, s.shape());
}

/// Samples several fields from one pass over the grid.
std::vector<FourierField> sample_fields(int N, const std::vector<std::pair<int, int>>& shapes,
                                        const std::function<std::vector<Eigen::MatrixXcd>(const double*)>& f,
                                        double tol) {
  const auto pts = torus_grid(N, 2);
  std::vector<std::vector<Eigen::MatrixXcd>> vals(shapes.size(), std::vector<Eigen::MatrixXcd>(pts.size()));
  parallel_for(int(pts.size()), [&](int i) {
    auto v = f(pts[i].data());
    for (std::size_t s = 0; s < shapes.size(); ++s) vals[s][i] = std::move(v[s]);
  });
  std::vector<FourierField> out;
  for (std::size_t s = 0; s < shapes.size(); ++s)
    out.push_back(FourierField::from_samples(2, shapes[s].first, shapes[s].second, N, vals[s], tol));
  return out;
}

}  // namespace

// ---------------------------------------------------------------- Clifford

CliffordData CliffordData::standard() {
  CliffordData c;
  c.c[0] << 0, kI, kI, 0;
  c.c[1] << 0, 1, -1, 0;
  c.grading << 1, 0, 0, -1;
  return c;
}

double CliffordData::relation_defect() const {
  double w = 0;
  for (int a = 0; a < 2; ++a) {
    w = std::max(w, (c[a] + c[a].adjoint()).cwiseAbs().maxCoeff());
    w = std::max(w, (grading * c[a] + c[a] * grading).cwiseAbs().maxCoeff());
    for (int b = 0; b < 2; ++b) {
      Eigen::Matrix2cd r = c[a] * c[b] + c[b] * c[a];
      if (a == b) r += 2 * Eigen::Matrix2cd::Identity();
      w = std::max(w, r.cwiseAbs().maxCoeff());
    }
  }
  return w;
}

// ---------------------------------------------------------------- spin connection

SpinConnection::SpinConnection(ConnectionData conn, CliffordData cl) : conn_(std::move(conn)), cl_(cl) {
  if (conn_.geometry().q != 2) throw Error(ErrorKind::UnsupportedDimension, "spin connection needs q = 2");
}

std::array<Eigen::Matrix2cd, 2> SpinConnection::at(const ConnectionPoint& cp, const CliffordData& cl) {
  std::array<Eigen::Matrix2cd, 2> s;
  for (int g = 0; g < 2; ++g) {
    s[g].setZero();
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) s[g] += 0.25 * cp.Gamma(b, g, a) * cl.c[a] * cl.c[b];
  }
  return s;
}

std::array<Eigen::Matrix2cd, 2> SpinConnection::at(const double* y) const { return at(conn_.at(y), cl_); }

double SpinConnection::compatibility_defect(int grid) const {
  double w = 0;
  for (const auto& pt : torus_grid(grid, 2)) {
    const ConnectionPoint cp = conn_.at(pt.data());
    const auto s = at(cp, cl_);
    for (int g = 0; g < 2; ++g)
      for (int a = 0; a < 2; ++a) {
        Eigen::Matrix2cd rhs = Eigen::Matrix2cd::Zero();
        for (int b = 0; b < 2; ++b) rhs += cp.Gamma(b, g, a) * cl_.c[b];
        w = std::max(w, (s[g] * cl_.c[a] - cl_.c[a] * s[g] - rhs).cwiseAbs().maxCoeff());
      }
  }
  return w;
}

double SpinConnection::skewness_defect(int grid) const {
  double w = 0;
  for (const auto& pt : torus_grid(grid, 2))
    for (const auto& s : at(pt.data())) w = std::max(w, (s + s.adjoint()).cwiseAbs().maxCoeff());
  return w;
}

SpinConnection spin_connection(const ConnectionData& conn, const CliffordData& cl) { return {conn, cl}; }

// ---------------------------------------------------------------- first-order fields

FourierField FirstOrderFields::twisted_Z(IVec a) const {
  FourierField z = Z;
  for (std::size_t j = 0; j < WA.size(); ++j) {
    if (a[j] == 0) continue;
    for (int k = 0; k < q; ++k) z = z + WA[j][k] * cplx(0, -a[j]);
  }
  return z;
}

Eigen::MatrixXcd FirstOrderFields::block(IVec a, const ModeSet& trans) const {
  const int R = rank, n = trans.size();
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(std::size_t(n) * R, std::size_t(n) * R);
  const FourierField z = twisted_Z(a);
  parallel_for(n, [&](int j) {
    const IVec nj = trans[j];
    auto add = [&](const IVec& d, const Eigen::MatrixXcd& m) {
      const int i = trans.index(nj + d);
      if (i >= 0) M.block(std::size_t(i) * R, std::size_t(j) * R, R, R) += m;
    };
    for (int k = 0; k < q; ++k) {
      if (nj[k] == 0) continue;
      for (const auto& [d, w] : W[k].modes()) add(d, cplx(0, nj[k]) * w);
    }
    for (const auto& [d, zz] : z.modes()) add(d, zz);
  });
  return M;
}

int FirstOrderFields::band() const {
  int b = Z.band();
  for (const auto& w : W) b = std::max(b, w.band());
  for (const auto& row : WA)
    for (const auto& w : row) b = std::max(b, w.band());
  return b;
}

FirstOrderFields FirstOrderFields::operator+(const FirstOrderFields& o) const {
  FirstOrderFields r = *this;
  for (int k = 0; k < q; ++k) r.W[k] = W[k] + o.W[k];
  r.Z = Z + o.Z;
  for (std::size_t j = 0; j < WA.size(); ++j)
    for (int k = 0; k < q; ++k) r.WA[j][k] = WA[j][k] + o.WA[j][k];
  return r;
}

FirstOrderFields FirstOrderFields::operator*(cplx s) const {
  FirstOrderFields r = *this;
  for (auto& w : r.W) w = w * s;
  r.Z = Z * s;
  for (auto& row : r.WA)
    for (auto& w : row) w = w * s;
  return r;
}

Eigen::MatrixXcd multiplication_block(const FourierField& f, const ModeSet& trans) {
  FirstOrderFields o;
  o.q = f.q();
  o.rank = f.rows();
  o.W.assign(o.q, FourierField(f.q(), f.rows(), f.cols()));
  o.Z = f;
  return o.block({0, 0}, trans);
}

// ---------------------------------------------------------------- sections

Eigen::VectorXcd Section::eval(const double* x, const double* y) const {
  Eigen::VectorXcd r = Eigen::VectorXcd::Zero(rank);
  for (const auto& [k, v] : c) {
    double ph = 0;
    for (int j = 0; j < p; ++j) ph += k.first[j] * x[j];
    for (int l = 0; l < q; ++l) ph += k.second[l] * y[l];
    r += std::polar(1.0, ph) * v;
  }
  return r;
}

Section Section::dy(int l) const {
  Section s = *this;
  for (auto& [k, v] : s.c) v *= cplx(0, k.second[l]);
  return s;
}

Section Section::dx(int j) const {
  Section s = *this;
  for (auto& [k, v] : s.c) v *= cplx(0, k.first[j]);
  return s;
}

Section Section::shifted(IVec m, IVec n, int s) const {
  Section r{p, q, rank, {}};
  for (const auto& [k, v] : c) r.c[{k.first + s * m, k.second + s * n}] = v;
  return r;
}

Section apply(const FirstOrderFields& f, const Section& u) {
  Section out{u.p, u.q, f.rank, {}};
  std::map<IVec, FourierField> zs;
  auto acc = [&](const std::pair<IVec, IVec>& key, const Eigen::VectorXcd& v) {
    auto it = out.c.find(key);
    if (it == out.c.end()) out.c.emplace(key, v);
    else it->second += v;
  };
  for (const auto& [key, v] : u.c) {
    const auto& [a, n] = key;
    auto zit = zs.find(a);
    if (zit == zs.end()) zit = zs.emplace(a, f.twisted_Z(a)).first;
    for (int k = 0; k < f.q; ++k) {
      if (n[k] == 0) continue;
      for (const auto& [d, w] : f.W[k].modes()) acc({a, n + d}, cplx(0, n[k]) * (w * v));
    }
    for (const auto& [d, z] : zit->second.modes()) acc({a, n + d}, z * v);
  }
  return out;
}

// ---------------------------------------------------------------- bundle

void BundleData::validate(int q) const {
  if (B.empty()) return;
  if (int(B.size()) != q) throw Error(ErrorKind::ConfigInvalid, "bundle connection needs one field per dy_k");
  for (const auto& b : B) {
    if (b.rows() != rank || b.cols() != rank) throw Error(ErrorKind::RankMismatch, "bundle connection rank");
    const FourierField s = b + b.adjoint();
    for (const auto& [k, m] : s.modes())
      if (m.cwiseAbs().maxCoeff() > 1e-12)
        throw Error(ErrorKind::NonHermitianConnection, "bundle connection is not skew-Hermitian");
  }
}

// ---------------------------------------------------------------- Dirac assembly

DiracAssembly build_dirac(const ModelGeometry& g, const BundleData& E, const ModeSet& leaf, const ModeSet& trans,
                          const DiracOptions& opt) {
  if (g.q != 2) throw Error(ErrorKind::UnsupportedDimension, "transverse Dirac operator needs q = 2");
  E.validate(g.q);
  DiracAssembly d;
  d.geom_ = g;
  d.conn_ = transverse_connection(g, build_frames(g));
  d.cl_ = CliffordData::standard();
  d.bundle_ = E;
  d.leaf_ = leaf;
  d.trans_ = trans;
  const int r = E.rank, R = 2 * r, p = g.p;
  const Eigen::MatrixXcd Ir = eye(r);

  // fields: W_0, W_1, Z', c(tau), then WA[j][k]
  std::vector<std::pair<int, int>> shapes(4 + 2 * p, {R, R});
  const ConnectionData& conn = d.conn_;
  const CliffordData& cl = d.cl_;
  auto fields = sample_fields(
      opt.grid, shapes,
      [&](const double* y) {
        const ConnectionPoint cp = conn.at(y);
        const auto spin = SpinConnection::at(cp, cl);
        const Eigen::MatrixXd& LB = cp.frame.LB.v;
        std::array<Eigen::MatrixXcd, 2> Bk;
        for (int k = 0; k < 2; ++k) Bk[k] = E.B.empty() ? Eigen::MatrixXcd::Zero(r, r) : E.B[k].eval(y);
        std::vector<Eigen::MatrixXcd> v(4 + 2 * p, Eigen::MatrixXcd::Zero(R, R));
        for (int al = 0; al < 2; ++al) {
          const Eigen::MatrixXcd ca = kron(cl.c[al], Ir);
          Eigen::MatrixXcd BE = Eigen::MatrixXcd::Zero(r, r);
          double dlr = 0;
          for (int k = 0; k < 2; ++k) {
            v[k] += LB(al, k) * ca;
            BE += LB(al, k) * Bk[k];
            dlr += LB(al, k) * cp.frame.log_rho.d[k];
          }
          v[2] += ca * (kron(spin[al], Ir) + kron(eye(2), BE) - 0.5 * dlr * eye(R));
        }
        const Eigen::VectorXd tau = cp.tau();
        v[3] = kron(cl.of(tau), Ir);
        for (int j = 0; j < p; ++j)
          for (int k = 0; k < 2; ++k) v[4 + 2 * j + k] = v[k] * cp.frame.A.v(j, k);
        return v;
      },
      opt.field_tol);

  FirstOrderFields f;
  f.q = 2;
  f.rank = R;
  f.W = {fields[0], fields[1]};
  f.Z = fields[2];
  f.WA.assign(p, std::vector<FourierField>(2));
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < 2; ++k) f.WA[j][k] = fields[4 + 2 * j + k];
  d.dprime_ = f;
  d.ctau_ = fields[3];
  d.dirac_ = f;
  d.dirac_.Z = f.Z + d.ctau_ * cplx(-0.5);

  int band = d.ctau_.effective_band(opt.interior_tol);
  band = std::max(band, f.Z.effective_band(opt.interior_tol));
  for (const auto& w : f.W) band = std::max(band, w.effective_band(opt.interior_tol));
  for (const auto& row : f.WA)
    for (const auto& w : row) band = std::max(band, w.effective_band(opt.interior_tol));
  if (trans.cutoff() - band < 1)
    throw Error(ErrorKind::CutoffTooSmall, "transverse cutoff " + std::to_string(trans.cutoff()) +
                                               " leaves no interior modes for coefficient band " +
                                               std::to_string(band));
  d.interior_ = shrink(trans, band);
  return d;
}

BlockOperator DiracAssembly::dprime() const {
  BlockOperator op(leaf_, trans_, rank());
  for (int i = 0; i < leaf_.size(); ++i) op.set_block(i, i, dprime_block(leaf_[i]));
  return op;
}

BlockOperator DiracAssembly::dirac() const {
  BlockOperator op(leaf_, trans_, rank());
  for (int i = 0; i < leaf_.size(); ++i) op.set_block(i, i, dirac_block(leaf_[i]));
  return op;
}

BlockOperator DiracAssembly::ctau() const {
  BlockOperator op(leaf_, trans_, rank());
  const Eigen::MatrixXcd c = ctau_block();
  for (int i = 0; i < leaf_.size(); ++i) op.set_block(i, i, c);
  return op;
}

std::array<Eigen::MatrixXcd, 2> DiracAssembly::total_connection(const double* y) const {
  const ConnectionPoint cp = conn_.at(y);
  const auto spin = SpinConnection::at(cp, cl_);
  const int r = bundle_.rank;
  std::array<Eigen::MatrixXcd, 2> out;
  for (int al = 0; al < 2; ++al) {
    Eigen::MatrixXcd BE = Eigen::MatrixXcd::Zero(r, r);
    if (!bundle_.B.empty())
      for (int k = 0; k < 2; ++k) BE += cp.frame.LB.v(al, k) * bundle_.B[k].eval(y);
    out[al] = kron(spin[al], eye(r)) + kron(eye(2), BE);
  }
  return out;
}

AdjointReport adjoint_defect(const DiracAssembly& d) {
  AdjointReport rep;
  rep.interior_radius = int(d.interior().cutoff());
  const auto idx = interior_indices(d.trans(), d.interior(), d.rank());
  const Eigen::MatrixXcd C = d.ctau_block();
  rep.ctau_norm = spectral_norm(sub(C, idx, idx));
  for (int i = 0; i < d.leaf().size(); ++i) {
    const IVec a = d.leaf()[i];
    const Eigen::MatrixXcd Dp = d.dprime_block(a);
    const Eigen::MatrixXcd diff = Dp.adjoint() - Dp;
    rep.defect = std::max(rep.defect, spectral_norm(sub(diff + C, idx, idx)));
    rep.omitted_defect = std::max(rep.omitted_defect, spectral_norm(sub(diff, idx, idx)));
    rep.full_defect = std::max(rep.full_defect, (diff + C).cwiseAbs().maxCoeff());
    const Eigen::MatrixXcd D = d.dirac_block(a);
    rep.symmetry_defect = std::max(rep.symmetry_defect, spectral_norm(sub(D - D.adjoint(), idx, idx)));
  }
  return rep;
}

// ---------------------------------------------------------------- conjugation expansion

ConjugationFit conjugation_fit(const SectionOperator& T, int order, IVec m, IVec n, const Section& a,
                               const std::vector<std::array<double, 4>>& points, const std::vector<int>& s_grid) {
  const int K = int(s_grid.size());
  if (order < 1 || K < order + 1) throw Error(ErrorKind::FitIllConditioned, "s-grid too small for the order");
  Eigen::MatrixXd V(K, order + 1);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j <= order; ++j) V(i, j) = std::pow(double(s_grid[i]), j);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(V);
  const auto sv = svd.singularValues();
  ConjugationFit fit;
  fit.condition = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  if (!(fit.condition <= 1e8)) throw Error(ErrorKind::FitIllConditioned, "Vandermonde condition too large");

  const int np = int(points.size());
  std::vector<Eigen::MatrixXcd> Y(np, Eigen::MatrixXcd(K, a.rank));
  for (int i = 0; i < K; ++i) {
    const int s = s_grid[i];
    const Section v = T(a.shifted(m, n, s));
    for (int k = 0; k < np; ++k) {
      const double* x = points[k].data();
      const double* y = points[k].data() + 2;
      double ph = 0;
      for (int j = 0; j < a.p; ++j) ph += m[j] * x[j];
      for (int l = 0; l < a.q; ++l) ph += n[l] * y[l];
      Y[k].row(i) = (std::polar(1.0, -s * ph) * v.eval(x, y)).transpose();
    }
  }
  const Eigen::MatrixXcd Vc = V.cast<cplx>();
  const auto qr = Vc.colPivHouseholderQr();
  for (int k = 0; k < np; ++k) {
    const Eigen::MatrixXcd coef = qr.solve(Y[k]);
    fit.leading.push_back(coef.row(order).transpose());
    fit.subleading.push_back(coef.row(order - 1).transpose());
  }
  return fit;
}

SectionOperator dirac_squared(const DiracAssembly& d) {
  return [&d](const Section& u) { return apply(d.dirac_fields(), apply(d.dirac_fields(), u)); };
}

namespace {

/// <nu, f_alpha> for nu = xi dx + eta dy.
Eigen::Vector2d frame_pairing(const FramePoint& f, const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) {
  const Eigen::VectorXd h = eta - f.A.v.transpose() * xi;  // <nu, h_k>
  return f.LB.v * h;
}

/// g_B^{-1} and its y-derivatives.
struct InverseBase {
  Eigen::Matrix2d Gi;
  std::array<Eigen::Matrix2d, 2> d;
};
InverseBase inverse_base(const ModelGeometry& g, const double* y) {
  const JetMat G = g.base_metric(y);
  InverseBase r;
  r.Gi = G.v.inverse();
  for (int k = 0; k < 2; ++k) r.d[k] = -r.Gi * G.d[k] * r.Gi;
  return r;
}

}  // namespace

Eigen::MatrixXcd dirac_psub_closed_form(const DiracAssembly& d, const double* y, const Eigen::VectorXd& xi,
                                        const Eigen::VectorXd& eta) {
  const ConnectionPoint cp = d.connection().at(y);
  const Eigen::Vector2d nf = frame_pairing(cp.frame, xi, eta);
  const auto B = d.total_connection(y);
  const int R = d.rank(), r = d.bundle().rank, p = d.geometry().p;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(R, R);
  for (int a = 0; a < 2; ++a) out += cplx(0, -2 * nf(a)) * B[a];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const Eigen::VectorXd Rab = cp.curvature(a, b);
      const double pair = xi.dot(Rab.head(p)) + eta.dot(Rab.tail(2));
      out += cplx(0, -0.5 * pair) * kron(d.clifford().c[a] * d.clifford().c[b], eye(r));
    }
  return out;
}

Eigen::MatrixXcd dirac_psub_from_symbol(const DiracAssembly& d, const double* y, const Eigen::Vector2d& eta) {
  const FirstOrderFields& f = d.dirac_fields();
  const int R = d.rank();
  std::array<Eigen::MatrixXcd, 2> W, dW0, dW1;
  Eigen::MatrixXcd Weta = Eigen::MatrixXcd::Zero(R, R);
  for (int k = 0; k < 2; ++k) {
    W[k] = f.W[k].eval(y);
    Weta += eta(k) * W[k];
  }
  const Eigen::MatrixXcd Z = f.Z.eval(y);
  Eigen::MatrixXcd p1 = kI * (Weta * Z + Z * Weta);
  for (int l = 0; l < 2; ++l) {
    Eigen::MatrixXcd dWeta = Eigen::MatrixXcd::Zero(R, R);
    for (int k = 0; k < 2; ++k) dWeta += eta(k) * f.W[k].derivative(l).eval(y);
    p1 += kI * W[l] * dWeta;
  }
  const InverseBase ib = inverse_base(d.geometry(), y);
  double ddp = 0;  // sum_l d_{y_l} d_{eta_l} (eta^T Gi eta)
  for (int l = 0; l < 2; ++l) ddp += 2 * (ib.d[l] * eta)(l);
  return p1 - (1.0 / (2.0 * kI)) * ddp * eye(R);
}

Eigen::MatrixXcd dirac_psub_from_fit(const DiracAssembly& d, const double* y, IVec n) {
  const int R = d.rank(), p = d.geometry().p;
  const auto T = dirac_squared(d);
  const std::array<double, 4> pt{0, 0, y[0], y[1]};
  Eigen::MatrixXcd S1(R, R);
  for (int j = 0; j < R; ++j) {
    Section a{p, 2, R, {}};
    a.c[{{0, 0}, {0, 0}}] = Eigen::VectorXcd::Unit(R, j);
    const auto fit = conjugation_fit(T, 2, {0, 0}, n, a, {pt});
    S1.col(j) = fit.subleading[0];
  }
  // remove (1/i)(1/2) div(v), v = 2 g_B^{-1} n in the y-directions
  const InverseBase ib = inverse_base(d.geometry(), y);
  const Eigen::Vector2d nv(n[0], n[1]);
  double div = 0;
  for (int k = 0; k < 2; ++k) div += 2 * (ib.d[k] * nv)(k);
  return S1 - (0.5 / kI) * div * eye(R);
}

ConjugationPrediction predict_conjugation(const DiracAssembly& d, IVec m, IVec n, const Section& a,
                                          const std::array<double, 4>& point) {
  const ModelGeometry& g = d.geometry();
  const int p = g.p;
  const double* x = point.data();
  const double* y = point.data() + 2;
  Eigen::VectorXd xi(p), eta(2);
  for (int j = 0; j < p; ++j) xi(j) = m[j];
  eta << n[0], n[1];
  const JetMat A = g.connection_matrix(y);
  const InverseBase ib = inverse_base(g, y);
  // v^y = 2 Gi (eta - A^T xi), v^x = -A v^y
  const Eigen::Vector2d h = eta - A.v.transpose() * xi;
  const Eigen::Vector2d vy = 2 * ib.Gi * h;
  const Eigen::VectorXd vx = -A.v * vy;
  double div = 0;
  for (int k = 0; k < 2; ++k) {
    const Eigen::Vector2d dh = -A.d[k].transpose() * xi;
    div += 2 * (ib.d[k] * h + ib.Gi * dh)(k);
  }
  Eigen::VectorXcd va = Eigen::VectorXcd::Zero(a.rank);
  for (int k = 0; k < 2; ++k) va += vy(k) * a.dy(k).eval(x, y);
  for (int j = 0; j < p; ++j) va += vx(j) * a.dx(j).eval(x, y);
  const Eigen::VectorXcd av = a.eval(x, y);
  ConjugationPrediction pr;
  pr.s2 = h.dot(ib.Gi * h) * av;
  pr.s1 = dirac_psub_closed_form(d, y, xi, eta) * av + (1.0 / kI) * (va + 0.5 * div * av);
  return pr;
}

// ---------------------------------------------------------------- subprincipal connection

Eigen::MatrixXcd DiracSubprincipal::sigma_sub(const double* y, const double* eta) const {
  return -kI * gamma(y, eta);
}

DiracSubprincipal dirac_subprincipal(const DiracAssembly& d) {
  DiracSubprincipal s;
  s.H = std::make_shared<CoMetricHamiltonian>(d.geometry());
  auto dd = std::make_shared<DiracAssembly>(d);
  s.gamma = [dd](const double* y, const double* eta) {
    const auto B = dd->total_connection(y);
    const JetMat LB = inverse_cholesky(dd->geometry().base_metric(y));
    const Eigen::Vector2d e(eta[0], eta[1]);
    const Eigen::Vector2d nf = LB.v * e;
    const double norm = nf.norm();
    if (norm == 0) throw Error(ErrorKind::EvaluationAtZeroSection, "subprincipal connection at eta = 0");
    return Eigen::MatrixXcd((nf(0) * B[0] + nf(1) * B[1]) / norm);
  };
  return s;
}

// ---------------------------------------------------------------- signature operator

FormAlgebra FormAlgebra::standard() {
  FormAlgebra f;
  for (auto& m : f.ext) m.setZero();
  f.ext[0](1, 0) = 1;   // 1 -> f1
  f.ext[0](3, 2) = 1;   // f2 -> f1^f2
  f.ext[1](2, 0) = 1;   // 1 -> f2
  f.ext[1](3, 1) = -1;  // f1 -> f2^f1 = -f1^f2
  for (int a = 0; a < 2; ++a) f.inter[a] = f.ext[a].transpose();
  return f;
}

Eigen::Matrix4cd FormAlgebra::clifford_to_forms(const CliffordData& cl) {
  const std::array<Eigen::Matrix2cd, 4> M{Eigen::Matrix2cd::Identity(), cl.c[0], cl.c[1], cl.c[0] * cl.c[1]};
  Eigen::Matrix4cd U;
  for (int k = 0; k < 4; ++k)
    for (int s = 0; s < 2; ++s)
      for (int e = 0; e < 2; ++e) U(s * 2 + e, k) = M[k](s, e) / std::sqrt(2.0);
  return U;
}

namespace {

/// d_H, d_H^* and (eps_tau + i_tau)/2 from frame data at a point (forms basis).
struct FormCoefficients {
  std::array<Eigen::Matrix4d, 2> Wd, Wa;
  Eigen::Matrix4d Zd, Za, corr;
};

FormCoefficients form_coefficients(const FormAlgebra& fa, const Eigen::Matrix2d& LB,
                                   const std::array<Eigen::Matrix4d, 2>& Omega, const Eigen::Vector2d& dlogrho,
                                   const Eigen::Vector2d& tau) {
  FormCoefficients c;
  c.Wd[0].setZero();
  c.Wd[1].setZero();
  c.Wa = c.Wd;
  c.Zd.setZero();
  c.Za.setZero();
  c.corr.setZero();
  for (int al = 0; al < 2; ++al) {
    const Eigen::Matrix4d conn = Omega[al] - 0.5 * dlogrho(al) * Eigen::Matrix4d::Identity();
    for (int k = 0; k < 2; ++k) {
      c.Wd[k] += LB(al, k) * fa.ext[al];
      c.Wa[k] -= LB(al, k) * fa.inter[al];
    }
    c.Zd += fa.ext[al] * conn;
    c.Za -= fa.inter[al] * conn;
    c.Za += tau(al) * fa.inter[al];
    c.corr += 0.5 * tau(al) * (fa.ext[al] + fa.inter[al]);
  }
  return c;
}

/// Derivation on forms induced by Gamma^g_{al b} (vectors and covectors identified).
std::array<Eigen::Matrix4d, 2> form_connection(const std::function<double(int, int, int)>& Gam) {
  std::array<Eigen::Matrix4d, 2> O;
  for (int al = 0; al < 2; ++al) {
    O[al].setZero();
    for (int b = 0; b < 2; ++b)
      for (int g = 0; g < 2; ++g) O[al](1 + g, 1 + b) = Gam(g, al, b);
    O[al](3, 3) = Gam(0, al, 0) + Gam(1, al, 1);
  }
  return O;
}

Eigen::MatrixXcd to_forms(Eigen::MatrixXcd M, const Eigen::Matrix4cd& U) {
  const int nb = int(M.rows() / 4);
  for (int j = 0; j < nb; ++j) M.middleCols(4 * j, 4) = M.middleCols(4 * j, 4) * U;
  const Eigen::Matrix4cd Ua = U.adjoint();
  for (int i = 0; i < nb; ++i) M.middleRows(4 * i, 4) = Ua * M.middleRows(4 * i, 4);
  return M;
}

}  // namespace

SignatureOperator signature_operator(const ModelGeometry& g, const ModeSet& leaf, const ModeSet& trans,
                                     const DiracOptions& opt) {
  if (g.q != 2) throw Error(ErrorKind::UnsupportedDimension, "signature operator needs q = 2");
  const ConnectionData conn = transverse_connection(g, build_frames(g));
  const CliffordData cl = CliffordData::standard();
  const FormAlgebra fa = FormAlgebra::standard();
  const int p = g.p;

  // fields: Wd0, Wd1, Zd, Wa0, Wa1, Za, corr, B_0, B_1 of F(Q)*, then W_k A_jk for d and d^*
  std::vector<std::pair<int, int>> shapes(7, {4, 4});
  shapes.push_back({2, 2});
  shapes.push_back({2, 2});
  for (int j = 0; j < 4 * p; ++j) shapes.push_back({4, 4});
  auto fields = sample_fields(
      opt.grid, shapes,
      [&](const double* y) {
        const ConnectionPoint cp = conn.at(y);
        const Eigen::MatrixXd& LB = cp.frame.LB.v;
        const auto Om = form_connection([&](int gg, int a, int b) { return cp.Gamma(gg, a, b); });
        const Eigen::Vector2d dl = LB * Eigen::Vector2d(cp.frame.log_rho.d[0], cp.frame.log_rho.d[1]);
        const FormCoefficients c = form_coefficients(fa, LB, Om, dl, cp.tau());
        std::vector<Eigen::MatrixXcd> v{c.Wd[0], c.Wd[1], c.Zd, c.Wa[0], c.Wa[1], c.Za, c.corr};
        // dual spin connection on h_k = sum_al (LB^-1)_{k al} f_al
        const auto spin = SpinConnection::at(cp, cl);
        const Eigen::Matrix2d Li = LB.inverse();
        for (int k = 0; k < 2; ++k)
          v.push_back(-(Li(k, 0) * spin[0] + Li(k, 1) * spin[1]).transpose());
        for (int j = 0; j < p; ++j)
          for (int k = 0; k < 2; ++k) v.push_back(c.Wd[k] * cp.frame.A.v(j, k));
        for (int j = 0; j < p; ++j)
          for (int k = 0; k < 2; ++k) v.push_back(c.Wa[k] * cp.frame.A.v(j, k));
        return v;
      },
      opt.field_tol);

  SignatureOperator s;
  s.leaf_ = leaf;
  s.trans_ = trans;
  auto make = [&](int w0, int z, int wa) {
    FirstOrderFields f;
    f.q = 2;
    f.rank = 4;
    f.W = {fields[w0], fields[w0 + 1]};
    f.Z = fields[z];
    f.WA.assign(p, std::vector<FourierField>(2));
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < 2; ++k) f.WA[j][k] = fields[wa + 2 * j + k];
    return f;
  };
  s.dH_ = make(0, 2, 9);
  s.dHa_ = make(3, 5, 9 + 2 * p);
  s.corr_ = fields[6];
  BundleData dual{2, {fields[7], fields[8]}};
  s.dfq_ = build_dirac(g, dual, leaf, trans, opt);
  return s;
}

Eigen::MatrixXcd SignatureOperator::DFQ_block(IVec a) const {
  return to_forms(dfq_.dirac_block(a), FormAlgebra::clifford_to_forms(dfq_.clifford()));
}

SignatureReport signature_report(const SignatureOperator& s, bool with_square) {
  SignatureReport rep;
  const auto idx = interior_indices(s.trans(), s.interior(), 4);
  const Eigen::MatrixXcd C = s.correction_block();
  for (int i = 0; i < s.leaf().size(); ++i) {
    const IVec a = s.leaf()[i];
    const Eigen::MatrixXcd d = s.dH_block(a), da = s.dH_adj_block(a);
    const Eigen::MatrixXcd DH = d + da, DF = s.DFQ_block(a);
    auto mx = [&](const Eigen::MatrixXcd& m) { return sub(m, idx, idx).cwiseAbs().maxCoeff(); };
    rep.identity_defect = std::max(rep.identity_defect, mx(DF - (DH - C)));
    rep.difference_vs_corr = std::max(rep.difference_vs_corr, mx((DH - DF) - C));
    rep.dH_vs_DFQ = std::max(rep.dH_vs_DFQ, mx(DH - DF));
    rep.adjoint_defect = std::max(rep.adjoint_defect, mx(d.adjoint() - da));
    // rows at distance > band from the cutoff see every mode they couple to
    if (!with_square) continue;
    const Eigen::MatrixXcd rows = d(idx, Eigen::placeholders::all);
    rep.dH_squared = std::max(rep.dH_squared, (rows * d).cwiseAbs().maxCoeff());
  }
  return rep;
}

Eigen::MatrixXcd isotypic_block(const SignatureOperator& s, IVec n) { return s.DH_block(n); }

Eigen::MatrixXcd base_signature_block(const ModelGeometry& g, IVec n, const ModeSet& trans,
                                      const DiracOptions& opt) {
  if (g.q != 2) throw Error(ErrorKind::UnsupportedDimension, "base signature operator needs q = 2");
  const FormAlgebra fa = FormAlgebra::standard();
  const int p = g.p;
  std::vector<std::pair<int, int>> shapes(6, {4, 4});
  auto fields = sample_fields(
      opt.grid, shapes,
      [&](const double* y) {
        const JetMat G = g.base_metric(y);
        const JetMat Gf = g.fiber_metric(y);
        const JetMat A = g.connection_matrix(y);
        const JetMat L = inverse_cholesky(G);
        const Eigen::Matrix2d Gi = G.v.inverse();
        // coordinate Christoffel symbols of g_B: Chr[m][k][l]
        double Chr[2][2][2];
        for (int m = 0; m < 2; ++m)
          for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) {
              double s = 0;
              for (int i = 0; i < 2; ++i) s += Gi(m, i) * (G.d[k](i, l) + G.d[l](i, k) - G.d[i](k, l));
              Chr[m][k][l] = 0.5 * s;
            }
        auto Gam = [&](int gg, int al, int b) {
          Eigen::Vector2d X = Eigen::Vector2d::Zero();  // nabla_{f_al} f_b in coordinates
          for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) {
              X(l) += L.v(al, k) * L.d[k](b, l);
              for (int m = 0; m < 2; ++m) X(m) += L.v(al, k) * L.v(b, l) * Chr[m][k][l];
            }
          return X.dot(G.v * L.v.row(gg).transpose());
        };
        const auto Om = form_connection(Gam);
        const Eigen::MatrixXd Gfi = Gf.v.inverse();
        Eigen::Vector2d dlogF, dlogB;
        for (int k = 0; k < 2; ++k) {
          dlogF(k) = (Gfi * Gf.d[k]).trace();
          dlogB(k) = (Gi * G.d[k]).trace();
        }
        const Eigen::Vector2d tau = -0.5 * (L.v * dlogF);
        const Eigen::Vector2d dl = 0.5 * (L.v * (dlogF + dlogB));
        const FormCoefficients c = form_coefficients(fa, L.v, Om, dl, tau);
        // twist: d_{y_k} -> d_{y_k} - i n.A_k
        Eigen::MatrixXcd Zd = c.Zd, Za = c.Za;
        for (int k = 0; k < 2; ++k) {
          double na = 0;
          for (int j = 0; j < p; ++j) na += n[j] * A.v(j, k);
          Zd += cplx(0, -na) * c.Wd[k];
          Za += cplx(0, -na) * c.Wa[k];
        }
        return std::vector<Eigen::MatrixXcd>{c.Wd[0] + c.Wa[0], c.Wd[1] + c.Wa[1], Zd + Za,
                                             Eigen::MatrixXcd::Zero(4, 4), Eigen::MatrixXcd::Zero(4, 4),
                                             Eigen::MatrixXcd::Zero(4, 4)};
      },
      opt.field_tol);
  FirstOrderFields f;
  f.q = 2;
  f.rank = 4;
  f.W = {fields[0], fields[1]};
  f.Z = fields[2];
  return f.block({0, 0}, trans);
}

}  // namespace foliant

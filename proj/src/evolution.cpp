#include "foliant/evolution.hpp"

#include <cmath>
#include <fstream>
#include <tuple>

#include "foliant/json_util.hpp"
#include "foliant/linalg.hpp"

namespace foliant {

namespace {

std::vector<FourierField> sample_many(int q, int N, const std::vector<std::pair<int, int>>& shapes,
                                      const std::function<std::vector<Eigen::MatrixXcd>(const double*)>& f,
                                      double tol) {
  const auto pts = torus_grid(N, q);
  std::vector<std::vector<Eigen::MatrixXcd>> vals(shapes.size(), std::vector<Eigen::MatrixXcd>(pts.size()));
  parallel_for(int(pts.size()), [&](int i) {
    auto v = f(pts[i].data());
    for (std::size_t s = 0; s < shapes.size(); ++s) vals[s][i] = std::move(v[s]);
  });
  std::vector<FourierField> out;
  for (std::size_t s = 0; s < shapes.size(); ++s)
    out.push_back(FourierField::from_samples(q, shapes[s].first, shapes[s].second, N, vals[s], tol));
  return out;
}

std::vector<int> interior_indices(const ModeSet& trans, const ModeSet& inner, int rank) {
  std::vector<int> idx;
  for (int i = 0; i < trans.size(); ++i)
    if (inner.contains(trans[i]))
      for (int c = 0; c < rank; ++c) idx.push_back(i * rank + c);
  return idx;
}

void check_hermitian(double defect, IVec a) {
  if (defect > 1e-10)
    throw Error(ErrorKind::NonHermitianBlock, "leaf block (" + std::to_string(a[0]) + "," + std::to_string(a[1]) +
                                                  ") Hermiticity defect " + std::to_string(defect));
}

std::vector<int> leaf_indices(const ModeSet& leaf, const std::vector<IVec>& modes) {
  std::vector<int> idx;
  if (modes.empty()) {
    for (int i = 0; i < leaf.size(); ++i) idx.push_back(i);
    return idx;
  }
  for (const IVec& a : modes) {
    const int i = leaf.index(a);
    if (i < 0) throw Error(ErrorKind::CutoffMismatch, "leaf mode outside the leaf cutoff");
    idx.push_back(i);
  }
  return idx;
}

Eigen::VectorXcd phases(const Eigen::VectorXd& omega, double t) {
  Eigen::VectorXcd e(omega.size());
  for (int i = 0; i < omega.size(); ++i) e(i) = std::polar(1.0, t * omega(i));
  return e;
}

/// U = V diag(e^{i t omega}) V^dag.
Eigen::MatrixXcd propagator(const SpectralBlock& b, double t) {
  return b.V * phases(b.omega, t).asDiagonal() * b.V.adjoint();
}

}  // namespace

// ---------------------------------------------------------------- Bochner Laplacian

BochnerAssembly build_bochner(const ModelGeometry& g, const BundleData& E, const ModeSet& leaf,
                              const ModeSet& trans, const DiracOptions& opt) {
  E.validate(g.q);
  if (leaf.dim() != g.p || trans.dim() != g.q) throw Error(ErrorKind::CutoffMismatch, "mode set dimensions");
  BochnerAssembly b;
  b.geom_ = g;
  b.bundle_ = E;
  b.leaf_ = leaf;
  b.trans_ = trans;
  const int p = g.p, q = g.q, r = E.rank;
  const Eigen::MatrixXcd Ir = Eigen::MatrixXcd::Identity(r, r);
  const FrameData frames = build_frames(g);

  // per alpha: W_0..W_{q-1}, Z, WA[j][k]; then g_F^{-1}
  const int per = q + 1 + p * q;
  std::vector<std::pair<int, int>> shapes(std::size_t(per) * q, {r, r});
  shapes.push_back({p, p});
  auto fields = sample_many(
      q, opt.grid, shapes,
      [&](const double* y) {
        const FramePoint fp = frames.at(y);
        std::vector<Eigen::MatrixXcd> v;
        for (int al = 0; al < q; ++al) {
          Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(r, r);
          double dlr = 0;
          for (int k = 0; k < q; ++k) {
            v.push_back(fp.LB.v(al, k) * Ir);
            if (!E.B.empty()) Z += fp.LB.v(al, k) * E.B[k].eval(y);
            dlr += fp.LB.v(al, k) * fp.log_rho.d[k];
          }
          v.push_back(Z - 0.5 * dlr * Ir);
          for (int j = 0; j < p; ++j)
            for (int k = 0; k < q; ++k) v.push_back(fp.LB.v(al, k) * fp.A.v(j, k) * Ir);
        }
        v.push_back(g.fiber_metric(y).v.inverse().cast<cplx>());
        return v;
      },
      opt.field_tol);

  for (int al = 0; al < q; ++al) {
    FirstOrderFields G;
    G.q = q;
    G.rank = r;
    const int o = al * per;
    G.W.assign(fields.begin() + o, fields.begin() + o + q);
    G.Z = fields[o + q];
    G.WA.assign(p, std::vector<FourierField>(q));
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < q; ++k) G.WA[j][k] = fields[o + q + 1 + j * q + k];
    b.G_.push_back(std::move(G));
  }
  b.gF_inv_ = fields.back();
  return b;
}

Eigen::MatrixXcd BochnerAssembly::block(IVec a) const {
  const int q = geom_.q, p = geom_.p, r = rank();
  // vertical part: multiplication by a.g_F^{-1} a
  FourierField vert(q, r, r);
  for (const auto& [m, c] : gF_inv_.modes()) {
    cplx s = 0;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) s += double(a[i]) * c(i, j) * double(a[j]);
    vert.modes()[m] = s * Eigen::MatrixXcd::Identity(r, r);
  }
  Eigen::MatrixXcd M = multiplication_block(vert, trans_);

  int band = 0;
  for (const auto& G : G_) band = std::max(band, G.band());
  const ModeSet ext(q, trans_.cutoff() + 2 * band + 1, trans_.shape());
  std::vector<int> cols;
  for (int i = 0; i < trans_.size(); ++i)
    for (int c = 0; c < r; ++c) cols.push_back(ext.index(trans_[i]) * r + c);
  for (const auto& G : G_) {
    const Eigen::MatrixXcd Gc = G.block(a, ext)(Eigen::all, cols);
    M += Gc.adjoint() * Gc;
  }
  return M;
}

DiracSubprincipal bochner_subprincipal(const ModelGeometry& g, const BundleData& E) {
  E.validate(g.q);
  DiracSubprincipal s;
  s.H = std::make_shared<CoMetricHamiltonian>(g);
  const int q = g.q, r = E.rank;
  s.gamma = [g, E, q, r](const double* y, const double* eta) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(r, r);
    if (E.B.empty()) return out;
    const Eigen::MatrixXd LB = inverse_cholesky(g.base_metric(y)).v;
    const Eigen::VectorXd nf = LB * Eigen::Map<const Eigen::VectorXd>(eta, q);
    const double norm = nf.norm();
    if (norm == 0) throw Error(ErrorKind::EvaluationAtZeroSection, "subprincipal connection at eta = 0");
    for (int k = 0; k < q; ++k) {
      double w = 0;
      for (int al = 0; al < q; ++al) w += nf(al) * LB(al, k);
      out += (w / norm) * E.B[k].eval(y);
    }
    return out;
  };
  return s;
}

// ---------------------------------------------------------------- Hamiltonian

const SpectralBlock& QuantumHamiltonian::block(IVec a) const {
  const int i = leaf_.index(a);
  auto it = blocks_.find(i);
  if (i < 0 || it == blocks_.end())
    throw Error(ErrorKind::CutoffMismatch,
                "leaf mode (" + std::to_string(a[0]) + "," + std::to_string(a[1]) + ") not assembled");
  return it->second;
}

BlockOperator QuantumHamiltonian::matrix() const {
  BlockOperator P(leaf_, trans_, rank_);
  for (const auto& [i, b] : blocks_) P.set_block(i, i, b.V * b.omega.cast<cplx>().asDiagonal() * b.V.adjoint());
  return P;
}

Eigen::VectorXcd QuantumHamiltonian::propagate(IVec a, const Eigen::VectorXcd& v, double t) const {
  const SpectralBlock& b = block(a);
  Eigen::VectorXcd w = b.V.adjoint() * v;
  return b.V * phases(b.omega, t).cwiseProduct(w);
}

QuantumHamiltonian assemble_hamiltonian(const BochnerAssembly& b, const std::vector<IVec>& leaf_modes) {
  QuantumHamiltonian H(b.leaf(), b.trans(), b.rank());
  double herm = 0;
  for (int i : leaf_indices(b.leaf(), leaf_modes)) {
    const IVec a = b.leaf()[i];
    Eigen::MatrixXcd M = b.block(a);
    M.diagonal().array() += 1.0;
    const double h = hermiticity_defect(M);
    check_hermitian(h, a);
    herm = std::max(herm, h);
    HermitianEigen e = hermitian_eig(std::move(M));
    H.set_block(i, {a, std::move(e.vectors), e.values.cwiseMax(0.0).cwiseSqrt()});
  }
  H.set_hermiticity_defect(herm);
  return H;
}

QuantumHamiltonian assemble_hamiltonian(const DiracAssembly& d, const std::vector<IVec>& leaf_modes) {
  QuantumHamiltonian H(d.leaf(), d.trans(), d.rank());
  const auto idx = interior_indices(d.trans(), d.interior(), d.rank());
  double herm = 0;
  for (int i : leaf_indices(d.leaf(), leaf_modes)) {
    const IVec a = d.leaf()[i];
    Eigen::MatrixXcd D = d.dirac_block(a);
    const double h = hermiticity_defect(D(idx, idx));
    check_hermitian(h, a);
    herm = std::max(herm, h);
    HermitianEigen e = hermitian_eig(std::move(D));
    H.set_block(i, {a, std::move(e.vectors), (e.values.array().square() + 1.0).sqrt().matrix()});
  }
  H.set_hermiticity_defect(herm);
  return H;
}

QuantumHamiltonian assemble_hamiltonian(const BlockOperator& P, const ModeSet& interior) {
  QuantumHamiltonian H(P.leaf(), P.trans(), P.rank());
  const auto idx = interior_indices(P.trans(), interior, P.rank());
  double herm = 0;
  for (const auto& [key, M] : P.blocks()) {
    if (key.first != key.second) {
      if (M.cwiseAbs().maxCoeff() > 0)
        throw Error(ErrorKind::NonHermitianBlock, "Hamiltonian is not block-diagonal over leaf modes");
      continue;
    }
    const IVec a = P.leaf()[key.first];
    const double h = hermiticity_defect(M(idx, idx));
    check_hermitian(h, a);
    herm = std::max(herm, h);
    HermitianEigen e = hermitian_eig(M);
    H.set_block(key.first, {a, std::move(e.vectors), std::move(e.values)});
  }
  H.set_hermiticity_defect(herm);
  return H;
}

// ---------------------------------------------------------------- evolution

BlockOperator heisenberg_evolve(const QuantumHamiltonian& H, const BlockOperator& K, double t) {
  if (!(K.leaf() == H.leaf()) || !(K.trans() == H.trans()) || K.rank() != H.rank())
    throw Error(ErrorKind::CutoffMismatch, "operator and Hamiltonian use different mode sets");
  if (t == 0) return K;
  std::map<int, Eigen::MatrixXcd> U;
  for (const auto& [key, M] : K.blocks())
    for (int i : {key.first, key.second})
      if (!U.count(i)) U[i] = propagator(H.block(H.leaf()[i]), t);
  BlockOperator out(K.leaf(), K.trans(), K.rank());
  for (const auto& [key, M] : K.blocks()) out.set_block(key.first, key.second, U[key.first] * M * U[key.second].adjoint());
  return out;
}

ColumnProvider evolved_columns(const QuantumHamiltonian& H, const TransverseSymbol& k, double t) {
  auto apply = std::make_shared<QuantizedApply>(k, H.trans());
  return [&H, apply, t](IVec a, IVec b, int col) -> Eigen::VectorXcd {
    const SpectralBlock& Sb = H.block(b);
    Eigen::VectorXcd w = Sb.V.row(col).adjoint();
    w = Sb.V * phases(Sb.omega, -t).cwiseProduct(w);
    w = apply->apply(a, b, w);
    return H.propagate(a, w, t);
  };
}

// ---------------------------------------------------------------- Egorov

double EgorovReport::error_at(double lambda) const {
  for (const auto& s : scales)
    if (s.lambda == lambda) return s.error;
  throw Error(ErrorKind::ProbeOutOfRange, "scale not in report");
}

nlohmann::json EgorovReport::to_json() const {
  nlohmann::json sc = nlohmann::json::array();
  for (const auto& s : scales) sc.push_back({{"lambda", s.lambda}, {"error", s.error}, {"ref_scale", s.ref_scale}});
  return {{"t", t}, {"scales", sc}, {"rho", rho}, {"log_c", log_c}, {"fit_residual", residual}, {"snapshot", snapshot}};
}

void EgorovReport::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::ConfigInvalid, "cannot write " + path);
  f.precision(17);
  f << "lambda,error,ref_scale\n";
  for (const auto& s : scales) f << s.lambda << ',' << s.error << ',' << s.ref_scale << '\n';
}

std::array<double, 3> fit_decay(const std::vector<double>& lambda, const std::vector<double>& d) {
  const int n = int(lambda.size());
  if (n < 2 || int(d.size()) != n) throw Error(ErrorKind::FitIllConditioned, "decay fit needs two scales");
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1;
    X(i, 1) = -std::log(lambda[i]);
    Y(i) = std::log(std::max(d[i], 1e-300));
  }
  const Eigen::Vector2d c = X.colPivHouseholderQr().solve(Y);
  const double res = std::sqrt((X * c - Y).squaredNorm() / n);
  return {c(1), c(0), res};
}

EgorovReport egorov_compare(const QuantumHamiltonian& H, const TransverseSymbol& k, double t,
                            const SymbolTransport& tr, const EgorovOptions& opt) {
  if (k.order() != 0) throw Error(ErrorKind::OrderMismatch, "Egorov comparison needs an order-0 symbol");
  const ModeSet& trans = H.trans();
  const int q = trans.dim(), r = k.rank();
  for (double l : opt.lambdas)
    if (l > trans.cutoff() / 2) throw Error(ErrorKind::ProbeOutOfRange, "probe scale above half the cutoff");

  ProbeSet ps;
  ps.lambdas = opt.lambdas;
  if (q == 1) {
    ps.directions = {{1, 0}, {-1, 0}};
  } else {
    for (int j = 0; j < opt.directions; ++j) {
      const double th = 2 * kPi * j / opt.directions;
      ps.directions.push_back({std::cos(th), std::sin(th)});
    }
  }
  ps.c_window = opt.c_window;
  ps.leaf_pairs = k.leaf_pairs();
  k.prepare();
  const ExtractedSymbol ex = extract_symbol(evolved_columns(H, k, t), trans, k.p(), r, ps);

  // reference coefficients per (a, b, lambda, direction), from the transported symbol on a y-grid
  const auto pts = torus_grid(opt.ygrid, q);
  const int N = opt.ygrid;
  std::map<std::tuple<IVec, IVec, double, int>, std::vector<std::vector<cplx>>> ref;  // [u*r+v][grid index]
  for (const auto& s : ex.samples) {
    const auto key = std::make_tuple(s.a, s.b, s.lambda, s.direction);
    if (ref.count(key)) continue;
    const double rn = norm2(s.probe, q);
    const double om[2] = {s.probe[0] / rn, q == 2 ? s.probe[1] / rn : 0.0};
    std::vector<Eigen::MatrixXcd> vals(pts.size());
    parallel_for(int(pts.size()),
                 [&](int i) { vals[i] = transport_pointwise(tr, k, s.a, s.b, pts[i].data(), om, t, 0); });
    std::vector<std::vector<cplx>> f(std::size_t(r) * r);
    std::vector<cplx> buf(pts.size());
    for (int u = 0; u < r; ++u)
      for (int v = 0; v < r; ++v) {
        for (std::size_t i = 0; i < pts.size(); ++i) buf[i] = vals[i](u, v);
        f[u * r + v] = grid_dft(buf, N, q);
      }
    ref[key] = std::move(f);
  }

  EgorovReport rep;
  rep.t = t;
  rep.snapshot = nlohmann::json::array();
  std::map<double, EgorovScale> per;
  for (double l : opt.lambdas) per[l] = {l, 0, 0};
  for (const auto& s : ex.samples) {
    const auto& f = ref.at(std::make_tuple(s.a, s.b, s.lambda, s.direction));
    const int c0 = ((s.c[0] % N) + N) % N, c1 = q == 2 ? ((s.c[1] % N) + N) % N : 0;
    Eigen::MatrixXcd R(r, r);
    for (int u = 0; u < r; ++u)
      for (int v = 0; v < r; ++v) R(u, v) = f[u * r + v][c0 + std::size_t(N) * c1];
    auto& e = per[s.lambda];
    e.error = std::max(e.error, (R - s.value).cwiseAbs().maxCoeff());
    e.ref_scale = std::max(e.ref_scale, R.cwiseAbs().maxCoeff());
    rep.snapshot.push_back({{"a", ivec_to_json(s.a, k.p())},
                            {"b", ivec_to_json(s.b, k.p())},
                            {"c", ivec_to_json(s.c, q)},
                            {"lambda", s.lambda},
                            {"direction", s.direction},
                            {"transported", cmatrix_to_json(R)},
                            {"evolved", cmatrix_to_json(s.value)}});
  }
  std::vector<double> ls, ds;
  for (const auto& [l, e] : per) {
    rep.scales.push_back(e);
    ls.push_back(l);
    ds.push_back(e.error);
  }
  if (ls.size() >= 2) {
    const auto fit = fit_decay(ls, ds);
    rep.rho = fit[0];
    rep.log_c = fit[1];
    rep.residual = fit[2];
  }
  return rep;
}

}  // namespace foliant

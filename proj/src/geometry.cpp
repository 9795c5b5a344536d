#include "foliant/geometry.hpp"

#include <sstream>

namespace foliant {

namespace {

void check_shape(const char* name, const TrigMatrix& m, int r, int c) {
  if (m.rows != r || m.cols != c) {
    std::ostringstream os;
    os << name << " has shape " << m.rows << "x" << m.cols << ", expected " << r << "x" << c;
    throw Error(ErrorKind::UnsupportedDimension, os.str());
  }
}

void check_positive(const char* name, const JetMat& m, const double* y) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.v);
  const double sym = (m.v - m.v.transpose()).norm();
  if (sym > 1e-12 || es.eigenvalues().minCoeff() <= 1e-10) {
    std::ostringstream os;
    os << name << " not positive definite at y=(" << y[0] << ", " << y[1] << ")";
    throw Error(ErrorKind::NonPositiveMetric, os.str());
  }
}

}  // namespace

void ModelGeometry::validate(int grid) const {
  if (p < 1 || p > 2 || q < 1 || q > 2)
    throw Error(ErrorKind::UnsupportedDimension, "p and q must be 1 or 2");
  check_shape("g_F", g_F.base, p, p);
  check_shape("g_B", g_B.base, q, q);
  check_shape("A", A, p, q);
  for (const auto& pt : torus_grid(grid, q)) {
    check_positive("g_F", fiber_metric(pt.data()), pt.data());
    check_positive("g_B", base_metric(pt.data()), pt.data());
  }
}

JetMat ModelGeometry::full_metric(const double* y) const {
  const JetMat gf = fiber_metric(y), gb = base_metric(y), a = connection_matrix(y);
  const JetMat gfa = gf * a;
  const JetMat yy = gb + a.transpose() * gfa;
  const int n = p + q;
  JetMat G(n, n);
  auto put = [&](const JetMat& m, int r0, int c0) {
    G.v.block(r0, c0, m.rows(), m.cols()) = m.v;
    for (int k = 0; k < 2; ++k) G.d[k].block(r0, c0, m.rows(), m.cols()) = m.d[k];
  };
  put(gf, 0, 0);
  put(gfa, 0, p);
  put(gfa.transpose(), p, 0);
  put(yy, p, p);
  return G;
}

Jet ModelGeometry::log_density(const double* y) const {
  return 0.5 * (log_det(fiber_metric(y)) + log_det(base_metric(y)));
}

int ModelGeometry::data_degree() const {
  return std::max({g_F.base.degree(), g_F.log_scale.degree(), g_B.base.degree(),
                   g_B.log_scale.degree(), A.degree()});
}

Eigen::VectorXd FramePoint::vec(int a) const {
  Eigen::VectorXd v(n());
  for (int i = 0; i < n(); ++i) v(i) = E[a][i].v;
  return v;
}

FramePoint FrameData::at(const double* y) const {
  const ModelGeometry& g = geom_;
  FramePoint fp;
  fp.p = g.p;
  fp.q = g.q;
  fp.y = {y[0], g.q == 2 ? y[1] : 0.0};
  fp.LF = inverse_cholesky(g.fiber_metric(y));
  fp.LB = inverse_cholesky(g.base_metric(y));
  fp.A = g.connection_matrix(y);
  fp.G = g.full_metric(y).v;
  fp.log_rho = g.log_density(y);
  const int n = g.p + g.q;
  fp.E.assign(n, std::vector<Jet>(n));
  for (int i = 0; i < g.p; ++i)
    for (int j = 0; j < g.p; ++j) fp.E[i][j] = fp.LF.at(i, j);
  for (int al = 0; al < g.q; ++al) {
    for (int k = 0; k < g.q; ++k) {
      const Jet l = fp.LB.at(al, k);
      fp.E[g.p + al][g.p + k] = l;
      for (int j = 0; j < g.p; ++j) fp.E[g.p + al][j] -= l * fp.A.at(j, k);
    }
  }
  return fp;
}

double FrameData::orthonormality_defect(int grid) const {
  double worst = 0;
  for (const auto& pt : torus_grid(grid, geom_.q)) {
    const FramePoint fp = at(pt.data());
    Eigen::MatrixXd M(fp.n(), fp.n());
    for (int a = 0; a < fp.n(); ++a) M.col(a) = fp.vec(a);
    const Eigen::MatrixXd gram = M.transpose() * fp.G * M;
    worst = std::max(worst, (gram - Eigen::MatrixXd::Identity(fp.n(), fp.n())).cwiseAbs().maxCoeff());
  }
  return worst;
}

FrameData build_frames(const ModelGeometry& g) {
  g.validate();
  return FrameData(g);
}

Eigen::VectorXd ConnectionPoint::bracket(int a, int b) const {
  const FramePoint& f = frame;
  const int n = f.n();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n; ++c)
    for (int k = 0; k < f.q; ++k)
      r(c) += f.E[a][f.p + k].v * f.E[b][c].d[k] - f.E[b][f.p + k].v * f.E[a][c].d[k];
  return r;
}

Eigen::VectorXd ConnectionPoint::tau() const {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(frame.q);
  for (int g = 0; g < frame.q; ++g)
    for (int i = 0; i < frame.p; ++i) t(g) += w(i, i, frame.p + g);
  return t;
}

Eigen::VectorXd ConnectionPoint::curvature(int alpha, int beta) const {
  const int p = frame.p;
  const Eigen::VectorXd br = bracket(p + alpha, p + beta);
  // vertical part of V: (V^x + A V^y) d_x
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n());
  r.head(p) = -(br.head(p) + frame.A.v * br.tail(frame.q));
  return r;
}

ConnectionPoint ConnectionData::at(const double* y) const {
  ConnectionPoint cp;
  cp.frame = frames_.at(y);
  const int n = cp.n();
  std::vector<Eigen::VectorXd> vec(n);
  for (int a = 0; a < n; ++a) vec[a] = cp.frame.vec(a);
  std::vector<Eigen::VectorXd> br(std::size_t(n) * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) br[std::size_t(a) * n + b] = cp.bracket(a, b);
  auto gbr = [&](int a, int b, int c) { return br[std::size_t(a) * n + b].dot(cp.frame.G * vec[c]); };
  cp.omega.assign(std::size_t(n) * n * n, 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        cp.omega[(std::size_t(a) * n + b) * n + c] = 0.5 * (gbr(a, b, c) - gbr(a, c, b) - gbr(b, c, a));
  return cp;
}

double ConnectionData::torsion_defect(int grid) const {
  const ModelGeometry& g = geometry();
  double worst = 0;
  for (const auto& pt : torus_grid(grid, g.q)) {
    const ConnectionPoint cp = at(pt.data());
    for (int a = 0; a < g.q; ++a)
      for (int b = 0; b < g.q; ++b) {
        const Eigen::VectorXd br = cp.bracket(g.p + a, g.p + b);
        for (int c = 0; c < g.q; ++c) {
          const double proj = br.dot(cp.frame.G * cp.frame.vec(g.p + c));
          worst = std::max(worst, std::abs(cp.Gamma(c, a, b) - cp.Gamma(c, b, a) - proj));
        }
      }
  }
  return worst;
}

ConnectionData transverse_connection(const ModelGeometry&, const FrameData& f) { return ConnectionData(f); }

double divergence(const ConnectionData& c, const std::function<std::vector<Jet>(const double*)>& X,
                  const double* y) {
  const ConnectionPoint cp = c.at(y);
  const FramePoint& f = cp.frame;
  const auto comp = X(y);
  double div = 0;
  for (int b = 0; b < f.n(); ++b) {
    for (int al = 0; al < f.q; ++al) {
      if (b == f.p + al) {
        double dx = 0;
        for (int k = 0; k < f.q; ++k) dx += f.E[b][f.p + k].v * comp[al].d[k];
        div += dx;
      }
      div += comp[al].v * cp.w(b, f.p + al, b);
    }
  }
  return div;
}

DualNorm dual_norm_at(const ModelGeometry& g, const double* y, const Eigen::VectorXd& xi,
                      const Eigen::VectorXd& eta) {
  if (xi.size() != g.p || eta.size() != g.q)
    throw Error(ErrorKind::UnsupportedDimension, "covector dimension mismatch");
  const Eigen::MatrixXd a = g.connection_matrix(y).v, gb = g.base_metric(y).v;
  const Eigen::VectorXd h = eta - a.transpose() * xi;
  DualNorm r;
  r.norm = std::sqrt(std::max(0.0, h.dot(gb.ldlt().solve(h))));
  r.horizontal = Eigen::VectorXd::Zero(g.p + g.q);
  r.horizontal.tail(g.q) = h;
  return r;
}

}  // namespace foliant

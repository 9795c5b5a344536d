#include "foliant/fourier.hpp"

#include <unsupported/Eigen/FFT>

namespace foliant {

Jet TrigPoly::eval(const double* y, int q) const {
  Jet r;
  for (const auto& t : terms) {
    double ph = 0;
    for (int l = 0; l < q; ++l) ph += t.mode[l] * y[l];
    const double c = std::cos(ph), s = std::sin(ph);
    r.v += t.c * c + t.s * s;
    const double dph = -t.c * s + t.s * c;
    for (int l = 0; l < q; ++l) r.d[l] += dph * t.mode[l];
  }
  return r;
}

int TrigPoly::degree() const {
  int d = 0;
  for (const auto& t : terms) d = std::max(d, norm_inf(t.mode, 2));
  return d;
}

TrigPoly TrigPoly::operator+(const TrigPoly& o) const {
  TrigPoly r = *this;
  r.terms.insert(r.terms.end(), o.terms.begin(), o.terms.end());
  return r;
}

TrigMatrix TrigMatrix::constant(const Eigen::MatrixXd& m) {
  TrigMatrix t(int(m.rows()), int(m.cols()));
  for (int i = 0; i < t.rows; ++i)
    for (int j = 0; j < t.cols; ++j) t(i, j) = TrigPoly(m(i, j));
  return t;
}

JetMat TrigMatrix::eval(const double* y, int q) const {
  JetMat r(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) r.set(i, j, (*this)(i, j).eval(y, q));
  return r;
}

int TrigMatrix::degree() const {
  int d = 0;
  for (const auto& e : entries) d = std::max(d, e.degree());
  return d;
}

JetMat ScaledField::eval(const double* y, int q) const {
  JetMat b = base.eval(y, q);
  if (log_scale.empty()) return b;
  const Jet s = exp(2.0 * log_scale.eval(y, q));
  return s * b;
}

std::vector<std::array<double, 2>> torus_grid(int N, int q) {
  std::vector<std::array<double, 2>> pts;
  const double h = 2 * kPi / N;
  if (q == 1) {
    for (int i = 0; i < N; ++i) pts.push_back({i * h, 0.0});
  } else {
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i) pts.push_back({i * h, j * h});
  }
  return pts;
}

int signed_freq(int i, int N) { return i < N / 2 ? i : i - N; }

std::vector<cplx> grid_dft(const std::vector<cplx>& samples, int N, int q) {
  Eigen::FFT<double> fft;
  std::vector<cplx> out(samples.size());
  std::vector<cplx> in(N), tmp(N);
  if (q == 1) {
    fft.fwd(out, samples);
    for (auto& v : out) v /= double(N);
    return out;
  }
  out = samples;
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < N; ++i) in[i] = out[i + N * j];
    fft.fwd(tmp, in);
    for (int i = 0; i < N; ++i) out[i + N * j] = tmp[i];
  }
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) in[j] = out[i + N * j];
    fft.fwd(tmp, in);
    for (int j = 0; j < N; ++j) out[i + N * j] = tmp[j] / double(N * N);
  }
  return out;
}

FourierField FourierField::from_samples(int q, int rows, int cols, int N,
                                        const std::vector<Eigen::MatrixXcd>& vals, double tol) {
  FourierField f(q, rows, cols);
  const std::size_t np = vals.size();
  std::vector<std::vector<cplx>> coef(std::size_t(rows) * cols);
  std::vector<cplx> s(np);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      for (std::size_t i = 0; i < np; ++i) s[i] = vals[i](r, c);
      coef[std::size_t(r) * cols + c] = grid_dft(s, N, q);
    }
  double scale = 0;
  for (std::size_t i = 0; i < np; ++i) scale = std::max(scale, vals[i].norm());
  for (std::size_t idx = 0; idx < np; ++idx) {
    const int i0 = int(idx % N), i1 = int(idx / N);
    if (i0 == N / 2 || (q == 2 && i1 == N / 2)) continue;  // drop Nyquist
    IVec k{signed_freq(i0, N), q == 2 ? signed_freq(i1, N) : 0};
    Eigen::MatrixXcd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = coef[std::size_t(r) * cols + c][idx];
    if (m.norm() > tol * std::max(scale, 1.0)) f.modes_[k] = m;
  }
  return f;
}

Eigen::MatrixXcd FourierField::coefficient(IVec k) const {
  auto it = modes_.find(k);
  if (it == modes_.end()) return Eigen::MatrixXcd::Zero(rows_, cols_);
  return it->second;
}

Eigen::MatrixXcd FourierField::eval(const double* y) const {
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(rows_, cols_);
  for (const auto& [k, m] : modes_) {
    double ph = k[0] * y[0] + (q_ == 2 ? k[1] * y[1] : 0.0);
    r += std::polar(1.0, ph) * m;
  }
  return r;
}

FourierField FourierField::derivative(int l) const {
  FourierField f(q_, rows_, cols_);
  for (const auto& [k, m] : modes_)
    if (k[l] != 0) f.modes_[k] = (kI * double(k[l])) * m;
  return f;
}

FourierField FourierField::adjoint() const {
  FourierField f(q_, cols_, rows_);
  for (const auto& [k, m] : modes_) f.modes_[-k] = m.adjoint();
  return f;
}

int FourierField::band() const {
  int b = 0;
  for (const auto& kv : modes_) b = std::max(b, norm_inf(kv.first, q_));
  return b;
}

int FourierField::effective_band(double tol) const {
  int b = 0;
  for (const auto& [k, m] : modes_)
    if (m.norm() > tol) b = std::max(b, norm_inf(k, q_));
  return b;
}

FourierField FourierField::operator+(const FourierField& o) const {
  FourierField f = *this;
  for (const auto& [k, m] : o.modes_) {
    auto it = f.modes_.find(k);
    if (it == f.modes_.end()) f.modes_[k] = m;
    else it->second += m;
  }
  return f;
}

FourierField FourierField::operator*(cplx s) const {
  FourierField f = *this;
  for (auto& kv : f.modes_) kv.second *= s;
  return f;
}

}  // namespace foliant

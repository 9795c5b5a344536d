#include "foliant/symbols.hpp"

#include <cmath>
#include <set>

#include "foliant/fourier.hpp"
#include "foliant/json_util.hpp"

namespace foliant {

namespace {

int ipow(int base, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

/// base^e componentwise over the first d components.
double mpow(IVec base, IVec e, int d) {
  double r = 1;
  for (int i = 0; i < d; ++i) r *= ipow(base[i], e[i]);
  return r;
}

int msum(IVec v, int d) {
  int s = 0;
  for (int i = 0; i < d; ++i) s += v[i];
  return s;
}

double factorial(int n) {
  double r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

double mfact(IVec v, int d) {
  double r = 1;
  for (int i = 0; i < d; ++i) r *= factorial(v[i]);
  return r;
}

/// All multi-indices in N^d with |beta| <= n.
std::vector<IVec> multi_indices(int d, int n) {
  std::vector<IVec> r;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= (d == 2 ? n - i : 0); ++j) r.push_back({i, j});
  return r;
}

bool leq(IVec a, IVec b, int d) {
  for (int i = 0; i < d; ++i)
    if (a[i] > b[i]) return false;
  return true;
}

/// omega^delta at grid direction j.
double omega_pow(const DirectionGrid& g, int j, IVec delta) {
  const auto w = g.omega(j);
  double r = std::pow(w[0], delta[0]);
  if (g.q == 2) r *= std::pow(w[1], delta[1]);
  return r;
}

/// DFT harmonics over the direction grid, index i <-> frequency signed_freq(i, N).
TransverseSymbol::Samples harmonics_of(const TransverseSymbol::Samples& f) {
  const int N = int(f.size());
  TransverseSymbol::Samples h(N, Eigen::MatrixXcd::Zero(f[0].rows(), f[0].cols()));
  for (int i = 0; i < N; ++i) {
    const int k = signed_freq(i, N);
    for (int j = 0; j < N; ++j) h[i] += std::polar(1.0 / N, -2 * kPi * k * j / N) * f[j];
  }
  return h;
}

Eigen::MatrixXcd interpolate(const TransverseSymbol::Samples& h, double theta) {
  const int N = int(h.size());
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(h[0].rows(), h[0].cols());
  for (int i = 0; i < N; ++i) {
    const int k = signed_freq(i, N);
    if (i == N / 2) r += std::cos(0.5 * N * theta) * h[i];
    else r += std::polar(1.0, k * theta) * h[i];
  }
  return r;
}

/// d/dtheta of the trig interpolant, on the grid (Nyquist dropped).
TransverseSymbol::Samples angular_derivative(const TransverseSymbol::Samples& f) {
  const int N = int(f.size());
  const auto h = harmonics_of(f);
  TransverseSymbol::Samples d(N, Eigen::MatrixXcd::Zero(f[0].rows(), f[0].cols()));
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) {
      if (i == N / 2) continue;
      const int k = signed_freq(i, N);
      d[j] += (kI * double(k)) * std::polar(1.0, 2 * kPi * k * j / N) * h[i];
    }
  return d;
}

/// Samples of d_{eta_l}(r^s f(theta)) / r^{s-1}.
TransverseSymbol::Samples eta_derivative(const DirectionGrid& g, int s, const TransverseSymbol::Samples& f,
                                         int l) {
  TransverseSymbol::Samples r(f.size());
  TransverseSymbol::Samples fp;
  if (g.q == 2) fp = angular_derivative(f);
  for (int j = 0; j < g.n; ++j) {
    const auto w = g.omega(j);
    r[j] = (double(s) * w[l]) * f[j];
    if (g.q == 2) r[j] += (l == 0 ? -w[1] : w[0]) * fp[j];
  }
  return r;
}

TransverseSymbol::Samples scaled(const TransverseSymbol::Samples& f, const std::function<cplx(int)>& w) {
  TransverseSymbol::Samples r(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) r[j] = w(int(j)) * f[j];
  return r;
}

void check_same_dims(const TransverseSymbol& k, const ScalarFullSymbol& b) {
  if (k.p() != b.p || k.q() != b.q) throw Error(ErrorKind::OrderMismatch, "symbol dimensions differ");
}

}  // namespace

// ---------------------------------------------------------------- TransverseSymbol

TransverseSymbol::TransverseSymbol(int p, int q, int rank, int order, int depth, int ntheta)
    : p_(p), q_(q), rank_(rank), order_(order), depth_(depth), grid_(DirectionGrid::for_dim(q, ntheta)) {
  if (p < 1 || p > 2 || q < 1 || q > 2) throw Error(ErrorKind::UnsupportedDimension, "symbol dimensions");
  if (q == 2 && (ntheta < 4 || ntheta % 2)) throw Error(ErrorKind::UnsupportedDimension, "ntheta must be even");
}

void TransverseSymbol::add_entry(const SymbolKey& k, const Samples& values) {
  if (int(values.size()) != grid_.n) throw Error(ErrorKind::OrderMismatch, "direction sample count");
  for (const auto& m : values)
    if (m.rows() != rank_ || m.cols() != rank_) throw Error(ErrorKind::RankMismatch, "symbol value shape");
  invalidate();
  auto it = entries_.find(k);
  if (it == entries_.end()) {
    entries_.emplace(k, values);
  } else {
    for (int j = 0; j < grid_.n; ++j) it->second[j] += values[j];
  }
}

void TransverseSymbol::add(IVec a, IVec b, IVec c, int level, const Samples& values) {
  add_entry({a, b, c, order_ - level}, values);
}

void TransverseSymbol::add_constant(IVec a, IVec b, IVec c, int level, const Eigen::MatrixXcd& m) {
  add(a, b, c, level, Samples(grid_.n, m));
}

void TransverseSymbol::add_harmonic(IVec a, IVec b, IVec c, int level, int h, const Eigen::MatrixXcd& m) {
  Samples s(grid_.n);
  for (int j = 0; j < grid_.n; ++j) s[j] = std::polar(1.0, h * grid_.theta(j)) * m;
  add(a, b, c, level, s);
}

Eigen::MatrixXcd TransverseSymbol::direction_value(const SymbolKey& k, const double* omega) const {
  const auto& s = entries_.at(k);
  if (q_ == 1) return omega[0] > 0 ? s[0] : s[1];
  const double theta = std::atan2(omega[1], omega[0]);
  auto it = harmonics_.find(k);
  if (it != harmonics_.end()) return interpolate(it->second, theta);
  return interpolate(harmonics_of(s), theta);
}

void TransverseSymbol::prepare() const {
  if (q_ != 2 || harmonics_.size() == entries_.size()) return;
  for (const auto& [k, s] : entries_) harmonics_[k] = harmonics_of(s);
}

Eigen::MatrixXcd TransverseSymbol::coefficient(IVec a, IVec b, IVec c, int level, const double* omega) const {
  const SymbolKey k{a, b, c, order_ - level};
  if (!entries_.count(k)) return Eigen::MatrixXcd::Zero(rank_, rank_);
  return direction_value(k, omega);
}

Eigen::MatrixXcd TransverseSymbol::eval(const double* x, const double* xp, const double* y, const double* eta,
                                        int max_level) const {
  double r = 0;
  for (int l = 0; l < q_; ++l) r += eta[l] * eta[l];
  r = std::sqrt(r);
  if (r == 0) throw Error(ErrorKind::EvaluationAtZeroSection, "symbol at eta = 0");
  const double w[2] = {eta[0] / r, q_ == 2 ? eta[1] / r : 0.0};
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rank_, rank_);
  for (const auto& [k, s] : entries_) {
    if (order_ - k.s > max_level) continue;
    double ph = 0;
    for (int i = 0; i < p_; ++i) ph += k.a[i] * x[i] + k.b[i] * xp[i];
    for (int l = 0; l < q_; ++l) ph += k.c[l] * y[l];
    out += std::polar(std::pow(r, k.s), ph) * direction_value(k, w);
  }
  return out;
}

TransverseSymbol TransverseSymbol::truncated(int j) const {
  TransverseSymbol r(p_, q_, rank_, order_, std::min(j, depth_), grid_.n);
  for (const auto& [k, s] : entries_)
    if (order_ - k.s <= j) r.entries_.emplace(k, s);
  return r;
}

void TransverseSymbol::prune(double tol) {
  invalidate();
  for (auto it = entries_.begin(); it != entries_.end();) {
    double m = 0;
    for (const auto& v : it->second) m = std::max(m, v.cwiseAbs().maxCoeff());
    it = m <= tol ? entries_.erase(it) : std::next(it);
  }
}

TransverseSymbol TransverseSymbol::operator+(const TransverseSymbol& o) const {
  if (o.order_ != order_) throw Error(ErrorKind::OrderMismatch, "adding symbols of different order");
  if (o.rank_ != rank_) throw Error(ErrorKind::RankMismatch, "adding symbols of different rank");
  TransverseSymbol r = *this;
  r.depth_ = std::max(depth_, o.depth_);
  for (const auto& [k, s] : o.entries_) r.add_entry(k, s);
  return r;
}

TransverseSymbol TransverseSymbol::operator-(const TransverseSymbol& o) const { return *this + o * cplx(-1.0); }

TransverseSymbol TransverseSymbol::operator*(cplx s) const {
  TransverseSymbol r = *this;
  r.invalidate();
  for (auto& kv : r.entries_)
    for (auto& m : kv.second) m *= s;
  return r;
}

TransverseSymbol TransverseSymbol::adjoint() const {
  TransverseSymbol r(p_, q_, rank_, order_, depth_, grid_.n);
  for (const auto& [k, s] : entries_) {
    Samples t(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) t[j] = s[j].adjoint();
    r.add_entry({-k.b, -k.a, -k.c, k.s}, t);
  }
  return r;
}

double TransverseSymbol::max_abs() const {
  double m = 0;
  for (const auto& kv : entries_)
    for (const auto& v : kv.second) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

std::vector<std::pair<IVec, IVec>> TransverseSymbol::leaf_pairs() const {
  std::set<std::pair<IVec, IVec>> s;
  for (const auto& kv : entries_) s.insert({kv.first.a, kv.first.b});
  return {s.begin(), s.end()};
}

int TransverseSymbol::max_c_degree() const {
  int d = 0;
  for (const auto& kv : entries_) d = std::max(d, norm_inf(kv.first.c, q_));
  return d;
}

nlohmann::json TransverseSymbol::to_json() const {
  nlohmann::json j;
  j["p"] = p_;
  j["q"] = q_;
  j["rank"] = rank_;
  j["order"] = order_;
  j["depth"] = depth_;
  j["ntheta"] = grid_.n;
  j["entries"] = nlohmann::json::array();
  for (const auto& [k, s] : entries_) {
    nlohmann::json e;
    e["a"] = ivec_to_json(k.a, p_);
    e["b"] = ivec_to_json(k.b, p_);
    e["c"] = ivec_to_json(k.c, q_);
    e["level"] = order_ - k.s;
    e["values"] = nlohmann::json::array();
    for (const auto& m : s) e["values"].push_back(cmatrix_to_json(m));
    j["entries"].push_back(e);
  }
  return j;
}

TransverseSymbol TransverseSymbol::from_json(const nlohmann::json& j) {
  const int p = j.at("p"), q = j.at("q");
  TransverseSymbol k(p, q, j.value("rank", 1), j.value("order", 0), j.value("depth", 0),
                     j.value("ntheta", 64));
  for (const auto& e : j.at("entries")) {
    const IVec a = ivec_from_json(e.at("a"), p), b = ivec_from_json(e.value("b", nlohmann::json::array()), p);
    const IVec c = ivec_from_json(e.value("c", nlohmann::json::array()), q);
    const int level = e.value("level", 0);
    if (e.contains("values")) {
      Samples s;
      for (const auto& m : e["values"]) s.push_back(cmatrix_from_json(m, k.rank_));
      k.add(a, b, c, level, s);
    }
    if (e.contains("value")) k.add_constant(a, b, c, level, cmatrix_from_json(e["value"], k.rank_));
    if (e.contains("harmonics"))
      for (const auto& h : e["harmonics"])
        k.add_harmonic(a, b, c, level, h.at("h"), cmatrix_from_json(h.at("value"), k.rank_));
  }
  return k;
}

// ---------------------------------------------------------------- ScalarFullSymbol

int PolyTerm::degree(int p, int q) const { return msum(gamma, p) + msum(delta, q); }

cplx ScalarFullSymbol::eval(int level, const double* x, const double* y, const double* xi,
                            const double* eta) const {
  cplx r = 0;
  for (const auto& t : level == 0 ? principal : sub) {
    double mono = 1;
    for (int i = 0; i < p; ++i) mono *= std::pow(xi[i], t.gamma[i]);
    for (int l = 0; l < q; ++l) mono *= std::pow(eta[l], t.delta[l]);
    for (const auto& [m, c] : t.coef) {
      double ph = 0;
      for (int i = 0; i < p; ++i) ph += m.first[i] * x[i];
      for (int l = 0; l < q; ++l) ph += m.second[l] * y[l];
      r += c * std::polar(mono, ph);
    }
  }
  return r;
}

void ScalarFullSymbol::check_holonomy_invariant() const {
  for (const auto& t : principal) {
    if (t.degree(p, q) != order) throw Error(ErrorKind::OrderMismatch, "principal term of wrong degree");
    if (msum(t.gamma, p) != 0) continue;
    for (const auto& [m, c] : t.coef)
      if (norm_inf(m.first, p) != 0 && std::abs(c) > 0)
        throw Error(ErrorKind::NotHolonomyInvariant, "principal symbol on N*F depends on x");
  }
  for (const auto& t : sub)
    if (t.degree(p, q) != order - 1) throw Error(ErrorKind::OrderMismatch, "subprincipal term of wrong degree");
}

nlohmann::json ScalarFullSymbol::to_json() const {
  auto terms = [&](const std::vector<PolyTerm>& ts) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& t : ts) {
      nlohmann::json e;
      e["xi"] = ivec_to_json(t.gamma, p);
      e["eta"] = ivec_to_json(t.delta, q);
      e["coef"] = nlohmann::json::array();
      for (const auto& [m, c] : t.coef)
        e["coef"].push_back({{"x", ivec_to_json(m.first, p)}, {"y", ivec_to_json(m.second, q)}, {"value", cplx_to_json(c)}});
      a.push_back(e);
    }
    return a;
  };
  return {{"p", p}, {"q", q}, {"order", order}, {"principal", terms(principal)}, {"sub", terms(sub)}};
}

ScalarFullSymbol ScalarFullSymbol::from_json(const nlohmann::json& j) {
  ScalarFullSymbol b;
  b.p = j.at("p");
  b.q = j.at("q");
  b.order = j.at("order");
  auto terms = [&](const nlohmann::json& a) {
    std::vector<PolyTerm> ts;
    for (const auto& e : a) {
      PolyTerm t;
      t.gamma = ivec_from_json(e.value("xi", nlohmann::json::array()), b.p);
      t.delta = ivec_from_json(e.value("eta", nlohmann::json::array()), b.q);
      for (const auto& c : e.at("coef")) {
        const auto key = std::make_pair(ivec_from_json(c.value("x", nlohmann::json::array()), b.p),
                                        ivec_from_json(c.value("y", nlohmann::json::array()), b.q));
        t.coef[key] += cplx_from_json(c.at("value"));
      }
      ts.push_back(t);
    }
    return ts;
  };
  if (j.contains("principal")) b.principal = terms(j["principal"]);
  if (j.contains("sub")) b.sub = terms(j["sub"]);
  b.check_holonomy_invariant();
  return b;
}

// ---------------------------------------------------------------- quantization

BlockOperator quantize(const TransverseSymbol& k, const ModeSet& leaf, const ModeSet& trans) {
  if (trans.dim() != k.q() || leaf.dim() != k.p()) throw Error(ErrorKind::CutoffMismatch, "mode set dims");
  const int r = k.rank();
  BlockOperator T(leaf, trans, r);
  const double norm = std::pow(2 * kPi, k.p());
  if (k.max_c_degree() > trans.cutoff())
    throw Error(ErrorKind::CutoffTooSmall, "symbol y-modes exceed the transverse cutoff");
  for (const auto& [key, s] : k.entries()) {
    const int ia = leaf.index(key.a), ib = leaf.index(-key.b);
    if (ia < 0 || ib < 0) throw Error(ErrorKind::CutoffTooSmall, "symbol leaf modes outside the leaf cutoff");
    auto& B = T.block_ref(ia, ib);
    for (int i = 0; i < trans.size(); ++i) {
      const IVec n = trans[i];
      const double rn = norm2(n, k.q());
      if (rn == 0) continue;
      const int o = trans.index(n + key.c);
      if (o < 0) continue;
      const double w[2] = {n[0] / rn, n[1] / rn};
      B.block(o * r, i * r, r, r) += (norm * std::pow(rn, key.s)) * k.direction_value(key, w);
    }
  }
  return T;
}

BlockOperator quantize(const ScalarFullSymbol& b, const ModeSet& leaf, const ModeSet& trans) {
  BlockOperator T(leaf, trans, 1);
  for (int level = 0; level < 2; ++level)
    for (const auto& t : level == 0 ? b.principal : b.sub)
      for (const auto& [m, c] : t.coef) {
        for (int ia = 0; ia < leaf.size(); ++ia) {
          const int oa = leaf.index(leaf[ia] + m.first);
          if (oa < 0) continue;
          const cplx cx = c * mpow(leaf[ia], t.gamma, b.p);
          auto& B = T.block_ref(oa, ia);
          for (int i = 0; i < trans.size(); ++i) {
            const int o = trans.index(trans[i] + m.second);
            if (o < 0) continue;
            B(o, i) += cx * mpow(trans[i], t.delta, b.q);
          }
        }
      }
  return T;
}

QuantizedApply::QuantizedApply(const TransverseSymbol& k, const ModeSet& trans) : k_(k), trans_(trans) {
  const double norm = std::pow(2 * kPi, k.p());
  for (const auto& [key, s] : k.entries()) {
    std::vector<Eigen::MatrixXcd> v(trans.size());
    for (int i = 0; i < trans.size(); ++i) {
      const IVec n = trans[i];
      const double rn = norm2(n, k.q());
      if (rn == 0) {
        v[i] = Eigen::MatrixXcd::Zero(k.rank(), k.rank());
        continue;
      }
      const double w[2] = {n[0] / rn, n[1] / rn};
      v[i] = (norm * std::pow(rn, key.s)) * k.direction_value(key, w);
    }
    cache_[key] = std::move(v);
  }
}

Eigen::VectorXcd QuantizedApply::apply(IVec a_out, IVec b_in, const Eigen::VectorXcd& v) const {
  const int r = k_.rank();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
  for (const auto& [key, vals] : cache_) {
    if (key.a != a_out || key.b != -b_in) continue;
    for (int i = 0; i < trans_.size(); ++i) {
      const int o = trans_.index(trans_[i] + key.c);
      if (o < 0) continue;
      out.segment(o * r, r) += vals[i] * v.segment(i * r, r);
    }
  }
  return out;
}

// ---------------------------------------------------------------- calculus

TransverseSymbol compose(const TransverseSymbol& k, const ScalarFullSymbol& b, Side side, int N) {
  check_same_dims(k, b);
  if (N < 0 || N > kMaxExpansion)
    throw Error(ErrorKind::TruncationDepthExceeded, "expansion order must lie in [0, " + std::to_string(kMaxExpansion) + "]");
  const int p = k.p(), q = k.q();
  const DirectionGrid& g = k.grid();
  TransverseSymbol out(p, q, k.rank(), k.order() + b.order, k.depth() + N, g.n);
  // eta-derivatives of k, memoized per (key, beta)
  std::map<std::pair<SymbolKey, IVec>, TransverseSymbol::Samples> dk;
  auto d_eta = [&](const SymbolKey& key, const TransverseSymbol::Samples& s, IVec beta) {
    auto id = std::make_pair(key, beta);
    auto it = dk.find(id);
    if (it != dk.end()) return it->second;
    TransverseSymbol::Samples cur = s;
    int deg = key.s;
    for (int l = 0; l < q; ++l)
      for (int t = 0; t < beta[l]; ++t) cur = eta_derivative(g, deg--, cur, l);
    dk[id] = cur;
    return cur;
  };
  for (int level = 0; level < 2; ++level)
    for (const auto& t : level == 0 ? b.principal : b.sub) {
      const IVec alpha = t.gamma;
      const int na = msum(alpha, p);
      if (na > N) continue;
      for (const auto& [key, s] : k.entries()) {
        if (side == Side::left) {
          for (const IVec& beta : multi_indices(q, N - na)) {
            if (!leq(beta, t.delta, q)) continue;
            const IVec nd = t.delta - beta;
            const double fac = mfact(t.delta, q) / (mfact(beta, q) * mfact(nd, q)) * mpow(key.a, alpha, p) *
                               mpow(key.c, beta, q);
            if (fac == 0) continue;
            for (const auto& [m, c] : t.coef) {
              const cplx f = fac * c;
              out.add_entry({key.a + m.first, key.b, key.c + m.second, key.s + msum(nd, q)},
                            scaled(s, [&](int j) { return f * omega_pow(g, j, nd); }));
            }
          }
        } else {
          for (const IVec& beta : multi_indices(q, N - na)) {
            const double sign = (na % 2) ? -1.0 : 1.0;
            for (const auto& [m, c] : t.coef) {
              const IVec bn = key.b + m.first;
              const double fac = sign * mpow(bn, alpha, p) * mpow(m.second, beta, q) / mfact(beta, q);
              if (fac == 0) continue;
              const auto d = d_eta(key, s, beta);
              const cplx f = fac * c;
              out.add_entry({key.a, bn, key.c + m.second, key.s - msum(beta, q) + msum(t.delta, q)},
                            scaled(d, [&](int j) { return f * omega_pow(g, j, t.delta); }));
            }
          }
        }
      }
    }
  int depth = 0;
  for (const auto& kv : out.entries()) depth = std::max(depth, out.order() - kv.first.s);
  out.set_depth(depth);
  return out;
}

cplx Subprincipal::eval(const double* x, const double* y, const double* eta) const {
  cplx r = 0;
  for (const auto& t : terms) {
    double mono = 1;
    for (int l = 0; l < q; ++l) mono *= std::pow(eta[l], t.delta[l]);
    for (const auto& [m, c] : t.coef) {
      double ph = 0;
      for (int i = 0; i < p; ++i) ph += m.first[i] * x[i];
      for (int l = 0; l < q; ++l) ph += m.second[l] * y[l];
      r += c * std::polar(mono, ph);
    }
  }
  return r;
}

Subprincipal transverse_subprincipal(const ScalarFullSymbol& b) {
  b.check_holonomy_invariant();
  Subprincipal s{b.p, b.q, b.order - 1, {}};
  for (const auto& t : b.sub)
    if (msum(t.gamma, b.p) == 0) s.terms.push_back(t);
  for (const auto& t : b.principal) {
    const int ng = msum(t.gamma, b.p);
    if (ng == 1) {
      const int j = t.gamma[0] == 1 ? 0 : 1;
      PolyTerm u;
      u.delta = t.delta;
      for (const auto& [m, c] : t.coef)
        if (m.first[j] != 0) u.coef[m] += -0.5 * m.first[j] * c;
      if (!u.coef.empty()) s.terms.push_back(u);
    } else if (ng == 0) {
      for (int l = 0; l < b.q; ++l) {
        if (t.delta[l] == 0) continue;
        PolyTerm u;
        u.delta = t.delta;
        u.delta[l] -= 1;
        for (const auto& [m, c] : t.coef)
          if (m.second[l] != 0) u.coef[m] += -0.5 * m.second[l] * t.delta[l] * c;
        if (!u.coef.empty()) s.terms.push_back(u);
      }
    }
  }
  return s;
}

TransverseSymbol commutator_symbol(const TransverseSymbol& k, const ScalarFullSymbol& b) {
  check_same_dims(k, b);
  const Subprincipal sub = transverse_subprincipal(b);
  const int p = k.p(), q = k.q();
  const DirectionGrid& g = k.grid();
  TransverseSymbol out(p, q, k.rank(), k.order() + b.order - 1, k.depth(), g.n);
  const cplx mi = -kI;  // 1/i
  for (const auto& [key, s] : k.entries()) {
    for (const auto& t : b.principal) {
      const int ng = msum(t.gamma, p);
      const int nd = msum(t.delta, q);
      if (ng == 1) {
        const int j = t.gamma[0] == 1 ? 0 : 1;
        for (const auto& [m, c] : t.coef) {
          // d_xi b (x) d_x k + (1/2) d_x d_xi b (x) k
          const cplx fx = mi * c * (kI * double(key.a[j]) + 0.5 * kI * double(m.first[j]));
          out.add_entry({key.a + m.first, key.b, key.c + m.second, key.s + nd},
                        scaled(s, [&](int jj) { return fx * omega_pow(g, jj, t.delta); }));
          // same on the source leg
          const cplx fxp = mi * c * (kI * double(key.b[j]) + 0.5 * kI * double(m.first[j]));
          out.add_entry({key.a, key.b + m.first, key.c + m.second, key.s + nd},
                        scaled(s, [&](int jj) { return fxp * omega_pow(g, jj, t.delta); }));
        }
      } else if (ng == 0) {
        for (int l = 0; l < q; ++l) {
          for (const auto& [m, c] : t.coef) {
            if (t.delta[l] > 0) {
              // d_eta sigma d_y k
              IVec dl = t.delta;
              dl[l] -= 1;
              const cplx f = mi * c * double(t.delta[l]) * (kI * double(key.c[l]));
              out.add_entry({key.a, key.b, key.c + m.second, key.s + nd - 1},
                            scaled(s, [&](int jj) { return f * omega_pow(g, jj, dl); }));
            }
            // - d_y sigma d_eta k
            if (m.second[l] != 0) {
              const auto d = eta_derivative(g, key.s, s, l);
              const cplx f = -mi * c * (kI * double(m.second[l]));
              out.add_entry({key.a, key.b, key.c + m.second, key.s - 1 + nd},
                            scaled(d, [&](int jj) { return f * omega_pow(g, jj, t.delta); }));
            }
          }
        }
      }
    }
    for (const auto& t : sub.terms) {
      const int nd = msum(t.delta, q);
      for (const auto& [m, c] : t.coef) {
        out.add_entry({key.a + m.first, key.b, key.c + m.second, key.s + nd},
                      scaled(s, [&](int jj) { return c * omega_pow(g, jj, t.delta); }));
        out.add_entry({key.a, key.b + m.first, key.c + m.second, key.s + nd},
                      scaled(s, [&](int jj) { return -c * omega_pow(g, jj, t.delta); }));
      }
    }
  }
  out.prune(0.0);
  return out;
}

// ---------------------------------------------------------------- extraction

IVec probe_frequency(double lambda, const std::array<double, 2>& dir, int q) {
  return {int(std::lround(lambda * dir[0])), q == 2 ? int(std::lround(lambda * dir[1])) : 0};
}

ExtractedSymbol extract_symbol(const ColumnProvider& cols, const ModeSet& trans, int p, int rank,
                               const ProbeSet& probes) {
  const int q = trans.dim();
  ExtractedSymbol out;
  const double norm = std::pow(2 * kPi, p);
  auto raw = [&](IVec a, IVec b, IVec n) {
    if (norm2(n, q) < 1) throw Error(ErrorKind::ProbeOutOfRange, "probe frequency below 1");
    const int in = trans.index(n);
    if (in < 0) throw Error(ErrorKind::ProbeOutOfRange, "probe frequency outside the mode set");
    std::vector<Eigen::MatrixXcd> vals;
    std::vector<Eigen::VectorXcd> colv(rank);
    for (int comp = 0; comp < rank; ++comp) colv[comp] = cols(a, -b, in * rank + comp);
    std::map<IVec, Eigen::MatrixXcd> r;
    const int W = probes.c_window;
    for (int c1 = (q == 2 ? -W : 0); c1 <= (q == 2 ? W : 0); ++c1)
      for (int c0 = -W; c0 <= W; ++c0) {
        const IVec c{c0, c1};
        const int o = trans.index(n + c);
        if (o < 0) throw Error(ErrorKind::ProbeOutOfRange, "probe window leaves the mode set");
        Eigen::MatrixXcd m(rank, rank);
        for (int comp = 0; comp < rank; ++comp) m.col(comp) = colv[comp].segment(o * rank, rank);
        r[c] = m / (norm * std::pow(norm2(n, q), probes.order));
      }
    return r;
  };
  for (const auto& [a, b] : probes.leaf_pairs)
    for (double lambda : probes.lambdas)
      for (std::size_t d = 0; d < probes.directions.size(); ++d) {
        const IVec n = probe_frequency(lambda, probes.directions[d], q);
        auto full = raw(a, b, n);
        if (probes.richardson) {
          const IVec h = probe_frequency(0.5 * lambda, probes.directions[d], q);
          const auto half = raw(a, b, h);
          for (auto& [c, m] : full) m = 2.0 * m - half.at(c);
        }
        for (const auto& [c, m] : full) out.samples.push_back({a, b, c, lambda, int(d), n, m});
      }
  return out;
}

ExtractedSymbol extract_symbol(const BlockOperator& T, const ProbeSet& probes) {
  auto cols = [&T](IVec a, IVec b, int col) -> Eigen::VectorXcd {
    const int ia = T.leaf().index(a), ib = T.leaf().index(b);
    if (ia < 0 || ib < 0) throw Error(ErrorKind::ProbeOutOfRange, "leaf mode outside the operator");
    if (!T.has_block(ia, ib)) return Eigen::VectorXcd::Zero(T.block_dim());
    return T.blocks().at({ia, ib}).col(col);
  };
  return extract_symbol(cols, T.trans(), T.leaf().dim(), T.rank(), probes);
}

nlohmann::json ExtractedSymbol::to_json() const {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& s : samples)
    a.push_back({{"a", ivec_to_json(s.a, 2)},
                 {"b", ivec_to_json(s.b, 2)},
                 {"c", ivec_to_json(s.c, 2)},
                 {"lambda", s.lambda},
                 {"direction", s.direction},
                 {"probe", ivec_to_json(s.probe, 2)},
                 {"value", cmatrix_to_json(s.value)}});
  return a;
}

SymbolError extraction_error(const ExtractedSymbol& e, double lambda, const TransverseSymbol& ref) {
  SymbolError r;
  const int q = ref.q();
  for (const auto& s : e.samples) {
    if (s.lambda != lambda) continue;
    const double rn = norm2(s.probe, q);
    const double w[2] = {s.probe[0] / rn, s.probe[1] / rn};
    const Eigen::MatrixXcd v = ref.coefficient(s.a, s.b, s.c, 0, w);
    r.abs_error = std::max(r.abs_error, (v - s.value).cwiseAbs().maxCoeff());
    r.ref_scale = std::max(r.ref_scale, v.cwiseAbs().maxCoeff());
  }
  return r;
}

}  // namespace foliant

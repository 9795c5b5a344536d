#include <doctest.h>

#include <foliant/symbols.hpp>

using namespace foliant;

namespace {

Eigen::MatrixXcd m1(cplx z) { return Eigen::MatrixXcd::Constant(1, 1, z); }

PolyTerm term(IVec gamma, IVec delta, std::initializer_list<std::tuple<IVec, IVec, cplx>> coefs) {
  PolyTerm t;
  t.gamma = gamma;
  t.delta = delta;
  for (const auto& [x, y, c] : coefs) t.coef[{x, y}] += c;
  return t;
}

/// b = (1 + 0.3 cos y) eta^2 + 0.4 sin(x) xi eta + xi^2 + (0.2 e^{iy} + 0.1) eta + 0.3 cos(x) xi (p = q = 1).
ScalarFullSymbol sample_operator() {
  ScalarFullSymbol b;
  b.p = b.q = 1;
  b.order = 2;
  b.principal.push_back(term({0, 0}, {2, 0}, {{{0, 0}, {0, 0}, 1.0}, {{0, 0}, {1, 0}, 0.15}, {{0, 0}, {-1, 0}, 0.15}}));
  b.principal.push_back(term({1, 0}, {1, 0}, {{{1, 0}, {0, 0}, cplx(0, -0.2)}, {{-1, 0}, {0, 0}, cplx(0, 0.2)}}));
  b.principal.push_back(term({2, 0}, {0, 0}, {{{0, 0}, {0, 0}, 1.0}}));
  b.sub.push_back(term({0, 0}, {1, 0}, {{{0, 0}, {1, 0}, 0.2}, {{0, 0}, {0, 0}, 0.1}}));
  b.sub.push_back(term({1, 0}, {0, 0}, {{{1, 0}, {0, 0}, 0.15}, {{-1, 0}, {0, 0}, 0.15}}));
  return b;
}

/// Order-0 scalar symbol with leaf modes (0,0), (1,0), (0,-1) and direction dependence.
TransverseSymbol sample_symbol_q1() {
  TransverseSymbol k(1, 1, 1, 0, 0);
  k.add_constant({0, 0}, {0, 0}, {0, 0}, 0, m1(0.5));
  k.add_harmonic({0, 0}, {0, 0}, {1, 0}, 0, 1, m1(cplx(0.2, 0.1)));
  k.add_constant({1, 0}, {0, 0}, {-1, 0}, 0, m1(0.3));
  k.add_harmonic({0, 0}, {-1, 0}, {2, 0}, 0, 1, m1(cplx(0, 0.25)));
  return k;
}

double interior_diff(const BlockOperator& A, const BlockOperator& B, double radius) {
  const ModeSet inner = ModeSet::disk(A.trans().dim(), radius);
  return (A - B).max_abs_on(inner, inner);
}

}  // namespace

TEST_CASE("direction interpolation is exact for band-limited harmonics") {
  TransverseSymbol k(1, 2, 1, 0, 0, 16);
  k.add_harmonic({0, 0}, {0, 0}, {0, 0}, 0, 3, m1(0.7));
  k.add_harmonic({0, 0}, {0, 0}, {0, 0}, 0, -2, m1(cplx(0, 0.4)));
  const double th = 0.377;
  const double w[2] = {std::cos(th), std::sin(th)};
  const cplx expect = 0.7 * std::polar(1.0, 3 * th) + cplx(0, 0.4) * std::polar(1.0, -2 * th);
  CHECK(std::abs(k.coefficient({0, 0}, {0, 0}, {0, 0}, 0, w)(0, 0) - expect) < 1e-14);
}

TEST_CASE("symbol values are homogeneous in eta") {
  TransverseSymbol k(1, 2, 1, 1, 1, 32);
  k.add_harmonic({0, 0}, {0, 0}, {1, 0}, 0, 1, m1(0.5));
  k.add_harmonic({1, 0}, {0, 0}, {0, 1}, 0, -1, m1(cplx(0.1, 0.2)));
  const double x[1] = {0.3}, xp[1] = {-0.2}, y[2] = {1.0, 2.0};
  const double eta[2] = {0.6, -1.1}, eta3[2] = {1.8, -3.3};
  CHECK((k.eval(x, xp, y, eta3) - 3.0 * k.eval(x, xp, y, eta)).norm() < 1e-13);
}

TEST_CASE("quantized differential operator is exact") {
  ScalarFullSymbol b;
  b.p = b.q = 1;
  b.order = 2;
  b.principal.push_back(term({0, 0}, {2, 0}, {{{0, 0}, {0, 0}, 1.0}}));
  const ModeSet leaf = ModeSet::box(1, 1), trans = ModeSet::disk(1, 5);
  const BlockOperator B = quantize(b, leaf, trans);
  for (int i = 0; i < trans.size(); ++i)
    CHECK(B.block(1, 1)(i, i) == cplx(double(trans[i][0] * trans[i][0]), 0));
}

TEST_CASE("extracting a quantized symbol returns it") {
  const TransverseSymbol k = sample_symbol_q1();
  const BlockOperator K = quantize(k, ModeSet::box(1, 2), ModeSet::disk(1, 40));
  ProbeSet ps;
  ps.lambdas = {10, 20};
  ps.directions = {{1, 0}, {-1, 0}};
  ps.c_window = 2;
  ps.leaf_pairs = k.leaf_pairs();
  const ExtractedSymbol e = extract_symbol(K, ps);
  CHECK(extraction_error(e, 20, k).abs_error < 1e-14);
}

TEST_CASE("probe outside the mode set is rejected") {
  const TransverseSymbol k = sample_symbol_q1();
  const BlockOperator K = quantize(k, ModeSet::box(1, 2), ModeSet::disk(1, 16));
  ProbeSet ps;
  ps.lambdas = {16};
  ps.directions = {{1, 0}};
  ps.leaf_pairs = k.leaf_pairs();
  try {
    extract_symbol(K, ps);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ProbeOutOfRange);
  }
}

TEST_CASE("left composition is exact for polynomial operators") {
  const ScalarFullSymbol b = sample_operator();
  const TransverseSymbol k = sample_symbol_q1();
  const ModeSet leaf = ModeSet::box(1, 4), trans = ModeSet::disk(1, 40);
  const BlockOperator BK = quantize(b, leaf, trans) * quantize(k, leaf, trans);
  const BlockOperator Q = quantize(compose(k, b, Side::left, 2), leaf, trans);
  // rows near the mode-set edge see truncation of the intermediate sum
  const ModeSet inner_leaf = ModeSet::box(1, 2);
  const BlockOperator d = (BK - Q).restrict_to(inner_leaf, ModeSet::disk(1, 34));
  CHECK(d.max_abs() < 1e-9);
}

TEST_CASE("right composition is exact when k is polynomial in eta") {
  const ScalarFullSymbol b = sample_operator();
  TransverseSymbol k(1, 1, 1, 1, 0);
  k.add_harmonic({0, 0}, {0, 0}, {1, 0}, 0, 1, m1(0.7));   // 0.7 e^{iy} eta
  k.add_harmonic({1, 0}, {-1, 0}, {0, 0}, 0, 1, m1(0.4));  // 0.4 e^{i(x - x')} eta
  const ModeSet leaf = ModeSet::box(1, 4), trans = ModeSet::disk(1, 40);
  const BlockOperator KB = quantize(k, leaf, trans) * quantize(b, leaf, trans);
  const BlockOperator Q = quantize(compose(k, b, Side::right, 2), leaf, trans);
  const BlockOperator d = (KB - Q).restrict_to(ModeSet::box(1, 2), ModeSet::disk(1, 34));
  CHECK(d.max_abs() < 1e-9);
}

TEST_CASE("right composition is exact in q = 2 for a linear symbol") {
  ScalarFullSymbol b;
  b.p = 1;
  b.q = 2;
  b.order = 2;
  b.principal.push_back(term({0, 0}, {2, 0}, {{{0, 0}, {0, 0}, 1.0}, {{0, 0}, {0, 1}, 0.2}}));
  b.principal.push_back(term({0, 0}, {0, 2}, {{{0, 0}, {0, 0}, 1.0}}));
  b.principal.push_back(term({1, 0}, {0, 1}, {{{1, 0}, {1, 0}, 0.3}}));
  b.sub.push_back(term({0, 0}, {1, 0}, {{{0, 0}, {1, -1}, cplx(0, 0.5)}}));
  TransverseSymbol k(1, 2, 1, 1, 0, 16);
  k.add_harmonic({0, 0}, {0, 0}, {1, 1}, 0, 1, m1(0.5));
  k.add_harmonic({0, 0}, {0, 0}, {1, 1}, 0, -1, m1(0.5));  // e^{i(y1+y2)} eta_1
  const ModeSet leaf = ModeSet::box(1, 3), trans = ModeSet::disk(2, 14);
  const BlockOperator KB = quantize(k, leaf, trans) * quantize(b, leaf, trans);
  const BlockOperator Q = quantize(compose(k, b, Side::right, 2), leaf, trans);
  const BlockOperator d = (KB - Q).restrict_to(ModeSet::box(1, 1), ModeSet::disk(2, 10));
  CHECK(d.max_abs() < 1e-9);
}

TEST_CASE("commutator symbol equals the difference of the two compositions") {
  const ScalarFullSymbol b = sample_operator();
  const TransverseSymbol k = sample_symbol_q1();
  const TransverseSymbol diff = compose(k, b, Side::left, 1) - compose(k, b, Side::right, 1);
  const TransverseSymbol cs = commutator_symbol(k, b);
  CHECK(cs.order() == k.order() + b.order - 1);
  // level 0 of the difference cancels; level 1 is the commutator symbol
  double lead = 0, worst = 0;
  for (const auto& [key, s] : diff.entries()) {
    const int level = diff.order() - key.s;
    if (level == 0)
      for (const auto& m : s) lead = std::max(lead, m.cwiseAbs().maxCoeff());
  }
  CHECK(lead < 1e-14);
  for (double sgn : {1.0, -1.0})
    for (const auto& [a, bb] : diff.leaf_pairs())
      for (int c = -4; c <= 4; ++c) {
        const double w[2] = {sgn, 0};
        const auto x = diff.coefficient(a, bb, {c, 0}, 1, w);
        const auto y = cs.coefficient(a, bb, {c, 0}, 0, w);
        worst = std::max(worst, (x - y).cwiseAbs().maxCoeff());
      }
  CHECK(worst < 1e-14);
}

TEST_CASE("commutator with eta_1 differentiates in y_1") {
  ScalarFullSymbol b;
  b.p = 1;
  b.q = 2;
  b.order = 1;
  b.principal.push_back(term({0, 0}, {1, 0}, {{{0, 0}, {0, 0}, 1.0}}));
  TransverseSymbol k(1, 2, 1, 0, 0, 16);
  k.add_harmonic({0, 0}, {0, 0}, {2, -1}, 0, 1, m1(0.5));
  const TransverseSymbol cs = commutator_symbol(k, b);
  const double w[2] = {0.6, 0.8};
  const cplx expect = 2.0 * 0.5 * std::polar(1.0, std::atan2(0.8, 0.6));  // (1/i) d_{y1} -> c_1
  CHECK(std::abs(cs.coefficient({0, 0}, {0, 0}, {2, -1}, 0, w)(0, 0) - expect) < 1e-13);
}

TEST_CASE("subprincipal symbol of a twisted Laplacian") {
  // b = -(d_y + i beta(y))^2 in symbol form: eta^2 + 2 beta eta + (beta^2 + beta')... (level 1 term 2 beta eta)
  ScalarFullSymbol b;
  b.p = b.q = 1;
  b.order = 2;
  b.principal.push_back(term({0, 0}, {2, 0}, {{{0, 0}, {0, 0}, 1.0}, {{0, 0}, {1, 0}, 0.25}, {{0, 0}, {-1, 0}, 0.25}}));
  b.sub.push_back(term({0, 0}, {1, 0}, {{{0, 0}, {0, 0}, 0.6}}));
  const Subprincipal s = transverse_subprincipal(b);
  const double x[1] = {0}, y[1] = {0.7}, eta[1] = {2.0};
  // b_1 - (1/2i) d_y d_eta (a(y) eta^2) with a = 1 + 0.5 cos y: 0.6 eta - (1/2i)(2 eta)(-0.5 sin y)
  const cplx expect = 0.6 * 2.0 - (1.0 / (2.0 * kI)) * 2.0 * 2.0 * (-0.5 * std::sin(0.7));
  CHECK(std::abs(s.eval(x, y, eta) - expect) < 1e-14);
}

TEST_CASE("x-dependent principal symbol on the conormal is rejected") {
  ScalarFullSymbol b;
  b.p = b.q = 1;
  b.order = 1;
  b.principal.push_back(term({0, 0}, {1, 0}, {{{1, 0}, {0, 0}, 1.0}}));
  try {
    transverse_subprincipal(b);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotHolonomyInvariant);
  }
}

TEST_CASE("adjoint of a y-independent quantization is exact") {
  TransverseSymbol k(1, 1, 2, 0, 0);
  Eigen::MatrixXcd m(2, 2);
  m << 1.0, cplx(0, 0.3), 0.2, -0.5;
  k.add_harmonic({1, 0}, {0, 0}, {0, 0}, 0, 1, m);
  const ModeSet leaf = ModeSet::box(1, 2), trans = ModeSet::disk(1, 20);
  const BlockOperator d = quantize(k, leaf, trans).adjoint() - quantize(k.adjoint(), leaf, trans);
  CHECK(d.max_abs() < 1e-14);
}

TEST_CASE("symbol json round trip") {
  const TransverseSymbol k = sample_symbol_q1();
  const TransverseSymbol r = TransverseSymbol::from_json(k.to_json());
  CHECK((r - k).max_abs() == 0.0);
  const ScalarFullSymbol b = sample_operator();
  CHECK(ScalarFullSymbol::from_json(b.to_json()).to_json() == b.to_json());
}

#include <doctest.h>

#include <foliant/fourier.hpp>
#include <foliant/jet.hpp>

using namespace foliant;

TEST_CASE("inverse cholesky derivative matches finite differences") {
  TrigMatrix m(2, 2);
  m(0, 0) = TrigPoly(2.0) + TrigPoly::cos_mode({1, 0}, 0.3);
  m(0, 1) = TrigPoly::sin_mode({1, 1}, 0.4);
  m(1, 0) = m(0, 1);
  m(1, 1) = TrigPoly(1.5) + TrigPoly::sin_mode({0, 1}, 0.2);
  const double y[2] = {0.7, -1.1};
  const JetMat L = inverse_cholesky(m.eval(y, 2));
  CHECK((L.v * m.eval(y, 2).v * L.v.transpose() - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-13);
  const double h = 1e-6;
  for (int k = 0; k < 2; ++k) {
    double yp[2] = {y[0], y[1]}, ym[2] = {y[0], y[1]};
    yp[k] += h;
    ym[k] -= h;
    const Eigen::MatrixXd fd = (inverse_cholesky(m.eval(yp, 2)).v - inverse_cholesky(m.eval(ym, 2)).v) / (2 * h);
    CHECK((fd - L.d[k]).norm() < 1e-8);
  }
}

TEST_CASE("log_det derivative") {
  TrigMatrix m(1, 1);
  m(0, 0) = TrigPoly(2.0) + TrigPoly::cos_mode({1, 0}, 0.5);
  const double y[1] = {0.3};
  const Jet j = log_det(m.eval(y, 1));
  CHECK(j.v == doctest::Approx(std::log(2 + 0.5 * std::cos(0.3))));
  CHECK(j.d[0] == doctest::Approx(-0.5 * std::sin(0.3) / (2 + 0.5 * std::cos(0.3))));
}

TEST_CASE("fourier field reproduces a trig polynomial exactly") {
  auto f = [](const double* y) {
    Eigen::MatrixXcd m(1, 1);
    m(0, 0) = 1.0 + 0.5 * std::cos(y[0] - 2 * y[1]) + cplx(0, 0.25) * std::sin(3 * y[1]);
    return m;
  };
  const FourierField F = FourierField::sample(2, 1, 1, 16, f, 1e-14);
  CHECK(F.modes().size() == 5);
  CHECK(std::abs(F.coefficient({1, -2})(0, 0) - 0.25) < 1e-14);
  CHECK(std::abs(F.coefficient({0, 3})(0, 0) - cplx(0.125, 0)) < 1e-14);
  const double y[2] = {0.4, 2.2};
  CHECK(std::abs(F.eval(y)(0, 0) - f(y)(0, 0)) < 1e-13);
  const FourierField D = F.derivative(1);
  const double expect = 0.5 * 2 * std::sin(y[0] - 2 * y[1]);
  CHECK(std::abs(D.eval(y)(0, 0) - (expect + cplx(0, 0.75) * std::cos(3 * y[1]))) < 1e-12);
  CHECK(F.band() == 3);
}

#include <doctest.h>

#include <random>

#include "models.hpp"

using namespace foliant;

namespace {

std::vector<std::array<double, 2>> random_points(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0, 2 * kPi);
  std::vector<std::array<double, 2>> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng)};
  return pts;
}

}  // namespace

TEST_CASE("frames are orthonormal") {
  for (const auto& g : {models::generic(), models::kaluza_klein(), models::warped(0.4)}) {
    CHECK(build_frames(g).orthonormality_defect() < 1e-12);
  }
}

TEST_CASE("Koszul frame coefficients agree with coordinate Christoffel symbols") {
  for (const auto& g : {models::generic(), models::conformal_warped()}) {
    const ConnectionData c = transverse_connection(g, build_frames(g));
    double worst = 0;
    for (const auto& y : random_points(8, 11)) {
      const ConnectionPoint cp = c.at(y.data());
      const auto ch = models::christoffel(g, y.data());
      for (int a = 0; a < cp.n(); ++a)
        for (int b = 0; b < cp.n(); ++b) {
          const Eigen::VectorXd nab = models::nabla_frame(g, cp.frame, ch, a, b);
          for (int e = 0; e < cp.n(); ++e)
            worst = std::max(worst, std::abs(nab.dot(cp.frame.G * cp.frame.vec(e)) - cp.w(a, b, e)));
        }
    }
    CHECK(worst < 1e-10);
    CHECK(c.torsion_defect() < 1e-10);
  }
}

TEST_CASE("flat model has vanishing connection data") {
  const auto g = models::flat(2, 2);
  const ConnectionData c = transverse_connection(g, build_frames(g));
  const double y[2] = {1.0, 2.0};
  const ConnectionPoint cp = c.at(y);
  for (double w : cp.omega) CHECK(std::abs(w) < 1e-15);
  CHECK(cp.tau().norm() < 1e-15);
  CHECK(cp.curvature(0, 1).norm() < 1e-15);
}

TEST_CASE("warped fiber: mean curvature from the frame formula") {
  const double cc = 0.4;
  const auto g = models::warped(cc);
  const ConnectionData c = transverse_connection(g, build_frames(g));
  for (double y : {0.3, 1.7, 4.0}) {
    const double yy[1] = {y};
    const ConnectionPoint cp = c.at(yy);
    // Koszul gives tau = c sin(y) f for g_F = exp(2c cos y).
    CHECK(cp.tau()(0) == doctest::Approx(cc * std::sin(y)).epsilon(1e-12));
    // Defining identity: L_f omega_F = -g(tau, f) omega_F.
    const Jet ld = 0.5 * log_det(g.fiber_metric(yy));
    CHECK(cp.tau()(0) == doctest::Approx(-ld.d[0]).epsilon(1e-12));
  }
}

TEST_CASE("tau matches the fiber volume identity on the generic model") {
  const auto g = models::generic();
  const ConnectionData c = transverse_connection(g, build_frames(g));
  for (const auto& y : random_points(5, 3)) {
    const ConnectionPoint cp = c.at(y.data());
    const Jet ld = 0.5 * log_det(g.fiber_metric(y.data()));
    for (int al = 0; al < 2; ++al) {
      double fl = 0;
      for (int k = 0; k < 2; ++k) fl += cp.frame.LB.v(al, k) * ld.d[k];
      CHECK(std::abs(cp.tau()(al) + fl) < 1e-12);
    }
  }
}

TEST_CASE("Kaluza-Klein: tau vanishes and R is the curvature of A") {
  const auto g = models::kaluza_klein();
  const ConnectionData c = transverse_connection(g, build_frames(g));
  for (const auto& y : random_points(5, 5)) {
    const ConnectionPoint cp = c.at(y.data());
    CHECK(cp.tau().norm() < 1e-14);
    const JetMat A = g.connection_matrix(y.data());
    const double dA = A.d[0](0, 1) - A.d[1](0, 0);
    CHECK(cp.curvature(0, 1)(0) == doctest::Approx(dA).epsilon(1e-12));
    CHECK(cp.curvature(1, 0)(0) == doctest::Approx(-dA).epsilon(1e-12));
  }
}

TEST_CASE("divergence agrees with the coordinate density formula") {
  const auto g = models::generic();
  const ConnectionData c = transverse_connection(g, build_frames(g));
  auto X = [](const double* y) {
    return std::vector<Jet>{Jet(std::sin(y[0]) + 0.5, std::cos(y[0]), 0.0),
                            Jet(std::cos(y[0] - y[1]), -std::sin(y[0] - y[1]), std::sin(y[0] - y[1]))};
  };
  const double h = 1e-5;
  for (const auto& y : random_points(5, 9)) {
    // (1/rho) d_k(rho X^k) with X^k = sum_alpha X^alpha L_alpha k
    auto flux = [&](const double* yy, int k) {
      const FramePoint f = c.frames().at(yy);
      const auto comp = X(yy);
      double s = 0;
      for (int al = 0; al < 2; ++al) s += comp[al].v * f.LB.v(al, k);
      return std::exp(f.log_rho.v) * s;
    };
    double ref = 0;
    for (int k = 0; k < 2; ++k) {
      double yp[2] = {y[0], y[1]}, ym[2] = {y[0], y[1]};
      yp[k] += h;
      ym[k] -= h;
      ref += (flux(yp, k) - flux(ym, k)) / (2 * h);
    }
    ref /= std::exp(c.frames().at(y.data()).log_rho.v);
    CHECK(divergence(c, X, y.data()) == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("div(f_alpha) = -g(tau + sum_beta nabla_{f_beta} f_beta, f_alpha)") {
  const auto g = models::conformal_warped();
  const ConnectionData c = transverse_connection(g, build_frames(g));
  for (const auto& y : random_points(4, 21)) {
    const ConnectionPoint cp = c.at(y.data());
    for (int al = 0; al < 2; ++al) {
      auto X = [al](const double*) {
        std::vector<Jet> v(2, Jet(0.0));
        v[al] = Jet(1.0);
        return v;
      };
      double rhs = -cp.tau()(al);
      for (int b = 0; b < 2; ++b) rhs -= cp.Gamma(al, b, b);
      CHECK(divergence(c, X, y.data()) == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("dual norm equals the frame evaluation of the covector") {
  const auto g = models::generic();
  const FrameData f = build_frames(g);
  for (const auto& y : random_points(5, 2)) {
    Eigen::VectorXd xi(2), eta(2);
    xi << 0.7, -1.3;
    eta << 2.1, 0.4;
    const FramePoint fp = f.at(y.data());
    Eigen::VectorXd nu(4);
    nu << xi, eta;
    double s = 0;
    for (int al = 0; al < 2; ++al) s += std::pow(nu.dot(fp.vec(2 + al)), 2);
    const DualNorm dn = dual_norm_at(g, y.data(), xi, eta);
    CHECK(dn.norm == doctest::Approx(std::sqrt(s)).epsilon(1e-12));
    CHECK(dn.horizontal.head(2).norm() == 0.0);
  }
}

TEST_CASE("dual norm on N*F is the base co-metric norm") {
  const auto g = models::kaluza_klein();
  const double y[2] = {0.5, 0.5};
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(1), eta(2);
  eta << 3.0, 4.0;
  CHECK(dual_norm_at(g, y, xi, eta).norm == doctest::Approx(5.0));
}

TEST_CASE("invalid geometries are rejected") {
  auto g = models::warped(0.1);
  g.g_F.base(0, 0) = TrigPoly::cos_mode({1, 0}, 1.0);
  CHECK_THROWS_AS(g.validate(), Error);
  try {
    g.validate();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveMetric);
  }
  auto h = models::flat(1, 1);
  h.q = 3;
  try {
    h.validate();
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedDimension);
  }
}

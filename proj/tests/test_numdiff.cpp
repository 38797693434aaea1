#include <doctest.h>

#include <cmath>
#include <random>

#include "nioc/numdiff.hpp"

using namespace nioc;

TEST_CASE("jacobian of a linear map recovers the matrix") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ud(-10.0, 10.0);
  MatrixXd a(3, 4);
  for (int i = 0; i < a.size(); ++i) a(i / 4, i % 4) = ud(rng);
  const VectorFn fn = [&](const VectorXd& x) { return VectorXd(a * x); };
  VectorXd x(4);
  x << 0.3, -1.2, 0.0, 2.5;
  CHECK((jacobian(fn, x) - a).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("jacobian of sin is cos to fourth order") {
  const VectorFn fn = [](const VectorXd& x) {
    VectorXd y(1);
    y[0] = std::sin(x[0]);
    return y;
  };
  for (double p : {0.0, 0.5, 1.3, -2.0}) {
    VectorXd x(1);
    x[0] = p;
    CHECK(jacobian(fn, x)(0, 0) == doctest::Approx(std::cos(p)).epsilon(1e-9));
  }
}

TEST_CASE("jacobian groups split columns by argument") {
  const VectorFn fn = [](const VectorXd& z) {
    VectorXd y(2);
    y[0] = 2.0 * z[0] + z[2] * z[2];
    y[1] = z[1] * z[3];
    return y;
  };
  VectorXd z(4);
  z << 1.0, 2.0, 3.0, 4.0;
  const auto set = jacobian_groups(fn, z, {2, 2});
  CHECK(set.blocks.size() == 2);
  CHECK(set.blocks[0](0, 0) == doctest::Approx(2.0));
  CHECK(set.blocks[0](1, 1) == doctest::Approx(4.0));   // d y1 / d z1 = z3
  CHECK(set.blocks[1](0, 0) == doctest::Approx(6.0));   // d y0 / d z2 = 2 z2
  CHECK(set.blocks[1](1, 1) == doctest::Approx(2.0));   // d y1 / d z3 = z1
  CHECK_THROWS_AS(jacobian_groups(fn, z, {1, 2}), InvalidArgument);
}

TEST_CASE("non-finite probes are reported") {
  const VectorFn fn = [](const VectorXd& x) {
    VectorXd y(1);
    y[0] = std::sqrt(x[0]);  // NaN left of zero
    return y;
  };
  VectorXd x(1);
  x[0] = 0.0;
  CHECK_THROWS_AS(jacobian(fn, x), NonFiniteValue);
}

TEST_CASE("quadratization of a quadratic is exact") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> ud(-2.0, 2.0);
  MatrixXd m(3, 3);
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = ud(rng);
  const MatrixXd q = m * m.transpose() + 0.5 * MatrixXd::Identity(3, 3);
  const ScalarFn fn = [&](const VectorXd& x) { return x.dot(q * x); };
  VectorXd x(3);
  x << 0.7, -0.2, 1.1;
  const auto quad = hessian_quadratize(fn, x);
  CHECK(quad.value == doctest::Approx(x.dot(q * x)));
  CHECK((quad.gradient - 2.0 * q * x).lpNorm<Eigen::Infinity>() < 1e-7);
  CHECK((quad.hessian - 2.0 * q).lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("quadratization of a quartic matches analytic derivatives") {
  const ScalarFn fn = [](const VectorXd& x) { return std::pow(x[0], 4); };
  VectorXd x(1);
  x[0] = 1.0;
  const auto quad = hessian_quadratize(fn, x);
  CHECK(quad.value == doctest::Approx(1.0));
  CHECK(quad.gradient[0] == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(quad.hessian(0, 0) == doctest::Approx(12.0).epsilon(1e-4));
}

TEST_CASE("indefinite curvature is clamped to the psd floor") {
  const ScalarFn fn = [](const VectorXd& x) { return std::cos(x[0]); };
  VectorXd x(1);
  x[0] = 0.0;  // second derivative -1
  const auto quad = hessian_quadratize(fn, x);
  CHECK(quad.hessian(0, 0) == doctest::Approx(1e-8));
  CHECK(std::abs(quad.gradient[0]) < 1e-9);
}

TEST_CASE("saddle quadratization keeps the gradient and floors the hessian spectrum") {
  const ScalarFn fn = [](const VectorXd& x) { return x[0] * x[0] - x[1] * x[1] + 0.3 * x[0]; };
  VectorXd x = VectorXd::Zero(2);
  const auto quad = hessian_quadratize(fn, x);
  CHECK(quad.gradient[0] == doctest::Approx(0.3).epsilon(1e-8));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(quad.hessian);
  CHECK(es.eigenvalues().minCoeff() >= 1e-8 - 1e-12);
  CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(2.0).epsilon(1e-4));
}

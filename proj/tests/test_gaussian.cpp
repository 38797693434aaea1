#include <doctest.h>

#include <cmath>
#include <random>

#include "nioc/gaussian.hpp"
#include "oracles.hpp"

using namespace nioc;

namespace {

MatrixXd random_spd(int d, std::mt19937_64& rng, double noise_floor = 0.1) {
  std::normal_distribution<double> nd;
  MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = nd(rng);
  return a * a.transpose() + noise_floor * MatrixXd::Identity(d, d);
}

VectorXd random_vec(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = nd(rng);
  return v;
}

}  // namespace

TEST_CASE("logpdf matches explicit precision form on random gaussians") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 1 + static_cast<int>(rng() % 5);
    const MatrixXd cov = random_spd(d, rng);
    const VectorXd mean = random_vec(d, rng);
    const VectorXd x = mean + random_vec(d, rng);
    const Gaussian g(mean, cov);
    CHECK(gaussian_logpdf(g, x) == doctest::Approx(oracle::logpdf(x, mean, cov)).epsilon(1e-9));
  }
}

TEST_CASE("logpdf agrees with numerically integrated cell mass") {
  // A 3-point Gauss-Legendre product rule integrates the density over a
  // small cell essentially exactly; the cell average still differs from
  // the center value by (h^2/24) * sum of second derivatives, so h is
  // chosen to push that term below the comparison tolerance.
  std::mt19937_64 rng(12);
  const int d = 3;
  const MatrixXd cov = random_spd(d, rng);
  const VectorXd mean = random_vec(d, rng);
  const VectorXd x = mean + 0.5 * random_vec(d, rng);
  const Gaussian g(mean, cov);

  const double h = 1e-4;
  const double nodes[3] = {-std::sqrt(0.6) * h / 2, 0.0, std::sqrt(0.6) * h / 2};
  const double weights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  double mass = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        VectorXd p = x;
        p[0] += nodes[i];
        p[1] += nodes[j];
        p[2] += nodes[k];
        mass += weights[i] * weights[j] * weights[k] * std::exp(oracle::logpdf(p, mean, cov));
      }
  CHECK(gaussian_logpdf(g, x) == doctest::Approx(std::log(mass)).epsilon(1e-8));
}

TEST_CASE("marginals select the right blocks and conditioning matches precision form") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const int nx = 1 + static_cast<int>(rng() % 3);
    const int nb = 1 + static_cast<int>(rng() % 3);
    const MatrixXd cov = random_spd(nx + nb, rng);
    const VectorXd mean = random_vec(nx + nb, rng);
    GaussianJoint joint;
    joint.mean_x = mean.head(nx);
    joint.mean_b = mean.tail(nb);
    joint.cov_xx = cov.topLeftCorner(nx, nx);
    joint.cov_xb = cov.topRightCorner(nx, nb);
    joint.cov_bb = cov.bottomRightCorner(nb, nb);

    const Gaussian mx = joint.marginal_x();
    CHECK((mx.mean - mean.head(nx)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((mx.cov - cov.topLeftCorner(nx, nx)).lpNorm<Eigen::Infinity>() < 1e-14);

    const VectorXd x_obs = mean.head(nx) + random_vec(nx, rng);
    const Gaussian post = gaussian_condition(joint, x_obs);
    const auto ref = oracle::condition_precision(mean, cov, nx, x_obs);
    CHECK((post.mean - ref.mean).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK((post.cov - ref.cov).lpNorm<Eigen::Infinity>() < 1e-8);
    // Conditioning never inflates uncertainty.
    CHECK(post.cov.trace() <= joint.cov_bb.trace() + 1e-12);
  }
}

TEST_CASE("conditioning on an independent block returns the marginal") {
  GaussianJoint joint;
  joint.mean_x = VectorXd::Constant(2, 1.0);
  joint.mean_b = VectorXd::Constant(2, -2.0);
  joint.cov_xx = 2.0 * MatrixXd::Identity(2, 2);
  joint.cov_xb = MatrixXd::Zero(2, 2);
  joint.cov_bb = 3.0 * MatrixXd::Identity(2, 2);
  const VectorXd x_obs = VectorXd::Constant(2, 5.0);
  const Gaussian post = gaussian_condition(joint, x_obs);
  CHECK((post.mean - joint.mean_b).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((post.cov - joint.cov_bb).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("construction symmetrizes and rejects indefinite covariances") {
  MatrixXd cov(2, 2);
  cov << 1.0, 0.3 + 1e-12, 0.3, 1.0;
  const Gaussian g(VectorXd::Zero(2), cov);
  CHECK(g.cov(0, 1) == g.cov(1, 0));

  MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  CHECK_THROWS_AS(Gaussian(VectorXd::Zero(2), bad), InvalidArgument);
}

TEST_CASE("degenerate directions are handled by the jitter floor") {
  // Rank-one covariance: the density along the null direction is a spike;
  // the factorization must still succeed and give a finite value.
  MatrixXd cov(2, 2);
  cov << 1.0, 1.0, 1.0, 1.0;
  const Gaussian g(VectorXd::Zero(2), cov);
  const double lp = gaussian_logpdf(g, VectorXd::Zero(2));
  CHECK(std::isfinite(lp));
  CHECK(lp > 0.0);  // spike exceeds any O(1)-width density

  MatrixXd nan_cov = MatrixXd::Constant(2, 2, std::nan(""));
  CHECK_THROWS_AS(cholesky_with_jitter(nan_cov), NonFiniteValue);
}

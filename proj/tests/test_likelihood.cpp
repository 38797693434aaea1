#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "nioc/likelihood.hpp"
#include "nioc/simulate.hpp"
#include "nioc/tasks.hpp"
#include "oracles.hpp"

using namespace nioc;

namespace {

// Linear-Gaussian test problem. Leaving H empty makes the model fully
// observable; qlin adds a linear state-cost term so the optimal policy
// has a nonzero affine part.
struct LinearSpec {
  MatrixXd A, B, Gamma, H, D;
  MatrixXd Q, R, Qf;
  VectorXd qlin;
  VectorXd x1, b1_mean;
  MatrixXd b1_cov;
  int T = 10;
};

PomdpModel build_linear(const LinearSpec& s) {
  PomdpModel mdl;
  mdl.task_id = "linear";
  mdl.n = static_cast<int>(s.A.rows());
  mdl.u_dim = static_cast<int>(s.B.cols());
  mdl.v_dim = static_cast<int>(s.Gamma.cols());
  mdl.T = s.T;
  mdl.x1 = s.x1;
  mdl.b1 = Gaussian(s.b1_mean, s.b1_cov);
  mdl.default_temperature = 1e-3;
  const MatrixXd A = s.A, B = s.B, Gamma = s.Gamma, Q = s.Q, R = s.R, Qf = s.Qf;
  const VectorXd qlin = s.qlin.size() ? s.qlin : VectorXd::Zero(mdl.n);
  mdl.f = [A, B, Gamma](const VectorXd& x, const VectorXd& u, const VectorXd& v) -> VectorXd {
    return A * x + B * u + Gamma * v;
  };
  mdl.step_cost = [Q, R, qlin](const VectorXd& x, const VectorXd& u, int) {
    return 0.5 * x.dot(Q * x) + qlin.dot(x) + 0.5 * u.dot(R * u);
  };
  mdl.final_cost = [Qf](const VectorXd& x) { return 0.5 * x.dot(Qf * x); };
  if (s.H.size() > 0) {
    mdl.variant = Variant::Partial;
    mdl.m = static_cast<int>(s.H.rows());
    mdl.w_dim = static_cast<int>(s.D.cols());
    const MatrixXd H = s.H, D = s.D;
    mdl.h = [H, D](const VectorXd& x, const VectorXd& w) -> VectorXd { return H * x + D * w; };
  }
  return mdl;
}

MatrixXd rollout(const PomdpModel& mdl, const MatrixXd& us, oracle::NormalSource* noise) {
  MatrixXd xs(us.rows() + 1, mdl.n);
  VectorXd x = mdl.x1;
  xs.row(0) = x.transpose();
  for (int t = 0; t < us.rows(); ++t) {
    const VectorXd v = noise ? noise->vec(mdl.v_dim) : VectorXd::Zero(mdl.v_dim);
    x = mdl.f(x, us.row(t).transpose(), v);
    xs.row(t + 1) = x.transpose();
  }
  return xs;
}

MatrixXd rand_mat(int r, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = uni(rng);
  return m;
}

MatrixXd rand_spd(int d, std::mt19937_64& rng) {
  const MatrixXd m = rand_mat(d, d, rng);
  return m * m.transpose() + 0.1 * MatrixXd::Identity(d, d);
}

MatrixXd stable_dynamics(int n, std::mt19937_64& rng) {
  MatrixXd a = rand_mat(n, n, rng);
  const double radius = a.eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 1e-12) a *= 0.9 / std::max(1.0, radius);
  return a;
}

double max_abs(const MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("control estimation inverts square dynamics exactly") {
  std::mt19937_64 rng(11);
  LinearSpec s;
  s.A = stable_dynamics(2, rng);
  s.B = (MatrixXd(2, 2) << 1.0, 0.3, -0.2, 0.8).finished();
  s.Gamma = 0.2 * MatrixXd::Identity(2, 2);
  s.Q = MatrixXd::Identity(2, 2);
  s.R = MatrixXd::Identity(2, 2);
  s.Qf = 2.0 * MatrixXd::Identity(2, 2);
  s.x1 = Eigen::Vector2d(0.7, -0.4);
  s.b1_mean = s.x1;
  s.b1_cov = 0.01 * MatrixXd::Identity(2, 2);
  s.T = 9;
  const PomdpModel mdl = build_linear(s);

  oracle::NormalSource noise(5);
  const MatrixXd us = rand_mat(s.T - 1, 2, rng);
  const MatrixXd xs = rollout(mdl, us, &noise);  // noisy: B is square, so any step is reachable

  const ControlEstimate est = estimate_controls(mdl, xs);
  CHECK(est.not_converged.empty());
  const MatrixXd binv = s.B.inverse();
  for (int t = 0; t + 1 < s.T; ++t) {
    const VectorXd expect = binv * (xs.row(t + 1).transpose() - s.A * xs.row(t).transpose());
    CHECK(max_abs(est.us.row(t).transpose() - expect) < 1e-9);
  }
}

TEST_CASE("control estimation recovers noise-free pendulum torques") {
  const PomdpModel mdl = instantiate("pendulum", default_params("pendulum", Variant::Full), Variant::Full);
  MatrixXd us(mdl.T - 1, 1);
  for (int t = 0; t < us.rows(); ++t) us(t, 0) = 2.0 * std::sin(0.3 * t) - 0.5;
  const Rollout ro = rollout_open_loop(mdl, mdl.x1, us);

  const ControlEstimate est = estimate_controls(mdl, ro.xs);
  CHECK(est.not_converged.empty());
  CHECK(max_abs(est.us - us) < 1e-6);
}

TEST_CASE("a zero-control trajectory estimates to zero control") {
  const PomdpModel mdl = instantiate("navigation", default_params("navigation", Variant::Full), Variant::Full);
  const MatrixXd us = MatrixXd::Zero(mdl.T - 1, mdl.u_dim);
  const Rollout ro = rollout_open_loop(mdl, mdl.x1, us);
  const ControlEstimate est = estimate_controls(mdl, ro.xs);
  CHECK(est.us.isZero(0.0));
  CHECK(est.not_converged.empty());
}

TEST_CASE("data-based linearization reproduces global linear-quadratic gains") {
  std::mt19937_64 rng(23);
  LinearSpec s;
  s.A = stable_dynamics(3, rng);
  s.B = rand_mat(3, 2, rng);
  s.Gamma = 0.3 * MatrixXd::Identity(3, 3);
  s.H = MatrixXd::Identity(3, 3) + 0.1 * rand_mat(3, 3, rng);
  s.D = 0.25 * MatrixXd::Identity(3, 3);
  s.Q = rand_spd(3, rng);
  s.R = rand_spd(2, rng);
  s.Qf = 2.0 * s.Q;
  s.x1 = VectorXd::Zero(3);
  s.b1_mean = s.x1;
  s.b1_cov = 0.02 * MatrixXd::Identity(3, 3);
  s.T = 12;
  const PomdpModel mdl = build_linear(s);

  // Any finite data produces the same gains: linear-quadratic problems
  // do not care about the nominal.
  oracle::NormalSource noise(9);
  const MatrixXd us = rand_mat(s.T - 1, 2, rng);
  const MatrixXd xs = rollout(mdl, us, &noise);
  const LinearizationContext ctx = build_linearization(mdl, xs);

  const oracle::LqrSolution ref = oracle::riccati_lqr(s.A, s.B, s.Q, s.R, s.Qf, s.T);
  for (int t = 0; t + 1 < s.T; ++t) {
    CHECK(max_abs(ctx.law.L[t] - ref.L[t]) < 1e-8);
    CHECK(max_abs(ctx.law.Quu[t] - ref.Quu[t]) < 1e-8);
  }
  CHECK(static_cast<int>(ctx.gains.K.size()) == s.T - 1);

  SUBCASE("fully observable variants carry no filter gains") {
    const LinearizationContext fo_ctx = build_linearization(strip_observation(mdl), xs);
    CHECK(fo_ctx.gains.K.empty());
    CHECK(fo_ctx.gains.P.empty());
  }

  SUBCASE("repeated calls are bit-identical") {
    const LinearizationContext again = build_linearization(mdl, xs);
    CHECK(max_abs(again.us - ctx.us) == 0.0);
    for (int t = 0; t + 1 < s.T; ++t) {
      CHECK(max_abs(again.law.L[t] - ctx.law.L[t]) == 0.0);
      CHECK(max_abs(again.gains.K[t] - ctx.gains.K[t]) == 0.0);
    }
  }
}

TEST_CASE("joint prediction covariance collapses to the active noise channels") {
  std::mt19937_64 rng(31);
  LinearSpec s;
  s.A = stable_dynamics(2, rng);
  s.B = rand_mat(2, 1, rng);
  s.Gamma = 0.3 * MatrixXd::Identity(2, 2);
  s.H = MatrixXd::Identity(2, 2);
  s.D = 0.2 * MatrixXd::Identity(2, 2);
  s.Q = MatrixXd::Identity(2, 2);
  s.R = MatrixXd::Identity(1, 1);
  s.Qf = MatrixXd::Identity(2, 2);
  s.x1 = Eigen::Vector2d(0.5, -0.2);
  s.b1_mean = s.x1;
  s.b1_cov = 0.05 * MatrixXd::Identity(2, 2);
  s.T = 6;

  SUBCASE("no noise anywhere leaves only the belief channel") {
    LinearSpec det = s;
    det.Gamma = MatrixXd(2, 0);  // no process noise
    det.D = MatrixXd(2, 0);      // noiseless observation
    const PomdpModel mdl = build_linear(det);
    const MatrixXd us = rand_mat(det.T - 1, 1, rng);
    const MatrixXd xs = rollout(mdl, us, nullptr);
    SolverSettings st;
    st.temperature = 0.0;
    const LinearizationContext ctx = build_linearization(mdl, xs, st);
    const BeliefTrack belief(s.b1_mean, s.b1_cov);
    const JointStep js = joint_step(mdl, ctx, xs.row(1).transpose(), belief, 1);
    MatrixXd expect = js.jb * belief.cov * js.jb.transpose();
    CHECK(max_abs(js.joint.cov_xx - expect.topLeftCorner(2, 2)) < 1e-9);
    CHECK(max_abs(js.joint.cov_xb - expect.topRightCorner(2, 2)) < 1e-9);
    CHECK(max_abs(js.joint.cov_bb - expect.bottomRightCorner(2, 2)) < 1e-9);
  }

  SUBCASE("a certain belief leaves process noise as the state covariance") {
    const PomdpModel mdl = build_linear(s);
    const MatrixXd us = rand_mat(s.T - 1, 1, rng);
    oracle::NormalSource noise(3);
    const MatrixXd xs = rollout(mdl, us, &noise);
    SolverSettings st;
    st.temperature = 0.0;
    const LinearizationContext ctx = build_linearization(mdl, xs, st);
    const BeliefTrack belief(xs.row(2).transpose(), MatrixXd::Zero(2, 2));
    const JointStep js = joint_step(mdl, ctx, xs.row(2).transpose(), belief, 2);
    CHECK(max_abs(js.joint.cov_xx - s.Gamma * s.Gamma.transpose()) < 1e-9);
  }
}

TEST_CASE("one-step joint moments match a million-sample simulation") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int draw = 0; draw < 5; ++draw) {
    CAPTURE(draw);
    const double a = 0.5 + 0.6 * uni(rng);
    const double bc = 0.3 + 0.7 * uni(rng);
    const double gam = 0.2 + 0.4 * uni(rng);
    const double dsc = 0.2 + 0.4 * uni(rng);

    LinearSpec s;
    s.A = MatrixXd::Constant(1, 1, a);
    s.B = MatrixXd::Constant(1, 1, bc);
    s.Gamma = MatrixXd::Constant(1, 1, gam);
    s.H = MatrixXd::Identity(1, 1);
    s.D = MatrixXd::Constant(1, 1, dsc);
    s.Q = MatrixXd::Identity(1, 1);
    s.R = MatrixXd::Constant(1, 1, 0.5);
    s.Qf = MatrixXd::Constant(1, 1, 2.0);
    s.x1 = VectorXd::Constant(1, 0.4);
    s.b1_mean = VectorXd::Constant(1, 0.1);
    s.b1_cov = MatrixXd::Constant(1, 1, 0.3);
    s.T = 4;
    const PomdpModel mdl = build_linear(s);

    MatrixXd us(s.T - 1, 1);
    us << 0.4, -0.2, 0.1;
    oracle::NormalSource traj_noise(100 + draw);
    const MatrixXd xs = rollout(mdl, us, &traj_noise);
    SolverSettings st;
    st.temperature = 0.5;
    const LinearizationContext ctx = build_linearization(mdl, xs, st);

    const int t = 1;
    const BeliefTrack belief(VectorXd::Constant(1, 0.25), MatrixXd::Constant(1, 1, 0.2));
    const JointStep js = joint_step(mdl, ctx, xs.row(t).transpose(), belief, t);

    // Sample the true joint transition: belief draw, policy noise,
    // process noise, observation noise.
    const double L = ctx.law.L[t](0, 0);
    const double kap = ctx.us(t, 0) + ctx.law.m[t](0) - L * xs(t, 0);
    const double C = ctx.law.noise_chol[t](0, 0);
    const double K = ctx.gains.K[t](0, 0);
    const double x_t = xs(t, 0);
    const double bsd = std::sqrt(belief.cov(0, 0));
    const int N = 1000000;
    oracle::NormalSource ns(500 + draw);
    double s1 = 0, s2 = 0, s11 = 0, s12 = 0, s22 = 0;
    for (int k = 0; k < N; ++k) {
      const double b = belief.mean(0) + bsd * ns();
      const double u = kap + L * b - C * ns();
      const double xn = a * x_t + bc * u + gam * ns();
      const double y = x_t + dsc * ns();
      const double bn = a * b + bc * u + K * (y - b);
      s1 += xn;
      s2 += bn;
      s11 += xn * xn;
      s12 += xn * bn;
      s22 += bn * bn;
    }
    const double mx = s1 / N, mb = s2 / N;
    const double cxx = s11 / N - mx * mx;
    const double cxb = s12 / N - mx * mb;
    const double cbb = s22 / N - mb * mb;

    const double jxx = js.joint.cov_xx(0, 0), jxb = js.joint.cov_xb(0, 0), jbb = js.joint.cov_bb(0, 0);
    CHECK(std::abs(mx - js.joint.mean_x(0)) < 3.0 * std::sqrt(jxx / N));
    CHECK(std::abs(mb - js.joint.mean_b(0)) < 3.0 * std::sqrt(jbb / N));
    CHECK(std::abs(cxx - jxx) < 3.0 * std::sqrt(2.0 * jxx * jxx / N));
    CHECK(std::abs(cxb - jxb) < 3.0 * std::sqrt((jxx * jbb + jxb * jxb) / N));
    CHECK(std::abs(cbb - jbb) < 3.0 * std::sqrt(2.0 * jbb * jbb / N));
  }
}

TEST_CASE("belief-tracking likelihood is exact on linear-Gaussian problems") {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 3; ++rep) {
    CAPTURE(rep);
    const int n = 1 + rep;           // 1, 2, 3
    const int nu = 1 + (rep % 2);    // 1, 2, 1
    const int m = 1 + ((rep + 1) % 3);
    const int T = 8 + 4 * rep;

    LinearSpec s;
    s.A = stable_dynamics(n, rng);
    s.B = rand_mat(n, nu, rng);
    s.Gamma = 0.3 * MatrixXd::Identity(n, n) + 0.1 * rand_mat(n, n, rng);
    s.H = MatrixXd::Identity(m, n) + 0.1 * rand_mat(m, n, rng);
    s.D = 0.3 * MatrixXd::Identity(m, m) + 0.05 * rand_mat(m, m, rng);
    s.Q = rand_spd(n, rng);
    s.R = rand_spd(nu, rng);
    s.Qf = 2.0 * s.Q;
    s.qlin = 0.3 * rand_mat(n, 1, rng);
    s.x1 = rand_mat(n, 1, rng);
    s.b1_mean = s.x1 + 0.1 * rand_mat(n, 1, rng);
    s.b1_cov = 0.05 * rand_spd(n, rng);
    s.T = T;
    const PomdpModel mdl = build_linear(s);

    oracle::NormalSource noise(33 + rep);
    const MatrixXd us = 0.5 * rand_mat(T - 1, nu, rng);
    const MatrixXd xs = rollout(mdl, us, &noise);

    SolverSettings st;
    st.temperature = 0.4;
    const LinearizationContext ctx = build_linearization(mdl, xs, st);

    oracle::LinearAgentModel om;
    om.A = s.A;
    om.B = s.B;
    om.Gamma = s.Gamma;
    om.H = s.H;
    om.D = s.D;
    std::vector<VectorXd> xs_vec;
    for (int t = 0; t < T; ++t) xs_vec.push_back(xs.row(t).transpose());
    for (int t = 0; t + 1 < T; ++t) {
      om.L.push_back(ctx.law.L[t]);
      om.kappa.push_back(ctx.us.row(t).transpose() + ctx.law.m[t] - ctx.law.L[t] * xs.row(t).transpose());
      om.Ctil.push_back(ctx.law.noise_chol[t]);
      om.K.push_back(ctx.gains.K[t]);
    }
    const double exact = oracle::exact_linear_loglik(om, xs_vec, mdl.b1.mean, mdl.b1.cov);
    const double got = log_likelihood(mdl, xs, st);
    CHECK(std::isfinite(got));
    CHECK(std::abs(got - exact) < 1e-6);
  }
}

TEST_CASE("a single state carries no transition information") {
  LinearSpec s;
  s.A = MatrixXd::Identity(2, 2);
  s.B = MatrixXd::Identity(2, 2).col(0);
  s.Gamma = 0.1 * MatrixXd::Identity(2, 2);
  s.H = MatrixXd::Identity(2, 2);
  s.D = 0.1 * MatrixXd::Identity(2, 2);
  s.Q = MatrixXd::Identity(2, 2);
  s.R = MatrixXd::Identity(1, 1);
  s.Qf = MatrixXd::Identity(2, 2);
  s.x1 = Eigen::Vector2d(0.3, 0.1);
  s.b1_mean = s.x1;
  s.b1_cov = 0.01 * MatrixXd::Identity(2, 2);
  s.T = 1;
  const PomdpModel mdl = build_linear(s);
  const MatrixXd xs = mdl.x1.transpose();
  CHECK(log_likelihood(mdl, xs) == 0.0);
  CHECK(log_likelihood_fullobs(mdl, xs) == 0.0);
}

TEST_CASE("assembled covariances and belief conditioning along real data") {
  const auto theta = default_params("lightdark", Variant::Partial);
  GenerateOptions opts;
  opts.n_traj = 1;
  opts.seed = 3;
  const Dataset ds = generate_dataset("lightdark", theta, Variant::Partial, opts);
  const PomdpModel mdl = instantiate("lightdark", theta, Variant::Partial);
  const MatrixXd& xs = ds.trajectories[0].states;

  const LinearizationContext ctx = build_linearization(mdl, xs);
  BeliefTrack belief = mdl.b1;
  const int n = mdl.n;
  for (int t = 0; t + 1 < mdl.T; ++t) {
    const JointStep js = joint_step(mdl, ctx, xs.row(t).transpose(), belief, t);
    const MatrixXd sigma = js.jb * belief.cov * js.jb.transpose() + js.jv * js.jv.transpose() +
                           js.jw * js.jw.transpose() + js.jxi * js.jxi.transpose();
    CHECK(max_abs(js.joint.cov_xx - sigma.topLeftCorner(n, n)) < 1e-10);
    CHECK(max_abs(js.joint.cov_xb - sigma.topRightCorner(n, n)) < 1e-10);
    CHECK(max_abs(js.joint.cov_bb - sigma.bottomRightCorner(n, n)) < 1e-10);

    const BeliefTrack next = gaussian_condition(js.joint, xs.row(t + 1).transpose());
    CHECK(next.cov.trace() <= js.joint.cov_bb.trace() + 1e-12);
    belief = next;
  }
}

TEST_CASE("true parameters beat a tenfold action-cost error on reaching data") {
  const auto theta = default_params("reaching", Variant::Partial);
  GenerateOptions opts;
  opts.n_traj = 50;
  opts.seed = 11;
  const Dataset ds = generate_dataset("reaching", theta, Variant::Partial, opts);

  auto theta_wrong = theta;
  theta_wrong.set("c_a", 10.0 * theta.at("c_a"));

  const PomdpModel mdl_true = instantiate("reaching", theta, Variant::Partial);
  const PomdpModel mdl_wrong = instantiate("reaching", theta_wrong, Variant::Partial);
  const double ll_true = dataset_log_likelihood(mdl_true, ds);
  const double ll_wrong = dataset_log_likelihood(mdl_wrong, ds);
  CHECK(std::isfinite(ll_true));
  CHECK(std::isfinite(ll_wrong));
  CHECK(ll_true > ll_wrong);
}

TEST_CASE("fully observable factors reduce to process noise at zero temperature") {
  std::mt19937_64 rng(71);
  LinearSpec s;
  s.A = stable_dynamics(2, rng);
  s.B = rand_mat(2, 1, rng);
  s.Gamma = 0.25 * MatrixXd::Identity(2, 2);
  s.Q = rand_spd(2, rng);
  s.R = rand_spd(1, rng);
  s.Qf = 2.0 * s.Q;
  s.x1 = Eigen::Vector2d(0.6, -0.3);
  s.b1_mean = s.x1;
  s.b1_cov = 0.01 * MatrixXd::Identity(2, 2);
  s.T = 8;
  const PomdpModel mdl = build_linear(s);

  oracle::NormalSource noise(13);
  const MatrixXd us = rand_mat(s.T - 1, 1, rng);
  const MatrixXd xs = rollout(mdl, us, &noise);

  SolverSettings st;
  st.temperature = 0.0;
  const double got = log_likelihood_fullobs(mdl, xs, st);

  const ControlEstimate est = estimate_controls(mdl, xs);
  const ControlLaw law = ilqg_backward_pass(mdl, xs, est.us, st);
  const MatrixXd cov = s.Gamma * s.Gamma.transpose();
  double expect = 0.0;
  for (int t = 0; t + 1 < s.T; ++t) {
    const VectorXd x = xs.row(t).transpose();
    const VectorXd mean = s.A * x + s.B * law.mean_control(x, t);
    expect += oracle::logpdf(xs.row(t + 1).transpose(), mean, cov);
  }
  CHECK(std::abs(got - expect) < 1e-6);
}

TEST_CASE("fully observable linear-Gaussian likelihood matches the closed form") {
  std::mt19937_64 rng(83);
  LinearSpec s;
  s.A = stable_dynamics(2, rng);
  s.B = rand_mat(2, 2, rng) + MatrixXd::Identity(2, 2);
  s.Gamma = 0.2 * MatrixXd::Identity(2, 2) + 0.05 * rand_mat(2, 2, rng);
  s.Q = rand_spd(2, rng);
  s.R = rand_spd(2, rng);
  s.Qf = 2.0 * s.Q;
  s.qlin = 0.2 * rand_mat(2, 1, rng);
  s.x1 = Eigen::Vector2d(-0.4, 0.5);
  s.b1_mean = s.x1;
  s.b1_cov = 0.01 * MatrixXd::Identity(2, 2);
  s.T = 10;
  const PomdpModel mdl = build_linear(s);

  oracle::NormalSource noise(17);
  const MatrixXd us = 0.4 * rand_mat(s.T - 1, 2, rng);
  const MatrixXd xs = rollout(mdl, us, &noise);

  SolverSettings st;
  st.temperature = 0.4;
  const double got = log_likelihood_fullobs(mdl, xs, st);

  const ControlEstimate est = estimate_controls(mdl, xs);
  const ControlLaw law = ilqg_backward_pass(mdl, xs, est.us, st);
  double expect = 0.0;
  for (int t = 0; t + 1 < s.T; ++t) {
    const VectorXd x = xs.row(t).transpose();
    const MatrixXd bc = s.B * law.noise_chol[t];
    const MatrixXd cov = s.Gamma * s.Gamma.transpose() + bc * bc.transpose();
    const VectorXd mean = s.A * x + s.B * law.mean_control(x, t);
    expect += oracle::logpdf(xs.row(t + 1).transpose(), mean, cov);
  }
  CHECK(std::abs(got - expect) < 1e-8);
}

TEST_CASE("sharp observations close the gap to the fully observable likelihood") {
  std::mt19937_64 rng(97);
  LinearSpec s;
  s.A = stable_dynamics(2, rng);
  s.B = rand_mat(2, 1, rng);
  s.Gamma = 0.1 * MatrixXd::Identity(2, 2);
  s.H = MatrixXd::Identity(2, 2);
  s.D = 1e-6 * MatrixXd::Identity(2, 2);
  s.Q = MatrixXd::Identity(2, 2);
  s.R = MatrixXd::Identity(1, 1);
  s.Qf = 2.0 * MatrixXd::Identity(2, 2);
  s.x1 = Eigen::Vector2d(0.8, -0.6);
  s.b1_mean = s.x1;
  s.b1_cov = 1e-12 * MatrixXd::Identity(2, 2);
  s.T = 10;
  const PomdpModel mdl = build_linear(s);

  // Near-optimal noiseless data keeps the belief track glued to the
  // observed states, which is what makes the two likelihoods comparable.
  const SolveResult res = ilqg_solve(strip_observation(mdl));
  REQUIRE(res.converged);
  const MatrixXd xs = res.law.xbar;

  SolverSettings st;
  st.temperature = 1e-9;
  const double po = log_likelihood(mdl, xs, st);
  const double fo = log_likelihood_fullobs(mdl, xs, st);
  CHECK(std::isfinite(po));
  CHECK(std::abs(po - fo) < 1e-4);
}

TEST_CASE("relabeling process noise coordinates leaves the likelihood unchanged") {
  std::mt19937_64 rng(109);
  LinearSpec s;
  s.A = stable_dynamics(2, rng);
  s.B = rand_mat(2, 1, rng);
  s.Gamma = (MatrixXd(2, 2) << 0.3, 0.1, 0.0, 0.2).finished();
  s.Q = MatrixXd::Identity(2, 2);
  s.R = MatrixXd::Identity(1, 1);
  s.Qf = MatrixXd::Identity(2, 2);
  s.x1 = Eigen::Vector2d(0.2, 0.4);
  s.b1_mean = s.x1;
  s.b1_cov = 0.01 * MatrixXd::Identity(2, 2);
  s.T = 8;
  const PomdpModel mdl = build_linear(s);

  LinearSpec flipped = s;
  flipped.Gamma = s.Gamma.rowwise().reverse();
  const PomdpModel mdl_flipped = build_linear(flipped);

  oracle::NormalSource noise(21);
  const MatrixXd us = rand_mat(s.T - 1, 1, rng);
  const MatrixXd xs = rollout(mdl, us, &noise);

  const double a = log_likelihood(mdl, xs);
  const double b = log_likelihood(mdl_flipped, xs);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("dataset likelihood adds per-trajectory terms in order") {
  const auto theta = default_params("navigation", Variant::Full);
  GenerateOptions opts;
  opts.n_traj = 3;
  opts.seed = 29;
  const Dataset ds = generate_dataset("navigation", theta, Variant::Full, opts);
  const PomdpModel mdl = instantiate("navigation", theta, Variant::Full);

  Dataset singleton = ds;
  singleton.trajectories = {ds.trajectories[0]};
  CHECK(dataset_log_likelihood(mdl, singleton) ==
        doctest::Approx(log_likelihood(mdl, ds.trajectories[0].states)).epsilon(1e-14));

  Dataset doubled = ds;
  doubled.trajectories = {ds.trajectories[1], ds.trajectories[1]};
  CHECK(dataset_log_likelihood(mdl, doubled) ==
        doctest::Approx(2.0 * log_likelihood(mdl, ds.trajectories[1].states)).epsilon(1e-14));

  Dataset permuted = ds;
  std::swap(permuted.trajectories[0], permuted.trajectories[2]);
  CHECK(dataset_log_likelihood(mdl, permuted) ==
        doctest::Approx(dataset_log_likelihood(mdl, ds)).epsilon(1e-12));
}

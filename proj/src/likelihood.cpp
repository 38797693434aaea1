#include "nioc/likelihood.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nioc/numdiff.hpp"

namespace nioc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// f is affine in v given (x, u), so the injection columns are exact
// evaluation differences, not finite-difference estimates.
MatrixXd process_noise_columns(const PomdpModel& mdl, const VectorXd& x, const VectorXd& u) {
  const VectorXd base = mdl.f(x, u, VectorXd::Zero(mdl.v_dim));
  MatrixXd cols(mdl.n, mdl.v_dim);
  for (int i = 0; i < mdl.v_dim; ++i) {
    VectorXd e = VectorXd::Zero(mdl.v_dim);
    e[i] = 1.0;
    cols.col(i) = mdl.f(x, u, e) - base;
  }
  return cols;
}

MatrixXd observation_noise_columns(const PomdpModel& mdl, const VectorXd& x) {
  const VectorXd base = mdl.h(x, VectorXd::Zero(mdl.w_dim));
  MatrixXd cols(mdl.m, mdl.w_dim);
  for (int j = 0; j < mdl.w_dim; ++j) {
    VectorXd e = VectorXd::Zero(mdl.w_dim);
    e[j] = 1.0;
    cols.col(j) = mdl.h(x, e) - base;
  }
  return cols;
}

}  // namespace

ControlEstimate estimate_controls(const PomdpModel& mdl, const MatrixXd& xs) {
  if (xs.cols() != mdl.n || xs.rows() < 1)
    throw InvalidArgument("estimate_controls: trajectory must be T x n");
  if (!xs.allFinite()) throw NonFiniteValue("estimate_controls: non-finite states");

  const int steps = static_cast<int>(xs.rows()) - 1;
  const VectorXd v0 = VectorXd::Zero(mdl.v_dim);
  const MatrixXd eye = MatrixXd::Identity(mdl.u_dim, mdl.u_dim);
  ControlEstimate est;
  est.us = MatrixXd::Zero(steps, mdl.u_dim);

  for (int t = 0; t < steps; ++t) {
    const VectorXd x = xs.row(t).transpose();
    const VectorXd target = xs.row(t + 1).transpose();
    VectorXd u = VectorXd::Zero(mdl.u_dim);
    VectorXd r = target - mdl.f(x, u, v0);
    double lambda = 1e-6;
    bool done = false;
    for (int it = 0; it < 50; ++it) {
      const MatrixXd J = jacobian([&](const VectorXd& uu) { return mdl.f(x, uu, v0); }, u);
      const VectorXd g = J.transpose() * r;
      if (g.norm() < 1e-10) {
        done = true;
        break;
      }
      const VectorXd step = (J.transpose() * J + lambda * eye).ldlt().solve(g);
      const VectorXd r_new = target - mdl.f(x, u + step, v0);
      if (!r_new.allFinite() || r_new.squaredNorm() > r.squaredNorm()) {
        lambda = std::min(lambda * 10.0, 1e6);
        continue;
      }
      u += step;
      r = r_new;
      if (step.norm() < 1e-12) {
        done = true;
        break;
      }
    }
    if (!done) est.not_converged.push_back(t);
    est.us.row(t) = u.transpose();
  }
  return est;
}

LinearizationContext build_linearization(const PomdpModel& mdl, const MatrixXd& xs,
                                         const SolverSettings& settings) {
  ControlEstimate est = estimate_controls(mdl, xs);
  LinearizationContext ctx;
  ctx.us = std::move(est.us);
  ctx.not_converged = std::move(est.not_converged);
  ctx.law = ilqg_backward_pass(mdl, xs, ctx.us, settings);
  if (mdl.partial()) ctx.gains = ekf_forward(mdl, linearize_along(mdl, xs, ctx.us));
  return ctx;
}

JointStep joint_step(const PomdpModel& mdl, const LinearizationContext& ctx, const VectorXd& x_t,
                     const BeliefTrack& belief, int t) {
  if (!mdl.partial()) throw InvalidArgument("joint_step: model is fully observable");
  const int n = mdl.n;
  if (x_t.size() != n || belief.dim() != n) throw InvalidArgument("joint_step: dimension mismatch");
  if (t < 0 || t >= static_cast<int>(ctx.gains.K.size()) || t + 1 >= ctx.law.horizon())
    throw InvalidArgument("joint_step: step index out of range");

  const VectorXd v0 = VectorXd::Zero(mdl.v_dim);
  const VectorXd w0 = VectorXd::Zero(mdl.w_dim);
  const VectorXd u = ctx.law.mean_control(belief.mean, t);
  const MatrixXd& K = ctx.gains.K[t];
  const MatrixXd& L = ctx.law.L[t];
  const MatrixXd& C = ctx.law.noise_chol[t];

  // Dynamics sensitivities at the observed state and at the belief mean.
  const MatrixXd fu_x = jacobian([&](const VectorXd& uu) { return mdl.f(x_t, uu, v0); }, u);
  VectorXd zb(n + mdl.u_dim);
  zb << belief.mean, u;
  const JacobianSet at_belief = jacobian_groups(
      [&](const VectorXd& s) { return mdl.f(s.head(n), s.tail(mdl.u_dim), v0); }, zb,
      {n, mdl.u_dim});
  const MatrixXd& fx_b = at_belief.blocks[0];
  const MatrixXd& fu_b = at_belief.blocks[1];
  const MatrixXd hx_b = jacobian([&](const VectorXd& xx) { return mdl.h(xx, w0); }, belief.mean);

  JointStep out;
  // Belief deviations move the state row only through the control the
  // policy picks; the belief row additionally filters its own prediction.
  out.jb.resize(2 * n, n);
  out.jb.topRows(n) = fu_x * L;
  out.jb.bottomRows(n) = fx_b - K * hx_b + fu_b * L;
  // Process noise perturbs the true state only: the belief update runs
  // the dynamics at zero noise.
  out.jv = MatrixXd::Zero(2 * n, mdl.v_dim);
  out.jv.topRows(n) = process_noise_columns(mdl, x_t, u);
  // The realized observation is of the true state, so its noise scale is
  // taken at x_t, not at the belief mean.
  out.jw = MatrixXd::Zero(2 * n, mdl.w_dim);
  out.jw.bottomRows(n) = K * observation_noise_columns(mdl, x_t);
  // Policy noise enters both rows identically: the agent executes the
  // control it sampled.
  out.jxi.resize(2 * n, mdl.u_dim);
  out.jxi.topRows(n) = fu_x * C;
  out.jxi.bottomRows(n) = fu_b * C;

  const MatrixXd cov = out.jb * belief.cov * out.jb.transpose() + out.jv * out.jv.transpose() +
                       out.jw * out.jw.transpose() + out.jxi * out.jxi.transpose();

  out.joint.mean_x = mdl.f(x_t, u, v0);
  out.joint.mean_b = mdl.f(belief.mean, u, v0) + K * (mdl.h(x_t, w0) - mdl.h(belief.mean, w0));
  out.joint.cov_xx = cov.topLeftCorner(n, n);
  out.joint.cov_xb = cov.topRightCorner(n, n);
  out.joint.cov_bb = cov.bottomRightCorner(n, n);
  if (!out.joint.mean_x.allFinite() || !out.joint.mean_b.allFinite() || !cov.allFinite())
    throw NonFiniteValue("joint_step: non-finite prediction at step " + std::to_string(t));
  return out;
}

double log_likelihood(const PomdpModel& mdl, const MatrixXd& xs, const SolverSettings& settings,
                      std::string* diag) {
  if (!mdl.partial()) return log_likelihood_fullobs(mdl, xs, settings, diag);
  if (xs.cols() != mdl.n) throw InvalidArgument("log_likelihood: trajectory must be T x n");
  if (xs.rows() <= 1) return 0.0;
  try {
    const LinearizationContext ctx = build_linearization(mdl, xs, settings);
    BeliefTrack belief = mdl.b1;
    double total = 0.0;
    for (int t = 0; t + 1 < static_cast<int>(xs.rows()); ++t) {
      const JointStep step = joint_step(mdl, ctx, xs.row(t).transpose(), belief, t);
      const VectorXd next = xs.row(t + 1).transpose();
      total += gaussian_logpdf(step.joint.marginal_x(), next);
      belief = gaussian_condition(step.joint, next);
    }
    return total;
  } catch (const SingularCovariance& e) {
    if (diag) *diag = e.what();
    return kNegInf;
  } catch (const NonFiniteValue& e) {
    if (diag) *diag = e.what();
    return kNegInf;
  } catch (const DivergedValueRecursion& e) {
    if (diag) *diag = e.what();
    return kNegInf;
  }
}

double log_likelihood_fullobs(const PomdpModel& mdl, const MatrixXd& xs,
                              const SolverSettings& settings, std::string* diag) {
  if (xs.cols() != mdl.n) throw InvalidArgument("log_likelihood_fullobs: trajectory must be T x n");
  if (xs.rows() <= 1) return 0.0;
  try {
    const PomdpModel fo = mdl.partial() ? strip_observation(mdl) : mdl;
    const ControlEstimate est = estimate_controls(fo, xs);
    const ControlLaw law = ilqg_backward_pass(fo, xs, est.us, settings);
    const VectorXd v0 = VectorXd::Zero(fo.v_dim);
    double total = 0.0;
    for (int t = 0; t + 1 < static_cast<int>(xs.rows()); ++t) {
      const VectorXd x = xs.row(t).transpose();
      const VectorXd u = law.mean_control(x, t);
      const MatrixXd jv = process_noise_columns(fo, x, u);
      const MatrixXd jxi =
          jacobian([&](const VectorXd& uu) { return fo.f(x, uu, v0); }, u) * law.noise_chol[t];
      const Gaussian factor(fo.f(x, u, v0), jv * jv.transpose() + jxi * jxi.transpose());
      total += gaussian_logpdf(factor, xs.row(t + 1).transpose());
    }
    return total;
  } catch (const SingularCovariance& e) {
    if (diag) *diag = e.what();
    return kNegInf;
  } catch (const NonFiniteValue& e) {
    if (diag) *diag = e.what();
    return kNegInf;
  } catch (const DivergedValueRecursion& e) {
    if (diag) *diag = e.what();
    return kNegInf;
  }
}

double dataset_log_likelihood(const PomdpModel& mdl, const Dataset& ds,
                              const SolverSettings& settings, std::string* diag) {
  double total = 0.0;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    std::string local;
    const double li = log_likelihood(mdl, ds.trajectories[i].states, settings, &local);
    if (!std::isfinite(li)) {
      if (diag)
        *diag = "trajectory " + std::to_string(i) + ": " +
                (local.empty() ? "non-finite log likelihood" : local);
      return kNegInf;
    }
    total += li;
  }
  return total;
}

}  // namespace nioc

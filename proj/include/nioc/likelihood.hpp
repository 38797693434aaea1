#pragma once

#include <string>
#include <vector>

#include "nioc/solver.hpp"

namespace nioc {

// Controls recovered from consecutive observed states by damped
// Gauss-Newton on the squared dynamics residual |x_next - f(x, u, 0)|^2,
// one step at a time, initialized at u = 0. The damping is Levenberg
// style: lambda starts at 1e-6 and grows tenfold on a rejected proposal,
// capped at 1e6. A step finishes at gradient norm < 1e-10 or accepted
// step norm < 1e-12; steps that exhaust the 50-iteration budget keep the
// last iterate and are recorded in not_converged.
struct ControlEstimate {
  MatrixXd us;                     // (T-1) x u_dim
  std::vector<int> not_converged;  // step indices, ascending
};
ControlEstimate estimate_controls(const PomdpModel& mdl, const MatrixXd& xs);

// Frozen linearization around one observed trajectory: a single backward
// pass around (xs, estimated controls) yields the control law, and one
// filter pass along the same nominal yields the gains (partially
// observable models only). There is no iteration; the data is the
// nominal.
struct LinearizationContext {
  MatrixXd us;        // estimated controls
  ControlLaw law;
  FilterGains gains;  // empty for fully observable models
  std::vector<int> not_converged;
};
LinearizationContext build_linearization(const PomdpModel& mdl, const MatrixXd& xs,
                                         const SolverSettings& settings = {});

// p(b_t | x_{1:t}): the experimenter's Gaussian over the agent's state
// estimate given the states observed so far.
using BeliefTrack = Gaussian;

// One-step prediction p(x_{t+1}, b_{t+1} | x_{1:t}). The joint transition
// of state and belief is linearized at (x_t, belief mean, zero noises)
// with the policy mean control inserted; the stored Jacobian blocks are
// its sensitivities to the belief (jb), process noise (jv), observation
// noise (jw) and policy noise (jxi), so the joint covariance is
//   jb cov_b jb' + jv jv' + jw jw' + jxi jxi'.
struct JointStep {
  GaussianJoint joint;
  MatrixXd jb, jv, jw, jxi;
};
JointStep joint_step(const PomdpModel& mdl, const LinearizationContext& ctx, const VectorXd& x_t,
                     const BeliefTrack& belief, int t);

// Log likelihood of one observed state trajectory (T x n). Partially
// observable models track the belief: predict with joint_step, score the
// x marginal at the next observed state, then condition the belief on
// it. Fully observable models reduce to log_likelihood_fullobs. The first
// state is conditioned on and contributes nothing. Numerical failures
// (singular covariance, non-finite values, a diverging backward pass)
// yield -inf with a description in *diag instead of an exception.
double log_likelihood(const PomdpModel& mdl, const MatrixXd& xs, const SolverSettings& settings = {},
                      std::string* diag = nullptr);

// Fully observable simplification: per-step factors
// N(f(x_t, u*, 0), jv jv' + jxi jxi') with u* the policy mean at x_t.
// A partially observable model is scored as if the state were directly
// observed (observation model dropped).
double log_likelihood_fullobs(const PomdpModel& mdl, const MatrixXd& xs,
                              const SolverSettings& settings = {}, std::string* diag = nullptr);

// Sum over trajectories in index order. Any -inf trajectory makes the
// total -inf; *diag then names the trajectory.
double dataset_log_likelihood(const PomdpModel& mdl, const Dataset& ds,
                              const SolverSettings& settings = {}, std::string* diag = nullptr);

}  // namespace nioc

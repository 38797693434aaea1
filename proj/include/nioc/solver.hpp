#pragma once

#include <vector>

#include "nioc/model.hpp"

namespace nioc {

// Local model of one transition along a nominal trajectory: dynamics and
// observation linearized, cost quadratized, noise columns with their
// state/control sensitivities. Noise columns are exact evaluation
// differences (f is affine in v, h in w), not finite-difference estimates.
struct StepLinearization {
  MatrixXd A;                   // df/dx at the nominal
  MatrixXd B;                   // df/du
  std::vector<VectorXd> gamma;  // process noise columns f(x,u,e_i) - f(x,u,0)
  std::vector<MatrixXd> Gx;     // d gamma_i / dx
  std::vector<MatrixXd> Gu;     // d gamma_i / du

  double c0 = 0.0;  // step cost value and local quadratic model
  VectorXd cx, cu;
  MatrixXd cxx, cux, cuu;

  MatrixXd H;                   // dh/dx (partially observable models only)
  std::vector<VectorXd> d;      // observation noise columns h(x,e_j) - h(x,0)
  std::vector<MatrixXd> Dx;     // d d_j / dx
};

struct FinalQuadratic {
  double c0 = 0.0;
  VectorXd cx;
  MatrixXd cxx;
};

// Linearize every transition along (xs: T x n, us: (T-1) x u_dim).
std::vector<StepLinearization> linearize_along(const PomdpModel& mdl, const MatrixXd& xs, const MatrixXd& us);
FinalQuadratic quadratize_final_cost(const PomdpModel& mdl, const VectorXd& x_final);

struct SolverSettings {
  int max_iterations = 300;
  double tol = 1e-6;               // max-abs nominal state change declaring convergence
  double line_search_factor = 0.5;
  int line_search_steps = 11;      // step sizes 1, factor, ..., factor^(steps-1)
  double reg_floor = 1e-8;         // eigenvalue floor for Quu
  double divergence_guard = 1e12;  // value recursion abort threshold
  double temperature = -1.0;       // policy temperature; negative = model default
};

// Time-varying affine-Gaussian policy around a nominal trajectory. The
// mean control at belief mean b is ubar_t + m_t + L_t (b - xbar_t); the
// exploration covariance is temperature * Quu_t^{-1} with Cholesky factor
// noise_chol_t.
struct ControlLaw {
  MatrixXd xbar;  // T x n nominal states
  MatrixXd ubar;  // (T-1) x u_dim nominal controls
  std::vector<MatrixXd> L;
  std::vector<VectorXd> m;
  std::vector<MatrixXd> Quu;         // regularized, symmetric PD
  std::vector<MatrixXd> noise_chol;  // lower Cholesky of temperature * Quu^{-1}
  double temperature = 0.0;

  int horizon() const { return static_cast<int>(xbar.rows()); }
  VectorXd mean_control(const VectorXd& b, int t) const;
};

// Predictor-form Kalman quantities along a nominal trajectory.
struct FilterGains {
  std::vector<MatrixXd> K;  // T-1 gains (n x m)
  std::vector<MatrixXd> P;  // T one-step-ahead error covariances; P[0] is the prior
};

// Kalman gains from the linearized model, starting at the model's initial
// belief covariance.
FilterGains ekf_forward(const PomdpModel& mdl, const std::vector<StepLinearization>& lin);

// One belief mean update with a precomputed gain:
// b' = f(b, u, 0) + K (y - h(b, 0)).
VectorXd ekf_step(const PomdpModel& mdl, const VectorXd& b, const VectorXd& u, const VectorXd& y,
                  const MatrixXd& K);

// Backward recursion around a fixed nominal trajectory. Fully observable
// models get the standard risk-aware recursion over state deviations;
// partially observable models get the coupled recursion over (belief
// deviation, estimation error) using EKF gains along the same nominal.
ControlLaw ilqg_backward_pass(const PomdpModel& mdl, const MatrixXd& xbar, const MatrixXd& ubar,
                              const SolverSettings& settings = {});

// Draw one control: mean_control(b, t) - noise_chol_t * xi.
VectorXd mce_policy_sample(const ControlLaw& law, const VectorXd& b, int t, const VectorXd& xi);

struct SolveResult {
  ControlLaw law;
  FilterGains gains;       // empty for fully observable models
  double objective = 0.0;  // line-search metric at the returned nominal
  int iterations = 0;
  bool converged = false;  // false = iteration budget hit; result still usable
};

// Iterate backward pass / forward rollout with a backtracking line search
// until the nominal trajectory stops moving. Fully observable models score
// candidates by the deterministic rollout cost; partially observable ones
// by the predicted expected cost under the candidate policy (forward
// moment propagation), which is what makes information-seeking behavior
// register as an improvement.
SolveResult ilqg_solve(const PomdpModel& mdl, const SolverSettings& settings = {});

struct Rollout {
  MatrixXd xs;  // T x n
  double cost = 0.0;
};

// Noise-free open-loop rollout from x0 accumulating the true cost.
Rollout rollout_open_loop(const PomdpModel& mdl, const VectorXd& x0, const MatrixXd& us);

}  // namespace nioc

#include "nioc/simulate.hpp"

#include <random>
#include <string>

#include "nioc/gaussian.hpp"
#include "nioc/tasks.hpp"

namespace nioc {

namespace {

class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : rng_(seed) {}

  VectorXd draw(int d) {
    VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = dist_(rng_);
    return v;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

Trajectory rollout_closed_loop(const PomdpModel& mdl, const ControlLaw& law,
                               const FilterGains& gains, const MatrixXd& b1_chol,
                               std::uint64_t traj_seed) {
  const bool partial = mdl.partial();
  NoiseStream noise(traj_seed);
  Trajectory traj;
  traj.states.resize(mdl.T, mdl.n);
  traj.controls.resize(mdl.T - 1, mdl.u_dim);

  VectorXd x = mdl.x1;
  VectorXd b = partial ? VectorXd(mdl.b1.mean + b1_chol * noise.draw(mdl.n)) : x;
  traj.states.row(0) = x.transpose();
  for (int t = 0; t < mdl.T - 1; ++t) {
    const VectorXd u = mce_policy_sample(law, b, t, noise.draw(mdl.u_dim));
    const VectorXd x_next = mdl.f(x, u, noise.draw(mdl.v_dim));
    if (partial) {
      const VectorXd y = mdl.h(x, noise.draw(mdl.w_dim));
      b = ekf_step(mdl, b, u, y, gains.K[t]);
    } else {
      b = x_next;
    }
    if (!u.allFinite() || !x_next.allFinite() || !b.allFinite())
      throw NonFiniteValue("trajectory with seed " + std::to_string(traj_seed) +
                           " diverged at step " + std::to_string(t));
    traj.controls.row(t) = u.transpose();
    traj.states.row(t + 1) = x_next.transpose();
    x = x_next;
  }
  return traj;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Dataset simulate(const PomdpModel& mdl, const ControlLaw& law, const FilterGains& gains,
                 int n_traj, std::uint64_t seed) {
  if (n_traj < 0) throw InvalidArgument("n_traj must be nonnegative");
  if (law.horizon() != mdl.T) throw InvalidArgument("control law horizon does not match the model");
  if (mdl.partial() && static_cast<int>(gains.K.size()) != mdl.T - 1)
    throw InvalidArgument("filter gains do not cover the horizon");

  Dataset ds;
  ds.task = mdl.task_id;
  ds.variant = mdl.variant;
  ds.T = mdl.T;
  ds.n = mdl.n;
  ds.seed = seed;
  ds.meta.emplace_back("controller", "ilqg-mce");
  ds.meta.emplace_back("temperature", std::to_string(law.temperature));

  MatrixXd b1_chol;
  if (mdl.partial()) b1_chol = MatrixXd(cholesky_with_jitter(mdl.b1.cov).matrixL());

  ds.trajectories.reserve(static_cast<size_t>(n_traj));
  for (int i = 0; i < n_traj; ++i)
    ds.trajectories.push_back(rollout_closed_loop(mdl, law, gains, b1_chol, mix_seed(seed, i)));
  return ds;
}

std::string agent_mode_name(AgentMode mode) {
  return mode == AgentMode::Planner ? "planner" : "fo_controller";
}

AgentMode agent_mode_from_name(const std::string& s) {
  if (s == "planner") return AgentMode::Planner;
  if (s == "fo_controller") return AgentMode::FullyObservablePlanner;
  throw InvalidArgument("unknown agent mode: " + s);
}

Dataset generate_dataset(const std::string& task_id, const ParamVector& theta, Variant variant,
                         const GenerateOptions& opts) {
  const PomdpModel mdl = instantiate(task_id, theta, variant, opts.task_options);

  ControlLaw law;
  FilterGains gains;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  if (opts.agent == AgentMode::FullyObservablePlanner) {
    if (!mdl.partial())
      throw InvalidArgument("fo_controller agent mode only applies to partially observable models");
    // Plan as if the state were fully observed, then estimate it with an
    // EKF along the planned nominal when acting in the partial world.
    const SolveResult res = ilqg_solve(strip_observation(mdl), opts.solver);
    law = res.law;
    gains = ekf_forward(mdl, linearize_along(mdl, law.xbar, law.ubar));
    iterations = res.iterations;
    converged = res.converged;
    objective = res.objective;
  } else {
    const SolveResult res = ilqg_solve(mdl, opts.solver);
    law = res.law;
    gains = res.gains;
    iterations = res.iterations;
    converged = res.converged;
    objective = res.objective;
  }

  Dataset ds = simulate(mdl, law, gains, opts.n_traj, opts.seed);
  ds.theta_true = theta;
  ds.meta.emplace_back("agent_mode", agent_mode_name(opts.agent));
  for (const auto& [key, value] : opts.task_options)
    ds.meta.emplace_back("option." + key, std::to_string(value));
  ds.meta.emplace_back("solver_iterations", std::to_string(iterations));
  ds.meta.emplace_back("solver_converged", converged ? "1" : "0");
  ds.meta.emplace_back("solver_objective", std::to_string(objective));
  return ds;
}

}  // namespace nioc

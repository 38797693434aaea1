#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nioc/gaussian.hpp"
#include "nioc/params.hpp"

namespace nioc {

enum class Variant { Full, Partial };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& s);

// Discrete-time stochastic control problem over a fixed horizon T.
// f maps (x, u, v) -> next state with v a standard normal vector entering
// affinely given (x, u). h maps (x, w) -> observation with w standard
// normal; absent (m == 0) in the fully observable variant. Costs are
// step_cost(x, u, t) for t = 0..T-2 plus final_cost(x_T).
struct PomdpModel {
  int n = 0;      // state dimension
  int u_dim = 0;  // control dimension
  int v_dim = 0;  // process noise dimension
  int m = 0;      // observation dimension (0 for fully observable)
  int w_dim = 0;  // observation noise dimension
  int T = 0;      // horizon (number of states)

  Eigen::VectorXd x1;  // initial state
  Gaussian b1;         // agent's initial belief (mean + covariance)

  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&)> f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> h;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&, int)> step_cost;
  std::function<double(const Eigen::VectorXd&)> final_cost;

  // Optional deterministic warm start for the solver ((T-1) x u_dim).
  Eigen::MatrixXd init_controls;

  std::string task_id;
  Variant variant = Variant::Full;
  double default_temperature = 1e-6;

  bool partial() const { return variant == Variant::Partial; }
};

// Fully observable twin of a model: same dynamics, costs, horizon and
// initial conditions, observation model removed.
PomdpModel strip_observation(const PomdpModel& mdl);

// One rollout. states is T x n; controls is (T-1) x u_dim and optional
// (kept for diagnostics, never serialized into datasets).
struct Trajectory {
  Eigen::MatrixXd states;
  Eigen::MatrixXd controls;

  int length() const { return static_cast<int>(states.rows()); }
};

struct Dataset {
  std::string task;
  Variant variant = Variant::Full;
  ParamVector theta_true;
  int T = 0;
  int n = 0;
  std::uint64_t seed = 0;
  std::vector<Trajectory> trajectories;
  // Generator metadata: free-form key -> value strings (solver settings,
  // code version, agent mode).
  std::vector<std::pair<std::string, std::string>> meta;
};

}  // namespace nioc

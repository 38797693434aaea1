#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "nioc/model.hpp"
#include "nioc/solver.hpp"

namespace nioc {

// Per-trajectory seed derivation: one splitmix64 scramble of
// (seed + (index + 1) * golden-ratio increment). Documented so datasets
// can be reproduced trajectory by trajectory.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// Closed-loop rollouts of a solved policy. Trajectory i uses an
// independent generator seeded with mix_seed(seed, i); within a step the
// draw order is policy noise, process noise, observation noise. Partially
// observable models track the agent's belief mean with the precomputed
// filter gains, starting from a belief drawn around the true initial
// state; fully observable models feed the true state back. States are
// recorded for every step, controls kept as diagnostics. theta_true is
// left for the caller to fill.
Dataset simulate(const PomdpModel& mdl, const ControlLaw& law, const FilterGains& gains,
                 int n_traj, std::uint64_t seed);

// Who plans: the matching solver for the model's variant, or a planner
// that ignores partial observability (policy synthesized as if the state
// were fully observed, then deployed with an EKF in the partial world).
enum class AgentMode { Planner, FullyObservablePlanner };

std::string agent_mode_name(AgentMode mode);
AgentMode agent_mode_from_name(const std::string& s);

struct GenerateOptions {
  int n_traj = 50;
  std::uint64_t seed = 0;
  SolverSettings solver;
  AgentMode agent = AgentMode::Planner;
  // Task geometry tweaks forwarded to instantiate ("T", "target_angle").
  std::map<std::string, double> task_options;
};

// Instantiate the task, solve it, and simulate, producing a dataset that
// carries the generating parameters and solver metadata.
Dataset generate_dataset(const std::string& task_id, const ParamVector& theta, Variant variant,
                         const GenerateOptions& opts);

}  // namespace nioc

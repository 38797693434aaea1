#pragma once

#include <string>

#include "nioc/likelihood.hpp"

namespace nioc {

// Comparison likelihood with no model of partial observability. The
// trajectory is scored as dynamics transitions under the given controls
// plus the density of those controls under the maximum-entropy policy of
// the problem linearized around (xs, us), treated as fully observed:
//   sum_t  log N(x_{t+1}; f(x_t, u_t, 0), jv jv')
//        + log N(u_t; policy mean at x_t, temperature * Quu_t^-1).
// Numerical failures yield -inf with a description in *diag.
double baseline_log_likelihood_given_controls(const PomdpModel& mdl, const MatrixXd& xs,
                                              const MatrixXd& us,
                                              const SolverSettings& settings = {},
                                              std::string* diag = nullptr);

// Same, with the controls first recovered by estimate_controls.
double baseline_log_likelihood(const PomdpModel& mdl, const MatrixXd& xs,
                               const SolverSettings& settings = {}, std::string* diag = nullptr);

// Sum over trajectories in index order; -inf propagates as in
// dataset_log_likelihood.
double baseline_dataset_log_likelihood(const PomdpModel& mdl, const Dataset& ds,
                                       const SolverSettings& settings = {},
                                       std::string* diag = nullptr);

}  // namespace nioc

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nioc/model.hpp"
#include "nioc/simulate.hpp"
#include "nioc/solver.hpp"

namespace nioc {

// Which scoring rule the fit maximizes: the belief-tracking trajectory
// likelihood, or the control-scoring baseline.
enum class FitMethod { Ours, Baseline };

std::string fit_method_name(FitMethod m);
FitMethod fit_method_from_name(const std::string& s);

// Dataset log-likelihood of theta under the chosen scoring rule, with the
// model rebuilt from the dataset's task id. This is the objective fit()
// maximizes, exposed for diagnostics and the CLI.
double dataset_score(const Dataset& ds, FitMethod method, Variant variant, const ParamVector& theta,
                     const SolverSettings& solver = {},
                     const std::map<std::string, double>& task_options = {});

struct FitSettings {
  int restarts = 10;
  std::uint64_t seed = 0;
  // Worker threads across restarts. Results are identical for any value:
  // starting points are drawn up front and the winner is reduced in
  // restart order.
  int jobs = 1;
  int max_iterations = 100;   // quasi-Newton iterations per restart
  double fd_step = 1e-3;      // central-difference step in optimizer space
  double gradient_tol = 1e-4; // stop when the gradient max-norm falls below
  double value_tol = 1e-9;    // relative objective-change stop
  SolverSettings solver;
  // Optional fixed starting point for the first restart (natural space;
  // must carry the full schema). Remaining restarts draw from the task's
  // parameter ranges.
  ParamVector init;
  std::map<std::string, double> task_options;
};

struct RestartRecord {
  ParamVector start;
  ParamVector end;
  double value = 0.0;  // final log-likelihood of this restart
  std::string status;  // "ok" or "no_finite_value"
};

struct FitResult {
  ParamVector theta_hat;
  double loglik = 0.0;
  std::vector<RestartRecord> restarts;
  double wall_time_s = 0.0;
  long long evaluations = 0;  // objective calls, gradient probes included
};

// Maximum-likelihood estimate over the task's parameter schema. Searches
// in transformed space (log for positivity-constrained entries) with a
// box-projected BFGS and Armijo backtracking; gradients by central finite
// differences. Restart draws are log-uniform (or uniform for unconstrained
// entries) over the schema ranges from a stream seeded by settings.seed.
// A non-finite score is treated as a rejected point, never a crash.
// Throws AllRestartsFailed when no restart reaches a finite value.
FitResult fit(const Dataset& ds, FitMethod method, Variant variant, const FitSettings& settings = {});

struct RelativeError {
  std::string name;
  double truth = 0.0;
  double estimate = 0.0;
  double error = 0.0;
  // Unconstrained entries (which may legitimately be zero) are scored as
  // |truth - estimate| / max(|truth|, 1) and flagged.
  bool fallback = false;
};

// Per-parameter absolute relative errors |(truth - estimate)/truth| in
// natural space. Throws DivisionByZero for a positivity-constrained entry
// whose true value is exactly zero.
std::vector<RelativeError> relative_errors(const ParamVector& truth, const ParamVector& estimate);

struct EvalRow {
  std::string task;
  Variant variant = Variant::Full;
  FitMethod method = FitMethod::Ours;
  int dataset_id = 0;
  std::string param_name;
  double theta_true = 0.0;
  double theta_hat = 0.0;
  double abs_rel_err = 0.0;
  double loglik = 0.0;
  double wall_time_s = 0.0;
};

// Recovery-accuracy table. The aggregate is the pooled median over every
// (dataset, parameter) cell; per-dataset medians are kept alongside.
struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<std::pair<int, double>> dataset_medians;
  double aggregate_median = 0.0;  // NaN when there are no rows
  std::vector<std::pair<int, std::string>> failures;  // dataset id -> reason
};

struct BenchmarkSettings {
  int n_datasets = 10;
  int n_traj = 50;
  std::uint64_t seed = 0;
  AgentMode agent = AgentMode::Planner;
  SolverSettings gen_solver;  // settings for data generation
  FitSettings fit;
  // Sampling-range overrides by parameter name (natural space); entries
  // absent here use the task schema.
  std::map<std::string, std::pair<double, double>> ranges;
};

// Sample parameters, simulate, fit, score: one row per (dataset,
// parameter). Per-dataset errors are recorded in `failures` and do not
// abort the run.
EvalReport benchmark(const std::string& task_id, Variant variant, FitMethod method,
                     const BenchmarkSettings& settings = {});

double median(std::vector<double> values);  // empty -> NaN

}  // namespace nioc

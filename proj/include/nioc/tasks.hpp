#pragma once

#include <map>
#include <string>
#include <vector>

#include "nioc/model.hpp"

namespace nioc {

// Description of one named parameter of a task: positivity constraint,
// default value, and the sampling range used by benchmarks/restarts
// (log-uniform when log_range, uniform otherwise).
struct ParamSpec {
  std::string name;
  bool positive = true;
  double default_value = 0.1;
  double range_lo = 1e-2;
  double range_hi = 1.0;
  bool log_range = true;
};

std::vector<std::string> task_ids();

// Parameter schema for a task/variant. Throws UnknownTask.
std::vector<ParamSpec> task_param_spec(const std::string& task_id, Variant variant);

ParamVector default_params(const std::string& task_id, Variant variant);

double task_default_temperature(const std::string& task_id);

// Build the model for a task. Validates that every parameter in the
// schema is present (MissingParameter) and that the variant exists for
// the task (light-dark is partial-only). Extra options tweak task
// geometry; unknown option keys are rejected.
PomdpModel instantiate(const std::string& task_id, const ParamVector& theta, Variant variant,
                       const std::map<std::string, double>& options = {});

}  // namespace nioc

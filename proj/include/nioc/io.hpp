#pragma once

#include <cstdint>
#include <string>

#include "nioc/inference.hpp"
#include "nioc/model.hpp"

namespace nioc {

// %.17g: enough digits that strtod reparses the exact same double.
std::string format_double(double v);

// FNV-1a, 64 bit, over the raw bytes. Stable across platforms; used to
// stamp outputs with a hash of the resolved configuration.
std::uint64_t fnv1a64(const std::string& text);

std::string hex64(std::uint64_t h);

// Comment block prepended to CSV outputs: config hash + code version.
// Lines start with '#' so column parsers skip them.
std::string csv_provenance_header(std::uint64_t config_hash);

// One JSON document per dataset: {"task", "variant", "theta_true":
// {name: value}, "T", "n", "seed", "meta", "trajectories": [[[x...]]]}.
// Controls are diagnostics and are never serialized. Serialization is
// deterministic: same dataset, same bytes.
std::string dataset_to_json(const Dataset& ds);

// Inverse of dataset_to_json. Throws ParseError on malformed text,
// missing fields, or ragged trajectories. Positivity flags for theta
// are recovered from the task's parameter schema when the task is
// registered; unknown tasks fall back to sign-based flags.
Dataset dataset_from_json(const std::string& text);

// Flat CSV for plotting: one row per (trajectory, step) with columns
// traj_id,t,x_0..x_{n-1}.
std::string trajectory_csv(const Dataset& ds);

// Recovery table, one row per (dataset, parameter). Column order:
// task,variant,method,dataset_id,param_name,theta_true,theta_hat,
// abs_rel_err,loglik,wall_time_s.
std::string eval_report_csv(const EvalReport& report);

std::string fit_result_to_json(const FitResult& fr, const std::string& task, Variant variant,
                               FitMethod method, std::uint64_t config_hash = 0);

std::string benchmark_summary_to_json(const EvalReport& report, const std::string& task,
                                      Variant variant, FitMethod method,
                                      const BenchmarkSettings& settings,
                                      std::uint64_t config_hash = 0);

// Whole-file text IO. Both throw ParseError on OS-level failure so the
// caller sees one error family for every input/output problem.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace nioc

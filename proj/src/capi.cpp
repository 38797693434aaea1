#include "nioc.h"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

#include "nioc/errors.hpp"
#include "nioc/inference.hpp"
#include "nioc/io.hpp"
#include "nioc/simulate.hpp"
#include "nioc/tasks.hpp"
#include "nioc/version.hpp"

using nlohmann::ordered_json;

struct nioc_dataset {
  nioc::Dataset impl;
};

namespace {

thread_local std::string t_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nioc_status fail(nioc_status code, const std::string& message) {
  t_last_error = message;
  return code;
}

// One translation point from the C++ error families to status codes.
// Configuration mistakes (bad names, malformed documents, impossible
// values) map to NIOC_ERR_CONFIG; numerical trouble to NIOC_ERR_SOLVER.
template <typename F>
nioc_status guarded(F&& body) {
  t_last_error.clear();
  try {
    body();
    return NIOC_OK;
  } catch (const nioc::ParseError& e) {
    return fail(NIOC_ERR_CONFIG, e.what());
  } catch (const nioc::UnknownTask& e) {
    return fail(NIOC_ERR_CONFIG, e.what());
  } catch (const nioc::MissingParameter& e) {
    return fail(NIOC_ERR_CONFIG, e.what());
  } catch (const nioc::NonPositiveParameter& e) {
    return fail(NIOC_ERR_CONFIG, e.what());
  } catch (const nioc::DivisionByZero& e) {
    return fail(NIOC_ERR_CONFIG, e.what());
  } catch (const nioc::InvalidArgument& e) {
    return fail(NIOC_ERR_CONFIG, e.what());
  } catch (const nioc::AllRestartsFailed& e) {
    return fail(NIOC_ERR_OPTIM, e.what());
  } catch (const nioc::Error& e) {
    return fail(NIOC_ERR_SOLVER, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(NIOC_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return fail(NIOC_ERR_SOLVER, e.what());
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw nioc::InvalidArgument(message);
}

ordered_json parse_object(const char* text, const std::string& what) {
  if (!text || !*text) return ordered_json::object();
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw nioc::ParseError(what + ": " + e.what());
  }
  require(j.is_object(), what + " must be a JSON object");
  return j;
}

void check_keys(const ordered_json& j, std::initializer_list<const char*> allowed,
                const std::string& what) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    require(ok, what + ": unknown key \"" + key + "\"");
  }
}

double get_double(const ordered_json& j, const char* key, double dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  require(it->is_number(), std::string(key) + " must be a number");
  return it->get<double>();
}

int get_int(const ordered_json& j, const char* key, int dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  require(it->is_number_integer(), std::string(key) + " must be an integer");
  return it->get<int>();
}

std::uint64_t get_u64(const ordered_json& j, const char* key, std::uint64_t dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  require(it->is_number_integer(), std::string(key) + " must be an integer");
  require(it->is_number_unsigned() || it->get<long long>() >= 0,
          std::string(key) + " must be nonnegative");
  return it->get<std::uint64_t>();
}

std::string get_string(const ordered_json& j, const char* key, const std::string& dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  require(it->is_string(), std::string(key) + " must be a string");
  return it->get<std::string>();
}

nioc::SolverSettings parse_solver(const ordered_json& parent) {
  nioc::SolverSettings st;
  auto it = parent.find("solver");
  if (it == parent.end()) return st;
  require(it->is_object(), "solver must be an object");
  const ordered_json& j = *it;
  check_keys(j,
             {"max_iterations", "tol", "line_search_factor", "line_search_steps", "reg_floor",
              "divergence_guard", "temperature"},
             "solver");
  st.max_iterations = get_int(j, "max_iterations", st.max_iterations);
  st.tol = get_double(j, "tol", st.tol);
  st.line_search_factor = get_double(j, "line_search_factor", st.line_search_factor);
  st.line_search_steps = get_int(j, "line_search_steps", st.line_search_steps);
  st.reg_floor = get_double(j, "reg_floor", st.reg_floor);
  st.divergence_guard = get_double(j, "divergence_guard", st.divergence_guard);
  st.temperature = get_double(j, "temperature", st.temperature);
  return st;
}

std::map<std::string, double> parse_task_options(const ordered_json& parent) {
  std::map<std::string, double> out;
  auto it = parent.find("task_options");
  if (it == parent.end()) return out;
  require(it->is_object(), "task_options must be an object");
  for (const auto& [key, value] : it->items()) {
    require(value.is_number(), "task_options." + key + " must be a number");
    out[key] = value.get<double>();
  }
  return out;
}

// Geometry options recorded at generation time ("option.T" etc.), so a
// reloaded dataset is scored against the model that produced it.
std::map<std::string, double> recorded_task_options(const nioc::Dataset& ds) {
  std::map<std::string, double> out;
  for (const auto& [key, value] : ds.meta) {
    if (key.rfind("option.", 0) != 0) continue;
    out[key.substr(7)] = std::strtod(value.c_str(), nullptr);
  }
  return out;
}

nioc::ParamVector params_from_json(const ordered_json& j, const std::string& task,
                                   nioc::Variant variant, const std::string& what) {
  require(j.is_object(), what + " must be an object of {name: value}");
  std::map<std::string, bool> positive;
  for (const auto& spec : nioc::task_param_spec(task, variant)) positive[spec.name] = spec.positive;
  nioc::ParamVector p;
  for (const auto& [name, value] : j.items()) {
    auto it = positive.find(name);
    require(it != positive.end(), what + ": unknown parameter \"" + name + "\" for " + task);
    require(value.is_number(), what + "." + name + " must be a number");
    p.set(name, value.get<double>(), it->second);
  }
  return p;
}

std::uint64_t take_config_hash(ordered_json& j) {
  auto it = j.find("config_hash");
  if (it == j.end()) return 0;
  require(it->is_string(), "config_hash must be a string of hex digits");
  const std::string text = it->get<std::string>();
  require(!text.empty() && text.find_first_not_of("0123456789abcdefABCDEF") == std::string::npos,
          "config_hash must be a string of hex digits");
  j.erase(it);
  return std::strtoull(text.c_str(), nullptr, 16);
}

nioc::FitSettings parse_fit_settings(const ordered_json& j, const nioc::Dataset* ds,
                                     const std::string& task, nioc::Variant variant) {
  check_keys(j,
             {"restarts", "seed", "jobs", "max_iterations", "fd_step", "gradient_tol", "value_tol",
              "solver", "init", "task_options"},
             "fit settings");
  nioc::FitSettings st;
  st.restarts = get_int(j, "restarts", st.restarts);
  st.seed = get_u64(j, "seed", st.seed);
  st.jobs = get_int(j, "jobs", st.jobs);
  st.max_iterations = get_int(j, "max_iterations", st.max_iterations);
  st.fd_step = get_double(j, "fd_step", st.fd_step);
  st.gradient_tol = get_double(j, "gradient_tol", st.gradient_tol);
  st.value_tol = get_double(j, "value_tol", st.value_tol);
  st.solver = parse_solver(j);
  if (auto it = j.find("init"); it != j.end())
    st.init = params_from_json(*it, task, variant, "init");
  if (ds) st.task_options = recorded_task_options(*ds);
  for (const auto& [key, value] : parse_task_options(j)) st.task_options[key] = value;
  return st;
}

void set_output(char** out, const std::string& text) {
  *out = dup_string(text);
}

}  // namespace

extern "C" {

const char* nioc_version(void) { return nioc::kVersion; }

const char* nioc_last_error(void) { return t_last_error.c_str(); }

void nioc_string_free(char* s) { std::free(s); }

nioc_status nioc_config_hash(const char* text, char** out_hex) {
  if (!out_hex) return fail(NIOC_ERR_CONFIG, "null output pointer");
  *out_hex = nullptr;
  return guarded([&] {
    require(text != nullptr, "null text");
    set_output(out_hex, nioc::hex64(nioc::fnv1a64(text)));
  });
}

nioc_status nioc_provenance_header(const char* config_text, char** out_header) {
  if (!out_header) return fail(NIOC_ERR_CONFIG, "null output pointer");
  *out_header = nullptr;
  return guarded([&] {
    require(config_text != nullptr, "null text");
    set_output(out_header, nioc::csv_provenance_header(nioc::fnv1a64(config_text)));
  });
}

nioc_status nioc_task_list(char** out_json) {
  if (!out_json) return fail(NIOC_ERR_CONFIG, "null output pointer");
  *out_json = nullptr;
  return guarded([&] {
    ordered_json arr = ordered_json::array();
    for (const auto& id : nioc::task_ids()) arr.push_back(id);
    set_output(out_json, arr.dump());
  });
}

nioc_status nioc_task_schema(const char* task, const char* variant, char** out_json) {
  if (!out_json) return fail(NIOC_ERR_CONFIG, "null output pointer");
  *out_json = nullptr;
  return guarded([&] {
    require(task && variant, "null task or variant");
    ordered_json arr = ordered_json::array();
    for (const auto& spec : nioc::task_param_spec(task, nioc::variant_from_name(variant))) {
      ordered_json rec;
      rec["name"] = spec.name;
      rec["positive"] = spec.positive;
      rec["default"] = spec.default_value;
      rec["range_lo"] = spec.range_lo;
      rec["range_hi"] = spec.range_hi;
      rec["log_range"] = spec.log_range;
      arr.push_back(std::move(rec));
    }
    set_output(out_json, arr.dump());
  });
}

nioc_status nioc_dataset_generate(const char* task, const char* variant,
                                  const char* options_json, nioc_dataset** out) {
  if (!out) return fail(NIOC_ERR_CONFIG, "null output pointer");
  *out = nullptr;
  return guarded([&] {
    require(task && variant, "null task or variant");
    ordered_json j = parse_object(options_json, "options");
    check_keys(j, {"theta", "n_traj", "seed", "agent", "solver", "task_options", "meta"},
               "options");
    require(j.contains("theta"), "options.theta is required");
    const nioc::Variant var = nioc::variant_from_name(variant);
    const nioc::ParamVector theta = params_from_json(j["theta"], task, var, "theta");

    nioc::GenerateOptions opts;
    opts.n_traj = get_int(j, "n_traj", opts.n_traj);
    opts.seed = get_u64(j, "seed", opts.seed);
    opts.agent = nioc::agent_mode_from_name(get_string(j, "agent", agent_mode_name(opts.agent)));
    opts.solver = parse_solver(j);
    opts.task_options = parse_task_options(j);

    nioc::Dataset ds = nioc::generate_dataset(task, theta, var, opts);
    if (auto it = j.find("meta"); it != j.end()) {
      require(it->is_object(), "options.meta must be an object");
      for (const auto& [key, value] : it->items()) {
        require(value.is_string(), "options.meta." + key + " must be a string");
        ds.meta.emplace_back(key, value.get<std::string>());
      }
    }
    *out = new nioc_dataset{std::move(ds)};
  });
}

nioc_status nioc_dataset_parse(const char* json_text, nioc_dataset** out) {
  if (!out) return fail(NIOC_ERR_CONFIG, "null output pointer");
  *out = nullptr;
  return guarded([&] {
    require(json_text != nullptr, "null dataset text");
    *out = new nioc_dataset{nioc::dataset_from_json(json_text)};
  });
}

void nioc_dataset_free(nioc_dataset* ds) { delete ds; }

nioc_status nioc_dataset_to_json(const nioc_dataset* ds, char** out) {
  if (!out) return fail(NIOC_ERR_CONFIG, "null output pointer");
  *out = nullptr;
  return guarded([&] {
    require(ds != nullptr, "null dataset");
    set_output(out, nioc::dataset_to_json(ds->impl));
  });
}

nioc_status nioc_dataset_to_csv(const nioc_dataset* ds, char** out) {
  if (!out) return fail(NIOC_ERR_CONFIG, "null output pointer");
  *out = nullptr;
  return guarded([&] {
    require(ds != nullptr, "null dataset");
    set_output(out, nioc::trajectory_csv(ds->impl));
  });
}

nioc_status nioc_dataset_dims(const nioc_dataset* ds, int* n_traj, int* horizon,
                              int* state_dim) {
  return guarded([&] {
    require(ds != nullptr, "null dataset");
    if (n_traj) *n_traj = static_cast<int>(ds->impl.trajectories.size());
    if (horizon) *horizon = ds->impl.T;
    if (state_dim) *state_dim = ds->impl.n;
  });
}

nioc_status nioc_dataset_meta_append(nioc_dataset* ds, const char* key, const char* value) {
  return guarded([&] {
    require(ds != nullptr, "null dataset");
    require(key && value, "null meta key or value");
    ds->impl.meta.emplace_back(key, value);
  });
}

nioc_status nioc_dataset_stats(const nioc_dataset* ds, char** out_json) {
  if (!out_json) return fail(NIOC_ERR_CONFIG, "null output pointer");
  *out_json = nullptr;
  return guarded([&] {
    require(ds != nullptr, "null dataset");
    const nioc::Dataset& d = ds->impl;
    ordered_json j;
    j["n_traj"] = d.trajectories.size();
    j["T"] = d.T;
    j["n"] = d.n;

    if (d.trajectories.empty()) {
      j["endpoint_mean"] = nullptr;
      j["endpoint_spread"] = nullptr;
      j["cost"] = nullptr;
      set_output(out_json, j.dump(2) + "\n");
      return;
    }

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d.n);
    for (const auto& traj : d.trajectories)
      mean += traj.states.row(traj.states.rows() - 1).transpose();
    mean /= static_cast<double>(d.trajectories.size());
    double spread = 0.0;
    for (const auto& traj : d.trajectories)
      spread +=
          (traj.states.row(traj.states.rows() - 1).transpose() - mean).squaredNorm();
    spread = std::sqrt(spread / static_cast<double>(d.trajectories.size()));
    ordered_json mean_json = ordered_json::array();
    for (int k = 0; k < mean.size(); ++k) mean_json.push_back(mean[k]);
    j["endpoint_mean"] = std::move(mean_json);
    j["endpoint_spread"] = spread;

    bool have_controls = true;
    for (const auto& traj : d.trajectories)
      have_controls = have_controls && traj.controls.rows() == traj.states.rows() - 1 &&
                      traj.controls.cols() > 0;
    j["cost"] = nullptr;
    if (have_controls) {
      try {
        const nioc::PomdpModel mdl =
            nioc::instantiate(d.task, d.theta_true, d.variant, recorded_task_options(d));
        double total_min = 0.0, total_max = 0.0, total_sum = 0.0;
        bool first = true;
        for (const auto& traj : d.trajectories) {
          double c = mdl.final_cost(traj.states.row(traj.states.rows() - 1).transpose());
          for (int t = 0; t + 1 < traj.states.rows(); ++t)
            c += mdl.step_cost(traj.states.row(t).transpose(),
                               traj.controls.row(t).transpose(), t);
          total_sum += c;
          total_min = first ? c : std::min(total_min, c);
          total_max = first ? c : std::max(total_max, c);
          first = false;
        }
        ordered_json cost;
        cost["mean"] = total_sum / static_cast<double>(d.trajectories.size());
        cost["min"] = total_min;
        cost["max"] = total_max;
        j["cost"] = std::move(cost);
      } catch (const nioc::Error&) {
        // unregistered task: endpoint statistics still stand
      }
    }
    set_output(out_json, j.dump(2) + "\n");
  });
}

nioc_status nioc_log_likelihood(const nioc_dataset* ds, const char* method,
                                const char* variant, const char* theta_json,
                                const char* settings_json, double* out) {
  return guarded([&] {
    require(ds != nullptr, "null dataset");
    require(method && variant, "null method or variant");
    require(theta_json != nullptr, "null theta");
    require(out != nullptr, "null output pointer");
    const nioc::Variant var = nioc::variant_from_name(variant);
    const nioc::FitMethod m = nioc::fit_method_from_name(method);
    ordered_json th;
    try {
      th = ordered_json::parse(theta_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw nioc::ParseError(std::string("theta: ") + e.what());
    }
    const nioc::ParamVector theta = params_from_json(th, ds->impl.task, var, "theta");
    ordered_json j = parse_object(settings_json, "settings");
    check_keys(j, {"solver", "task_options"}, "settings");
    const nioc::SolverSettings solver = parse_solver(j);
    std::map<std::string, double> opts = recorded_task_options(ds->impl);
    for (const auto& [key, value] : parse_task_options(j)) opts[key] = value;
    *out = nioc::dataset_score(ds->impl, m, var, theta, solver, opts);
  });
}

nioc_status nioc_fit(const nioc_dataset* ds, const char* method, const char* variant,
                     const char* settings_json, char** out_json) {
  if (!out_json) return fail(NIOC_ERR_CONFIG, "null output pointer");
  *out_json = nullptr;
  return guarded([&] {
    require(ds != nullptr, "null dataset");
    require(method && variant, "null method or variant");
    const nioc::Variant var = nioc::variant_from_name(variant);
    const nioc::FitMethod m = nioc::fit_method_from_name(method);
    ordered_json j = parse_object(settings_json, "settings");
    const std::uint64_t hash = take_config_hash(j);
    const nioc::FitSettings st = parse_fit_settings(j, &ds->impl, ds->impl.task, var);
    const nioc::FitResult fr = nioc::fit(ds->impl, m, var, st);
    set_output(out_json, nioc::fit_result_to_json(fr, ds->impl.task, var, m, hash));
  });
}

nioc_status nioc_benchmark(const char* task, const char* variant, const char* method,
                           const char* settings_json, char** out_csv,
                           char** out_summary_json) {
  if (!out_csv || !out_summary_json) return fail(NIOC_ERR_CONFIG, "null output pointer");
  *out_csv = nullptr;
  *out_summary_json = nullptr;
  return guarded([&] {
    require(task && variant && method, "null task, variant, or method");
    const nioc::Variant var = nioc::variant_from_name(variant);
    const nioc::FitMethod m = nioc::fit_method_from_name(method);
    ordered_json j = parse_object(settings_json, "settings");
    const std::uint64_t hash = take_config_hash(j);
    check_keys(j, {"n_datasets", "n_traj", "seed", "agent", "gen_solver", "fit", "ranges"},
               "benchmark settings");

    nioc::BenchmarkSettings st;
    st.n_datasets = get_int(j, "n_datasets", st.n_datasets);
    st.n_traj = get_int(j, "n_traj", st.n_traj);
    st.seed = get_u64(j, "seed", st.seed);
    st.agent = nioc::agent_mode_from_name(get_string(j, "agent", agent_mode_name(st.agent)));
    if (auto it = j.find("gen_solver"); it != j.end()) {
      ordered_json wrap;
      wrap["solver"] = *it;
      st.gen_solver = parse_solver(wrap);
    }
    if (auto it = j.find("fit"); it != j.end()) {
      require(it->is_object(), "fit must be an object");
      st.fit = parse_fit_settings(*it, nullptr, task, var);
    }
    if (auto it = j.find("ranges"); it != j.end()) {
      require(it->is_object(), "ranges must be an object");
      for (const auto& [name, pair] : it->items()) {
        require(pair.is_array() && pair.size() == 2 && pair[0].is_number() && pair[1].is_number(),
                "ranges." + name + " must be [lo, hi]");
        const double lo = pair[0].get<double>();
        const double hi = pair[1].get<double>();
        require(lo < hi, "ranges." + name + " must have lo < hi");
        st.ranges[name] = {lo, hi};
      }
    }

    const nioc::EvalReport report = nioc::benchmark(task, var, m, st);
    char* csv = dup_string(nioc::eval_report_csv(report));
    try {
      *out_summary_json = dup_string(
          nioc::benchmark_summary_to_json(report, task, var, m, st, hash));
    } catch (...) {
      std::free(csv);
      throw;
    }
    *out_csv = csv;
  });
}

}  // extern "C"

#include "nioc/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "nioc/errors.hpp"
#include "nioc/tasks.hpp"
#include "nioc/version.hpp"

namespace nioc {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string csv_provenance_header(std::uint64_t config_hash) {
  return "# config_hash=" + hex64(config_hash) + "\n# version=" + kVersion + "\n";
}

namespace {

ordered_json params_to_json(const ParamVector& p) {
  ordered_json j = ordered_json::object();
  for (const auto& name : p.names()) j[name] = p.at(name);
  return j;
}

const ordered_json& need(const ordered_json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("dataset JSON: missing field \"") + key + "\"");
  return *it;
}

double need_number(const ordered_json& j, const std::string& what) {
  if (!j.is_number()) throw ParseError("dataset JSON: " + what + " is not a number");
  return j.get<double>();
}

}  // namespace

std::string dataset_to_json(const Dataset& ds) {
  ordered_json j;
  j["task"] = ds.task;
  j["variant"] = variant_name(ds.variant);
  j["theta_true"] = params_to_json(ds.theta_true);
  j["T"] = ds.T;
  j["n"] = ds.n;
  j["seed"] = ds.seed;
  ordered_json meta = ordered_json::object();
  for (const auto& [key, value] : ds.meta) meta[key] = value;
  j["meta"] = meta;
  ordered_json trajs = ordered_json::array();
  for (const auto& traj : ds.trajectories) {
    ordered_json rows = ordered_json::array();
    for (int t = 0; t < traj.states.rows(); ++t) {
      ordered_json row = ordered_json::array();
      for (int k = 0; k < traj.states.cols(); ++k) row.push_back(traj.states(t, k));
      rows.push_back(std::move(row));
    }
    trajs.push_back(std::move(rows));
  }
  j["trajectories"] = std::move(trajs);
  return j.dump() + "\n";
}

Dataset dataset_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("dataset JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("dataset JSON: top level is not an object");

  Dataset ds;
  const ordered_json& task = need(j, "task");
  if (!task.is_string()) throw ParseError("dataset JSON: \"task\" is not a string");
  ds.task = task.get<std::string>();

  ds.variant = Variant::Full;
  if (auto it = j.find("variant"); it != j.end()) {
    if (!it->is_string()) throw ParseError("dataset JSON: \"variant\" is not a string");
    try {
      ds.variant = variant_from_name(it->get<std::string>());
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string("dataset JSON: ") + e.what());
    }
  }

  const ordered_json& th = need(j, "theta_true");
  if (!th.is_object()) throw ParseError("dataset JSON: \"theta_true\" is not an object");
  // Positivity is not stored in the file; recover it from the schema so a
  // reloaded dataset optimizes in the same coordinates as a fresh one.
  std::map<std::string, bool> positive;
  try {
    for (const auto& spec : task_param_spec(ds.task, ds.variant)) positive[spec.name] = spec.positive;
  } catch (const Error&) {
    // unregistered task: flags only matter once the task can be solved
  }
  for (const auto& [name, value] : th.items()) {
    const double v = need_number(value, "theta_true." + name);
    auto it = positive.find(name);
    ds.theta_true.set(name, v, it != positive.end() ? it->second : v > 0);
  }

  const ordered_json& T = need(j, "T");
  const ordered_json& n = need(j, "n");
  if (!T.is_number_integer() || !n.is_number_integer())
    throw ParseError("dataset JSON: \"T\" and \"n\" must be integers");
  ds.T = T.get<int>();
  ds.n = n.get<int>();
  if (ds.T < 0 || ds.n < 0) throw ParseError("dataset JSON: negative dimensions");

  const ordered_json& seed = need(j, "seed");
  if (!seed.is_number()) throw ParseError("dataset JSON: \"seed\" is not a number");
  ds.seed = seed.get<std::uint64_t>();

  if (auto it = j.find("meta"); it != j.end()) {
    if (!it->is_object()) throw ParseError("dataset JSON: \"meta\" is not an object");
    for (const auto& [key, value] : it->items()) {
      if (!value.is_string()) throw ParseError("dataset JSON: meta." + key + " is not a string");
      ds.meta.emplace_back(key, value.get<std::string>());
    }
  }

  const ordered_json& trajs = need(j, "trajectories");
  if (!trajs.is_array()) throw ParseError("dataset JSON: \"trajectories\" is not an array");
  ds.trajectories.reserve(trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const ordered_json& rows = trajs[i];
    if (!rows.is_array() || static_cast<int>(rows.size()) != ds.T)
      throw ParseError("dataset JSON: trajectory " + std::to_string(i) + " does not have T rows");
    Trajectory traj;
    traj.states.resize(ds.T, ds.n);
    for (int t = 0; t < ds.T; ++t) {
      const ordered_json& row = rows[t];
      if (!row.is_array() || static_cast<int>(row.size()) != ds.n)
        throw ParseError("dataset JSON: trajectory " + std::to_string(i) + " row " +
                         std::to_string(t) + " does not have n values");
      for (int k = 0; k < ds.n; ++k)
        traj.states(t, k) = need_number(row[k], "state value");
    }
    ds.trajectories.push_back(std::move(traj));
  }
  return ds;
}

std::string trajectory_csv(const Dataset& ds) {
  std::string out = "traj_id,t";
  for (int k = 0; k < ds.n; ++k) out += ",x_" + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const auto& states = ds.trajectories[i].states;
    for (int t = 0; t < states.rows(); ++t) {
      out += std::to_string(i) + "," + std::to_string(t);
      for (int k = 0; k < states.cols(); ++k) out += "," + format_double(states(t, k));
      out += "\n";
    }
  }
  return out;
}

std::string eval_report_csv(const EvalReport& report) {
  std::string out =
      "task,variant,method,dataset_id,param_name,theta_true,theta_hat,abs_rel_err,loglik,"
      "wall_time_s\n";
  for (const auto& row : report.rows) {
    out += row.task + "," + variant_name(row.variant) + "," + fit_method_name(row.method) + "," +
           std::to_string(row.dataset_id) + "," + row.param_name + "," +
           format_double(row.theta_true) + "," + format_double(row.theta_hat) + "," +
           format_double(row.abs_rel_err) + "," + format_double(row.loglik) + "," +
           format_double(row.wall_time_s) + "\n";
  }
  return out;
}

std::string fit_result_to_json(const FitResult& fr, const std::string& task, Variant variant,
                               FitMethod method, std::uint64_t config_hash) {
  ordered_json j;
  j["config_hash"] = hex64(config_hash);
  j["version"] = kVersion;
  j["task"] = task;
  j["variant"] = variant_name(variant);
  j["method"] = fit_method_name(method);
  j["loglik"] = fr.loglik;
  j["evaluations"] = fr.evaluations;
  j["wall_time_s"] = fr.wall_time_s;
  j["theta_hat"] = params_to_json(fr.theta_hat);
  ordered_json restarts = ordered_json::array();
  for (std::size_t i = 0; i < fr.restarts.size(); ++i) {
    const auto& r = fr.restarts[i];
    ordered_json rec;
    rec["index"] = i;
    rec["status"] = r.status;
    rec["value"] = r.value;
    rec["start"] = params_to_json(r.start);
    rec["end"] = params_to_json(r.end);
    restarts.push_back(std::move(rec));
  }
  j["restarts"] = std::move(restarts);
  return j.dump(2) + "\n";
}

std::string benchmark_summary_to_json(const EvalReport& report, const std::string& task,
                                      Variant variant, FitMethod method,
                                      const BenchmarkSettings& settings,
                                      std::uint64_t config_hash) {
  ordered_json j;
  j["config_hash"] = hex64(config_hash);
  j["version"] = kVersion;
  j["task"] = task;
  j["variant"] = variant_name(variant);
  j["method"] = fit_method_name(method);
  j["n_datasets"] = settings.n_datasets;
  j["n_traj"] = settings.n_traj;
  j["seed"] = settings.seed;
  j["rows"] = report.rows.size();
  j["aggregate_median"] = report.aggregate_median;
  ordered_json medians = ordered_json::array();
  for (const auto& [id, value] : report.dataset_medians) {
    ordered_json rec;
    rec["dataset_id"] = id;
    rec["median"] = value;
    medians.push_back(std::move(rec));
  }
  j["dataset_medians"] = std::move(medians);
  ordered_json failures = ordered_json::array();
  for (const auto& [id, reason] : report.failures) {
    ordered_json rec;
    rec["dataset_id"] = id;
    rec["reason"] = reason;
    failures.push_back(std::move(rec));
  }
  j["failures"] = std::move(failures);
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw ParseError("read failed: " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write file: " + path);
  out << text;
  out.flush();
  if (!out) throw ParseError("write failed: " + path);
}

}  // namespace nioc

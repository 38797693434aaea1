// Batch front end: generate datasets, fit parameters, run benchmarks and
// the light-dark disentangling study. All compute goes through the C
// library interface; this file owns argument handling, config files, and
// output layout.
//
// Config resolution order: built-in default < NIOC_SEED (seed only)
// < --config file < explicit flag. The resolved configuration is hashed
// (FNV-1a) and stamped into every output; timestamps only ever go to the
// run.log sidecar so repeated runs stay byte-identical.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nioc.h"

using nlohmann::json;

namespace {

struct CStr {
  char* ptr = nullptr;
  ~CStr() { nioc_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

struct DatasetHandle {
  nioc_dataset* ptr = nullptr;
  ~DatasetHandle() { nioc_dataset_free(ptr); }
};

[[noreturn]] void die(int code, const std::string& message) {
  std::cerr << "error: " << message << "\n";
  std::exit(code);
}

// Every C call funnels through here so failures keep their exit-code
// contract: 2 config/IO, 3 solver, 4 optimization.
void check(nioc_status status, const std::string& context) {
  if (status == NIOC_OK) return;
  die(static_cast<int>(status), context + ": " + nioc_last_error());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(2, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) die(2, "cannot write " + path);
  out << text;
  out.flush();
  if (!out) die(2, "write failed: " + path);
}

double parse_number(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') die(2, what + ": not a number: \"" + text + "\"");
  return v;
}

// "c_a=0.1,c_v=0.2" -> object
json parse_assignments(const std::string& text, const std::string& what) {
  json out = json::object();
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) die(2, what + ": expected name=value, got \"" + item + "\"");
    out[item.substr(0, eq)] = parse_number(item.substr(eq + 1), what);
  }
  return out;
}

std::vector<double> parse_grid(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, what));
  if (out.empty()) die(2, what + ": empty grid");
  return out;
}

// Key-by-key merge of config file and flags. A flag that was actually
// given wins over the file; the file wins over defaults already present.
class ConfigBuilder {
 public:
  ConfigBuilder(const CLI::App* cmd, const std::string& config_path,
                const std::vector<std::string>& allowed) {
    resolved_["command"] = cmd->get_name();
    if (!config_path.empty()) {
      json file;
      try {
        file = json::parse(slurp(config_path));
      } catch (const json::parse_error& e) {
        die(2, "config " + config_path + ": " + e.what());
      }
      if (!file.is_object()) die(2, "config " + config_path + ": not a JSON object");
      for (const auto& [key, value] : file.items()) {
        bool ok = false;
        for (const auto& a : allowed) ok = ok || key == a;
        if (!ok) die(2, "config " + config_path + ": unknown key \"" + key + "\"");
        resolved_[key] = value;
      }
    }
    cmd_ = cmd;
  }

  bool flag_given(const std::string& flag) const {
    const CLI::Option* opt = cmd_->get_option_no_throw("--" + flag);
    return opt && opt->count() > 0;
  }

  // Adopt `value` when the flag was given or the config has no entry.
  template <typename T>
  void put(const std::string& key, const std::string& flag, const T& value) {
    if (flag_given(flag) || !resolved_.contains(key)) resolved_[key] = value;
  }

  template <typename T>
  void put_default(const std::string& key, const T& value) {
    if (!resolved_.contains(key)) resolved_[key] = value;
  }

  const json& get() const { return resolved_; }
  json& mutable_get() { return resolved_; }

  // Hash input: the resolved config minus the output directory, which is
  // plumbing rather than experiment identity. Reruns into a different
  // directory stay byte-identical.
  std::string text() const {
    json hashed = resolved_;
    hashed.erase("out");
    return hashed.dump();
  }

 private:
  json resolved_;  // plain json: keys stay sorted, so the hash is stable
  const CLI::App* cmd_ = nullptr;
};

std::uint64_t seed_fallback() {
  const char* env = std::getenv("NIOC_SEED");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') die(2, "NIOC_SEED must be an unsigned integer");
  return v;
}

std::string config_hash_of(const std::string& text) {
  CStr hex;
  check(nioc_config_hash(text.c_str(), &hex.ptr), "config hash");
  return hex.str();
}

// Unspecified variant: fully observable where the task has one, else the
// partial-only variant (light-dark).
std::string default_variant(const std::string& task) {
  CStr schema;
  return nioc_task_schema(task.c_str(), "full", &schema.ptr) == NIOC_OK ? "full" : "partial";
}

std::string provenance_of(const std::string& text) {
  CStr header;
  check(nioc_provenance_header(text.c_str(), &header.ptr), "provenance header");
  return header.str();
}

void append_run_log(const std::filesystem::path& dir, const std::string& line) {
  std::ofstream out(dir / "run.log", std::ios::app);
  if (!out) die(2, "cannot write " + (dir / "run.log").string());
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  out << "[" << stamp << "] " << line << "\n";
}

std::filesystem::path ensure_out_dir(const json& cfg) {
  const std::filesystem::path dir = cfg.at("out").get<std::string>();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) die(2, "cannot create output directory " + dir.string());
  return dir;
}

// Fields shared by generate calls: pass through only what was set so the
// library's own defaults stay in charge.
json generation_options(const json& cfg, const std::string& hash) {
  json opts;
  opts["theta"] = cfg.at("theta");
  opts["n_traj"] = cfg.at("n_traj");
  opts["seed"] = cfg.at("seed");
  if (cfg.contains("agent")) opts["agent"] = cfg.at("agent");
  if (cfg.contains("temperature")) opts["solver"] = {{"temperature", cfg.at("temperature")}};
  if (cfg.contains("T")) opts["task_options"] = {{"T", cfg.at("T")}};
  opts["meta"] = {{"config_hash", hash}, {"version", nioc_version()}};
  return opts;
}

json fit_settings(const json& cfg, const std::string& hash) {
  json st;
  for (const char* key : {"restarts", "seed", "jobs", "max_iterations"})
    if (cfg.contains(key)) st[key] = cfg.at(key);
  if (cfg.contains("temperature")) st["solver"] = {{"temperature", cfg.at("temperature")}};
  if (cfg.contains("T")) st["task_options"] = {{"T", cfg.at("T")}};
  if (cfg.contains("init")) st["init"] = cfg.at("init");
  st["config_hash"] = hash;
  return st;
}

int run_simulate(const ConfigBuilder& cb) {
  const json& cfg = cb.get();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string hash = config_hash_of(cb.text());
  const auto dir = ensure_out_dir(cfg);

  const std::string task = cfg.at("task").get<std::string>();
  const std::string variant = cfg.at("variant").get<std::string>();
  DatasetHandle ds;
  check(nioc_dataset_generate(task.c_str(), variant.c_str(),
                              generation_options(cfg, hash).dump().c_str(), &ds.ptr),
        "simulate");

  CStr dataset_json;
  check(nioc_dataset_to_json(ds.ptr, &dataset_json.ptr), "serialize dataset");
  spill((dir / "dataset.json").string(), dataset_json.str());

  CStr csv;
  check(nioc_dataset_to_csv(ds.ptr, &csv.ptr), "serialize trajectories");
  spill((dir / "trajectories.csv").string(), provenance_of(cb.text()) + csv.str());

  CStr stats;
  check(nioc_dataset_stats(ds.ptr, &stats.ptr), "dataset stats");
  const json sj = json::parse(stats.str());
  std::cout << task << "/" << variant << ": " << sj.at("n_traj").get<int>()
            << " trajectories, T=" << sj.at("T").get<int>() << ", n=" << sj.at("n").get<int>()
            << "\n";
  if (sj.at("cost").is_object())
    std::cout << "cost: mean=" << sj.at("cost").at("mean").get<double>()
              << " min=" << sj.at("cost").at("min").get<double>()
              << " max=" << sj.at("cost").at("max").get<double>() << "\n";
  if (sj.at("endpoint_spread").is_number())
    std::cout << "endpoint spread: " << sj.at("endpoint_spread").get<double>() << "\n";
  std::cout << "wrote " << (dir / "dataset.json").string() << " and "
            << (dir / "trajectories.csv").string() << "\n";

  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  append_run_log(dir, "simulate task=" + task + " variant=" + variant + " config_hash=" + hash +
                          " wrote dataset.json trajectories.csv (" + std::to_string(dt) + "s)");
  return 0;
}

int run_fit(const ConfigBuilder& cb) {
  const json& cfg = cb.get();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string hash = config_hash_of(cb.text());
  const auto dir = ensure_out_dir(cfg);

  const std::string dataset_path = cfg.at("dataset").get<std::string>();
  const std::string text = slurp(dataset_path);
  DatasetHandle ds;
  check(nioc_dataset_parse(text.c_str(), &ds.ptr), "dataset " + dataset_path);

  std::string variant = cfg.at("variant").get<std::string>();
  std::string task = "unknown";
  {
    // header fields for reporting; the parse above already validated them
    const json dj = json::parse(text);
    task = dj.value("task", task);
    if (variant == "auto") variant = dj.value("variant", "full");
  }
  const std::string method = cfg.at("method").get<std::string>();

  CStr fit_json;
  check(nioc_fit(ds.ptr, method.c_str(), variant.c_str(), fit_settings(cfg, hash).dump().c_str(),
                 &fit_json.ptr),
        "fit");
  spill((dir / "fit.json").string(), fit_json.str());

  const json fj = json::parse(fit_json.str());
  std::ostringstream line;
  line << method << " on " << task << "/" << variant
       << ": loglik=" << fj.at("loglik").get<double>() << ", theta_hat={";
  bool first = true;
  for (const auto& [name, value] : fj.at("theta_hat").items()) {
    line << (first ? "" : ", ") << name << "=" << value.get<double>();
    first = false;
  }
  line << "}, " << fj.at("restarts").size() << " restarts";
  std::cout << line.str() << "\n";
  std::cout << "wrote " << (dir / "fit.json").string() << "\n";

  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  append_run_log(dir, "fit dataset=" + dataset_path + " method=" + method + " config_hash=" +
                          hash + " wrote fit.json (" + std::to_string(dt) + "s)");
  return 0;
}

int run_benchmark(const ConfigBuilder& cb) {
  const json& cfg = cb.get();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string hash = config_hash_of(cb.text());
  const auto dir = ensure_out_dir(cfg);

  const std::string task = cfg.at("task").get<std::string>();
  const std::string variant = cfg.at("variant").get<std::string>();
  const std::string method = cfg.at("method").get<std::string>();

  json st;
  st["n_datasets"] = cfg.at("n_datasets");
  st["n_traj"] = cfg.at("n_traj");
  st["seed"] = cfg.at("seed");
  if (cfg.contains("agent")) st["agent"] = cfg.at("agent");
  if (cfg.contains("temperature")) st["gen_solver"] = {{"temperature", cfg.at("temperature")}};
  st["fit"] = fit_settings(cfg, hash);
  st["fit"].erase("config_hash");
  st["fit"].erase("seed");  // fit seeds are derived per dataset
  if (cfg.contains("ranges")) st["ranges"] = cfg.at("ranges");
  st["config_hash"] = hash;

  CStr csv, summary;
  check(nioc_benchmark(task.c_str(), variant.c_str(), method.c_str(), st.dump().c_str(),
                       &csv.ptr, &summary.ptr),
        "benchmark");
  spill((dir / "report.csv").string(), provenance_of(cb.text()) + csv.str());
  spill((dir / "summary.json").string(), summary.str());

  const json sj = json::parse(summary.str());
  std::cout << task << "/" << variant << "/" << method << ": pooled median abs rel err = ";
  if (sj.at("aggregate_median").is_number())
    std::cout << sj.at("aggregate_median").get<double>();
  else
    std::cout << "n/a";
  std::cout << " over " << sj.at("n_datasets").get<int>() << " datasets ("
            << sj.at("rows").get<int>() << " rows, " << sj.at("failures").size()
            << " failures)\n";
  std::cout << "wrote " << (dir / "report.csv").string() << " and "
            << (dir / "summary.json").string() << "\n";

  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  append_run_log(dir, "benchmark task=" + task + " variant=" + variant + " method=" + method +
                          " config_hash=" + hash + " wrote report.csv summary.json (" +
                          std::to_string(dt) + "s)");
  return 0;
}

// Light-dark disentangling: simulate each c on the grid with both the
// partially observable planner and the fully observable controller, fit
// both methods to every cell, and record how far the mean trajectory
// detours toward the light (max over time of mean x_0; the run starts at
// x_0 = 0 and both targets sit at x_0 = p).
double detour_of(const std::string& dataset_json) {
  const json dj = json::parse(dataset_json);
  const auto& trajs = dj.at("trajectories");
  if (trajs.empty()) return 0.0;
  const std::size_t T = trajs[0].size();
  double best = -1e300;
  for (std::size_t t = 0; t < T; ++t) {
    double mean = 0.0;
    for (const auto& traj : trajs) mean += traj[t][0].get<double>();
    mean /= static_cast<double>(trajs.size());
    best = std::max(best, mean);
  }
  return best;
}

std::string grid_label(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", c);
  return buf;
}

int run_lightdark_study(const ConfigBuilder& cb) {
  const json& cfg = cb.get();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string hash = config_hash_of(cb.text());
  const auto dir = ensure_out_dir(cfg);

  const std::vector<double> grid = cfg.at("c_grid").get<std::vector<double>>();
  const double sigma = cfg.at("sigma").get<double>();
  const double p = cfg.at("p").get<double>();
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();

  std::string study = provenance_of(cb.text()) +
                      "c_true,agent,method,c_hat,p_hat,sigma_hat,loglik,detour,wall_time_s\n";
  std::vector<std::string> traj_files;

  for (std::size_t ci = 0; ci < grid.size(); ++ci) {
    const double c = grid[ci];
    const char* agents[] = {"planner", "fo_controller"};
    for (int ai = 0; ai < 2; ++ai) {
      json gen = cfg;
      gen["theta"] = {{"c", c}, {"p", p}, {"sigma", sigma}};
      gen["agent"] = agents[ai];
      gen["seed"] = seed + 97 * ci + 13 * static_cast<std::uint64_t>(ai);
      const json opts = generation_options(gen, hash);

      DatasetHandle ds;
      check(nioc_dataset_generate("lightdark", "partial", opts.dump().c_str(), &ds.ptr),
            "simulate c=" + grid_label(c) + " agent=" + agents[ai]);

      CStr dataset_json;
      check(nioc_dataset_to_json(ds.ptr, &dataset_json.ptr), "serialize dataset");
      const double detour = detour_of(dataset_json.str());

      CStr traj_csv;
      check(nioc_dataset_to_csv(ds.ptr, &traj_csv.ptr), "serialize trajectories");
      const std::string traj_name =
          "trajectories_c" + grid_label(c) + "_" + agents[ai] + ".csv";
      spill((dir / traj_name).string(), provenance_of(cb.text()) + traj_csv.str());
      traj_files.push_back(traj_name);

      for (const char* method : {"ours", "baseline"}) {
        CStr fit_json;
        check(nioc_fit(ds.ptr, method, "partial", fit_settings(cfg, hash).dump().c_str(),
                       &fit_json.ptr),
              std::string("fit ") + method + " c=" + grid_label(c));
        const json fj = json::parse(fit_json.str());
        const auto& th = fj.at("theta_hat");
        char row[256];
        std::snprintf(row, sizeof row, "%.17g,%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", c,
                      agents[ai], method, th.at("c").get<double>(), th.at("p").get<double>(),
                      th.at("sigma").get<double>(), fj.at("loglik").get<double>(), detour,
                      fj.at("wall_time_s").get<double>());
        study += row;
        std::cout << "c=" << grid_label(c) << " agent=" << agents[ai] << " " << method
                  << ": c_hat=" << th.at("c").get<double>()
                  << " sigma_hat=" << th.at("sigma").get<double>() << " detour=" << detour
                  << "\n";
      }
    }
  }

  spill((dir / "study.csv").string(), study);
  std::cout << "wrote " << (dir / "study.csv").string() << " and " << traj_files.size()
            << " trajectory files\n";

  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  append_run_log(dir, "lightdark-study cells=" + std::to_string(grid.size() * 2) +
                          " config_hash=" + hash + " wrote study.csv (" + std::to_string(dt) +
                          "s)");
  return 0;
}

const char* kConfigSchemaNote =
    "Config file: JSON object; flags override file values. Keys per command:\n"
    "  simulate:        task, variant, theta, n_traj, seed, agent, temperature, T, out\n"
    "  fit:             dataset, variant, method, restarts, seed, jobs, max_iterations,\n"
    "                   temperature, T, init, out\n"
    "  benchmark:       task, variant, method, n_datasets, n_traj, seed, agent, restarts,\n"
    "                   jobs, max_iterations, temperature, T, ranges, out\n"
    "  lightdark-study: c_grid, sigma, p, n_traj, seed, restarts, jobs, max_iterations,\n"
    "                   temperature, T, out\n"
    "The machine-readable schema ships as docs/config_schema.json.\n"
    "Seed fallback: NIOC_SEED. Exit codes: 0 ok, 2 config/IO, 3 solver, 4 optimization.";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic optimal control likelihoods: simulate, fit, benchmark."};
  app.footer(kConfigSchemaNote);
  app.require_subcommand(1);
  app.set_version_flag("--version", nioc_version());

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values")
      ->expected(1);

  // flag targets; only values the user actually passed are adopted
  std::string task, variant = "full", method = "ours", agent, theta_text, dataset_path;
  std::string out_dir = ".", c_grid_text, init_text;
  int n_traj = 50, n_datasets = 10, restarts = 10, jobs = 1, max_iterations = 100, horizon = 0;
  std::uint64_t seed = 0;
  double temperature = -1.0, sigma = 0.2, p_true = 0.0;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->fallthrough();  // parent options (--config) may follow the subcommand
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "RNG seed (fallback: NIOC_SEED, then 0)");
  };

  CLI::App* sim = app.add_subcommand("simulate", "solve a task and write trajectories");
  sim->add_option("--task", task, "task id");
  sim->add_option("--variant", variant, "full | partial");
  sim->add_option("--theta", theta_text, "parameters, e.g. c_a=0.1,c_v=0.1,sigma_m=0.1");
  sim->add_option("--n-traj", n_traj, "trajectories to roll out");
  sim->add_option("--agent", agent, "planner | fo_controller");
  sim->add_option("--temperature", temperature, "policy temperature; negative = task default");
  sim->add_option("--T", horizon, "horizon override");
  add_common(sim);

  CLI::App* fit = app.add_subcommand("fit", "maximum likelihood fit on a dataset file");
  fit->add_option("--dataset", dataset_path, "dataset JSON path");
  fit->add_option("--variant", variant, "full | partial | auto (use the dataset's)");
  fit->add_option("--method", method, "ours | baseline");
  fit->add_option("--restarts", restarts, "optimizer restarts");
  fit->add_option("--jobs", jobs, "worker threads across restarts");
  fit->add_option("--max-iterations", max_iterations, "quasi-Newton iterations per restart");
  fit->add_option("--temperature", temperature, "policy temperature; negative = task default");
  fit->add_option("--T", horizon, "horizon override");
  fit->add_option("--init", init_text, "first restart start, e.g. c_a=0.1,c_v=0.1");
  add_common(fit);

  CLI::App* bench = app.add_subcommand("benchmark", "sample, simulate, fit, score");
  bench->add_option("--task", task, "task id");
  bench->add_option("--variant", variant, "full | partial");
  bench->add_option("--method", method, "ours | baseline");
  bench->add_option("--n-datasets", n_datasets, "parameter draws");
  bench->add_option("--n-traj", n_traj, "trajectories per dataset");
  bench->add_option("--agent", agent, "planner | fo_controller");
  bench->add_option("--restarts", restarts, "optimizer restarts per fit");
  bench->add_option("--jobs", jobs, "worker threads across restarts");
  bench->add_option("--max-iterations", max_iterations, "quasi-Newton iterations per restart");
  bench->add_option("--temperature", temperature, "policy temperature; negative = task default");
  bench->add_option("--T", horizon, "horizon override");
  add_common(bench);

  CLI::App* study = app.add_subcommand(
      "lightdark-study", "simulate and fit the light-dark c grid with both agents and methods");
  study->add_option("--c-grid", c_grid_text, "comma separated c values, e.g. 0,0.5,1");
  study->add_option("--sigma", sigma, "true observation noise scale");
  study->add_option("--p", p_true, "true target parameter");
  study->add_option("--n-traj", n_traj, "trajectories per cell");
  study->add_option("--restarts", restarts, "optimizer restarts per fit");
  study->add_option("--jobs", jobs, "worker threads across restarts");
  study->add_option("--max-iterations", max_iterations, "quasi-Newton iterations per restart");
  study->add_option("--temperature", temperature, "policy temperature; negative = task default");
  study->add_option("--T", horizon, "horizon override");
  add_common(study);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();

  const auto allowed = [&]() -> std::vector<std::string> {
    if (name == "simulate")
      return {"task", "variant", "theta", "n_traj", "seed", "agent", "temperature", "T", "out"};
    if (name == "fit")
      return {"dataset", "variant", "method",      "restarts", "seed", "jobs",
              "max_iterations", "temperature", "T", "init", "out"};
    if (name == "benchmark")
      return {"task",     "variant", "method", "n_datasets",     "n_traj",      "seed",
              "agent",    "restarts", "jobs",  "max_iterations", "temperature", "T",
              "ranges",   "out"};
    return {"c_grid", "sigma", "p",           "n_traj", "seed", "restarts",
            "jobs",   "max_iterations", "temperature", "T",     "out"};
  }();

  ConfigBuilder cb(cmd, config_path, allowed);
  const auto flag_count = [&](const std::string& flag) -> std::size_t {
    const CLI::Option* opt = cmd->get_option_no_throw("--" + flag);
    return opt ? opt->count() : 0;
  };

  cb.put("out", "out", out_dir);
  if (flag_count("seed") > 0)
    cb.mutable_get()["seed"] = seed;
  else
    cb.put_default("seed", seed_fallback());

  const auto put_if = [&](const char* key, const char* flag, const json& value) {
    if (flag_count(flag) > 0) cb.mutable_get()[key] = value;
  };
  put_if("variant", "variant", variant);
  put_if("temperature", "temperature", temperature);
  put_if("T", "T", horizon);
  put_if("jobs", "jobs", jobs);

  if (name == "simulate") {
    put_if("task", "task", task);
    put_if("theta", "theta", parse_assignments(theta_text, "--theta"));
    put_if("n_traj", "n-traj", n_traj);
    put_if("agent", "agent", agent);
    cb.put_default("n_traj", n_traj);
    if (!cb.get().contains("task")) die(2, "simulate: task is required");
    if (!cb.get().contains("theta")) die(2, "simulate: theta is required");
    if (!cb.get().contains("variant"))
      cb.mutable_get()["variant"] = default_variant(cb.get().at("task").get<std::string>());
    return run_simulate(cb);
  }
  if (name == "fit") {
    put_if("dataset", "dataset", dataset_path);
    put_if("method", "method", method);
    put_if("restarts", "restarts", restarts);
    put_if("max_iterations", "max-iterations", max_iterations);
    put_if("init", "init", init_text.empty() ? json::object() : parse_assignments(init_text, "--init"));
    cb.put_default("variant", "auto");
    cb.put_default("method", method);
    cb.put_default("restarts", restarts);
    if (!cb.get().contains("dataset")) die(2, "fit: dataset is required");
    return run_fit(cb);
  }
  if (name == "benchmark") {
    put_if("task", "task", task);
    put_if("method", "method", method);
    put_if("n_datasets", "n-datasets", n_datasets);
    put_if("n_traj", "n-traj", n_traj);
    put_if("agent", "agent", agent);
    put_if("restarts", "restarts", restarts);
    put_if("max_iterations", "max-iterations", max_iterations);
    cb.put_default("method", method);
    cb.put_default("n_datasets", n_datasets);
    cb.put_default("n_traj", n_traj);
    cb.put_default("restarts", restarts);
    if (!cb.get().contains("task")) die(2, "benchmark: task is required");
    if (!cb.get().contains("variant"))
      cb.mutable_get()["variant"] = default_variant(cb.get().at("task").get<std::string>());
    return run_benchmark(cb);
  }

  put_if("c_grid", "c-grid",
         c_grid_text.empty() ? json::array() : json(parse_grid(c_grid_text, "--c-grid")));
  put_if("sigma", "sigma", sigma);
  put_if("p", "p", p_true);
  put_if("n_traj", "n-traj", n_traj);
  put_if("restarts", "restarts", restarts);
  put_if("max_iterations", "max-iterations", max_iterations);
  cb.put_default("c_grid", json::array({0.0, 0.5, 1.0}));
  cb.put_default("sigma", sigma);
  cb.put_default("p", p_true);
  cb.put_default("n_traj", n_traj);
  cb.put_default("restarts", restarts);
  return run_lightdark_study(cb);
}

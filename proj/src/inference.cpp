#include "nioc/inference.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <thread>

#include "nioc/baseline.hpp"
#include "nioc/likelihood.hpp"
#include "nioc/simulate.hpp"
#include "nioc/tasks.hpp"

namespace nioc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One optimizer-space coordinate: bounds and how restarts sample it.
struct Coordinate {
  double lo = 0.0;   // box bound, optimizer space
  double hi = 0.0;
  double draw_lo = 0.0;  // restart sampling range, natural space
  double draw_hi = 0.0;
  bool log_draw = true;
  bool positive = true;
};

// The search box extends one decade past the sampling range for log
// coordinates and one range-width for linear ones, so the optimum of a
// slightly misspecified model is reachable without letting the search
// wander into regimes where the solver has no chance.
std::vector<Coordinate> coordinate_layout(const std::vector<ParamSpec>& schema,
                                          const ParamVector& prototype,
                                          const std::map<std::string, std::pair<double, double>>& ranges) {
  std::vector<Coordinate> coords;
  for (const std::string& name : prototype.names()) {
    const auto it = std::find_if(schema.begin(), schema.end(),
                                 [&](const ParamSpec& s) { return s.name == name; });
    if (it == schema.end()) throw InvalidArgument("parameter '" + name + "' is not in the task schema");
    Coordinate c;
    c.positive = it->positive;
    c.log_draw = it->log_range;
    c.draw_lo = it->range_lo;
    c.draw_hi = it->range_hi;
    const auto ov = ranges.find(name);
    if (ov != ranges.end()) {
      c.draw_lo = ov->second.first;
      c.draw_hi = ov->second.second;
    }
    if (!(c.draw_lo <= c.draw_hi)) throw InvalidArgument("empty range for parameter '" + name + "'");
    if (c.positive) {
      const double lo = std::max(c.draw_lo, 1e-12);
      const double hi = std::max(c.draw_hi, lo);
      c.lo = std::log(lo) - std::log(10.0);
      c.hi = std::log(hi) + std::log(10.0);
    } else {
      const double w = std::max(c.draw_hi - c.draw_lo, 1.0);
      c.lo = c.draw_lo - w;
      c.hi = c.draw_hi + w;
    }
    coords.push_back(c);
  }
  return coords;
}

VectorXd clamp_to_box(VectorXd z, const std::vector<Coordinate>& coords) {
  for (int i = 0; i < z.size(); ++i) z[i] = std::min(std::max(z[i], coords[i].lo), coords[i].hi);
  return z;
}

ParamVector draw_start(const std::vector<Coordinate>& coords, const ParamVector& prototype,
                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  ParamVector theta;
  const auto names = prototype.names();
  for (size_t i = 0; i < names.size(); ++i) {
    const Coordinate& c = coords[i];
    double value;
    if (c.log_draw) {
      const double lo = std::log(std::max(c.draw_lo, 1e-12));
      const double hi = std::log(std::max(c.draw_hi, 1e-12));
      value = std::exp(lo + (hi - lo) * uni(rng));
    } else {
      value = c.draw_lo + (c.draw_hi - c.draw_lo) * uni(rng);
    }
    theta.set(names[i], value, c.positive);
  }
  return theta;
}

struct LocalResult {
  VectorXd z;
  double value = kInf;  // objective (negative log-likelihood)
  bool finite = false;
};

// Box-projected BFGS with Armijo backtracking. The objective returns +inf
// for rejected points; the gradient falls back to one-sided differences
// when a probe lands on a rejected point.
template <typename Obj>
LocalResult minimize_in_box(const Obj& objective, VectorXd z0, const std::vector<Coordinate>& coords,
                            const FitSettings& st) {
  const int p = static_cast<int>(z0.size());
  LocalResult out;
  out.z = clamp_to_box(std::move(z0), coords);
  out.value = objective(out.z);
  if (!std::isfinite(out.value)) return out;
  out.finite = true;

  const auto gradient = [&](const VectorXd& z, double fz) {
    VectorXd g = VectorXd::Zero(p);
    for (int i = 0; i < p; ++i) {
      VectorXd zp = z, zm = z;
      zp[i] += st.fd_step;
      zm[i] -= st.fd_step;
      const double fp = objective(zp);
      const double fm = objective(zm);
      if (std::isfinite(fp) && std::isfinite(fm))
        g[i] = (fp - fm) / (2.0 * st.fd_step);
      else if (std::isfinite(fp))
        g[i] = (fp - fz) / st.fd_step;
      else if (std::isfinite(fm))
        g[i] = (fz - fm) / st.fd_step;
    }
    return g;
  };

  VectorXd g = gradient(out.z, out.value);
  MatrixXd H = MatrixXd::Identity(p, p);
  for (int it = 0; it < st.max_iterations; ++it) {
    if (g.cwiseAbs().maxCoeff() < st.gradient_tol) break;
    VectorXd d = -(H * g);
    if (d.dot(g) >= 0.0) {  // not a descent direction: reset the metric
      H = MatrixXd::Identity(p, p);
      d = -g;
    }
    double alpha = 1.0;
    VectorXd z_new;
    double f_new = kInf;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      z_new = clamp_to_box(out.z + alpha * d, coords);
      const VectorXd step = z_new - out.z;
      if (step.cwiseAbs().maxCoeff() < 1e-12) break;
      f_new = objective(z_new);
      if (std::isfinite(f_new) && f_new <= out.value + 1e-4 * g.dot(step)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    const VectorXd g_new = gradient(z_new, f_new);
    const VectorXd s = z_new - out.z;
    const VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const MatrixXd I = MatrixXd::Identity(p, p);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    const double drop = out.value - f_new;
    out.z = z_new;
    out.value = f_new;
    g = g_new;
    if (drop < st.value_tol * std::max(1.0, std::abs(out.value))) break;
  }
  return out;
}

}  // namespace

std::string fit_method_name(FitMethod m) { return m == FitMethod::Ours ? "ours" : "baseline"; }

FitMethod fit_method_from_name(const std::string& s) {
  if (s == "ours") return FitMethod::Ours;
  if (s == "baseline") return FitMethod::Baseline;
  throw InvalidArgument("unknown fit method: " + s);
}

double dataset_score(const Dataset& ds, FitMethod method, Variant variant, const ParamVector& theta,
                     const SolverSettings& solver, const std::map<std::string, double>& task_options) {
  const PomdpModel mdl = instantiate(ds.task, theta, variant, task_options);
  return method == FitMethod::Ours ? dataset_log_likelihood(mdl, ds, solver)
                                   : baseline_dataset_log_likelihood(mdl, ds, solver);
}

FitResult fit(const Dataset& ds, FitMethod method, Variant variant, const FitSettings& settings) {
  if (ds.trajectories.empty()) throw InvalidArgument("cannot fit an empty dataset");
  if (settings.restarts < 1) throw InvalidArgument("restarts must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();

  const std::vector<ParamSpec> schema = task_param_spec(ds.task, variant);
  ParamVector prototype;
  for (const auto& s : schema) prototype.set(s.name, s.default_value, s.positive);
  const std::vector<Coordinate> coords = coordinate_layout(schema, prototype, {});

  // Starting points come out of one serial stream so the schedule does
  // not depend on how many workers run the restarts.
  std::mt19937_64 rng(mix_seed(settings.seed, 0x5EED));
  std::vector<ParamVector> starts(settings.restarts);
  for (int r = 0; r < settings.restarts; ++r) {
    if (r == 0 && !settings.init.empty()) {
      // Realign the user-provided start to the schema so the optimizer
      // coordinates match; positivity flags come from the schema.
      ParamVector start;
      for (const auto& s : schema) {
        if (!settings.init.has(s.name))
          throw MissingParameter("fit start lacks parameter '" + s.name + "'");
        start.set(s.name, settings.init.at(s.name), s.positive);
      }
      starts[r] = std::move(start);
    } else {
      starts[r] = draw_start(coords, prototype, rng);
    }
  }

  std::vector<RestartRecord> records(settings.restarts);
  std::vector<long long> evals(settings.restarts, 0);
  const auto run_one = [&](int r) {
    const auto objective = [&, r](const VectorXd& z) {
      ++evals[r];
      const ParamVector theta = prototype.from_optimizer_space(z);
      const double ll = dataset_score(ds, method, variant, theta, settings.solver, settings.task_options);
      return std::isfinite(ll) ? -ll : kInf;
    };
    const LocalResult local = minimize_in_box(objective, starts[r].to_optimizer_space(), coords, settings);
    RestartRecord rec;
    rec.start = starts[r];
    rec.end = local.finite ? prototype.from_optimizer_space(local.z) : starts[r];
    rec.value = -local.value;
    rec.status = local.finite ? "ok" : "no_finite_value";
    records[r] = std::move(rec);
  };

  const int workers = std::min(std::max(settings.jobs, 1), settings.restarts);
  if (workers <= 1) {
    for (int r = 0; r < settings.restarts; ++r) run_one(r);
  } else {
    std::vector<std::exception_ptr> errors(settings.restarts);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int k = 0; k < workers; ++k) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < settings.restarts; r = next.fetch_add(1)) {
          try {
            run_one(r);
          } catch (...) {
            errors[r] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  FitResult result;
  bool any_finite = false;
  for (int r = 0; r < settings.restarts; ++r) {
    result.evaluations += evals[r];
    const RestartRecord& rec = records[r];
    if (rec.status == "ok" && (!any_finite || rec.value > result.loglik)) {
      any_finite = true;
      result.loglik = rec.value;
      result.theta_hat = rec.end;
    }
    result.restarts.push_back(std::move(records[r]));
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!any_finite)
    throw AllRestartsFailed("no restart of " + ds.task + "/" + fit_method_name(method) +
                            " reached a finite log-likelihood");
  return result;
}

std::vector<RelativeError> relative_errors(const ParamVector& truth, const ParamVector& estimate) {
  std::vector<RelativeError> out;
  for (const std::string& name : truth.names()) {
    if (!estimate.has(name)) throw InvalidArgument("estimate lacks parameter '" + name + "'");
    RelativeError e;
    e.name = name;
    e.truth = truth.at(name);
    e.estimate = estimate.at(name);
    if (truth.is_positive(name)) {
      if (e.truth == 0.0)
        throw DivisionByZero("relative error of '" + name + "' against a true value of zero");
      e.error = std::abs((e.truth - e.estimate) / e.truth);
    } else {
      e.error = std::abs(e.truth - e.estimate) / std::max(std::abs(e.truth), 1.0);
      e.fallback = true;
    }
    out.push_back(std::move(e));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const size_t k = values.size() / 2;
  return values.size() % 2 ? values[k] : 0.5 * (values[k - 1] + values[k]);
}

EvalReport benchmark(const std::string& task_id, Variant variant, FitMethod method,
                     const BenchmarkSettings& settings) {
  const std::vector<ParamSpec> schema = task_param_spec(task_id, variant);
  ParamVector prototype;
  for (const auto& s : schema) prototype.set(s.name, s.default_value, s.positive);
  const std::vector<Coordinate> coords = coordinate_layout(schema, prototype, settings.ranges);

  // All generating parameters come from one stream so the draw sequence
  // is independent of per-dataset outcomes.
  std::mt19937_64 theta_rng(mix_seed(settings.seed, 1));
  std::vector<ParamVector> thetas;
  for (int d = 0; d < settings.n_datasets; ++d)
    thetas.push_back(draw_start(coords, prototype, theta_rng));

  EvalReport report;
  std::vector<double> pooled;
  for (int d = 0; d < settings.n_datasets; ++d) {
    try {
      GenerateOptions gen;
      gen.n_traj = settings.n_traj;
      gen.seed = mix_seed(settings.seed, 2 + 2 * static_cast<std::uint64_t>(d));
      gen.solver = settings.gen_solver;
      gen.agent = settings.agent;
      gen.task_options = settings.fit.task_options;
      const Dataset ds = generate_dataset(task_id, thetas[d], variant, gen);

      FitSettings fs = settings.fit;
      fs.seed = mix_seed(settings.seed, 3 + 2 * static_cast<std::uint64_t>(d));
      const FitResult fr = fit(ds, method, variant, fs);

      std::vector<double> per_dataset;
      for (const RelativeError& e : relative_errors(thetas[d], fr.theta_hat)) {
        EvalRow row;
        row.task = task_id;
        row.variant = variant;
        row.method = method;
        row.dataset_id = d;
        row.param_name = e.name;
        row.theta_true = e.truth;
        row.theta_hat = e.estimate;
        row.abs_rel_err = e.error;
        row.loglik = fr.loglik;
        row.wall_time_s = fr.wall_time_s;
        report.rows.push_back(std::move(row));
        per_dataset.push_back(e.error);
        pooled.push_back(e.error);
      }
      report.dataset_medians.emplace_back(d, median(std::move(per_dataset)));
    } catch (const Error& err) {
      report.failures.emplace_back(d, err.what());
    }
  }
  report.aggregate_median = median(std::move(pooled));
  return report;
}

}  // namespace nioc

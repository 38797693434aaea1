#include "nioc/baseline.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace nioc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double baseline_log_likelihood_given_controls(const PomdpModel& mdl, const MatrixXd& xs,
                                              const MatrixXd& us, const SolverSettings& settings,
                                              std::string* diag) {
  if (xs.cols() != mdl.n) throw InvalidArgument("baseline: trajectory must be T x n");
  if (us.rows() != xs.rows() - 1 || us.cols() != mdl.u_dim)
    throw InvalidArgument("baseline: controls must be (T-1) x u_dim");
  if (xs.rows() <= 1) return 0.0;
  try {
    const PomdpModel fo = mdl.partial() ? strip_observation(mdl) : mdl;
    const std::vector<StepLinearization> lin = linearize_along(fo, xs, us);
    const ControlLaw law = ilqg_backward_pass(fo, xs, us, settings);
    const MatrixXd eye = MatrixXd::Identity(fo.u_dim, fo.u_dim);
    const VectorXd v0 = VectorXd::Zero(fo.v_dim);
    double total = 0.0;
    for (int t = 0; t + 1 < static_cast<int>(xs.rows()); ++t) {
      const VectorXd x = xs.row(t).transpose();
      const VectorXd u = us.row(t).transpose();
      MatrixXd jv(fo.n, fo.v_dim);
      for (int i = 0; i < fo.v_dim; ++i) jv.col(i) = lin[t].gamma[i];
      total += gaussian_logpdf(Gaussian(fo.f(x, u, v0), jv * jv.transpose()),
                               xs.row(t + 1).transpose());
      MatrixXd pol = law.temperature * law.Quu[t].llt().solve(eye);
      pol = 0.5 * (pol + pol.transpose()).eval();
      total += gaussian_logpdf(Gaussian(law.mean_control(x, t), pol), u);
    }
    return total;
  } catch (const SingularCovariance& e) {
    if (diag) *diag = e.what();
    return kNegInf;
  } catch (const NonFiniteValue& e) {
    if (diag) *diag = e.what();
    return kNegInf;
  } catch (const DivergedValueRecursion& e) {
    if (diag) *diag = e.what();
    return kNegInf;
  }
}

double baseline_log_likelihood(const PomdpModel& mdl, const MatrixXd& xs,
                               const SolverSettings& settings, std::string* diag) {
  if (xs.cols() != mdl.n) throw InvalidArgument("baseline: trajectory must be T x n");
  if (xs.rows() <= 1) return 0.0;
  MatrixXd us;
  try {
    us = estimate_controls(mdl, xs).us;
  } catch (const NonFiniteValue& e) {
    if (diag) *diag = e.what();
    return kNegInf;
  }
  return baseline_log_likelihood_given_controls(mdl, xs, us, settings, diag);
}

double baseline_dataset_log_likelihood(const PomdpModel& mdl, const Dataset& ds,
                                       const SolverSettings& settings, std::string* diag) {
  double total = 0.0;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    std::string local;
    const double li = baseline_log_likelihood(mdl, ds.trajectories[i].states, settings, &local);
    if (!std::isfinite(li)) {
      if (diag)
        *diag = "trajectory " + std::to_string(i) + ": " +
                (local.empty() ? "non-finite log likelihood" : local);
      return kNegInf;
    }
    total += li;
  }
  return total;
}

}  // namespace nioc

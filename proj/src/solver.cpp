#include "nioc/solver.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "nioc/gaussian.hpp"
#include "nioc/numdiff.hpp"

namespace nioc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BackwardCore {
  std::vector<MatrixXd> L;
  std::vector<VectorXd> m;
  std::vector<MatrixXd> Quu;  // clamped PD
};

MatrixXd clamp_spd(const MatrixXd& sym, double floor) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sym + sym.transpose()));
  VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev[i] = std::max(ev[i], floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void guard_value_block(const MatrixXd& block, double guard) {
  if (!block.allFinite()) throw NonFiniteValue("value recursion produced non-finite entries");
  if (block.cwiseAbs().maxCoeff() > guard)
    throw DivergedValueRecursion("value recursion exceeded the divergence guard");
}

// Standard recursion over state deviations, with the exact second-order
// contribution of control/state dependent noise columns.
BackwardCore fo_recursion(const std::vector<StepLinearization>& lin, const FinalQuadratic& fq,
                          const SolverSettings& st) {
  const int steps = static_cast<int>(lin.size());
  BackwardCore core;
  core.L.resize(steps);
  core.m.resize(steps);
  core.Quu.resize(steps);
  MatrixXd S = fq.cxx;
  VectorXd s = fq.cx;
  for (int t = steps - 1; t >= 0; --t) {
    const auto& ln = lin[t];
    MatrixXd Quu = ln.cuu + ln.B.transpose() * S * ln.B;
    MatrixXd Qux = ln.cux + ln.B.transpose() * S * ln.A;
    VectorXd qu = ln.cu + ln.B.transpose() * s;
    MatrixXd Qxx = ln.cxx + ln.A.transpose() * S * ln.A;
    VectorXd qx = ln.cx + ln.A.transpose() * s;
    for (size_t i = 0; i < ln.gamma.size(); ++i) {
      const MatrixXd SGx = S * ln.Gx[i];
      const MatrixXd SGu = S * ln.Gu[i];
      Quu += ln.Gu[i].transpose() * SGu;
      Qux += ln.Gu[i].transpose() * SGx;
      qu += ln.Gu[i].transpose() * (S * ln.gamma[i]);
      Qxx += ln.Gx[i].transpose() * SGx;
      qx += ln.Gx[i].transpose() * (S * ln.gamma[i]);
    }
    const MatrixXd QuuR = clamp_spd(Quu, st.reg_floor);
    const Eigen::LLT<MatrixXd> llt(QuuR);
    const MatrixXd L = -llt.solve(Qux);
    const VectorXd m = -llt.solve(qu);
    S = Qxx + Qux.transpose() * L + L.transpose() * Qux + L.transpose() * QuuR * L;
    S = 0.5 * (S + S.transpose()).eval();
    s = qx + Qux.transpose() * m + L.transpose() * (qu + QuuR * m);
    guard_value_block(S, st.divergence_guard);
    if (!s.allFinite()) throw NonFiniteValue("value recursion produced non-finite entries");
    core.L[t] = L;
    core.m[t] = m;
    core.Quu[t] = QuuR;
  }
  return core;
}

// Coupled recursion over (z, e): z is the belief-mean deviation from the
// nominal, e the estimation error. Their joint dynamics under the filter
// with gains K and policy du = m + L z are
//   z' = (A+BL) z + KH e + Bm + B Ctil xi + K sum_j dhat_j w_j
//   e' = (A-KH) e + sum_i chat_i v_i - K sum_j dhat_j w_j
// with noise columns chat_i = gamma_i + Gx_i (z+e) + Gu_i (m+Lz) and
// dhat_j = d_j + Dx_j (z+e). The value function is quadratic in (z, e):
// V = z'Sz z/2 + e'Se e/2 + z'Sze e + sz'z + se'e + const, and the
// control minimizes its expectation over e (zero mean), which is why only
// Sz and Se reach the controller blocks.
BackwardCore po_recursion(const std::vector<StepLinearization>& lin, const FinalQuadratic& fq,
                          const std::vector<MatrixXd>& K, const SolverSettings& st) {
  const int steps = static_cast<int>(lin.size());
  BackwardCore core;
  core.L.resize(steps);
  core.m.resize(steps);
  core.Quu.resize(steps);
  MatrixXd Sz = fq.cxx, Se = fq.cxx, Sze = fq.cxx;
  VectorXd sz = fq.cx, se = fq.cx;
  for (int t = steps - 1; t >= 0; --t) {
    const auto& ln = lin[t];

    MatrixXd Quu = ln.cuu + ln.B.transpose() * Sz * ln.B;
    MatrixXd Quz = ln.cux + ln.B.transpose() * Sz * ln.A;
    VectorXd qu = ln.cu + ln.B.transpose() * sz;
    for (size_t i = 0; i < ln.gamma.size(); ++i) {
      Quu += ln.Gu[i].transpose() * Se * ln.Gu[i];
      Quz += ln.Gu[i].transpose() * Se * ln.Gx[i];
      qu += ln.Gu[i].transpose() * (Se * ln.gamma[i]);
    }
    const MatrixXd QuuR = clamp_spd(Quu, st.reg_floor);
    const Eigen::LLT<MatrixXd> llt(QuuR);
    const MatrixXd L = -llt.solve(Quz);
    const VectorXd m = -llt.solve(qu);

    const MatrixXd& Kt = K[t];
    const MatrixXd Fz = ln.A + ln.B * L;
    const MatrixXd Fe = Kt * ln.H;
    const MatrixXd Ge = ln.A - Fe;
    const VectorXd f0 = ln.B * m;
    // Observation noise enters z' and e' with opposite signs, so its
    // quadratic weight collects all four value blocks.
    const MatrixXd W = Kt.transpose() * (Sz + Se - Sze - Sze.transpose()) * Kt;

    MatrixXd Sz_n = ln.cxx + L.transpose() * ln.cuu * L + L.transpose() * ln.cux +
                    ln.cux.transpose() * L + Fz.transpose() * Sz * Fz;
    MatrixXd Se_n = ln.cxx + Fe.transpose() * Sz * Fe + Ge.transpose() * Se * Ge +
                    Fe.transpose() * Sze * Ge + Ge.transpose() * Sze.transpose() * Fe;
    MatrixXd Sze_n = ln.cxx + L.transpose() * ln.cux + Fz.transpose() * Sz * Fe + Fz.transpose() * Sze * Ge;
    VectorXd sz_n = ln.cx + L.transpose() * ln.cu + L.transpose() * (ln.cuu * m) + ln.cux.transpose() * m +
                    Fz.transpose() * (Sz * f0 + sz);
    VectorXd se_n = ln.cx + ln.cux.transpose() * m + Fe.transpose() * (Sz * f0 + sz) +
                    Ge.transpose() * (Sze.transpose() * f0 + se);
    for (size_t i = 0; i < ln.gamma.size(); ++i) {
      const MatrixXd Cz = ln.Gx[i] + ln.Gu[i] * L;
      const VectorXd c0 = ln.gamma[i] + ln.Gu[i] * m;
      const MatrixXd SeCz = Se * Cz;
      Sz_n += Cz.transpose() * SeCz;
      Se_n += ln.Gx[i].transpose() * Se * ln.Gx[i];
      Sze_n += SeCz.transpose() * ln.Gx[i];
      sz_n += Cz.transpose() * (Se * c0);
      se_n += ln.Gx[i].transpose() * (Se * c0);
    }
    for (size_t j = 0; j < ln.d.size(); ++j) {
      const MatrixXd WD = W * ln.Dx[j];
      const VectorXd Wd = W * ln.d[j];
      const MatrixXd quad = ln.Dx[j].transpose() * WD;
      Sz_n += quad;
      Se_n += quad;
      Sze_n += quad;
      sz_n += ln.Dx[j].transpose() * Wd;
      se_n += ln.Dx[j].transpose() * Wd;
    }
    Sz = 0.5 * (Sz_n + Sz_n.transpose()).eval();
    Se = 0.5 * (Se_n + Se_n.transpose()).eval();
    Sze = Sze_n;
    sz = sz_n;
    se = se_n;
    guard_value_block(Sz, st.divergence_guard);
    guard_value_block(Se, st.divergence_guard);
    guard_value_block(Sze, st.divergence_guard);
    if (!sz.allFinite() || !se.allFinite())
      throw NonFiniteValue("value recursion produced non-finite entries");
    core.L[t] = L;
    core.m[t] = m;
    core.Quu[t] = QuuR;
  }
  return core;
}

ControlLaw assemble_law(BackwardCore&& core, MatrixXd xbar, MatrixXd ubar, double temperature) {
  ControlLaw law;
  law.xbar = std::move(xbar);
  law.ubar = std::move(ubar);
  law.L = std::move(core.L);
  law.m = std::move(core.m);
  law.Quu = std::move(core.Quu);
  law.temperature = temperature;
  law.noise_chol.resize(law.Quu.size());
  const int nu = static_cast<int>(law.ubar.cols());
  const MatrixXd eye = MatrixXd::Identity(nu, nu);
  for (size_t t = 0; t < law.Quu.size(); ++t) {
    const MatrixXd inv = Eigen::LLT<MatrixXd>(law.Quu[t]).solve(eye);
    law.noise_chol[t] = MatrixXd(cholesky_with_jitter(temperature * inv).matrixL());
  }
  return law;
}

std::vector<MatrixXd> policy_covariances(const BackwardCore& core, double temperature, int nu) {
  std::vector<MatrixXd> cov(core.Quu.size());
  const MatrixXd eye = MatrixXd::Identity(nu, nu);
  for (size_t t = 0; t < core.Quu.size(); ++t) {
    const MatrixXd inv = Eigen::LLT<MatrixXd>(core.Quu[t]).solve(eye);
    cov[t] = 0.5 * temperature * (inv + inv.transpose());
  }
  return cov;
}

struct Candidate {
  MatrixXd xs, us;
  double objective = kInf;
};

// Deterministic rollout with feedback toward the previous nominal, scored
// by the true cost. Non-finite excursions score +inf so the line search
// backs off instead of aborting.
Candidate fo_candidate(const PomdpModel& mdl, const MatrixXd& xbar, const MatrixXd& ubar,
                       const BackwardCore& core, double eps) {
  Candidate c;
  c.xs.resize(mdl.T, mdl.n);
  c.us.resize(mdl.T - 1, mdl.u_dim);
  const VectorXd zv = VectorXd::Zero(mdl.v_dim);
  VectorXd x = mdl.b1.mean;
  double cost = 0.0;
  for (int t = 0; t < mdl.T - 1; ++t) {
    if (!x.allFinite()) return c;
    c.xs.row(t) = x.transpose();
    const VectorXd u = ubar.row(t).transpose() + eps * core.m[t] + core.L[t] * (x - xbar.row(t).transpose());
    if (!u.allFinite()) return c;
    c.us.row(t) = u.transpose();
    cost += mdl.step_cost(x, u, t);
    x = mdl.f(x, u, zv);
  }
  if (!x.allFinite()) return c;
  c.xs.row(mdl.T - 1) = x.transpose();
  cost += mdl.final_cost(x);
  if (std::isfinite(cost)) c.objective = cost;
  return c;
}

// Mean rollout plus joint second moments of (z, e) under the candidate
// policy, scored by the predicted expected cost: true cost at the mean
// plus trace corrections from the current quadratization. The covariance
// recursion mirrors the backward pass dynamics; noise magnitudes are
// evaluated at the candidate mean.
Candidate po_candidate(const PomdpModel& mdl, const std::vector<StepLinearization>& lin,
                       const FinalQuadratic& fq, const BackwardCore& core, const FilterGains& gains,
                       const std::vector<MatrixXd>& policy_cov, const MatrixXd& xbar,
                       const MatrixXd& ubar, double eps) {
  const int n = mdl.n;
  Candidate c;
  c.xs.resize(mdl.T, n);
  c.us.resize(mdl.T - 1, mdl.u_dim);
  const VectorXd zv = VectorXd::Zero(mdl.v_dim);
  VectorXd xhat = mdl.b1.mean;
  MatrixXd C = MatrixXd::Zero(2 * n, 2 * n);
  C.bottomRightCorner(n, n) = mdl.b1.cov;
  double J = 0.0;
  for (int t = 0; t < mdl.T - 1; ++t) {
    const auto& ln = lin[t];
    const MatrixXd& L = core.L[t];
    const MatrixXd& Kt = gains.K[t];
    if (!xhat.allFinite()) return c;
    c.xs.row(t) = xhat.transpose();
    const VectorXd zbar = xhat - xbar.row(t).transpose();
    const VectorXd du_mean = eps * core.m[t] + L * zbar;
    const VectorXd u = ubar.row(t).transpose() + du_mean;
    if (!u.allFinite()) return c;
    c.us.row(t) = u.transpose();

    const MatrixXd Czz = C.topLeftCorner(n, n);
    const MatrixXd Cze = C.topRightCorner(n, n);
    const MatrixXd Cee = C.bottomRightCorner(n, n);
    const MatrixXd cov_dx = Czz + Cze + Cze.transpose() + Cee;
    const MatrixXd cov_du = L * Czz * L.transpose() + policy_cov[t];
    const MatrixXd cov_dx_du = (Czz + Cze.transpose()) * L.transpose();
    J += mdl.step_cost(xhat, u, t) + 0.5 * (ln.cxx * cov_dx).trace() + (ln.cux * cov_dx_du).trace() +
         0.5 * (ln.cuu * cov_du).trace();

    const MatrixXd Fz = ln.A + ln.B * L;
    const MatrixXd Fe = Kt * ln.H;
    const MatrixXd Ge = ln.A - Fe;
    MatrixXd trans(2 * n, 2 * n);
    trans << Fz, Fe, MatrixXd::Zero(n, n), Ge;
    MatrixXd proc = MatrixXd::Zero(n, n);
    for (size_t i = 0; i < ln.gamma.size(); ++i) {
      const VectorXd c0 = ln.gamma[i] + ln.Gx[i] * zbar + ln.Gu[i] * du_mean;
      proc += c0 * c0.transpose();
    }
    MatrixXd obs = MatrixXd::Zero(n, n);
    for (size_t j = 0; j < ln.d.size(); ++j) {
      const VectorXd kd = Kt * (ln.d[j] + ln.Dx[j] * zbar);
      obs += kd * kd.transpose();
    }
    MatrixXd noise(2 * n, 2 * n);
    const MatrixXd pol = ln.B * policy_cov[t] * ln.B.transpose();
    noise << pol + obs, -obs, -obs, proc + obs;
    C = trans * C * trans.transpose() + noise;
    xhat = mdl.f(xhat, u, zv);
  }
  if (!xhat.allFinite()) return c;
  c.xs.row(mdl.T - 1) = xhat.transpose();
  const MatrixXd Cze = C.topRightCorner(n, n);
  const MatrixXd cov_dx = C.topLeftCorner(n, n) + Cze + Cze.transpose() + C.bottomRightCorner(n, n);
  J += mdl.final_cost(xhat) + 0.5 * (fq.cxx * cov_dx).trace();
  if (std::isfinite(J)) c.objective = J;
  return c;
}

}  // namespace

std::vector<StepLinearization> linearize_along(const PomdpModel& mdl, const MatrixXd& xs, const MatrixXd& us) {
  const int n = mdl.n;
  const int nu = mdl.u_dim;
  if (xs.rows() != mdl.T || xs.cols() != n) throw InvalidArgument("nominal states must be T x n");
  if (us.rows() != mdl.T - 1 || us.cols() != nu)
    throw InvalidArgument("nominal controls must be (T-1) x u_dim");
  const VectorXd zv = VectorXd::Zero(mdl.v_dim);
  std::vector<StepLinearization> lin(mdl.T - 1);
  for (int t = 0; t < mdl.T - 1; ++t) {
    StepLinearization& s = lin[t];
    const VectorXd x = xs.row(t).transpose();
    const VectorXd u = us.row(t).transpose();
    VectorXd stacked(n + nu);
    stacked << x, u;

    const auto fxu = [&](const VectorXd& p) { return mdl.f(p.head(n), p.tail(nu), zv); };
    const JacobianSet dyn = jacobian_groups(fxu, stacked, {n, nu});
    s.A = dyn.blocks[0];
    s.B = dyn.blocks[1];

    s.gamma.resize(mdl.v_dim);
    s.Gx.resize(mdl.v_dim);
    s.Gu.resize(mdl.v_dim);
    for (int i = 0; i < mdl.v_dim; ++i) {
      VectorXd ei = VectorXd::Zero(mdl.v_dim);
      ei[i] = 1.0;
      s.gamma[i] = mdl.f(x, u, ei) - mdl.f(x, u, zv);
      const auto col = [&](const VectorXd& p) {
        return VectorXd(mdl.f(p.head(n), p.tail(nu), ei) - mdl.f(p.head(n), p.tail(nu), zv));
      };
      const JacobianSet sens = jacobian_groups(col, stacked, {n, nu});
      s.Gx[i] = sens.blocks[0];
      s.Gu[i] = sens.blocks[1];
    }

    const auto cost = [&](const VectorXd& p) { return mdl.step_cost(p.head(n), p.tail(nu), t); };
    const Quadratization q = hessian_quadratize(cost, stacked);
    s.c0 = q.value;
    s.cx = q.gradient.head(n);
    s.cu = q.gradient.tail(nu);
    s.cxx = q.hessian.topLeftCorner(n, n);
    s.cux = q.hessian.bottomLeftCorner(nu, n);
    s.cuu = q.hessian.bottomRightCorner(nu, nu);

    if (mdl.partial()) {
      const VectorXd zw = VectorXd::Zero(mdl.w_dim);
      const auto hx = [&](const VectorXd& p) { return mdl.h(p, zw); };
      s.H = jacobian(hx, x);
      s.d.resize(mdl.w_dim);
      s.Dx.resize(mdl.w_dim);
      for (int j = 0; j < mdl.w_dim; ++j) {
        VectorXd ej = VectorXd::Zero(mdl.w_dim);
        ej[j] = 1.0;
        s.d[j] = mdl.h(x, ej) - mdl.h(x, zw);
        const auto dcol = [&](const VectorXd& p) { return VectorXd(mdl.h(p, ej) - mdl.h(p, zw)); };
        s.Dx[j] = jacobian(dcol, x);
      }
    }
  }
  return lin;
}

FinalQuadratic quadratize_final_cost(const PomdpModel& mdl, const VectorXd& x_final) {
  const Quadratization q = hessian_quadratize([&](const VectorXd& x) { return mdl.final_cost(x); }, x_final);
  return FinalQuadratic{q.value, q.gradient, q.hessian};
}

FilterGains ekf_forward(const PomdpModel& mdl, const std::vector<StepLinearization>& lin) {
  if (!mdl.partial()) throw InvalidArgument("filter gains require a partially observable model");
  FilterGains g;
  g.K.resize(mdl.T - 1);
  g.P.resize(mdl.T);
  g.P[0] = mdl.b1.cov;
  for (int t = 0; t < mdl.T - 1; ++t) {
    const auto& s = lin[t];
    MatrixXd R = MatrixXd::Zero(mdl.m, mdl.m);
    for (const auto& dj : s.d) R += dj * dj.transpose();
    const MatrixXd S = s.H * g.P[t] * s.H.transpose() + R;
    const auto llt = cholesky_with_jitter(S);
    const MatrixXd M = s.A * g.P[t] * s.H.transpose();
    const MatrixXd K = llt.solve(M.transpose()).transpose();
    MatrixXd Q = MatrixXd::Zero(mdl.n, mdl.n);
    for (const auto& gi : s.gamma) Q += gi * gi.transpose();
    const MatrixXd P = s.A * g.P[t] * s.A.transpose() + Q - K * M.transpose();
    g.K[t] = K;
    g.P[t + 1] = 0.5 * (P + P.transpose());
  }
  return g;
}

VectorXd ekf_step(const PomdpModel& mdl, const VectorXd& b, const VectorXd& u, const VectorXd& y,
                  const MatrixXd& K) {
  if (!mdl.partial()) throw InvalidArgument("ekf_step requires a partially observable model");
  const VectorXd predicted = mdl.f(b, u, VectorXd::Zero(mdl.v_dim));
  return predicted + K * (y - mdl.h(b, VectorXd::Zero(mdl.w_dim)));
}

VectorXd ControlLaw::mean_control(const VectorXd& b, int t) const {
  return ubar.row(t).transpose() + m[t] + L[t] * (b - xbar.row(t).transpose());
}

ControlLaw ilqg_backward_pass(const PomdpModel& mdl, const MatrixXd& xbar, const MatrixXd& ubar,
                              const SolverSettings& settings) {
  const double temp = settings.temperature < 0 ? mdl.default_temperature : settings.temperature;
  auto lin = linearize_along(mdl, xbar, ubar);
  const FinalQuadratic fq = quadratize_final_cost(mdl, xbar.row(mdl.T - 1).transpose());
  BackwardCore core;
  if (mdl.partial()) {
    const FilterGains gains = ekf_forward(mdl, lin);
    core = po_recursion(lin, fq, gains.K, settings);
  } else {
    core = fo_recursion(lin, fq, settings);
  }
  return assemble_law(std::move(core), xbar, ubar, temp);
}

VectorXd mce_policy_sample(const ControlLaw& law, const VectorXd& b, int t, const VectorXd& xi) {
  return law.mean_control(b, t) - law.noise_chol[t] * xi;
}

Rollout rollout_open_loop(const PomdpModel& mdl, const VectorXd& x0, const MatrixXd& us) {
  if (us.rows() != mdl.T - 1 || us.cols() != mdl.u_dim)
    throw InvalidArgument("controls must be (T-1) x u_dim");
  Rollout r;
  r.xs.resize(mdl.T, mdl.n);
  const VectorXd zv = VectorXd::Zero(mdl.v_dim);
  VectorXd x = x0;
  for (int t = 0; t < mdl.T - 1; ++t) {
    r.xs.row(t) = x.transpose();
    const VectorXd u = us.row(t).transpose();
    r.cost += mdl.step_cost(x, u, t);
    x = mdl.f(x, u, zv);
    if (!x.allFinite()) throw NonFiniteValue("open-loop rollout diverged");
  }
  r.xs.row(mdl.T - 1) = x.transpose();
  r.cost += mdl.final_cost(x);
  return r;
}

SolveResult ilqg_solve(const PomdpModel& mdl, const SolverSettings& settings) {
  const double temp = settings.temperature < 0 ? mdl.default_temperature : settings.temperature;
  const bool partial = mdl.partial();
  MatrixXd ubar = (mdl.init_controls.rows() == mdl.T - 1 && mdl.init_controls.cols() == mdl.u_dim)
                      ? mdl.init_controls
                      : MatrixXd::Zero(mdl.T - 1, mdl.u_dim);
  MatrixXd xbar = rollout_open_loop(mdl, mdl.b1.mean, ubar).xs;

  SolveResult res;
  double objective = kInf;
  int iterations = 0;
  for (int iter = 1; iter <= settings.max_iterations; ++iter) {
    iterations = iter;
    const auto lin = linearize_along(mdl, xbar, ubar);
    const FinalQuadratic fq = quadratize_final_cost(mdl, xbar.row(mdl.T - 1).transpose());
    FilterGains gains;
    BackwardCore core;
    std::vector<MatrixXd> pol_cov;
    if (partial) {
      gains = ekf_forward(mdl, lin);
      core = po_recursion(lin, fq, gains.K, settings);
      pol_cov = policy_covariances(core, temp, mdl.u_dim);
    } else {
      core = fo_recursion(lin, fq, settings);
    }
    const auto score = [&](double eps) {
      return partial ? po_candidate(mdl, lin, fq, core, gains, pol_cov, xbar, ubar, eps)
                     : fo_candidate(mdl, xbar, ubar, core, eps);
    };
    const double J0 = score(0.0).objective;

    Candidate accepted;
    bool improved = false;
    double eps = 1.0;
    for (int k = 0; k < settings.line_search_steps; ++k) {
      Candidate cand = score(eps);
      if (cand.objective < J0 - 1e-12 * (1.0 + std::abs(J0))) {
        accepted = std::move(cand);
        improved = true;
        break;
      }
      eps *= settings.line_search_factor;
    }
    if (!improved) {
      objective = J0;
      res.converged = true;
      break;
    }
    const double delta = (accepted.xs - xbar).cwiseAbs().maxCoeff();
    xbar = std::move(accepted.xs);
    ubar = std::move(accepted.us);
    objective = accepted.objective;
    if (delta < settings.tol) {
      res.converged = true;
      break;
    }
  }

  // One more pass at the accepted nominal so the returned law, gains, and
  // nominal are mutually consistent.
  const auto lin = linearize_along(mdl, xbar, ubar);
  const FinalQuadratic fq = quadratize_final_cost(mdl, xbar.row(mdl.T - 1).transpose());
  BackwardCore core;
  if (partial) {
    res.gains = ekf_forward(mdl, lin);
    core = po_recursion(lin, fq, res.gains.K, settings);
  } else {
    core = fo_recursion(lin, fq, settings);
  }
  res.law = assemble_law(std::move(core), std::move(xbar), std::move(ubar), temp);
  res.objective = objective;
  res.iterations = iterations;
  return res;
}

}  // namespace nioc

#include "nioc/tasks.hpp"

#include <algorithm>
#include <cmath>

namespace nioc {

namespace {

using Eigen::Vector2d;
using Eigen::Vector4d;

using DerivFn = std::function<VectorXd(const VectorXd&, const VectorXd&)>;

// Classical fourth-order Runge-Kutta step of dx/dt = deriv(x, u). Noise is
// injected after the step by each task so that f stays exactly affine in v.
VectorXd rk4_step(const DerivFn& deriv, const VectorXd& x, const VectorXd& u, double dt) {
  const VectorXd k1 = deriv(x, u);
  const VectorXd k2 = deriv(x + 0.5 * dt * k1, u);
  const VectorXd k3 = deriv(x + 0.5 * dt * k2, u);
  const VectorXd k4 = deriv(x + dt * k3, u);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_option_keys(const std::map<std::string, double>& options,
                       const std::vector<std::string>& allowed) {
  for (const auto& [key, value] : options) {
    (void)value;
    bool ok = false;
    for (const auto& a : allowed)
      if (key == a) ok = true;
    if (!ok) throw InvalidArgument("unknown task option '" + key + "'");
  }
}

double option_or(const std::map<std::string, double>& options, const std::string& key, double fallback) {
  const auto it = options.find(key);
  return it == options.end() ? fallback : it->second;
}

// ---------------------------------------------------------------- pendulum

// Torque-driven rod pivoting at one end, angle measured from upright so the
// hanging rest state is (pi, 0). Swing up to theta = 0 and hold.
constexpr double kPendG = 10.0;
constexpr double kPendM = 1.0;
constexpr double kPendL = 1.0;
constexpr double kPendDt = 0.05;
constexpr int kPendT = 50;
// Steep angle weight, inherited from the gym cost shaping. Flat weights
// make stopping short of upright optimal, which defeats the task.
constexpr double kPendAngleWeight = 100.0;

PomdpModel make_pendulum(const ParamVector& theta, Variant variant) {
  PomdpModel mdl;
  mdl.task_id = "pendulum";
  mdl.variant = variant;
  mdl.n = 2;
  mdl.u_dim = 1;
  mdl.v_dim = 1;
  mdl.T = kPendT;
  mdl.default_temperature = 1e-3;

  const double c_a = theta.at("c_a");
  const double c_v = theta.at("c_v");
  const double sigma_m = theta.at("sigma_m");

  const DerivFn deriv = [](const VectorXd& x, const VectorXd& u) {
    VectorXd dx(2);
    dx[0] = x[1];
    dx[1] = (3.0 * kPendG / (2.0 * kPendL)) * std::sin(x[0]) + (3.0 / (kPendM * kPendL * kPendL)) * u[0];
    return dx;
  };
  mdl.f = [deriv, sigma_m](const VectorXd& x, const VectorXd& u, const VectorXd& v) {
    VectorXd next = rk4_step(deriv, x, u, kPendDt);
    next[1] += kPendDt * sigma_m * u[0] * v[0];
    return next;
  };
  mdl.step_cost = [c_a](const VectorXd&, const VectorXd& u, int) { return c_a * u[0] * u[0]; };
  mdl.final_cost = [c_v](const VectorXd& x) {
    return kPendAngleWeight * (1.0 - std::cos(x[0])) + c_v * x[1] * x[1];
  };

  mdl.x1 = Vector2d(M_PI, 0.0);
  mdl.b1 = Gaussian(mdl.x1, 1e-4 * MatrixXd::Identity(2, 2));

  if (variant == Variant::Partial) {
    const double sigma_o = theta.at("sigma_o");
    mdl.m = 3;
    mdl.w_dim = 3;
    mdl.h = [sigma_o](const VectorXd& x, const VectorXd& w) {
      VectorXd y(3);
      y[0] = std::sin(x[0]) + sigma_o * w[0];
      y[1] = std::cos(x[0]) + sigma_o * w[1];
      y[2] = x[1] + sigma_o * w[2];
      return y;
    };
  }

  // Symmetry breaker: the hanging state is a stationary point of the cost,
  // so the solver needs a nonzero first nominal to find the swing-up.
  mdl.init_controls = MatrixXd::Zero(mdl.T - 1, 1);
  for (int t = 0; t < 10; ++t) mdl.init_controls(t, 0) = 3.0;
  return mdl;
}

// ---------------------------------------------------------------- cartpole

// Cart with a balanced pole; move one unit to the right, keep the pole up.
constexpr double kCpMc = 1.0;
constexpr double kCpMp = 0.1;
constexpr double kCpL = 0.5;  // half pole length
constexpr double kCpG = 9.8;
constexpr double kCpDt = 0.02;
constexpr int kCpT = 200;
constexpr double kCpAngleWeight = 10.0;

VectorXd cartpole_deriv(const VectorXd& x, const VectorXd& u) {
  const double sin_th = std::sin(x[2]);
  const double cos_th = std::cos(x[2]);
  const double total = kCpMc + kCpMp;
  const double temp = (u[0] + kCpMp * kCpL * x[3] * x[3] * sin_th) / total;
  const double th_acc = (kCpG * sin_th - cos_th * temp) / (kCpL * (4.0 / 3.0 - kCpMp * cos_th * cos_th / total));
  const double x_acc = temp - kCpMp * kCpL * th_acc * cos_th / total;
  VectorXd dx(4);
  dx << x[1], x_acc, x[3], th_acc;
  return dx;
}

PomdpModel make_cartpole(const ParamVector& theta, Variant variant) {
  PomdpModel mdl;
  mdl.task_id = "cartpole";
  mdl.variant = variant;
  mdl.n = 4;
  mdl.u_dim = 1;
  mdl.v_dim = 1;
  mdl.T = kCpT;
  mdl.default_temperature = 1e-3;

  const double c_a = theta.at("c_a");
  const double c_v = theta.at("c_v");
  const double sigma_m = theta.at("sigma_m");

  mdl.f = [sigma_m](const VectorXd& x, const VectorXd& u, const VectorXd& v) {
    VectorXd next = rk4_step(cartpole_deriv, x, u, kCpDt);
    // Force perturbation sigma_m*u*v mapped through the acceleration rows.
    const double cos_th = std::cos(x[2]);
    const double total = kCpMc + kCpMp;
    const double denom = kCpL * (4.0 / 3.0 - kCpMp * cos_th * cos_th / total);
    const double dth_dF = -cos_th / (total * denom);
    const double dx_dF = 1.0 / total - kCpMp * kCpL * cos_th * dth_dF / total;
    const double dF = sigma_m * u[0] * v[0];
    next[1] += kCpDt * dx_dF * dF;
    next[3] += kCpDt * dth_dF * dF;
    return next;
  };
  mdl.step_cost = [c_a](const VectorXd&, const VectorXd& u, int) { return c_a * u[0] * u[0]; };
  mdl.final_cost = [c_v](const VectorXd& x) {
    const double dx = x[0] - 1.0;
    return dx * dx + kCpAngleWeight * x[2] * x[2] + c_v * (x[1] * x[1] + x[3] * x[3]);
  };

  mdl.x1 = Vector4d::Zero();
  mdl.b1 = Gaussian(mdl.x1, 1e-4 * MatrixXd::Identity(4, 4));

  if (variant == Variant::Partial) {
    const double sigma_o = theta.at("sigma_o");
    mdl.m = 4;
    mdl.w_dim = 4;
    mdl.h = [sigma_o](const VectorXd& x, const VectorXd& w) { return VectorXd(x + sigma_o * w); };
  }
  return mdl;
}

// ---------------------------------------------------------------- reaching

// Planar two-link arm, torque controlled, viscous joint friction, no
// gravity. Move the hand to a target 10 cm away and stop there.
constexpr double kArmL1 = 0.30;
constexpr double kArmL2 = 0.33;
constexpr double kArmS2 = 0.16;
constexpr double kArmM2 = 1.0;
constexpr double kArmI1 = 0.025;
constexpr double kArmI2 = 0.045;
constexpr double kArmDt = 0.01;
constexpr int kArmT = 50;
constexpr double kArmTargetRadius = 0.1;

Vector2d arm_hand(const VectorXd& x) {
  return Vector2d(kArmL1 * std::cos(x[0]) + kArmL2 * std::cos(x[0] + x[1]),
                  kArmL1 * std::sin(x[0]) + kArmL2 * std::sin(x[0] + x[1]));
}

Vector2d arm_hand_velocity(const VectorXd& x) {
  const double s1 = std::sin(x[0]), c1 = std::cos(x[0]);
  const double s12 = std::sin(x[0] + x[1]), c12 = std::cos(x[0] + x[1]);
  Eigen::Matrix2d jac;
  jac << -kArmL1 * s1 - kArmL2 * s12, -kArmL2 * s12, kArmL1 * c1 + kArmL2 * c12, kArmL2 * c12;
  return jac * Vector2d(x[2], x[3]);
}

PomdpModel make_reaching(const ParamVector& theta, Variant variant, double target_angle) {
  PomdpModel mdl;
  mdl.task_id = "reaching";
  mdl.variant = variant;
  mdl.n = 4;
  mdl.u_dim = 2;
  mdl.v_dim = 2;
  mdl.T = kArmT;
  mdl.default_temperature = 1e-6;

  const double c_a = theta.at("c_a");
  const double c_v = theta.at("c_v");
  const double sigma_m = theta.at("sigma_m");

  const double a1 = kArmI1 + kArmI2 + kArmM2 * kArmL1 * kArmL1;
  const double a2 = kArmM2 * kArmL1 * kArmS2;
  const double a3 = kArmI2;
  Eigen::Matrix2d damping;
  damping << 0.05, 0.025, 0.025, 0.05;

  mdl.f = [=](const VectorXd& x, const VectorXd& u, const VectorXd& v) {
    const Vector2d tau(u[0] + sigma_m * u[0] * v[0], u[1] + sigma_m * u[1] * v[1]);
    const double c2 = std::cos(x[1]), s2 = std::sin(x[1]);
    Eigen::Matrix2d inertia;
    inertia << a1 + 2.0 * a2 * c2, a3 + a2 * c2, a3 + a2 * c2, a3;
    const Vector2d dth(x[2], x[3]);
    const Vector2d coriolis(-a2 * s2 * x[3] * (2.0 * x[2] + x[3]), a2 * s2 * x[2] * x[2]);
    const Vector2d acc = inertia.inverse() * (tau - coriolis - damping * dth);
    VectorXd next(4);
    next[0] = x[0] + kArmDt * x[2];
    next[1] = x[1] + kArmDt * x[3];
    next[2] = x[2] + kArmDt * acc[0];
    next[3] = x[3] + kArmDt * acc[1];
    return next;
  };

  VectorXd x1(4);
  x1 << M_PI / 4.0, M_PI / 2.0, 0.0, 0.0;
  const Vector2d target = arm_hand(x1) + kArmTargetRadius * Vector2d(std::cos(target_angle), std::sin(target_angle));

  mdl.step_cost = [c_a](const VectorXd&, const VectorXd& u, int) { return c_a * u.squaredNorm(); };
  mdl.final_cost = [c_v, target](const VectorXd& x) {
    return (arm_hand(x) - target).squaredNorm() + c_v * arm_hand_velocity(x).squaredNorm();
  };

  mdl.x1 = x1;
  mdl.b1 = Gaussian(x1, 1e-4 * MatrixXd::Identity(4, 4));

  if (variant == Variant::Partial) {
    const double sigma_o = theta.at("sigma_o");
    mdl.m = 4;
    mdl.w_dim = 4;
    mdl.h = [sigma_o](const VectorXd& x, const VectorXd& w) { return VectorXd(x + sigma_o * w); };
  }
  return mdl;
}

// -------------------------------------------------------------- navigation

// Unicycle-style agent: controls steer heading rate and forward
// acceleration; it observes range and bearing to the target plus its own
// speed. Reach the target, arriving slowly.
constexpr double kNavDt = 0.01;
constexpr int kNavT = 50;
constexpr double kNavKx = 0.5;
constexpr double kNavKy = 0.3;

PomdpModel make_navigation(const ParamVector& theta, Variant variant) {
  PomdpModel mdl;
  mdl.task_id = "navigation";
  mdl.variant = variant;
  mdl.n = 4;  // (px, py, heading, speed)
  mdl.u_dim = 2;
  mdl.v_dim = 2;
  mdl.T = kNavT;
  mdl.default_temperature = 1e-6;

  const double c_a = theta.at("c_a");
  const double c_v = theta.at("c_v");
  const double sigma_m = theta.at("sigma_m");

  mdl.f = [sigma_m](const VectorXd& x, const VectorXd& u, const VectorXd& v) {
    VectorXd next(4);
    next[0] = x[0] + kNavDt * std::cos(x[2]) * x[3];
    next[1] = x[1] + kNavDt * std::sin(x[2]) * x[3];
    next[2] = x[2] + kNavDt * (u[0] + sigma_m * u[0] * v[0]);
    next[3] = x[3] + kNavDt * (u[1] + sigma_m * u[1] * v[1]);
    return next;
  };
  mdl.step_cost = [c_a](const VectorXd&, const VectorXd& u, int) { return c_a * u.squaredNorm(); };
  mdl.final_cost = [c_v](const VectorXd& x) {
    const double dx = x[0] - kNavKx;
    const double dy = x[1] - kNavKy;
    return dx * dx + dy * dy + c_v * x[3];
  };

  mdl.x1 = Vector4d::Zero();
  mdl.b1 = Gaussian(mdl.x1, 1e-4 * MatrixXd::Identity(4, 4));

  if (variant == Variant::Partial) {
    const double sigma_o = theta.at("sigma_o");
    mdl.m = 3;
    mdl.w_dim = 3;
    mdl.h = [sigma_o](const VectorXd& x, const VectorXd& w) {
      VectorXd y(3);
      const double dx = x[0] - kNavKx;
      const double dy = x[1] - kNavKy;
      y[0] = std::sqrt(dx * dx + dy * dy) + sigma_o * w[0];
      y[1] = std::atan2(dy, dx) + sigma_o * w[1];
      y[2] = x[3] + sigma_o * w[2];
      return y;
    };
  }
  return mdl;
}

// -------------------------------------------------------------- light-dark

// Planar point agent with observation noise growing with horizontal
// distance from a light source at x = 5. The agent starts unsure of its
// own position, so good policies may trade path length for information.
constexpr double kLdDt = 1.0;
constexpr int kLdT = 50;
constexpr double kLdLightX = 5.0;
constexpr double kLdStartY = 2.0;
constexpr double kLdB1Var = 1.0;

PomdpModel make_lightdark(const ParamVector& theta, Variant variant) {
  if (variant == Variant::Full)
    throw InvalidArgument("lightdark is partial-only; use the fo agent mode for a fully observable controller");
  PomdpModel mdl;
  mdl.task_id = "lightdark";
  mdl.variant = Variant::Partial;
  mdl.n = 2;
  mdl.u_dim = 2;
  mdl.v_dim = 2;
  mdl.m = 2;
  mdl.w_dim = 2;
  mdl.T = kLdT;
  mdl.default_temperature = 1e-5;

  const double sigma = theta.at("sigma");
  const double c = theta.at("c");
  const double p = theta.at("p");

  mdl.f = [](const VectorXd& x, const VectorXd& u, const VectorXd& v) {
    VectorXd next(2);
    next[0] = x[0] + kLdDt * u[0] + 0.1 * u[0] * v[0];
    next[1] = x[1] + kLdDt * u[1] + 0.1 * u[1] * v[1];
    return next;
  };
  mdl.h = [sigma](const VectorXd& x, const VectorXd& w) {
    const double scale = sigma * std::abs(x[0] - kLdLightX);
    return VectorXd(x + scale * w);
  };
  mdl.step_cost = [c](const VectorXd& x, const VectorXd& u, int) {
    const double dlight = x[0] - kLdLightX;
    return 0.5 * u.squaredNorm() + c * dlight * dlight;
  };
  mdl.final_cost = [p](const VectorXd& x) {
    const double dx = x[0] - p;
    const double dy = x[1];
    return dx * dx + dy * dy;
  };

  mdl.x1 = Vector2d(0.0, kLdStartY);
  mdl.b1 = Gaussian(mdl.x1, kLdB1Var * MatrixXd::Identity(2, 2));
  return mdl;
}

}  // namespace

std::vector<std::string> task_ids() { return {"pendulum", "cartpole", "reaching", "navigation", "lightdark"}; }

std::vector<ParamSpec> task_param_spec(const std::string& task_id, Variant variant) {
  if (task_id == "lightdark") {
    if (variant == Variant::Full)
      throw InvalidArgument("lightdark is partial-only; use the fo agent mode for a fully observable controller");
    return {
        ParamSpec{"c", true, 0.1, 1e-2, 1.0, true},
        ParamSpec{"p", false, 0.0, -1.0, 1.0, false},
        ParamSpec{"sigma", true, 0.2, 1e-2, 1.0, true},
    };
  }
  const bool known = task_id == "pendulum" || task_id == "cartpole" || task_id == "reaching" || task_id == "navigation";
  if (!known) throw UnknownTask("unknown task '" + task_id + "'");
  std::vector<ParamSpec> spec = {
      ParamSpec{"c_a", true, 0.1, 1e-2, 1.0, true},
      ParamSpec{"c_v", true, 0.1, 1e-2, 1.0, true},
      ParamSpec{"sigma_m", true, 0.1, 1e-2, 1.0, true},
  };
  if (variant == Variant::Partial) spec.push_back(ParamSpec{"sigma_o", true, 0.1, 1e-2, 1.0, true});
  return spec;
}

ParamVector default_params(const std::string& task_id, Variant variant) {
  ParamVector theta;
  for (const auto& s : task_param_spec(task_id, variant)) theta.set(s.name, s.default_value, s.positive);
  return theta;
}

double task_default_temperature(const std::string& task_id) {
  if (task_id == "pendulum" || task_id == "cartpole") return 1e-3;
  if (task_id == "lightdark") return 1e-5;
  if (task_id == "reaching" || task_id == "navigation") return 1e-6;
  throw UnknownTask("unknown task '" + task_id + "'");
}

namespace {

// Horizon override shared by every task. Shrinking keeps a prefix of any
// warm start; growing zero-pads it.
void apply_horizon(PomdpModel& mdl, const std::map<std::string, double>& options) {
  const auto it = options.find("T");
  if (it == options.end()) return;
  const int T = static_cast<int>(it->second);
  if (T < 2 || static_cast<double>(T) != it->second)
    throw InvalidArgument("option T must be an integer >= 2");
  if (mdl.init_controls.size() > 0) {
    MatrixXd init = MatrixXd::Zero(T - 1, mdl.u_dim);
    const int keep = std::min<int>(T - 1, static_cast<int>(mdl.init_controls.rows()));
    init.topRows(keep) = mdl.init_controls.topRows(keep);
    mdl.init_controls = init;
  }
  mdl.T = T;
}

}  // namespace

PomdpModel instantiate(const std::string& task_id, const ParamVector& theta, Variant variant,
                       const std::map<std::string, double>& options) {
  // Validate the schema up front so missing names fail uniformly.
  for (const auto& s : task_param_spec(task_id, variant)) (void)theta.at(s.name);

  PomdpModel mdl;
  if (task_id == "pendulum") {
    check_option_keys(options, {"T"});
    mdl = make_pendulum(theta, variant);
  } else if (task_id == "cartpole") {
    check_option_keys(options, {"T"});
    mdl = make_cartpole(theta, variant);
  } else if (task_id == "reaching") {
    check_option_keys(options, {"target_angle", "T"});
    mdl = make_reaching(theta, variant, option_or(options, "target_angle", 0.0));
  } else if (task_id == "navigation") {
    check_option_keys(options, {"T"});
    mdl = make_navigation(theta, variant);
  } else if (task_id == "lightdark") {
    check_option_keys(options, {"T"});
    mdl = make_lightdark(theta, variant);
  } else {
    throw UnknownTask("unknown task '" + task_id + "'");
  }
  apply_horizon(mdl, options);
  return mdl;
}

}  // namespace nioc

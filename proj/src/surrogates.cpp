#include "ppo1/surrogates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ppo1 {

namespace {

constexpr double kAnchorTolerance = 1e-9;
constexpr double kDegToRad = std::numbers::pi / 180.0;

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace

SurrogateEnv::SurrogateEnv(std::string name, ActionSpec spec, double fallback, RewardFn reward,
                           std::vector<CalibrationAnchor> anchors,
                           std::optional<DeclaredOptimum> optimum, FeasibleFn feasible)
    : name_(std::move(name)),
      spec_(std::move(spec)),
      fallback_(fallback),
      reward_(std::move(reward)),
      anchors_(std::move(anchors)),
      optimum_(std::move(optimum)),
      feasible_(std::move(feasible)) {
  for (const auto& a : anchors_) {
    const double got = reward_(a.point);
    if (!(std::abs(got - a.value) <= kAnchorTolerance)) {
      throw std::logic_error(name_ + ": calibration anchor (" + a.provenance + ") reproduced as " +
                             std::to_string(got) + " instead of " + std::to_string(a.value));
    }
  }
}

bool SurrogateEnv::feasible(const Vector& physical) const {
  return !feasible_ || feasible_(physical);
}

double SurrogateEnv::reward(const Vector& physical) const {
  require_same_size(spec_.size(), physical.size(), "physical action");
  return reward_(physical);
}

double SurrogateEnv::evaluate(const Vector& physical, const EvalContext&) {
  return reward(physical);
}

// ---------------------------------------------------------------------------

SurrogateEnv sphere(int d, std::optional<Vector> center) {
  if (d < 1) throw ConfigError("sphere dimension must be >= 1");
  Vector c(d);
  if (center) {
    require_same_size(d, center->size(), "sphere centre");
    c = *center;
  } else {
    for (int i = 0; i < d; ++i) c[i] = (i % 2 == 0) ? 0.3 : -0.4;
  }
  if ((c.array().abs() >= 1.0).any()) throw ConfigError("sphere centre must be interior");

  ActionSpec spec;
  for (int i = 0; i < d; ++i) spec.dims.push_back(DimensionMap::symmetric(1.0, "x" + std::to_string(i)));
  auto reward = [c](const Vector& x) { return -(x - c).squaredNorm(); };
  std::vector<CalibrationAnchor> anchors{{c, 0.0, "maximum at centre"}};
  DeclaredOptimum opt{c, 0.0, std::vector<bool>(d, false)};
  return SurrogateEnv("sphere", spec, -c.squaredNorm(), reward, anchors, opt);
}

SurrogateEnv naca_lift_env() {
  constexpr double alpha_opt = 50.6;
  constexpr double lift_opt = 0.94;
  ActionSpec spec{{DimensionMap::symmetric(90.0, "alpha", "deg")}};
  auto reward = [](const Vector& x) {
    return lift_opt * std::sin(std::numbers::pi * x[0] / (2.0 * alpha_opt));
  };
  std::vector<CalibrationAnchor> anchors{
      {vec({alpha_opt}), lift_opt, "optimal incidence and mean lift"},
      {vec({0.0}), 0.0, "symmetric airfoil at zero incidence"}};
  DeclaredOptimum opt{vec({alpha_opt}), lift_opt, {false}};
  return SurrogateEnv("naca", spec, 0.0, reward, anchors, opt);
}

SurrogateEnv tandem_lift_env() {
  constexpr double g_global = 2.35, v_global = 1.99, w_global = 0.15;
  constexpr double g_local = 6.25, v_local = 1.36, w_local = 1.0;
  auto bump = [](double g, double centre, double width) {
    const double z = (g - centre) / width;
    return std::exp(-z * z);
  };
  // b + v_global + h e1 = v_global,  b + v_global e2 + h = v_local
  const double e1 = bump(g_global, g_local, w_local);
  const double e2 = bump(g_local, g_global, w_global);
  const double h = (v_local - v_global * e2) / (1.0 - e1);
  const double b = -h * e1;

  ActionSpec spec{{DimensionMap::range(0.0, 10.0, "G")}};
  auto reward = [=](const Vector& x) {
    return b + v_global * bump(x[0], g_global, w_global) + h * bump(x[0], g_local, w_local);
  };
  std::vector<CalibrationAnchor> anchors{{vec({g_global}), v_global, "global rms-lift maximum"},
                                         {vec({g_local}), v_local, "local rms-lift maximum"}};
  DeclaredOptimum opt{vec({g_global}), v_global, {false}};
  return SurrogateEnv("tandem", spec, b, reward, anchors, opt);
}

CylinderPosition control_cylinder_center(double gap, double theta_deg, double d) {
  const double rho = gap + 0.5 * (1.0 + d);
  return {rho * std::cos(theta_deg * kDegToRad), rho * std::sin(theta_deg * kDegToRad)};
}

bool control_cylinder_intersects_square(double gap, double theta_deg, double d) {
  const auto c = control_cylinder_center(gap, theta_deg, d);
  const double dx = std::max(std::abs(c.x) - 0.5, 0.0);
  const double dy = std::max(std::abs(c.y) - 0.5, 0.0);
  return dx * dx + dy * dy < 0.25 * d * d;
}

namespace {

struct DragWell {
  double x;       // centreline position
  double target;  // total drag at (x, 0)
  double width_x;
  std::string provenance;
};

SurrogateEnv make_cylinder_env(const std::string& name, double uncontrolled,
                               const std::vector<DragWell>& wells, double width_y) {
  // Well profile exp(-2 (dx/wx)^2 - 2 (y/wy)^2); depths solved so that the
  // total drag at each well centre hits its target.
  const auto n = static_cast<Eigen::Index>(wells.size());
  auto profile = [](double dx, double w) { return std::exp(-2.0 * (dx / w) * (dx / w)); };
  Eigen::MatrixXd m(n, n);
  Vector rhs(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    rhs[j] = uncontrolled - wells[j].target;
    for (Eigen::Index k = 0; k < n; ++k) m(j, k) = profile(wells[j].x - wells[k].x, wells[k].width_x);
  }
  const Vector depth = m.partialPivLu().solve(rhs);

  auto drag = [=](double x, double y) {
    double total = uncontrolled;
    for (Eigen::Index k = 0; k < n; ++k) {
      total -= depth[k] * profile(x - wells[k].x, wells[k].width_x) * profile(y, width_y);
    }
    return total;
  };
  auto reward = [drag](const Vector& a) {
    const auto c = control_cylinder_center(a[0], a[1]);
    return -drag(c.x, c.y);
  };
  auto feasible = [](const Vector& a) { return a[0] >= 0.0; };

  // (G, theta) of a centreline point: theta = 0 downstream, 180 upstream.
  auto polar = [](double x) {
    return vec({std::abs(x) - 0.55, x >= 0.0 ? 0.0 : 180.0});
  };
  std::vector<CalibrationAnchor> anchors;
  std::size_t best = 0;
  for (std::size_t k = 0; k < wells.size(); ++k) {
    anchors.push_back({polar(wells[k].x), -wells[k].target, wells[k].provenance});
    if (wells[k].target < wells[best].target) best = k;
  }
  DeclaredOptimum opt{polar(wells[best].x), -wells[best].target, {false, false}};

  ActionSpec spec{{DimensionMap::range(0.0, 3.0, "G"), DimensionMap::range(0.0, 180.0, "theta", "deg")}};
  return SurrogateEnv(name, spec, -uncontrolled, reward, anchors, opt, feasible);
}

}  // namespace

SurrogateEnv control_cylinder_env(CylinderRegime regime) {
  if (regime == CylinderRegime::re40) {
    return make_cylinder_env("control_cylinder_re40", 1.56,
                             {{-1.29, 1.51, 0.5, "upstream drag valley"},
                              {1.50, 1.54, 1.0, "downstream drag valley"}},
                             0.3);
  }
  // Downstream valley is the deeper one (about 5% reduction against ~2% upstream).
  return make_cylinder_env("control_cylinder_re100", 1.37,
                           {{1.72, 1.30, 0.8, "downstream drag valley"},
                            {-1.60, 1.35, 0.8, "upstream drag valley (placement invented)"}},
                           0.3);
}

// ---------------------------------------------------------------------------

const Vector& PinballSteadyModel::optimum() {
  static const Vector opt = vec({0.34, -2.49, 2.44});
  return opt;
}

Vector PinballSteadyModel::mirror(const Vector& omega) {
  return vec({-omega[0], -omega[2], -omega[1]});
}

double PinballSteadyModel::drag(const Vector& omega) const {
  const double s2 = 2.0 * well_width * well_width;
  const double direct = std::exp(-(omega - well_center).squaredNorm() / s2);
  const double mirrored = std::exp(-(mirror(omega) - well_center).squaredNorm() / s2);
  return drag_far - well_depth * std::max(direct, mirrored);
}

double PinballSteadyModel::reward(const Vector& omega) const {
  return -drag(omega) - beta * omega.array().abs().cube().sum();
}

PinballSteadyModel make_pinball_steady_model(double beta) {
  if (!(beta >= 0.0)) throw ConfigError("pinball beta must be >= 0");
  constexpr double drag_opt = 1.17;
  constexpr double drag_uncontrolled = 2.91;
  const Vector& opt = PinballSteadyModel::optimum();
  const double width = 1.5;
  const double s2 = 2.0 * width * width;
  // gradient of the actuation cost at the optimum
  const Vector cost_grad = 3.0 * beta * opt.cwiseAbs().cwiseProduct(opt);

  // Unknowns: far-field drag D, depth A, centre m. Conditions: D(opt) = drag_opt,
  // D(0) = drag_uncontrolled, and grad reward(opt) = 0, which places
  // m = opt + cost_grad * width^2 / (D - drag_opt). Fixed point in D.
  double far = drag_uncontrolled;
  Vector centre = opt;
  for (int it = 0; it < 200; ++it) {
    centre = opt + cost_grad * (width * width) / (far - drag_opt);
    const double k = std::exp(((opt - centre).squaredNorm() - centre.squaredNorm()) / s2);
    const double next = drag_uncontrolled + (far - drag_opt) * k;
    if (std::abs(next - far) < 1e-16) {
      far = next;
      break;
    }
    far = next;
  }
  centre = opt + cost_grad * (width * width) / (far - drag_opt);
  const double depth = (far - drag_opt) / std::exp(-(opt - centre).squaredNorm() / s2);
  return {beta, far, depth, width, centre};
}

SurrogateEnv pinball_steady_env(double beta) {
  const PinballSteadyModel model = make_pinball_steady_model(beta);
  const Vector& opt = PinballSteadyModel::optimum();
  ActionSpec spec;
  for (int k = 1; k <= 3; ++k) {
    spec.dims.push_back(DimensionMap::symmetric(5.0, "Omega_" + std::to_string(k)));
  }
  const double r_opt = -1.17 - beta * opt.array().abs().cube().sum();
  std::vector<CalibrationAnchor> anchors{
      {opt, r_opt, "optimal drag 1.17 at boat-tailing rotation"},
      {PinballSteadyModel::mirror(opt), r_opt, "mirror image of the optimum"},
      {Vector::Zero(3), -2.91, "uncontrolled drag"}};
  DeclaredOptimum declared{opt, r_opt, {false, false, false}};
  return SurrogateEnv("pinball_steady", spec, -2.91,
                      [model](const Vector& x) { return model.reward(x); }, anchors, declared);
}

double PinballPeriodicModel::drag(double omega, double lambda) const {
  // 20% reduction at (2.47, 4); cubic in Omega so the cost dominates near zero
  const double ramp = std::clamp((lambda - 0.5) / 3.5, 0.0, 1.0);
  const double u = omega / 2.47;
  return std::max(1.0, 2.91 * (1.0 - 0.20 * u * u * u * ramp));
}

double PinballPeriodicModel::reward(double omega, double lambda) const {
  return -drag(omega, lambda) - 2.0 * beta * std::pow(std::abs(omega), 3);
}

SurrogateEnv pinball_periodic_env(double beta) {
  if (!(beta >= 0.0)) throw ConfigError("pinball beta must be >= 0");
  const PinballPeriodicModel model{beta};
  ActionSpec spec{{DimensionMap::range(0.0, 5.0, "Omega"), DimensionMap::range(0.5, 4.0, "f/f0")}};
  std::vector<CalibrationAnchor> anchors{
      {vec({0.0, 0.5}), -2.91, "uncontrolled drag"},
      {vec({0.0, 4.0}), -2.91, "uncontrolled drag"},
      {vec({2.47, 4.0}), model.reward(2.47, 4.0), "20% drag reduction at Omega=2.47, f=4f0"}};
  std::optional<DeclaredOptimum> declared;
  // Omega = 0 is optimal whenever the actuation cost outgrows the best drag gain.
  if (2.0 * beta >= 2.91 * 0.20 / std::pow(2.47, 3)) {
    declared = DeclaredOptimum{vec({0.0, 0.5}), -2.91, {false, true}};
  }
  return SurrogateEnv("pinball_periodic", spec, -2.91,
                      [model](const Vector& x) { return model.reward(x[0], x[1]); }, anchors,
                      declared);
}

// ---------------------------------------------------------------------------

std::vector<std::string> surrogate_names() {
  return {"sphere",          "naca",           "tandem",          "control_cylinder_re40",
          "control_cylinder_re100", "pinball_steady", "pinball_periodic"};
}

SurrogateEnv make_surrogate(const std::string& name, const SurrogateOptions& options) {
  if (name == "sphere") return sphere(options.sphere_dim);
  if (name == "naca") return naca_lift_env();
  if (name == "tandem") return tandem_lift_env();
  if (name == "control_cylinder_re40") return control_cylinder_env(CylinderRegime::re40);
  if (name == "control_cylinder_re100") return control_cylinder_env(CylinderRegime::re100);
  if (name == "pinball_steady") return pinball_steady_env(options.beta);
  if (name == "pinball_periodic") return pinball_periodic_env(options.beta);
  throw ConfigError("unknown surrogate '" + name + "'");
}

OracleResult grid_oracle(const SurrogateEnv& env, int points_per_dim) {
  if (points_per_dim < 2) throw ConfigError("grid oracle needs at least 2 points per dimension");
  const ActionSpec& spec = env.action_spec();
  const int d = spec.size();
  if (std::pow(static_cast<double>(points_per_dim), d) > kOracleBudget) {
    throw BudgetExceeded("grid of " + std::to_string(points_per_dim) + "^" + std::to_string(d) +
                         " points exceeds the oracle budget");
  }
  const Vector lo = spec.lower();
  const Vector step = (spec.upper() - lo) / static_cast<double>(points_per_dim - 1);

  std::vector<int> idx(d, 0);
  Vector x = lo;
  OracleResult best{lo, -std::numeric_limits<double>::infinity(), points_per_dim};
  while (true) {
    for (int i = 0; i < d; ++i) x[i] = lo[i] + idx[i] * step[i];
    const double r = env.reward(x);
    if (r > best.value) {
      best.value = r;
      best.argmax = x;
    }
    int i = 0;
    while (i < d && ++idx[i] == points_per_dim) idx[i++] = 0;
    if (i == d) break;
  }
  return best;
}

nlohmann::json oracle_to_json(const SurrogateEnv& env, const OracleResult& result) {
  std::vector<double> argmax(result.argmax.data(), result.argmax.data() + result.argmax.size());
  std::vector<std::string> labels;
  for (const auto& dim : env.action_spec().dims) labels.push_back(dim.label);
  return {{"env", env.name()},
          {"labels", labels},
          {"argmax", argmax},
          {"value", result.value},
          {"grid_resolution", result.grid_resolution}};
}

}  // namespace ppo1

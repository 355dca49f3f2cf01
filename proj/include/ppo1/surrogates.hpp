#pragma once

#include "ppo1/env.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ppo1 {

/// A point the landscape is built to reproduce exactly.
struct CalibrationAnchor {
  Vector point;  // physical coordinates
  double value;  // reward at `point`
  std::string provenance;
};

struct DeclaredOptimum {
  Vector point;
  double value;
  // Components along which the optimum is degenerate (any value attains it).
  std::vector<bool> free;
};

/// Analytic reward landscape over a mapped action box. Pure and thread-safe.
class SurrogateEnv : public Environment {
 public:
  using RewardFn = std::function<double(const Vector&)>;
  using FeasibleFn = std::function<bool(const Vector&)>;

  SurrogateEnv(std::string name, ActionSpec spec, double fallback, RewardFn reward,
               std::vector<CalibrationAnchor> anchors, std::optional<DeclaredOptimum> optimum,
               FeasibleFn feasible = {});

  const std::string& name() const override { return name_; }
  const ActionSpec& action_spec() const override { return spec_; }
  double fallback_reward() const override { return fallback_; }
  bool feasible(const Vector& physical) const override;
  double evaluate(const Vector& physical, const EvalContext& ctx) override;

  double reward(const Vector& physical) const;
  const std::vector<CalibrationAnchor>& calibration() const { return anchors_; }
  const std::optional<DeclaredOptimum>& optimum() const { return optimum_; }

  std::optional<Vector> oracle_argmax;  // filled from grid_oracle() by callers that run it

 private:
  std::string name_;
  ActionSpec spec_;
  double fallback_;
  RewardFn reward_;
  std::vector<CalibrationAnchor> anchors_;
  std::optional<DeclaredOptimum> optimum_;
  FeasibleFn feasible_;
};

// Generic sanity landscape: -|x - c|^2 on [-1,1]^d. Default centre alternates 0.3, -0.4.
SurrogateEnv sphere(int d, std::optional<Vector> center = std::nullopt);

// Mean lift against angle of attack, maximal at 50.6 deg with value 0.94.
SurrogateEnv naca_lift_env();

// Fluctuating lift against gap: sharp global peak 1.99 at G=2.35, broad local
// peak 1.36 at G=6.25.
SurrogateEnv tandem_lift_env();

enum class CylinderRegime { re40, re100 };

// Negative drag of a cylinder with a small control cylinder placed at (G, theta).
SurrogateEnv control_cylinder_env(CylinderRegime regime);

struct CylinderPosition {
  double x;
  double y;
};

// Centre of the control cylinder (diameter d) for gap G and azimuth theta
// measured from the rear stagnation point, main cylinder of unit diameter.
CylinderPosition control_cylinder_center(double gap, double theta_deg, double d = 0.1);

// True when the control cylinder overlaps a unit square main body centred at the origin.
bool control_cylinder_intersects_square(double gap, double theta_deg, double d = 0.1);

/// Steady three-cylinder rotation: r = -D(Omega) - beta * sum |Omega_k|^3.
struct PinballSteadyModel {
  double beta;
  double drag_far;     // drag far from the optimum well
  double well_depth;
  double well_width;
  Vector well_center;  // offset outward from the optimum so the cost gradient is balanced

  static const Vector& optimum();  // (0.34, -2.49, 2.44)
  static Vector mirror(const Vector& omega);

  double drag(const Vector& omega) const;
  double reward(const Vector& omega) const;
};

PinballSteadyModel make_pinball_steady_model(double beta = 0.025);
SurrogateEnv pinball_steady_env(double beta = 0.025);

/// Periodic counter-rotation (Omega, f/f0): r = -D(Omega, lambda) - 2 beta |Omega|^3.
struct PinballPeriodicModel {
  double beta;
  double drag(double omega, double lambda) const;
  double reward(double omega, double lambda) const;
};

SurrogateEnv pinball_periodic_env(double beta = 0.025);

struct SurrogateOptions {
  int sphere_dim = 2;
  double beta = 0.025;
};

SurrogateEnv make_surrogate(const std::string& name, const SurrogateOptions& options = {});
std::vector<std::string> surrogate_names();

struct OracleResult {
  Vector argmax;
  double value = 0.0;
  int grid_resolution = 0;
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kOracleBudget = 1e8;

/// Exhaustive search over a regular grid of points_per_dim points per
/// dimension spanning the physical box. Ties keep the first point visited.
OracleResult grid_oracle(const SurrogateEnv& env, int points_per_dim);

nlohmann::json oracle_to_json(const SurrogateEnv& env, const OracleResult& result);

}  // namespace ppo1

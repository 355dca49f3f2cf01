#pragma once

#include "ppo1/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ppo1 {

/// Affine map from one raw coordinate xi in [-1,1] to a physical control value.
///   symmetric(max): x = xi * max                       (angles, rotation rates)
///   range(lo, hi):  x = lo + (1 + xi) / 2 * (hi - lo)  (gaps, frequency ratios)
struct DimensionMap {
  enum class Kind { symmetric, range };

  Kind kind = Kind::symmetric;
  double lo = -1.0;
  double hi = 1.0;
  std::string label;
  std::string unit;

  static DimensionMap symmetric(double max, std::string label = {}, std::string unit = {});
  static DimensionMap range(double lo, double hi, std::string label = {}, std::string unit = {});

  double map(double xi) const;
  double unmap(double x) const;
  std::string describe() const;  // "symmetric(90)" / "range(0,10)"
};

DimensionMap parse_dimension_map(const std::string& text);

struct ActionSpec {
  std::vector<DimensionMap> dims;

  int size() const { return static_cast<int>(dims.size()); }
  Vector lower() const;
  Vector upper() const;
};

Vector clip_raw(const Vector& raw_action);
Vector map_action(const ActionSpec& spec, const Vector& clipped);
Vector unmap_action(const ActionSpec& spec, const Vector& physical);

struct EvalContext {
  long episode = 0;
  int env_index = 0;
  double timeout_s = 600.0;
};

class EvaluationTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A reward source. evaluate() may throw; evaluate_with_fallback() absorbs that.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const std::string& name() const = 0;
  virtual const ActionSpec& action_spec() const = 0;
  virtual double fallback_reward() const = 0;
  virtual bool feasible(const Vector& /*physical*/) const { return true; }
  virtual double evaluate(const Vector& physical, const EvalContext& ctx) = 0;
};

using EnvironmentPtr = std::unique_ptr<Environment>;
using EnvironmentFactory = std::function<EnvironmentPtr(int env_index)>;

/// In-process environment backed by plain functions.
class FunctionEnvironment : public Environment {
 public:
  using RewardFn = std::function<double(const Vector&)>;
  using FeasibleFn = std::function<bool(const Vector&)>;

  FunctionEnvironment(std::string name, ActionSpec spec, double fallback, RewardFn reward,
                      FeasibleFn feasible = {});

  const std::string& name() const override { return name_; }
  const ActionSpec& action_spec() const override { return spec_; }
  double fallback_reward() const override { return fallback_; }
  bool feasible(const Vector& physical) const override;
  double evaluate(const Vector& physical, const EvalContext& ctx) override;

 private:
  std::string name_;
  ActionSpec spec_;
  double fallback_;
  RewardFn reward_;
  FeasibleFn feasible_;
};

enum class EvalStatus { ok, infeasible, failed, timeout };

struct EvalOutcome {
  double reward = 0.0;
  EvalStatus status = EvalStatus::ok;
  std::string cause;
};

EvalOutcome evaluate_with_fallback(Environment& env, const Vector& physical,
                                   const EvalContext& ctx = {});

}  // namespace ppo1

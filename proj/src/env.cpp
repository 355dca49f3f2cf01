#include "ppo1/env.hpp"

#include "ppo1/log.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <regex>
#include <sstream>

namespace ppo1 {

namespace {
std::mutex g_log_mutex;
LogSink g_log_sink;
}  // namespace

LogSink set_log_sink(LogSink sink) {
  std::lock_guard lock(g_log_mutex);
  std::swap(g_log_sink, sink);
  return sink;
}

void log_warning(std::string_view message) {
  std::lock_guard lock(g_log_mutex);
  if (g_log_sink) {
    g_log_sink(message);
  } else {
    std::cerr << "[ppo1] warning: " << message << '\n';
  }
}

DimensionMap DimensionMap::symmetric(double max, std::string label, std::string unit) {
  if (!(max > 0.0)) throw ConfigError("symmetric dimension needs max > 0");
  return {Kind::symmetric, -max, max, std::move(label), std::move(unit)};
}

DimensionMap DimensionMap::range(double lo, double hi, std::string label, std::string unit) {
  if (!(lo < hi)) throw ConfigError("range dimension needs lo < hi");
  return {Kind::range, lo, hi, std::move(label), std::move(unit)};
}

double DimensionMap::map(double xi) const {
  if (kind == Kind::symmetric) return xi * hi;
  return lo + 0.5 * (1.0 + xi) * (hi - lo);
}

double DimensionMap::unmap(double x) const {
  if (kind == Kind::symmetric) return x / hi;
  return 2.0 * (x - lo) / (hi - lo) - 1.0;
}

std::string DimensionMap::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (kind == Kind::symmetric) {
    os << "symmetric(" << hi << ")";
  } else {
    os << "range(" << lo << "," << hi << ")";
  }
  return os.str();
}

DimensionMap parse_dimension_map(const std::string& text) {
  static const std::regex sym(R"(\s*symmetric\s*\(\s*([^,\s\)]+)\s*\)\s*)");
  static const std::regex rng(R"(\s*range\s*\(\s*([^,\s]+)\s*,\s*([^,\s\)]+)\s*\)\s*)");
  std::smatch m;
  try {
    if (std::regex_match(text, m, sym)) return DimensionMap::symmetric(std::stod(m[1]));
    if (std::regex_match(text, m, rng)) return DimensionMap::range(std::stod(m[1]), std::stod(m[2]));
  } catch (const std::logic_error&) {
    // fall through to the error below
  }
  throw ConfigError("bad dimension map '" + text + "' (want symmetric(max) or range(lo,hi))");
}

Vector ActionSpec::lower() const {
  Vector v(size());
  for (int i = 0; i < size(); ++i) v[i] = dims[i].lo;
  return v;
}

Vector ActionSpec::upper() const {
  Vector v(size());
  for (int i = 0; i < size(); ++i) v[i] = dims[i].hi;
  return v;
}

Vector clip_raw(const Vector& raw_action) { return raw_action.cwiseMax(-1.0).cwiseMin(1.0); }

Vector map_action(const ActionSpec& spec, const Vector& clipped) {
  require_same_size(spec.size(), clipped.size(), "action spec");
  Vector x(clipped.size());
  for (int i = 0; i < spec.size(); ++i) x[i] = spec.dims[i].map(clipped[i]);
  return x;
}

Vector unmap_action(const ActionSpec& spec, const Vector& physical) {
  require_same_size(spec.size(), physical.size(), "action spec");
  Vector xi(physical.size());
  for (int i = 0; i < spec.size(); ++i) xi[i] = spec.dims[i].unmap(physical[i]);
  return xi;
}

FunctionEnvironment::FunctionEnvironment(std::string name, ActionSpec spec, double fallback,
                                         RewardFn reward, FeasibleFn feasible)
    : name_(std::move(name)),
      spec_(std::move(spec)),
      fallback_(fallback),
      reward_(std::move(reward)),
      feasible_(std::move(feasible)) {}

bool FunctionEnvironment::feasible(const Vector& physical) const {
  return !feasible_ || feasible_(physical);
}

double FunctionEnvironment::evaluate(const Vector& physical, const EvalContext&) {
  require_same_size(spec_.size(), physical.size(), "physical action");
  return reward_(physical);
}

EvalOutcome evaluate_with_fallback(Environment& env, const Vector& physical,
                                   const EvalContext& ctx) {
  auto fall_back = [&](EvalStatus status, std::string cause) {
    log_warning(env.name() + " episode " + std::to_string(ctx.episode) + " env " +
                std::to_string(ctx.env_index) + ": " + cause + "; using fallback reward");
    return EvalOutcome{env.fallback_reward(), status, std::move(cause)};
  };

  if (!physical.allFinite()) return fall_back(EvalStatus::infeasible, "non-finite action");
  try {
    if (!env.feasible(physical)) return fall_back(EvalStatus::infeasible, "infeasible action");
    const double r = env.evaluate(physical, ctx);
    if (!std::isfinite(r)) return fall_back(EvalStatus::failed, "non-finite reward");
    return {r, EvalStatus::ok, {}};
  } catch (const EvaluationTimeout& e) {
    return fall_back(EvalStatus::timeout, std::string("timeout: ") + e.what());
  } catch (const std::exception& e) {
    return fall_back(EvalStatus::failed, e.what());
  }
}

}  // namespace ppo1

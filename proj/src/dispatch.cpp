#include "ppo1/dispatch.hpp"

#include <thread>

namespace ppo1 {

std::vector<EvalOutcome> dispatch(const std::vector<Vector>& actions,
                                  std::vector<EnvironmentPtr>& envs, long episode,
                                  const DispatchOptions& options) {
  if (actions.size() > envs.size()) {
    throw ConfigError("dispatch: " + std::to_string(actions.size()) + " actions for " +
                      std::to_string(envs.size()) + " environments");
  }
  if (!(options.timeout_s > 0.0)) throw ConfigError("dispatch timeout must be positive");

  std::vector<EvalOutcome> results(actions.size());
  auto run_slot = [&](std::size_t i) {
    EvalContext ctx{episode, static_cast<int>(i), options.timeout_s};
    results[i] = evaluate_with_fallback(*envs[i], actions[i], ctx);
  };

  if (options.mode == DispatchMode::sequential || actions.size() < 2) {
    for (std::size_t i = 0; i < actions.size(); ++i) run_slot(i);
    return results;
  }

  std::vector<std::jthread> workers;
  workers.reserve(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) workers.emplace_back(run_slot, i);
  workers.clear();  // joins: barrier before returning
  return results;
}

}  // namespace ppo1

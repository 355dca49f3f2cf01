#pragma once

#include "ppo1/env.hpp"

#include <vector>

namespace ppo1 {

enum class DispatchMode { sequential, concurrent };

struct DispatchOptions {
  DispatchMode mode = DispatchMode::sequential;
  double timeout_s = 600.0;
};

/// Evaluates actions[i] on envs[i] for every slot and returns only once all
/// slots are filled. Results are indexed by slot, never by completion order.
/// Per-slot failures and timeouts become the slot's fallback reward.
std::vector<EvalOutcome> dispatch(const std::vector<Vector>& actions,
                                  std::vector<EnvironmentPtr>& envs, long episode,
                                  const DispatchOptions& options = {});

}  // namespace ppo1

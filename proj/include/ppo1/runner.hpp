#pragma once

#include "ppo1/config.hpp"

#include <filesystem>
#include <optional>

namespace ppo1 {

struct RunOutput {
  TrainResult result;
  std::optional<Optimum> optimum;  // empty for runs shorter than five episodes
  std::filesystem::path output_dir;
};

/// Trains as configured and writes into config.output_dir:
///   config.toml        the parsed config, echoed back
///   history.csv        one row per (episode, env)
///   summary.csv        one row per episode
///   ckpt_ep{N}.json    every checkpoint_every episodes and after the last one
///   report.json        report_optimum of the run
/// With `resume`, training continues from that checkpoint instead of a fresh agent.
RunOutput run_experiment(const RunConfig& config,
                         const std::optional<std::filesystem::path>& resume = std::nullopt);

nlohmann::json report_to_json(const RunConfig& config, const RunHistory& history,
                              const std::optional<Optimum>& optimum);

}  // namespace ppo1

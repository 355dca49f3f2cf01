#include "ppo1/runner.hpp"

#include "ppo1/checkpoint.hpp"
#include "ppo1/run_log.hpp"

#include <fstream>

namespace ppo1 {

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, long episode) {
  return dir / ("ckpt_ep" + std::to_string(episode) + ".json");
}

}  // namespace

nlohmann::json report_to_json(const RunConfig& config, const RunHistory& history,
                              const std::optional<Optimum>& optimum) {
  nlohmann::json j;
  j["env"] = config.environment.name;
  j["episodes"] = history.size();
  j["seed"] = config.trainer.seed;
  if (!history.batches.empty()) {
    const ActionSpec spec = effective_action_spec(config);
    std::vector<std::string> labels;
    for (int k = 0; k < spec.size(); ++k) {
      labels.push_back(spec.dims[k].label.empty() ? "a" + std::to_string(k) : spec.dims[k].label);
    }
    j["labels"] = labels;
    j["final_mean_reward"] = history.mean_reward.back();
    j["final_moving_avg"] = history.moving_avg_reward.back();
  }
  if (optimum) {
    j["optimum"] = {{"value", optimum->value},
                    {"spread", optimum->spread},
                    {"actions", to_std(optimum->actions)},
                    {"action_spread", to_std(optimum->action_spread)}};
  } else {
    j["optimum"] = nullptr;
  }
  return j;
}

RunOutput run_experiment(const RunConfig& config, const std::optional<std::filesystem::path>& resume) {
  const auto& cfg = config.trainer;
  cfg.validate();
  const auto dir = config.output_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream echo(dir / "config.toml");
    if (!echo) throw ConfigError("output directory is not writable: " + dir.string());
    echo << dump_run_config(config);
  }

  const EnvironmentFactory factory = make_env_factory(config);
  std::optional<RunLogWriter> log;
  long last_checkpoint = -1;

  TrainHooks hooks;
  hooks.dispatch = config.dispatch;
  hooks.on_episode = [&](const Agent& agent, const RunHistory& history) {
    if (!log) {
      log.emplace(dir / "history.csv", dir / "summary.csv",
                  static_cast<int>(history.mean_action.front().size()));
    }
    log->write_new(history);
    const bool last = agent.episodes_done >= cfg.n_episodes;
    if (last || (cfg.checkpoint_every > 0 && agent.episodes_done % cfg.checkpoint_every == 0)) {
      write_json_file(checkpoint_path(dir, agent.episodes_done), agent_to_json(agent));
      last_checkpoint = agent.episodes_done;
    }
  };

  TrainResult result;
  if (resume) {
    Agent start = agent_from_json(read_json_file(*resume));
    result = train_from(std::move(start), cfg, factory, hooks);
  } else {
    result = train(cfg, factory, hooks);
  }
  if (result.agent.episodes_done != last_checkpoint) {
    write_json_file(checkpoint_path(dir, result.agent.episodes_done), agent_to_json(result.agent));
  }

  RunOutput out{std::move(result), std::nullopt, dir};
  if (out.result.history.size() >= static_cast<std::size_t>(kReportEpisodes)) {
    out.optimum = report_optimum(out.result.history);
  }
  write_json_file(dir / "report.json", report_to_json(config, out.result.history, out.optimum));
  return out;
}

}  // namespace ppo1

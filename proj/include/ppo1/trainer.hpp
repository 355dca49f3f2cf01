#pragma once

#include "ppo1/dispatch.hpp"
#include "ppo1/gaussian_policy.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <random>
#include <span>

namespace ppo1 {

struct TrainerConfig {
  int n_episodes = 20;
  int n_envs = 8;
  int n_epochs = 32;
  int minibatch_size = 4;
  double learning_rate = 5e-3;
  ClipConfig clip;
  std::uint64_t seed = 0;
  Vector input_state = Vector::Zero(1);
  double discount = 1.0;  // single-step episodes: recorded, never applied
  std::vector<int> hidden_sizes{4, 4};
  InitScheme init_scheme = InitScheme::glorot_uniform;
  double init_log_std = 0.0;
  int checkpoint_every = 10;
  int moving_average_window = 50;

  void validate() const;
  int minibatches_per_epoch() const { return (n_envs + minibatch_size - 1) / minibatch_size; }
};

/// Policy network, optimizer state and the two random streams, all derived
/// from the configured seed.
struct Agent {
  NetworkParams params;
  AdamState adam;
  std::mt19937_64 action_rng;
  std::mt19937_64 shuffle_rng;
  long episodes_done = 0;
};

Agent make_agent(const TrainerConfig& cfg, int action_dim);

nlohmann::json agent_to_json(const Agent& agent);
Agent agent_from_json(const nlohmann::json& doc);

struct EpisodeSample {
  Vector raw_action;
  Vector physical_action;
  double logp_old = 0.0;
  double reward = 0.0;
  double advantage = 0.0;
  EvalStatus status = EvalStatus::ok;
};

struct EpisodeBatch {
  long episode = 0;
  std::vector<EpisodeSample> samples;
};

/// Per-episode summaries of a run. Moving averages cover the latest
/// `window` episodes, or all of them while fewer exist.
struct RunHistory {
  int window = 50;
  std::vector<EpisodeBatch> batches;
  std::vector<double> mean_reward;
  std::vector<double> moving_avg_reward;
  std::vector<Vector> mean_action;  // physical
  std::vector<Vector> moving_avg_action;
  std::vector<double> elapsed_s;

  std::size_t size() const { return batches.size(); }
  void append(EpisodeBatch batch, double elapsed);
};

bool same_records(const RunHistory& a, const RunHistory& b);

/// (r - mean) / population std; all zeros when the spread is below 1e-12.
Vector whiten(const Vector& rewards);

std::vector<double> moving_average(std::span<const double> history, int window = 50);

struct Optimum {
  double value = 0.0;
  double spread = 0.0;
  Vector actions;
  Vector action_spread;
};

class InsufficientHistory : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kReportEpisodes = 5;

/// Averages over the latest five episodes; spreads are the rms deviation of
/// the moving averages over the same episodes.
Optimum report_optimum(const RunHistory& history);

/// Draws n_envs actions from the current policy, evaluates them behind a
/// barrier and whitens the rewards.
EpisodeBatch run_episode(Agent& agent, std::vector<EnvironmentPtr>& envs, const TrainerConfig& cfg,
                         const DispatchOptions& dispatch_options = {});

struct UpdateStep {
  long episode;
  int epoch;
  int minibatch;
  long optimizer_step;  // Adam step count after this step
  std::span<const std::size_t> indices;
  std::span<const double> ratios;  // evaluated before the step
  double objective;
};

using UpdateObserver = std::function<void(const UpdateStep&)>;

/// n_epochs passes of shuffled mini-batch Adam steps on the clipped surrogate.
Agent update(Agent agent, const EpisodeBatch& batch, const TrainerConfig& cfg,
             const UpdateObserver& observer = {});

struct TrainResult {
  Agent agent;
  RunHistory history;
};

struct TrainHooks {
  DispatchOptions dispatch;
  UpdateObserver on_update;
  // Called after every completed episode (post-update).
  std::function<void(const Agent&, const RunHistory&)> on_episode;
};

TrainResult train(const TrainerConfig& cfg, const EnvironmentFactory& env_factory,
                  const TrainHooks& hooks = {});

/// Continues a run from `start` (e.g. a loaded checkpoint) for the remaining
/// episodes up to cfg.n_episodes.
TrainResult train_from(Agent start, const TrainerConfig& cfg, const EnvironmentFactory& env_factory,
                       const TrainHooks& hooks = {});

}  // namespace ppo1

#include "ppo1/trainer.hpp"

#include "ppo1/checkpoint.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ppo1 {

void TrainerConfig::validate() const {
  if (n_episodes < 0) throw ConfigError("n_episodes must be >= 0");
  if (n_envs < 1) throw ConfigError("n_envs must be >= 1");
  if (n_epochs < 0) throw ConfigError("n_epochs must be >= 0");
  if (minibatch_size < 1 || minibatch_size > n_envs) {
    throw ConfigError("minibatch_size must lie in [1, n_envs]");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (input_state.size() < 1 || !input_state.allFinite()) {
    throw ConfigError("input_state must be a non-empty finite vector");
  }
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (moving_average_window < 1) throw ConfigError("moving_average_window must be >= 1");
  if (!std::isfinite(init_log_std)) throw ConfigError("init_log_std must be finite");
  clip.validate();
}

namespace {

enum Stream : std::uint32_t { kInitStream = 0, kActionStream = 1, kShuffleStream = 2 };

std::mt19937_64 stream_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::mt19937_64 rng_from_state(const std::string& state) {
  std::mt19937_64 rng;
  std::istringstream is(state);
  is >> rng;
  if (!is) throw ConfigError("malformed random generator state in checkpoint");
  return rng;
}

}  // namespace

Agent make_agent(const TrainerConfig& cfg, int action_dim) {
  cfg.validate();
  NetworkLayout layout;
  layout.input_dim = static_cast<int>(cfg.input_state.size());
  layout.hidden_sizes = cfg.hidden_sizes;
  layout.output_dim = action_dim;
  layout.output_activation = Activation::tanh;

  auto init_rng = stream_rng(cfg.seed, kInitStream);
  Agent agent;
  agent.params = init_network(layout, init_rng(), cfg.init_scheme, cfg.init_log_std);
  agent.adam = make_adam_state(agent.params);
  agent.action_rng = stream_rng(cfg.seed, kActionStream);
  agent.shuffle_rng = stream_rng(cfg.seed, kShuffleStream);
  return agent;
}

nlohmann::json agent_to_json(const Agent& agent) {
  auto doc = checkpoint_to_json(agent.params, agent.adam);
  doc["trainer"] = {{"episodes_done", agent.episodes_done},
                    {"action_rng", rng_state(agent.action_rng)},
                    {"shuffle_rng", rng_state(agent.shuffle_rng)}};
  return doc;
}

Agent agent_from_json(const nlohmann::json& doc) {
  auto [params, adam] = checkpoint_from_json(doc);
  Agent agent;
  agent.params = std::move(params);
  agent.adam = std::move(adam);
  try {
    const auto& t = doc.at("trainer");
    agent.episodes_done = t.at("episodes_done").get<long>();
    agent.action_rng = rng_from_state(t.at("action_rng").get<std::string>());
    agent.shuffle_rng = rng_from_state(t.at("shuffle_rng").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint lacks trainer state: ") + e.what());
  }
  return agent;
}

// ---------------------------------------------------------------------------

Vector whiten(const Vector& rewards) {
  if (rewards.size() == 0) throw std::invalid_argument("whiten needs at least one reward");
  const double mean = rewards.mean();
  const Vector centred = rewards.array() - mean;
  const double std = std::sqrt(centred.squaredNorm() / static_cast<double>(rewards.size()));
  if (!(std >= 1e-12)) return Vector::Zero(rewards.size());
  Vector adv = centred / std;
  // remove the rounding residue of the division so the mean is zero to ~1e-16
  adv.array() -= adv.mean();
  return adv;
}

namespace {

template <typename T, typename Get>
T window_mean(std::size_t k, int window, Get get, T zero) {
  const std::size_t first = k + 1 > static_cast<std::size_t>(window) ? k + 1 - window : 0;
  T sum = zero;
  for (std::size_t i = first; i <= k; ++i) sum = sum + get(i);
  return sum / static_cast<double>(k + 1 - first);
}

}  // namespace

std::vector<double> moving_average(std::span<const double> history, int window) {
  if (window < 1) throw std::invalid_argument("moving average window must be >= 1");
  std::vector<double> out(history.size());
  for (std::size_t k = 0; k < history.size(); ++k) {
    out[k] = window_mean(k, window, [&](std::size_t i) { return history[i]; }, 0.0);
  }
  return out;
}

void RunHistory::append(EpisodeBatch batch, double elapsed) {
  const auto n = static_cast<double>(batch.samples.size());
  double reward_sum = 0.0;
  Vector action_sum = Vector::Zero(batch.samples.front().physical_action.size());
  for (const auto& s : batch.samples) {
    reward_sum += s.reward;
    action_sum += s.physical_action;
  }
  mean_reward.push_back(reward_sum / n);
  mean_action.push_back(action_sum / n);
  const std::size_t k = mean_reward.size() - 1;
  moving_avg_reward.push_back(
      window_mean(k, window, [&](std::size_t i) { return mean_reward[i]; }, 0.0));
  moving_avg_action.push_back(window_mean(
      k, window, [&](std::size_t i) -> Vector { return mean_action[i]; },
      Vector(Vector::Zero(action_sum.size()))));
  elapsed_s.push_back(elapsed);
  batches.push_back(std::move(batch));
}

bool same_records(const RunHistory& a, const RunHistory& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t e = 0; e < a.size(); ++e) {
    const auto& x = a.batches[e];
    const auto& y = b.batches[e];
    if (x.episode != y.episode || x.samples.size() != y.samples.size()) return false;
    for (std::size_t i = 0; i < x.samples.size(); ++i) {
      const auto& s = x.samples[i];
      const auto& t = y.samples[i];
      if (s.raw_action != t.raw_action || s.physical_action != t.physical_action ||
          s.reward != t.reward || s.advantage != t.advantage) {
        return false;
      }
    }
    if (a.mean_reward[e] != b.mean_reward[e] || a.moving_avg_reward[e] != b.moving_avg_reward[e] ||
        a.mean_action[e] != b.mean_action[e] || a.moving_avg_action[e] != b.moving_avg_action[e]) {
      return false;
    }
  }
  return true;
}

Optimum report_optimum(const RunHistory& history) {
  const std::size_t n = history.size();
  if (n < static_cast<std::size_t>(kReportEpisodes)) {
    throw InsufficientHistory("report_optimum needs at least " + std::to_string(kReportEpisodes) +
                              " episodes, have " + std::to_string(n));
  }
  const std::size_t first = n - kReportEpisodes;
  const auto d = history.mean_action.back().size();

  Optimum opt;
  opt.actions = Vector::Zero(d);
  double ma_mean = 0.0;
  Vector ma_action_mean = Vector::Zero(d);
  for (std::size_t k = first; k < n; ++k) {
    opt.value += history.mean_reward[k] / kReportEpisodes;
    opt.actions += history.mean_action[k] / kReportEpisodes;
    ma_mean += history.moving_avg_reward[k] / kReportEpisodes;
    ma_action_mean += history.moving_avg_action[k] / kReportEpisodes;
  }
  double var = 0.0;
  Vector action_var = Vector::Zero(d);
  for (std::size_t k = first; k < n; ++k) {
    var += std::pow(history.moving_avg_reward[k] - ma_mean, 2) / kReportEpisodes;
    action_var += (history.moving_avg_action[k] - ma_action_mean).cwiseAbs2() / kReportEpisodes;
  }
  opt.spread = std::sqrt(var);
  opt.action_spread = action_var.cwiseSqrt();
  return opt;
}

// ---------------------------------------------------------------------------

EpisodeBatch run_episode(Agent& agent, std::vector<EnvironmentPtr>& envs, const TrainerConfig& cfg,
                         const DispatchOptions& dispatch_options) {
  require_same_size(cfg.n_envs, static_cast<Eigen::Index>(envs.size()), "environment count");
  const DiagGaussianPolicy pi = policy_from(agent.params, cfg.input_state);

  EpisodeBatch batch;
  batch.episode = agent.episodes_done;
  batch.samples.resize(envs.size());
  std::vector<Vector> physical;
  physical.reserve(envs.size());
  for (std::size_t i = 0; i < envs.size(); ++i) {
    auto& s = batch.samples[i];
    s.raw_action = sample(pi, agent.action_rng);
    s.logp_old = log_prob(pi, s.raw_action);
    s.physical_action = map_action(envs[i]->action_spec(), clip_raw(s.raw_action));
    physical.push_back(s.physical_action);
  }

  const auto outcomes = dispatch(physical, envs, batch.episode, dispatch_options);
  Vector rewards(static_cast<Eigen::Index>(outcomes.size()));
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    batch.samples[i].reward = outcomes[i].reward;
    batch.samples[i].status = outcomes[i].status;
    rewards[static_cast<Eigen::Index>(i)] = outcomes[i].reward;
  }
  const Vector adv = whiten(rewards);
  for (std::size_t i = 0; i < batch.samples.size(); ++i) {
    batch.samples[i].advantage = adv[static_cast<Eigen::Index>(i)];
  }
  return batch;
}

Agent update(Agent agent, const EpisodeBatch& batch, const TrainerConfig& cfg,
             const UpdateObserver& observer) {
  if (batch.samples.empty()) throw std::invalid_argument("update needs a non-empty batch");
  const std::size_t n = batch.samples.size();
  const std::size_t mb = static_cast<std::size_t>(std::min<int>(cfg.minibatch_size, static_cast<int>(n)));

  std::vector<SurrogateSample> samples;
  samples.reserve(n);
  for (const auto& s : batch.samples) samples.push_back({s.raw_action, s.logp_old, s.advantage});

  std::vector<std::size_t> order(n);
  std::vector<SurrogateSample> chunk;
  try {
    for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), agent.shuffle_rng);
      int minibatch = 0;
      for (std::size_t start = 0; start < n; start += mb, ++minibatch) {
        const std::size_t stop = std::min(start + mb, n);
        chunk.clear();
        for (std::size_t k = start; k < stop; ++k) chunk.push_back(samples[order[k]]);

        auto res = surrogate_loss_and_grad(agent.params, cfg.input_state, chunk, cfg.clip);
        NetworkParams descent = res.grads;
        descent.assign_flat(-res.grads.flatten());
        auto [params, adam] = adam_step(agent.params, descent, agent.adam, cfg.learning_rate);
        agent.params = std::move(params);
        agent.adam = std::move(adam);

        if (observer) {
          observer(UpdateStep{batch.episode, epoch, minibatch, agent.adam.step_count,
                              std::span<const std::size_t>(order.data() + start, stop - start),
                              res.ratios, res.objective});
        }
      }
    }
  } catch (const DivergedUpdate& e) {
    throw DivergedUpdate(e.what(), batch.episode);
  }
  return agent;
}

namespace {

std::vector<EnvironmentPtr> make_envs(const TrainerConfig& cfg, const EnvironmentFactory& factory) {
  std::vector<EnvironmentPtr> envs;
  for (int i = 0; i < cfg.n_envs; ++i) {
    envs.push_back(factory(i));
    if (envs.back()->action_spec().size() != envs.front()->action_spec().size()) {
      throw ConfigError("environments disagree on action dimension");
    }
  }
  return envs;
}

TrainResult train_with(Agent start, const TrainerConfig& cfg, std::vector<EnvironmentPtr>& envs,
                       const TrainHooks& hooks) {
  require_same_size(start.params.layout.output_dim, envs.front()->action_spec().size(),
                    "environment action dimension");
  TrainResult result{std::move(start), RunHistory{}};
  result.history.window = cfg.moving_average_window;

  using clock = std::chrono::steady_clock;
  while (result.agent.episodes_done < cfg.n_episodes) {
    const auto t0 = clock::now();
    EpisodeBatch batch = run_episode(result.agent, envs, cfg, hooks.dispatch);
    result.agent = update(std::move(result.agent), batch, cfg, hooks.on_update);
    ++result.agent.episodes_done;
    const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();
    result.history.append(std::move(batch), elapsed);
    if (hooks.on_episode) hooks.on_episode(result.agent, result.history);
  }
  return result;
}

}  // namespace

TrainResult train_from(Agent start, const TrainerConfig& cfg, const EnvironmentFactory& env_factory,
                       const TrainHooks& hooks) {
  cfg.validate();
  auto envs = make_envs(cfg, env_factory);
  return train_with(std::move(start), cfg, envs, hooks);
}

TrainResult train(const TrainerConfig& cfg, const EnvironmentFactory& env_factory,
                  const TrainHooks& hooks) {
  cfg.validate();
  auto envs = make_envs(cfg, env_factory);
  Agent agent = make_agent(cfg, envs.front()->action_spec().size());
  return train_with(std::move(agent), cfg, envs, hooks);
}

}  // namespace ppo1

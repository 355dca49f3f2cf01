#include "ppo1/bench.hpp"

#include "ppo1/surrogates.hpp"
#include "ppo1/worker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>

extern char** environ;

namespace ppo1 {

namespace {

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

EnvironmentFactory copies_of(const SurrogateEnv& env) {
  return [env](int) -> EnvironmentPtr { return std::make_unique<SurrogateEnv>(env); };
}

// Default hyperparameters with per-case environment count, mini-batch size and episodes.
// Zero init keeps the hidden layers inert (their gradients stay exactly zero under the
// zero input state), so Adam moves the mean only through the output bias. With Glorot
// weights every parameter moves about lr per step and, once the policy has narrowed,
// a single step can carry the mean several standard deviations away.
TrainerConfig case_config(int n_envs, int minibatch, int episodes, std::uint64_t seed) {
  TrainerConfig c;
  c.init_scheme = InitScheme::zeros;
  c.n_envs = n_envs;
  c.minibatch_size = minibatch;
  c.n_episodes = episodes;
  c.n_epochs = 32;
  c.learning_rate = 5e-3;
  c.clip.epsilon = 0.3;
  c.seed = seed;
  return c;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int required_successes(int seeds) { return (8 * seeds + 9) / 10; }

std::string format_result(const CriterionResult& r) {
  return std::string(r.pass ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.name +
         ": " + r.detail;
}

int run_process(const std::vector<std::string>& argv) {
  std::vector<std::string> args = argv;
  std::vector<char*> cargv;
  for (auto& a : args) cargv.push_back(a.data());
  cargv.push_back(nullptr);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
  pid_t pid = -1;
  const int rc = posix_spawnp(&pid, cargv[0], &actions, nullptr, cargv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) return -1;
  int status = 0;
  if (waitpid(pid, &status, 0) != pid) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------

CriterionResult check_gradients(std::uint64_t seed) {
  CriterionResult res{1, "gradient vs central differences", false, {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-5;
  double worst = 0.0;
  int batches = 0;

  while (batches < 100) {
    const int d = 1 + static_cast<int>(rng() % 3);
    NetworkLayout layout{1, {4, 4}, d, Activation::tanh};
    NetworkParams params = init_network(layout, rng(), InitScheme::glorot_uniform, 0.0);
    for (Eigen::Index k = 0; k < params.log_std.size(); ++k) params.log_std[k] = -1.0 + 1.5 * unit(rng);
    Vector input(1);
    input[0] = 2.0 * unit(rng) - 1.0;

    ClipConfig cfg;
    cfg.mode = batches % 2 ? ObjectiveMode::paper_literal : ObjectiveMode::standard_clip;
    cfg.entropy_coef = batches % 3 == 0 ? 0.01 : 0.0;

    const auto pi = policy_from(params, input);
    const int n = 1 + static_cast<int>(rng() % 8);
    std::vector<SurrogateSample> batch;
    while (static_cast<int>(batch.size()) < n) {
      SurrogateSample s;
      s.raw_action = sample(pi, rng);
      s.logp_old = log_prob(pi, s.raw_action) + 1.2 * unit(rng) - 0.6;
      s.advantage = normal(rng);
      const double r = ratio(log_prob(pi, s.raw_action), s.logp_old);
      // keep clear of the kinks at 1 +- epsilon
      if (std::abs(r - (1.0 - cfg.epsilon)) < 1e-3 || std::abs(r - (1.0 + cfg.epsilon)) < 1e-3) continue;
      batch.push_back(std::move(s));
    }

    const auto analytic = surrogate_loss_and_grad(params, input, batch, cfg).grads.flatten();
    const Vector theta = params.flatten();
    Vector fd(theta.size());
    NetworkParams probe = params;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      Vector t = theta;
      t[k] += h;
      probe.assign_flat(t);
      const double up = surrogate_loss_and_grad(probe, input, batch, cfg).objective;
      t[k] -= 2.0 * h;
      probe.assign_flat(t);
      const double down = surrogate_loss_and_grad(probe, input, batch, cfg).objective;
      fd[k] = (up - down) / (2.0 * h);
    }
    const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-8);
    worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff() / scale);
    ++batches;
  }
  res.pass = worst < 1e-4;
  res.detail = "worst relative error " + fmt("%.3g", worst) + " over 100 batches (limit 1e-4)";
  return res;
}

CriterionResult check_whitening(std::uint64_t seed) {
  CriterionResult res{2, "whitening invariant", false, {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_mean = 0.0;
  double worst_std = 0.0;
  int degenerate = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 64);
    const double scale = std::pow(10.0, 6.0 * unit(rng) - 3.0);
    const double offset = 10.0 * normal(rng);
    Vector r(n);
    const bool constant = trial % 20 == 0;
    for (int i = 0; i < n; ++i) r[i] = offset + (constant ? 0.0 : scale * normal(rng));
    const Vector a = whiten(r);
    const double mean = a.mean();
    const double sd = std::sqrt((a.array() - mean).square().mean());
    worst_mean = std::max(worst_mean, std::abs(mean));
    if (sd == 0.0) {
      ++degenerate;
    } else {
      worst_std = std::max(worst_std, std::abs(sd - 1.0));
    }
  }
  res.pass = worst_mean < 1e-10 && worst_std < 1e-10;
  res.detail = "max |mean| " + fmt("%.3g", worst_mean) + ", max |std-1| " + fmt("%.3g", worst_std) +
               ", " + std::to_string(degenerate) + " zero-spread vectors";
  return res;
}

CriterionResult check_clip_table() {
  CriterionResult res{3, "clip semantics table", true, {}};
  struct Row {
    double r, a, standard, literal;
  };
  // epsilon = 0.3
  const Row rows[] = {
      {0.5, 1, 0.5, 0.5},   {0.7, 1, 0.7, 0.7},   {1.0, 1, 1.0, 1.0},    {1.3, 1, 1.3, 1.3},
      {2.0, 1, 1.3, 1.3},   {0.5, -1, -0.7, -0.5}, {0.7, -1, -0.7, -0.7}, {1.0, -1, -1.0, -0.7},
      {1.3, -1, -1.3, -0.7}, {2.0, -1, -2.0, -0.7},
  };
  ClipConfig standard;
  ClipConfig literal;
  literal.mode = ObjectiveMode::paper_literal;
  int bad = 0;
  for (const auto& row : rows) {
    const double s = clipped_objective(row.r, row.a, standard);
    const double l = clipped_objective(row.r, row.a, literal);
    if (std::abs(s - row.standard) > 1e-12 || std::abs(l - row.literal) > 1e-12) {
      ++bad;
      res.detail += "mismatch at r=" + fmt("%g", row.r) + " A=" + fmt("%g", row.a) + "; ";
    }
  }
  res.pass = bad == 0;
  res.detail += "10 cases x 2 modes, (0.5,-1): standard " +
                fmt("%g", clipped_objective(0.5, -1, standard)) + " vs literal " +
                fmt("%g", clipped_objective(0.5, -1, literal));
  return res;
}

CriterionResult check_naca(int seeds) {
  CriterionResult res{4, "NACA convergence", false, {}};
  const auto env = naca_lift_env();
  int ok = 0;
  double slowest = 0.0;
  std::string worst;
  for (int s = 0; s < seeds; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = train(case_config(8, 4, 20, static_cast<std::uint64_t>(s)), copies_of(env));
    const double dt = seconds_since(t0);
    slowest = std::max(slowest, dt);
    const auto opt = report_optimum(out.history);
    const double alpha = opt.actions[0];
    const bool hit = std::abs(alpha - 50.6) <= 2.0 && std::abs(opt.value - 0.94) <= 0.02 && dt < 10.0;
    ok += hit;
    if (!hit) worst += " seed " + std::to_string(s) + ": alpha " + fmt("%.2f", alpha) + " cl " + fmt("%.3f", opt.value) + ";";
  }
  res.pass = ok >= required_successes(seeds);
  res.detail = std::to_string(ok) + "/" + std::to_string(seeds) + " seeds within 2 deg / 0.02, slowest " +
               fmt("%.2f", slowest) + " s" + worst;
  return res;
}

CriterionResult check_tandem(int seeds) {
  CriterionResult res{5, "tandem trap", false, {}};
  const auto env = tandem_lift_env();
  int global = 0;
  int local = 0;
  std::string stray;
  for (int s = 0; s < seeds; ++s) {
    const auto out = train(case_config(16, 4, 20, static_cast<std::uint64_t>(s)), copies_of(env));
    const double g = report_optimum(out.history).actions[0];
    if (std::abs(g - 2.35) <= 0.5) {
      ++global;
    } else if (std::abs(g - 6.25) <= 0.5) {
      ++local;
    } else {
      stray += " seed " + std::to_string(s) + ": G " + fmt("%.3f", g) + ";";
    }
  }
  res.pass = global + local == seeds && global > 0 && local > 0;
  res.detail = std::to_string(global) + "/" + std::to_string(seeds) + " at the sharp peak G=2.35 (fraction " +
               fmt("%.2f", static_cast<double>(global) / seeds) + "), " + std::to_string(local) +
               " at the broad peak G=6.25" + stray;
  return res;
}

CriterionResult check_pinball_steady(int seeds) {
  CriterionResult res{6, "pinball steady", false, {}};
  const auto env = pinball_steady_env();
  const Vector star = PinballSteadyModel::optimum();
  const Vector mirror = PinballSteadyModel::mirror(star);
  int ok = 0;
  std::string misses;
  for (int s = 0; s < seeds; ++s) {
    const auto out = train(case_config(8, 2, 120, static_cast<std::uint64_t>(s)), copies_of(env));
    const auto opt = report_optimum(out.history);
    const double dist = std::min((opt.actions - star).norm(), (opt.actions - mirror).norm());
    const bool hit = std::abs(opt.value + 1.93) <= 0.05 && dist <= 0.3;
    ok += hit;
    if (!hit) misses += " seed " + std::to_string(s) + ": r " + fmt("%.3f", opt.value) + " dist " + fmt("%.3f", dist) + ";";
  }
  res.pass = ok >= required_successes(seeds);
  res.detail = std::to_string(ok) + "/" + std::to_string(seeds) + " seeds within 0.05 of -1.93 and 0.3 of the optimum" + misses;
  return res;
}

CriterionResult check_pinball_periodic(int seeds) {
  CriterionResult res{7, "pinball periodic", false, {}};
  const auto env = pinball_periodic_env();
  int ok = 0;
  double largest = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const auto out = train(case_config(8, 2, 40, static_cast<std::uint64_t>(s)), copies_of(env));
    const double omega = report_optimum(out.history).actions[0];
    largest = std::max(largest, omega);
    ok += omega < 0.3;
  }
  res.pass = ok >= required_successes(seeds);
  res.detail = std::to_string(ok) + "/" + std::to_string(seeds) + " seeds with Omega < 0.3, largest " + fmt("%.3f", largest);
  return res;
}

CriterionResult check_oracles() {
  CriterionResult res{8, "oracle consistency", true, {}};
  for (const auto& name : surrogate_names()) {
    const auto env = make_surrogate(name);
    const int d = env.action_spec().size();
    const int ppd = d == 1 ? 10000 : 100;
    const auto found = grid_oracle(env, ppd);
    const auto& opt = env.optimum();
    bool ok = opt.has_value();
    double worst_steps = 0.0;
    if (ok) {
      // symmetric landscapes have several anchors at the optimal value; any of them will do
      std::vector<Vector> targets{opt->point};
      for (const auto& a : env.calibration()) {
        if (std::abs(a.value - opt->value) < 1e-12) targets.push_back(a.point);
      }
      const Vector lo = env.action_spec().lower();
      const Vector hi = env.action_spec().upper();
      worst_steps = HUGE_VAL;
      for (const auto& target : targets) {
        double steps = 0.0;
        for (int k = 0; k < d; ++k) {
          if (opt->free.size() > static_cast<std::size_t>(k) && opt->free[k]) continue;
          const double spacing = (hi[k] - lo[k]) / (ppd - 1);
          steps = std::max(steps, std::abs(found.argmax[k] - target[k]) / spacing);
        }
        worst_steps = std::min(worst_steps, steps);
      }
      ok = worst_steps <= 1.0 + 1e-9 && std::abs(found.value - opt->value) <= 1e-3;
    }
    res.pass = res.pass && ok;
    res.detail += name + (ok ? " ok" : " MISS") + " (" + fmt("%.2f", worst_steps) + " spacings, dv " +
                  fmt("%.1e", opt ? std::abs(found.value - opt->value) : NAN) + "); ";
  }
  return res;
}

CriterionResult check_determinism(const BenchOptions& options) {
  CriterionResult res{9, "run determinism", false, {}};
  const auto dir = options.work_dir / "determinism";
  std::filesystem::create_directories(dir);
  const auto cfg = dir / "naca.toml";
  {
    std::ofstream out(cfg);
    out << "[trainer]\nn_episodes = 20\nn_envs = 8\nn_epochs = 32\nminibatch_size = 4\nseed = 7\n\n"
        << "[environment]\nbuiltin = \"naca\"\n\n[output]\ndir = \"" << (dir / "out").string()
        << "\"\n\n[dispatch]\nmode = \"sequential\"\n";
  }
  std::string first;
  for (int pass = 0; pass < 2; ++pass) {
    std::filesystem::remove_all(dir / "out");
    const int code = run_process({options.executable.string(), "run", "--config", cfg.string()});
    if (code != 0) {
      res.detail = "run exited with " + std::to_string(code);
      return res;
    }
    const auto bytes = read_bytes(dir / "out" / "history.csv");
    if (pass == 0) {
      first = bytes;
    } else {
      res.pass = !first.empty() && bytes == first;
      res.detail = std::to_string(first.size()) + " bytes of history.csv, " +
                   (res.pass ? "identical" : "different") + " across two runs";
    }
  }
  return res;
}

CriterionResult check_protocol(const BenchOptions& options) {
  CriterionResult res{10, "protocol equivalence", false, {}};
  const auto env = sphere(2);
  const std::string exe = options.executable.string();

  TrainerConfig cfg = case_config(4, 2, 6, 11);
  cfg.n_epochs = 8;
  const auto local = train(cfg, copies_of(env));
  const auto remote = train(cfg, [&](int) -> EnvironmentPtr {
    return std::make_unique<ExternalEnvironment>(env.name(), env.action_spec(), env.fallback_reward(),
                                                 std::vector<std::string>{exe, "worker-echo", "--env", "sphere"});
  });
  const bool same = same_records(local.history, remote.history);

  // slot 2 sleeps past the timeout in episode 0 only
  std::vector<EnvironmentPtr> envs;
  for (int i = 0; i < 4; ++i) {
    envs.push_back(std::make_unique<ExternalEnvironment>(
        env.name(), env.action_spec(), env.fallback_reward(),
        std::vector<std::string>{exe, "worker-echo", "--env", "sphere", "--delay-env", "2",
                                 "--delay-episode", "0", "--delay-s", "1.5"}));
  }
  std::vector<Vector> actions;
  for (int i = 0; i < 4; ++i) actions.push_back(Vector::Constant(2, 0.1 * i));
  const DispatchOptions opts{DispatchMode::concurrent, 0.5};
  const auto first = dispatch(actions, envs, 0, opts);
  bool timeout_ok = true;
  for (int i = 0; i < 4; ++i) {
    const auto& o = first[static_cast<std::size_t>(i)];
    if (i == 2) {
      timeout_ok = timeout_ok && o.status == EvalStatus::timeout && o.reward == env.fallback_reward();
    } else {
      timeout_ok = timeout_ok && o.status == EvalStatus::ok && o.reward == env.reward(actions[static_cast<std::size_t>(i)]);
    }
  }
  // the late episode-0 reply must not be mistaken for the episode-1 answer
  std::this_thread::sleep_for(std::chrono::milliseconds(1200));
  const auto second = dispatch(actions, envs, 1, opts);
  bool recovered = true;
  for (std::size_t i = 0; i < 4; ++i) {
    recovered = recovered && second[i].status == EvalStatus::ok && second[i].reward == env.reward(actions[i]);
  }

  res.pass = same && timeout_ok && recovered;
  res.detail = std::string("worker history ") + (same ? "identical" : "DIFFERS") + " over " +
               std::to_string(local.history.size()) + " episodes; timeout slot " +
               (timeout_ok ? "fallback only" : "WRONG") + "; next episode " + (recovered ? "clean" : "WRONG");
  return res;
}

CriterionResult check_update_accounting() {
  CriterionResult res{11, "update accounting", true, {}};
  struct Case {
    SurrogateEnv env;
    int n_envs, minibatch, epochs, episodes;
  };
  const Case cases[] = {{naca_lift_env(), 8, 4, 32, 5}, {sphere(2), 6, 4, 3, 4}, {tandem_lift_env(), 16, 5, 2, 3}};
  for (const auto& c : cases) {
    TrainerConfig cfg = case_config(c.n_envs, c.minibatch, c.episodes, 5);
    cfg.n_epochs = c.epochs;
    long steps = 0;
    double worst_first = 0.0;
    TrainHooks hooks;
    hooks.on_update = [&](const UpdateStep& u) {
      ++steps;
      if (u.epoch == 0 && u.minibatch == 0) {
        for (double r : u.ratios) worst_first = std::max(worst_first, std::abs(r - 1.0));
      }
    };
    const auto out = train(cfg, copies_of(c.env), hooks);
    const long expected = static_cast<long>(c.episodes) * c.epochs * cfg.minibatches_per_epoch();
    const bool ok = steps == expected && out.agent.adam.step_count == expected && worst_first < 1e-12;
    res.pass = res.pass && ok;
    res.detail += c.env.name() + " " + std::to_string(steps) + "/" + std::to_string(expected) +
                  " steps, first-step |r-1| " + fmt("%.1e", worst_first) + "; ";
  }
  return res;
}

std::vector<CriterionResult> run_bench(const BenchOptions& options,
                                       const std::function<void(const CriterionResult&)>& report) {
  std::vector<CriterionResult> out;
  auto add = [&](CriterionResult r) {
    if (report) report(r);
    out.push_back(std::move(r));
  };
  auto guarded = [&](int id, const char* name, auto&& fn) {
    try {
      add(fn());
    } catch (const std::exception& e) {
      add({id, name, false, std::string("threw: ") + e.what()});
    }
  };
  guarded(1, "gradient vs central differences", [] { return check_gradients(); });
  guarded(2, "whitening invariant", [] { return check_whitening(); });
  guarded(3, "clip semantics table", [] { return check_clip_table(); });
  guarded(4, "NACA convergence", [&] { return check_naca(options.seeds); });
  guarded(5, "tandem trap", [&] { return check_tandem(2 * options.seeds); });
  guarded(6, "pinball steady", [&] { return check_pinball_steady(options.seeds); });
  guarded(7, "pinball periodic", [&] { return check_pinball_periodic(options.seeds); });
  guarded(8, "oracle consistency", [] { return check_oracles(); });
  guarded(9, "run determinism", [&] { return check_determinism(options); });
  guarded(10, "protocol equivalence", [&] { return check_protocol(options); });
  guarded(11, "update accounting", [] { return check_update_accounting(); });
  return out;
}

}  // namespace ppo1

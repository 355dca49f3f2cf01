#include "ppo1/bench.hpp"
#include "ppo1/config.hpp"
#include "ppo1/runner.hpp"
#include "ppo1/surrogates.hpp"
#include "ppo1/worker.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

std::filesystem::path self_path(const char* argv0) {
  std::error_code ec;
  auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
  return ec ? std::filesystem::path(argv0) : p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-step PPO black-box optimizer"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "train against the configured environment");
  std::string config_path;
  std::string resume;
  run->add_option("--config", config_path, "run configuration (TOML subset)")->required();
  run->add_option("--resume", resume, "continue from a checkpoint file");

  auto* oracle = app.add_subcommand("oracle", "grid search a builtin surrogate");
  std::string oracle_env;
  int points = 10000;
  int dim = 2;
  double beta = 0.025;
  oracle->add_option("--env", oracle_env, "surrogate name")->required();
  oracle->add_option("--points", points, "total grid points (spread evenly over dimensions)");
  oracle->add_option("--dim", dim, "sphere dimension");
  oracle->add_option("--beta", beta, "pinball actuation cost");

  auto* bench = app.add_subcommand("bench", "acceptance suite");
  std::string suite = "default";
  int seeds = 10;
  std::string work_dir = "ppo1_bench";
  bench->add_option("--suite", suite)->check(CLI::IsMember({"default"}));
  bench->add_option("--seeds", seeds, "seeds per convergence check (tandem uses twice as many)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--work-dir", work_dir, "scratch directory for subprocess runs");

  auto* worker = app.add_subcommand("worker-echo", "serve a builtin surrogate over stdin/stdout");
  std::string worker_env;
  ppo1::WorkerOptions wopts;
  worker->add_option("--env", worker_env, "surrogate name")->required();
  worker->add_option("--dim", dim, "sphere dimension");
  worker->add_option("--beta", beta, "pinball actuation cost");
  worker->add_option("--delay-env", wopts.delay_env, "slot whose replies are delayed");
  worker->add_option("--delay-episode", wopts.delay_episode, "episode whose replies are delayed");
  worker->add_option("--delay-s", wopts.delay_s, "delay in seconds");
  worker->add_option("--fail-env", wopts.fail_env, "slot answered with an error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      ppo1::RunConfig cfg;
      try {
        cfg = ppo1::load_run_config(config_path);
      } catch (const std::exception& e) {
        std::cerr << "ppo1: " << e.what() << '\n';
        return 2;
      }
      std::optional<std::filesystem::path> from;
      if (!resume.empty()) from = resume;
      const auto out = ppo1::run_experiment(cfg, from);
      std::cout << ppo1::report_to_json(cfg, out.result.history, out.optimum).dump(2) << '\n';
      return 0;
    }
    if (*oracle) {
      const auto env = ppo1::make_surrogate(oracle_env, {dim, beta});
      const int d = env.action_spec().size();
      const int ppd = static_cast<int>(std::llround(std::pow(static_cast<double>(points), 1.0 / d)));
      const auto result = ppo1::grid_oracle(env, ppd);
      std::cout << ppo1::oracle_to_json(env, result).dump(2) << '\n';
      return 0;
    }
    if (*bench) {
      ppo1::BenchOptions opts;
      opts.seeds = seeds;
      opts.executable = self_path(argv[0]);
      opts.work_dir = work_dir;
      const auto results = ppo1::run_bench(opts, [](const ppo1::CriterionResult& r) {
        std::cout << ppo1::format_result(r) << std::endl;
      });
      const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.pass; });
      std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
      return failed == 0 ? 0 : 1;
    }
    if (*worker) {
      auto env = ppo1::make_surrogate(worker_env, {dim, beta});
      std::ios::sync_with_stdio(false);
      return ppo1::serve_worker(std::cin, std::cout, env, wopts);
    }
  } catch (const ppo1::ConfigError& e) {
    std::cerr << "ppo1: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ppo1: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

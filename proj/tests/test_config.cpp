#include "ppo1/bench.hpp"
#include "ppo1/config.hpp"
#include "ppo1/run_log.hpp"
#include "ppo1/runner.hpp"
#include "ppo1/surrogates.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace ppo1;
namespace fs = std::filesystem;

namespace {

const char* kNaca = R"(# lift maximisation
[trainer]
n_episodes = 20
n_envs = 8
minibatch_size = 4
seed = 3
init_scheme = "zeros"

[environment]
builtin = "naca"

[output]
dir = "out"
)";

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ppo1_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string capture(const std::string& command) {
  std::string out;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  pclose(pipe);
  return out;
}

}  // namespace

TEST_CASE("config text parsing") {
  const auto t = parse_config_text("top = 1\n[a]\nx = \"s # not a comment\"  # comment\ny = [1, 2.5, -3,]\nz = true\n");
  CHECK(t.at("top").as_integer("top") == 1);
  CHECK(t.at("a.x").as_string("a.x") == "s # not a comment");
  CHECK(t.at("a.y").as_numbers("a.y") == std::vector<double>{1, 2.5, -3});
  CHECK(t.at("a.z").as_bool("a.z"));
  CHECK_THROWS_AS(t.at("a.z").as_number("a.z"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[a]\nx = 1\nx = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("x = \n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[a\n"), ConfigError);
}

TEST_CASE("run config") {
  const auto c = parse_run_config(kNaca);
  CHECK(c.trainer.n_episodes == 20);
  CHECK(c.trainer.seed == 3);
  CHECK(c.trainer.n_epochs == 32);
  CHECK(c.trainer.learning_rate == 5e-3);
  CHECK(c.trainer.init_scheme == InitScheme::zeros);
  CHECK(c.environment.builtin == "naca");
  CHECK(c.environment.name == "naca");
  CHECK(effective_action_spec(c).size() == 1);

  CHECK_THROWS_AS(parse_run_config("[trainer]\nn_envs = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(std::string(kNaca) + "[trainer2]\nfoo = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[environment]\nbuiltin = \"airfoil\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[trainer]\nminibatch_size = 9\n[environment]\nbuiltin = \"naca\"\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config("[environment]\ncommand = \"./w\"\nname = \"mine\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[environment]\nbuiltin = \"naca\"\ncommand = \"./w\"\n"), ConfigError);
}

TEST_CASE("external environments with an action spec") {
  const auto c = parse_run_config(
      "[environment]\ncommand = \"./solver\"\nargs = [\"--mesh\", \"fine\"]\nname = \"mine\"\n"
      "fallback_reward = -3\n[action_spec]\ndims = [\"range(0, 3)\", \"symmetric(90)\"]\n"
      "labels = [\"G\", \"theta\"]\n");
  CHECK(c.environment.command == std::vector<std::string>{"./solver", "--mesh", "fine"});
  REQUIRE(c.action_spec.has_value());
  CHECK(c.action_spec->size() == 2);
  CHECK(c.action_spec->dims[1].label == "theta");
  CHECK(*c.environment.fallback_reward == -3.0);
}

TEST_CASE("dump round trip") {
  auto c = parse_run_config(kNaca);
  c.trainer.clip.mode = ObjectiveMode::paper_literal;
  c.trainer.hidden_sizes = {3, 5};
  c.dispatch.mode = DispatchMode::concurrent;
  const auto text = dump_run_config(c);
  CHECK(dump_run_config(parse_run_config(text)) == text);
}

TEST_CASE("seed override from the environment") {
  const auto dir = scratch("seed");
  std::ofstream(dir / "c.toml") << kNaca;
  setenv("PPO1_SEED", "42", 1);
  CHECK(load_run_config(dir / "c.toml").trainer.seed == 42);
  setenv("PPO1_SEED", "-1", 1);
  CHECK_THROWS_AS(load_run_config(dir / "c.toml"), ConfigError);
  unsetenv("PPO1_SEED");
  CHECK(load_run_config(dir / "c.toml").trainer.seed == 3);
  CHECK_THROWS_AS(load_run_config(dir / "missing.toml"), ConfigError);
}

TEST_CASE("run logs read back to the same records") {
  auto c = parse_run_config(kNaca);
  c.trainer.n_episodes = 7;
  c.output_dir = scratch("csv");
  const auto out = run_experiment(c);
  const auto back = read_run_log(out.output_dir / "history.csv", out.output_dir / "summary.csv");
  CHECK(same_records(out.result.history, back));
  CHECK(fs::exists(out.output_dir / "config.toml"));
  CHECK(fs::exists(out.output_dir / "ckpt_ep7.json"));

  const auto report = nlohmann::json::parse(slurp(out.output_dir / "report.json"));
  CHECK(report.at("episodes") == 7);
  CHECK(report.at("labels").at(0) == "alpha");
}

TEST_CASE("resuming from a checkpoint continues the run") {
  auto c = parse_run_config(kNaca);
  c.trainer.n_episodes = 6;
  c.trainer.checkpoint_every = 3;
  c.output_dir = scratch("resume_full");
  const auto full = run_experiment(c);
  c.output_dir = scratch("resume_tail");
  const auto tail = run_experiment(c, full.output_dir / "ckpt_ep3.json");
  CHECK(tail.result.agent.params.flatten() == full.result.agent.params.flatten());
}

TEST_CASE("command line") {
  const std::string cli = PPO1_CLI_PATH;
  CHECK(run_process({cli, "run", "--config", "/nonexistent.toml"}) == 2);
  CHECK(run_process({cli, "frobnicate"}) == 2);
  CHECK(run_process({cli, "--help"}) == 0);

  const auto dir = scratch("cli");
  std::string text = kNaca;
  text.replace(text.find("\"out\""), 5, "\"" + (dir / "out").string() + "\"");
  std::ofstream(dir / "naca.toml") << text;
  REQUIRE(run_process({cli, "run", "--config", (dir / "naca.toml").string()}) == 0);
  const auto history = slurp(dir / "out" / "history.csv");
  CHECK(std::count(history.begin(), history.end(), '\n') == 1 + 20 * 8);
  const auto summary = slurp(dir / "out" / "summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 1 + 20);
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
  CHECK(std::abs(report.at("optimum").at("actions").at(0).get<double>() - 50.6) < 2.0);

  const auto oracle = nlohmann::json::parse(capture(cli + " oracle --env naca --points 10000"));
  CHECK(std::abs(oracle.at("argmax").at(0).get<double>() - 50.6) < 0.01);
}

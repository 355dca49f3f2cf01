#include "ppo1/dispatch.hpp"
#include "ppo1/surrogates.hpp"
#include "ppo1/wire.hpp"
#include "ppo1/worker.hpp"

#include <doctest.h>

#include <sstream>

using namespace ppo1;

namespace {

std::vector<EnvironmentPtr> slots(const SurrogateEnv& env, int n) {
  std::vector<EnvironmentPtr> out;
  for (int i = 0; i < n; ++i) out.push_back(std::make_unique<SurrogateEnv>(env));
  return out;
}

std::vector<std::string> echo(std::vector<std::string> extra = {}) {
  std::vector<std::string> argv{PPO1_CLI_PATH, "worker-echo", "--env", "sphere"};
  argv.insert(argv.end(), extra.begin(), extra.end());
  return argv;
}

}  // namespace

TEST_CASE("sequential and concurrent dispatch agree") {
  const auto env = tandem_lift_env();
  std::vector<Vector> actions;
  for (int i = 0; i < 16; ++i) actions.push_back(Vector::Constant(1, 0.6 * i));
  auto a = slots(env, 16);
  auto b = slots(env, 16);
  const auto seq = dispatch(actions, a, 0, {DispatchMode::sequential, 5.0});
  const auto con = dispatch(actions, b, 0, {DispatchMode::concurrent, 5.0});
  REQUIRE(seq.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(seq[i].reward == con[i].reward);
    CHECK(seq[i].reward == env.reward(actions[i]));
  }
}

TEST_CASE("empty dispatch") {
  std::vector<EnvironmentPtr> none;
  CHECK(dispatch({}, none, 0).empty());
}

TEST_CASE("external worker matches the in-process surrogate") {
  const auto env = sphere(2);
  ExternalEnvironment ext(env.name(), env.action_spec(), env.fallback_reward(), echo());
  CHECK(ext.pid() > 0);
  for (int i = 0; i < 5; ++i) {
    const Vector x = Vector::Constant(2, 0.1 * i);
    CHECK(ext.evaluate(x, {i, 0, 5.0}) == env.reward(x));
  }
}

TEST_CASE("a worker timeout only affects its own slot") {
  const auto env = sphere(2);
  std::vector<EnvironmentPtr> envs;
  for (int i = 0; i < 3; ++i) {
    envs.push_back(std::make_unique<ExternalEnvironment>(
        env.name(), env.action_spec(), env.fallback_reward(),
        echo({"--delay-env", "1", "--delay-episode", "0", "--delay-s", "1.0"})));
  }
  const std::vector<Vector> actions(3, Vector::Constant(2, 0.2));
  const auto out = dispatch(actions, envs, 0, {DispatchMode::concurrent, 0.3});
  CHECK(out[0].status == EvalStatus::ok);
  CHECK(out[1].status == EvalStatus::timeout);
  CHECK(out[1].reward == env.fallback_reward());
  CHECK(out[2].status == EvalStatus::ok);
}

TEST_CASE("worker errors become failures") {
  const auto env = sphere(2);
  std::vector<EnvironmentPtr> envs;
  for (int i = 0; i < 2; ++i) {
    envs.push_back(std::make_unique<ExternalEnvironment>(env.name(), env.action_spec(),
                                                         env.fallback_reward(), echo({"--fail-env", "0"})));
  }
  const std::vector<Vector> actions(2, Vector::Zero(2));
  const auto out = dispatch(actions, envs, 0, {DispatchMode::sequential, 5.0});
  CHECK(out[0].status == EvalStatus::failed);
  CHECK(out[0].reward == env.fallback_reward());
  CHECK(out[1].status == EvalStatus::ok);
}

TEST_CASE("a missing worker program is a config error") {
  const auto env = sphere(2);
  CHECK_THROWS_AS(ExternalEnvironment(env.name(), env.action_spec(), env.fallback_reward(),
                                      {"/nonexistent/worker"}, 1.0),
                  std::exception);
}

TEST_CASE("serve_worker over streams") {
  auto env = sphere(2);
  std::istringstream in(encode(wire::Handshake{1, 2, "sphere"}) + "\n" +
                        encode(wire::Evaluate{0, 0, {0.3, -0.4}}) + "\n" +
                        encode(wire::Evaluate{0, 1, {1.3, -0.4}}) + "\n");
  std::ostringstream out;
  WorkerOptions opts;
  opts.fail_env = 1;
  CHECK(serve_worker(in, out, env, opts) == 0);
  std::istringstream lines(out.str());
  std::string line;
  std::vector<WireMessage> replies;
  while (std::getline(lines, line)) replies.push_back(decode(line));
  REQUIRE(replies.size() == 3);
  CHECK(std::get<wire::Handshake>(replies[0]).action_dim == 2);
  CHECK(std::get<wire::Result>(replies[1]).reward == 0.0);
  CHECK(std::get<wire::Error>(replies[2]).env_index == 1);

  std::istringstream early(encode(wire::Evaluate{0, 0, {0.0, 0.0}}) + "\n");
  std::ostringstream sink;
  CHECK(serve_worker(early, sink, env) == 2);
}

#pragma once

#include "ppo1/env.hpp"
#include "ppo1/surrogates.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ppo1 {

/// Environment served by a long-lived child process speaking the
/// newline-delimited JSON protocol over its stdin/stdout. One process per slot;
/// the handshake happens once, in the constructor.
class ExternalEnvironment : public Environment {
 public:
  ExternalEnvironment(std::string name, ActionSpec spec, double fallback,
                      std::vector<std::string> argv, double handshake_timeout_s = 30.0);
  ~ExternalEnvironment() override;

  ExternalEnvironment(const ExternalEnvironment&) = delete;
  ExternalEnvironment& operator=(const ExternalEnvironment&) = delete;

  const std::string& name() const override { return name_; }
  const ActionSpec& action_spec() const override { return spec_; }
  double fallback_reward() const override { return fallback_; }
  double evaluate(const Vector& physical, const EvalContext& ctx) override;

  int pid() const { return pid_; }

 private:
  void send_line(const std::string& line);
  // Next complete line, or nullopt once the deadline passes.
  std::optional<std::string> read_line(double deadline_s);

  std::string name_;
  ActionSpec spec_;
  double fallback_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  long lines_read_ = 0;
  bool alive_ = false;
};

struct WorkerOptions {
  // Fault injection for protocol tests: sleep before answering a matching request.
  std::optional<int> delay_env;
  std::optional<long> delay_episode;
  double delay_s = 0.0;
  // Answer requests for this slot with an error message.
  std::optional<int> fail_env;
};

/// Reference worker loop: answers a handshake, then one result per evaluate
/// using the given surrogate. Returns a process exit code.
int serve_worker(std::istream& in, std::ostream& out, SurrogateEnv& env,
                 const WorkerOptions& options = {});

}  // namespace ppo1

#include "ppo1/worker.hpp"

#include "ppo1/log.hpp"
#include "ppo1/wire.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace ppo1 {

namespace {

double now_s() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void ignore_sigpipe_once() {
  static const bool done = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

}  // namespace

ExternalEnvironment::ExternalEnvironment(std::string name, ActionSpec spec, double fallback,
                                         std::vector<std::string> argv, double handshake_timeout_s)
    : name_(std::move(name)), spec_(std::move(spec)), fallback_(fallback) {
  if (argv.empty()) throw ConfigError("external environment needs a command");
  ignore_sigpipe_once();

  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0 || pipe2(out_pipe, O_CLOEXEC) != 0) {
    throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> cargv;
  for (auto& a : argv) cargv.push_back(a.data());
  cargv.push_back(nullptr);
  const int rc = posix_spawnp(&pid_, cargv[0], &actions, nullptr, cargv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  if (rc != 0) {
    close(to_child_);
    close(from_child_);
    throw ConfigError("cannot start worker '" + argv[0] + "': " + std::strerror(rc));
  }
  alive_ = true;

  send_line(encode(wire::Handshake{kProtocolVersion, spec_.size(), name_}));
  const auto reply = read_line(now_s() + handshake_timeout_s);
  if (!reply) throw EvaluationTimeout("worker did not answer the handshake");
  const auto msg = decode(*reply, lines_read_);
  const auto* hs = std::get_if<wire::Handshake>(&msg);
  if (!hs) throw ProtocolError("expected handshake from worker", lines_read_);
  if (hs->protocol_version != kProtocolVersion) {
    throw ProtocolError("worker speaks protocol version " + std::to_string(hs->protocol_version),
                        lines_read_);
  }
  if (hs->action_dim != spec_.size()) {
    throw ProtocolError("worker action_dim " + std::to_string(hs->action_dim) + " != " +
                            std::to_string(spec_.size()),
                        lines_read_);
  }
}

ExternalEnvironment::~ExternalEnvironment() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    // EOF on stdin asks the worker to exit; a stuck worker is killed.
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, nullptr, WNOHANG) == pid_) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
  }
}

void ExternalEnvironment::send_line(const std::string& line) {
  std::string data = line + '\n';
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const ssize_t n = write(to_child_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      alive_ = false;
      throw std::runtime_error(std::string("worker write failed: ") + std::strerror(errno));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

std::optional<std::string> ExternalEnvironment::read_line(double deadline_s) {
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      ++lines_read_;
      return line;
    }
    const double left = deadline_s - now_s();
    if (left <= 0.0) return std::nullopt;
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(std::min(left, 3600.0) * 1000.0) + 1);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("poll: ") + std::strerror(errno));
    }
    if (rc == 0) continue;
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("worker read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      alive_ = false;
      throw std::runtime_error("worker closed its output");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

double ExternalEnvironment::evaluate(const Vector& physical, const EvalContext& ctx) {
  require_same_size(spec_.size(), physical.size(), "physical action");
  if (!alive_) throw std::runtime_error("worker is not running");
  send_line(encode(wire::Evaluate{ctx.episode, ctx.env_index,
                                  std::vector<double>(physical.data(), physical.data() + physical.size())}));
  const double deadline = now_s() + ctx.timeout_s;
  while (true) {
    const auto line = read_line(deadline);
    if (!line) {
      throw EvaluationTimeout("no reply within " + std::to_string(ctx.timeout_s) + " s");
    }
    const auto msg = decode(*line, lines_read_);
    if (const auto* r = std::get_if<wire::Result>(&msg)) {
      if (r->episode == ctx.episode && r->env_index == ctx.env_index) return r->reward;
    } else if (const auto* e = std::get_if<wire::Error>(&msg)) {
      if (e->episode == ctx.episode && e->env_index == ctx.env_index) {
        throw std::runtime_error("worker error: " + e->message);
      }
    } else {
      throw ProtocolError("unexpected message from worker", lines_read_);
    }
    // anything else is a late answer to a request that already timed out
  }
}

// ---------------------------------------------------------------------------

int serve_worker(std::istream& in, std::ostream& out, SurrogateEnv& env,
                 const WorkerOptions& options) {
  std::string line;
  long line_number = 0;
  bool greeted = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    WireMessage msg;
    try {
      msg = decode(line, line_number);
    } catch (const ProtocolError& e) {
      log_warning(e.what());
      return 2;
    }
    if (const auto* hs = std::get_if<wire::Handshake>(&msg)) {
      if (hs->protocol_version != kProtocolVersion) {
        log_warning("unsupported protocol version " + std::to_string(hs->protocol_version));
        return 2;
      }
      out << encode(wire::Handshake{kProtocolVersion, env.action_spec().size(), env.name()}) << '\n'
          << std::flush;
      greeted = true;
      continue;
    }
    const auto* ev = std::get_if<wire::Evaluate>(&msg);
    if (!greeted || !ev) {
      log_warning("protocol error at line " + std::to_string(line_number) +
                  ": expected " + (greeted ? "evaluate" : "handshake"));
      return 2;
    }

    const bool delay = options.delay_s > 0.0 &&
                       (!options.delay_env || *options.delay_env == ev->env_index) &&
                       (!options.delay_episode || *options.delay_episode == ev->episode);
    if (delay) std::this_thread::sleep_for(std::chrono::duration<double>(options.delay_s));

    if (options.fail_env && *options.fail_env == ev->env_index) {
      out << encode(wire::Error{ev->episode, ev->env_index, "injected failure"}) << '\n' << std::flush;
      continue;
    }
    try {
      const Vector x = Eigen::Map<const Vector>(ev->action.data(), static_cast<Eigen::Index>(ev->action.size()));
      const double r = env.reward(x);
      out << encode(wire::Result{ev->episode, ev->env_index, r}) << '\n' << std::flush;
    } catch (const std::exception& e) {
      out << encode(wire::Error{ev->episode, ev->env_index, e.what()}) << '\n' << std::flush;
    }
  }
  return 0;
}

}  // namespace ppo1

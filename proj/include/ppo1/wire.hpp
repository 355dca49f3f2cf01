#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ppo1 {

inline constexpr int kProtocolVersion = 1;

// Newline-delimited JSON messages exchanged with external environment workers.
namespace wire {

struct Handshake {
  int protocol_version = kProtocolVersion;
  int action_dim = 0;
  std::string env_name;
  bool operator==(const Handshake&) const = default;
};

struct Evaluate {
  long episode = 0;
  int env_index = 0;
  std::vector<double> action;
  bool operator==(const Evaluate&) const = default;
};

struct Result {
  long episode = 0;
  int env_index = 0;
  double reward = 0.0;
  bool operator==(const Result&) const = default;
};

struct Error {
  long episode = 0;
  int env_index = 0;
  std::string message;
  bool operator==(const Error&) const = default;
};

}  // namespace wire

using WireMessage = std::variant<wire::Handshake, wire::Evaluate, wire::Result, wire::Error>;

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& what, long line_number)
      : std::runtime_error("protocol error at line " + std::to_string(line_number) + ": " + what),
        line_number_(line_number) {}
  long line_number() const noexcept { return line_number_; }

 private:
  long line_number_;
};

/// One JSON object without the trailing newline, e.g.
/// {"type":"evaluate","episode":3,"env_index":1,"action":[0.5,-0.2]}
std::string encode(const WireMessage& message);
WireMessage decode(const std::string& line, long line_number = 0);

}  // namespace ppo1

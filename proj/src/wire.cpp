#include "ppo1/wire.hpp"

#include <json.hpp>

#include <cmath>

namespace ppo1 {

using nlohmann::ordered_json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string encode(const WireMessage& message) {
  ordered_json j = std::visit(
      overloaded{
          [](const wire::Handshake& m) {
            return ordered_json{{"type", "handshake"},
                                {"protocol_version", m.protocol_version},
                                {"action_dim", m.action_dim},
                                {"env_name", m.env_name}};
          },
          [](const wire::Evaluate& m) {
            return ordered_json{{"type", "evaluate"},
                                {"episode", m.episode},
                                {"env_index", m.env_index},
                                {"action", m.action}};
          },
          [](const wire::Result& m) {
            return ordered_json{{"type", "result"},
                                {"episode", m.episode},
                                {"env_index", m.env_index},
                                {"reward", m.reward}};
          },
          [](const wire::Error& m) {
            return ordered_json{{"type", "error"},
                                {"episode", m.episode},
                                {"env_index", m.env_index},
                                {"message", m.message}};
          },
      },
      message);
  return j.dump();
}

WireMessage decode(const std::string& line, long line_number) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const ordered_json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what(), line_number);
  }
  if (!j.is_object()) throw ProtocolError("message is not a JSON object", line_number);

  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "handshake") {
      return wire::Handshake{j.at("protocol_version").get<int>(), j.at("action_dim").get<int>(),
                             j.at("env_name").get<std::string>()};
    }
    if (type == "evaluate") {
      return wire::Evaluate{j.at("episode").get<long>(), j.at("env_index").get<int>(),
                            j.at("action").get<std::vector<double>>()};
    }
    if (type == "result") {
      const auto& r = j.at("reward");
      // JSON has no NaN/inf; null stands for a non-finite reward
      const double reward = r.is_null() ? std::nan("") : r.get<double>();
      return wire::Result{j.at("episode").get<long>(), j.at("env_index").get<int>(), reward};
    }
    if (type == "error") {
      return wire::Error{j.at("episode").get<long>(), j.at("env_index").get<int>(),
                         j.at("message").get<std::string>()};
    }
    throw ProtocolError("unknown message type '" + type + "'", line_number);
  } catch (const ordered_json::exception& e) {
    throw ProtocolError(std::string("bad message fields: ") + e.what(), line_number);
  }
}

}  // namespace ppo1

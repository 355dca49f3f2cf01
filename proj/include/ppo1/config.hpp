#pragma once

#include "ppo1/dispatch.hpp"
#include "ppo1/trainer.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ppo1 {

/// Value of a key in the TOML-like run configuration. Supports the subset
/// the run config needs: strings, numbers, booleans and flat arrays.
struct ConfigValue {
  using Array = std::vector<ConfigValue>;
  std::variant<double, bool, std::string, Array> value;

  double as_number(const std::string& key) const;
  long as_integer(const std::string& key) const;
  bool as_bool(const std::string& key) const;
  const std::string& as_string(const std::string& key) const;
  std::vector<double> as_numbers(const std::string& key) const;
  std::vector<std::string> as_strings(const std::string& key) const;
};

/// Keys are "section.key"; keys before any section header have no prefix.
using ConfigTable = std::map<std::string, ConfigValue>;

ConfigTable parse_config_text(const std::string& text, const std::string& source = "<config>");

struct EnvironmentConfig {
  std::string builtin;               // surrogate name, or empty for an external worker
  std::vector<std::string> command;  // program followed by its arguments
  std::string name;                  // announced in the handshake
  std::optional<double> fallback_reward;
  int sphere_dim = 2;
  double beta = 0.025;
};

struct RunConfig {
  TrainerConfig trainer;
  EnvironmentConfig environment;
  std::optional<ActionSpec> action_spec;
  std::filesystem::path output_dir = "ppo1_out";
  DispatchOptions dispatch;
};

RunConfig run_config_from_table(const ConfigTable& table);
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");

/// Reads a config file and applies the PPO1_SEED environment override.
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical text form; parse_run_config(dump_run_config(c)) reproduces c.
std::string dump_run_config(const RunConfig& config);

/// The [action_spec] override, else the spec of the named builtin surrogate.
ActionSpec effective_action_spec(const RunConfig& config);

/// One environment per slot as described by the config.
EnvironmentFactory make_env_factory(const RunConfig& config);

}  // namespace ppo1

#include "ppo1/config.hpp"

#include "ppo1/surrogates.hpp"
#include "ppo1/worker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace ppo1 {

namespace {

std::string type_error(const std::string& key, const char* want) {
  return "config key '" + key + "' must be " + want;
}

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

double ConfigValue::as_number(const std::string& key) const {
  if (const auto* d = std::get_if<double>(&value)) return *d;
  throw ConfigError(type_error(key, "a number"));
}

long ConfigValue::as_integer(const std::string& key) const {
  const double d = as_number(key);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError(type_error(key, "an integer"));
  return static_cast<long>(d);
}

bool ConfigValue::as_bool(const std::string& key) const {
  if (const auto* b = std::get_if<bool>(&value)) return *b;
  throw ConfigError(type_error(key, "true or false"));
}

const std::string& ConfigValue::as_string(const std::string& key) const {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  throw ConfigError(type_error(key, "a string"));
}

std::vector<double> ConfigValue::as_numbers(const std::string& key) const {
  const auto* a = std::get_if<Array>(&value);
  if (!a) throw ConfigError(type_error(key, "an array of numbers"));
  std::vector<double> out;
  for (const auto& v : *a) out.push_back(v.as_number(key));
  return out;
}

std::vector<std::string> ConfigValue::as_strings(const std::string& key) const {
  const auto* a = std::get_if<Array>(&value);
  if (!a) throw ConfigError(type_error(key, "an array of strings"));
  std::vector<std::string> out;
  for (const auto& v : *a) out.push_back(v.as_string(key));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

class LineParser {
 public:
  LineParser(const std::string& text, std::string where) : s_(text), where_(std::move(where)) {}

  ConfigValue value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return {string()};
    if (c == '[') return {array()};
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return {true};
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return {false};
    }
    return {number()};
  }

  void expect_end() {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] != '#') fail("unexpected trailing text");
  }

 private:
  [[noreturn]] void fail(const std::string& why) const { throw ConfigError(where_ + ": " + why); }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  std::string string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
        const char e = s_[++pos_];
        out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        out += s_[pos_];
      }
      ++pos_;
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  ConfigValue::Array array() {
    ++pos_;
    ConfigValue::Array out;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return out;
    }
    while (true) {
      out.push_back(value());
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return out;
        }
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return out;
      }
      fail("expected ',' or ']' in array");
    }
  }

  double number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double d = std::strtod(begin, &end);
    if (end == begin) fail("cannot parse value");
    pos_ += static_cast<std::size_t>(end - begin);
    return d;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  std::string where_;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigTable parse_config_text(const std::string& text, const std::string& source) {
  ConfigTable table;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, close - 1));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    const std::string rest = line.substr(eq + 1);
    LineParser p(rest, where);
    ConfigValue v = p.value();
    p.expect_end();
    const std::string full = section.empty() ? key : section + "." + key;
    if (!table.emplace(full, std::move(v)).second) {
      throw ConfigError(where + ": duplicate key '" + full + "'");
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

RunConfig run_config_from_table(const ConfigTable& table) {
  static const std::set<std::string> known{
      "trainer.n_episodes",      "trainer.n_envs",          "trainer.n_epochs",
      "trainer.minibatch_size",  "trainer.learning_rate",   "trainer.clip_epsilon",
      "trainer.objective_mode",  "trainer.entropy_coef",    "trainer.seed",
      "trainer.input_state",     "trainer.discount",        "trainer.hidden_sizes",
      "trainer.init_scheme",     "trainer.init_log_std",    "trainer.checkpoint_every",
      "trainer.moving_average_window",
      "environment.builtin",     "environment.command",     "environment.args",
      "environment.name",        "environment.fallback_reward", "environment.sphere_dim",
      "environment.beta",        "action_spec.dims",        "action_spec.labels",
      "output.dir",              "dispatch.mode",           "dispatch.worker_timeout_s"};
  for (const auto& [key, _] : table) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  auto get = [&](const std::string& key) -> const ConfigValue* {
    const auto it = table.find(key);
    return it == table.end() ? nullptr : &it->second;
  };

  RunConfig c;
  auto& t = c.trainer;
  if (auto* v = get("trainer.n_episodes")) t.n_episodes = static_cast<int>(v->as_integer("trainer.n_episodes"));
  if (auto* v = get("trainer.n_envs")) t.n_envs = static_cast<int>(v->as_integer("trainer.n_envs"));
  if (auto* v = get("trainer.n_epochs")) t.n_epochs = static_cast<int>(v->as_integer("trainer.n_epochs"));
  if (auto* v = get("trainer.minibatch_size")) t.minibatch_size = static_cast<int>(v->as_integer("trainer.minibatch_size"));
  if (auto* v = get("trainer.learning_rate")) t.learning_rate = v->as_number("trainer.learning_rate");
  if (auto* v = get("trainer.clip_epsilon")) t.clip.epsilon = v->as_number("trainer.clip_epsilon");
  if (auto* v = get("trainer.objective_mode")) {
    const auto& m = v->as_string("trainer.objective_mode");
    if (m == "standard_clip") {
      t.clip.mode = ObjectiveMode::standard_clip;
    } else if (m == "paper_literal") {
      t.clip.mode = ObjectiveMode::paper_literal;
    } else {
      throw ConfigError("objective_mode must be standard_clip or paper_literal");
    }
  }
  if (auto* v = get("trainer.entropy_coef")) t.clip.entropy_coef = v->as_number("trainer.entropy_coef");
  if (auto* v = get("trainer.seed")) {
    const long s = v->as_integer("trainer.seed");
    if (s < 0) throw ConfigError("trainer.seed must be >= 0");
    t.seed = static_cast<std::uint64_t>(s);
  }
  if (auto* v = get("trainer.input_state")) {
    const auto xs = v->as_numbers("trainer.input_state");
    t.input_state = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  }
  if (auto* v = get("trainer.discount")) t.discount = v->as_number("trainer.discount");
  if (auto* v = get("trainer.hidden_sizes")) {
    t.hidden_sizes.clear();
    for (double h : v->as_numbers("trainer.hidden_sizes")) t.hidden_sizes.push_back(static_cast<int>(h));
  }
  if (auto* v = get("trainer.init_scheme")) {
    const auto& s = v->as_string("trainer.init_scheme");
    if (s == "glorot_uniform") {
      t.init_scheme = InitScheme::glorot_uniform;
    } else if (s == "zeros") {
      t.init_scheme = InitScheme::zeros;
    } else {
      throw ConfigError("init_scheme must be glorot_uniform or zeros");
    }
  }
  if (auto* v = get("trainer.init_log_std")) t.init_log_std = v->as_number("trainer.init_log_std");
  if (auto* v = get("trainer.checkpoint_every")) t.checkpoint_every = static_cast<int>(v->as_integer("trainer.checkpoint_every"));
  if (auto* v = get("trainer.moving_average_window")) {
    t.moving_average_window = static_cast<int>(v->as_integer("trainer.moving_average_window"));
  }

  auto& e = c.environment;
  if (auto* v = get("environment.builtin")) e.builtin = v->as_string("environment.builtin");
  if (auto* v = get("environment.command")) e.command.push_back(v->as_string("environment.command"));
  if (auto* v = get("environment.args")) {
    if (e.command.empty()) throw ConfigError("environment.args given without environment.command");
    for (auto& a : v->as_strings("environment.args")) e.command.push_back(a);
  }
  if (auto* v = get("environment.name")) e.name = v->as_string("environment.name");
  if (auto* v = get("environment.fallback_reward")) e.fallback_reward = v->as_number("environment.fallback_reward");
  if (auto* v = get("environment.sphere_dim")) e.sphere_dim = static_cast<int>(v->as_integer("environment.sphere_dim"));
  if (auto* v = get("environment.beta")) e.beta = v->as_number("environment.beta");
  if (e.builtin.empty() == e.command.empty()) {
    throw ConfigError("set exactly one of environment.builtin and environment.command");
  }
  if (!e.builtin.empty()) {
    const auto names = surrogate_names();
    if (std::find(names.begin(), names.end(), e.builtin) == names.end()) {
      throw ConfigError("unknown builtin environment '" + e.builtin + "'");
    }
    if (e.name.empty()) e.name = e.builtin;
  }

  if (auto* v = get("action_spec.dims")) {
    ActionSpec spec;
    for (const auto& d : v->as_strings("action_spec.dims")) spec.dims.push_back(parse_dimension_map(d));
    if (auto* l = get("action_spec.labels")) {
      const auto labels = l->as_strings("action_spec.labels");
      if (labels.size() != spec.dims.size()) throw ConfigError("action_spec.labels length mismatch");
      for (std::size_t i = 0; i < labels.size(); ++i) spec.dims[i].label = labels[i];
    }
    c.action_spec = std::move(spec);
  }
  if (!e.command.empty() && !c.action_spec) {
    const auto names = surrogate_names();
    if (std::find(names.begin(), names.end(), e.name) == names.end()) {
      throw ConfigError("external environment needs [action_spec] dims (or a builtin environment.name)");
    }
  }

  if (auto* v = get("output.dir")) c.output_dir = v->as_string("output.dir");
  if (auto* v = get("dispatch.mode")) {
    const auto& m = v->as_string("dispatch.mode");
    if (m == "sequential") {
      c.dispatch.mode = DispatchMode::sequential;
    } else if (m == "concurrent") {
      c.dispatch.mode = DispatchMode::concurrent;
    } else {
      throw ConfigError("dispatch.mode must be sequential or concurrent");
    }
  }
  if (auto* v = get("dispatch.worker_timeout_s")) c.dispatch.timeout_s = v->as_number("dispatch.worker_timeout_s");
  if (!(c.dispatch.timeout_s > 0.0)) throw ConfigError("dispatch.worker_timeout_s must be positive");

  NetworkLayout{static_cast<int>(t.input_state.size()), t.hidden_sizes, 1, Activation::tanh}.validate();
  t.validate();
  return c;
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  return run_config_from_table(parse_config_text(text, source));
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_run_config(ss.str(), path.string());
  if (const char* env_seed = std::getenv("PPO1_SEED"); env_seed && *env_seed) {
    char* end = nullptr;
    const unsigned long long s = std::strtoull(env_seed, &end, 10);
    if (*end != '\0' || env_seed[0] == '-') throw ConfigError("PPO1_SEED must be a non-negative integer");
    c.trainer.seed = s;
  }
  return c;
}

std::string dump_run_config(const RunConfig& c) {
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
      if (ch == '"' || ch == '\\') out += '\\';
      out += ch;
    }
    return out + "\"";
  };
  auto numbers = [](const auto& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < static_cast<std::size_t>(xs.size()); ++i) {
      out += (i ? ", " : "") + format_number(static_cast<double>(xs[i]));
    }
    return out + "]";
  };
  auto strings = [&](const std::vector<std::string>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + quote(xs[i]);
    return out + "]";
  };

  const auto& t = c.trainer;
  std::ostringstream os;
  os << "[trainer]\n"
     << "n_episodes = " << t.n_episodes << "\n"
     << "n_envs = " << t.n_envs << "\n"
     << "n_epochs = " << t.n_epochs << "\n"
     << "minibatch_size = " << t.minibatch_size << "\n"
     << "learning_rate = " << format_number(t.learning_rate) << "\n"
     << "clip_epsilon = " << format_number(t.clip.epsilon) << "\n"
     << "objective_mode = "
     << quote(t.clip.mode == ObjectiveMode::standard_clip ? "standard_clip" : "paper_literal") << "\n"
     << "entropy_coef = " << format_number(t.clip.entropy_coef) << "\n"
     << "seed = " << t.seed << "\n"
     << "input_state = " << numbers(t.input_state) << "\n"
     << "discount = " << format_number(t.discount) << "\n"
     << "hidden_sizes = " << numbers(t.hidden_sizes) << "\n"
     << "init_scheme = " << quote(t.init_scheme == InitScheme::zeros ? "zeros" : "glorot_uniform") << "\n"
     << "init_log_std = " << format_number(t.init_log_std) << "\n"
     << "checkpoint_every = " << t.checkpoint_every << "\n"
     << "moving_average_window = " << t.moving_average_window << "\n\n";

  const auto& e = c.environment;
  os << "[environment]\n";
  if (!e.builtin.empty()) {
    os << "builtin = " << quote(e.builtin) << "\n";
  } else {
    os << "command = " << quote(e.command.front()) << "\n"
       << "args = " << strings(std::vector<std::string>(e.command.begin() + 1, e.command.end())) << "\n";
  }
  os << "name = " << quote(e.name) << "\n";
  if (e.fallback_reward) os << "fallback_reward = " << format_number(*e.fallback_reward) << "\n";
  os << "sphere_dim = " << e.sphere_dim << "\n"
     << "beta = " << format_number(e.beta) << "\n\n";

  if (c.action_spec) {
    std::vector<std::string> dims;
    std::vector<std::string> labels;
    for (const auto& d : c.action_spec->dims) {
      dims.push_back(d.describe());
      labels.push_back(d.label);
    }
    os << "[action_spec]\n"
       << "dims = " << strings(dims) << "\n"
       << "labels = " << strings(labels) << "\n\n";
  }
  os << "[output]\n"
     << "dir = " << quote(c.output_dir.string()) << "\n\n"
     << "[dispatch]\n"
     << "mode = " << quote(c.dispatch.mode == DispatchMode::sequential ? "sequential" : "concurrent") << "\n"
     << "worker_timeout_s = " << format_number(c.dispatch.timeout_s) << "\n";
  return os.str();
}

ActionSpec effective_action_spec(const RunConfig& config) {
  if (config.action_spec) return *config.action_spec;
  const auto& e = config.environment;
  return make_surrogate(e.builtin.empty() ? e.name : e.builtin, {e.sphere_dim, e.beta}).action_spec();
}

EnvironmentFactory make_env_factory(const RunConfig& config) {
  const auto& e = config.environment;
  SurrogateOptions opts{e.sphere_dim, e.beta};
  if (!e.builtin.empty()) {
    const SurrogateEnv base = make_surrogate(e.builtin, opts);
    const double fallback = e.fallback_reward.value_or(base.fallback_reward());
    if (!config.action_spec && !e.fallback_reward) {
      return [base](int) -> EnvironmentPtr { return std::make_unique<SurrogateEnv>(base); };
    }
    const ActionSpec spec = config.action_spec.value_or(base.action_spec());
    require_same_size(base.action_spec().size(), spec.size(), "action_spec override");
    return [base, spec, fallback, name = e.name](int) -> EnvironmentPtr {
      return std::make_unique<FunctionEnvironment>(
          name, spec, fallback, [base](const Vector& x) { return base.reward(x); },
          [base](const Vector& x) { return base.feasible(x); });
    };
  }

  ActionSpec spec;
  double fallback = e.fallback_reward.value_or(0.0);
  if (config.action_spec) {
    spec = *config.action_spec;
  }
  const auto names = surrogate_names();
  if (std::find(names.begin(), names.end(), e.name) != names.end()) {
    const SurrogateEnv known = make_surrogate(e.name, opts);
    if (!config.action_spec) spec = known.action_spec();
    if (!e.fallback_reward) fallback = known.fallback_reward();
  }
  return [spec, fallback, name = e.name, command = e.command](int) -> EnvironmentPtr {
    return std::make_unique<ExternalEnvironment>(name, spec, fallback, command);
  };
}

}  // namespace ppo1

#include "ppo1/checkpoint.hpp"

#include <fstream>

namespace ppo1 {

using nlohmann::json;

namespace {

json vector_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const json& j, Eigen::Index expected, const char* what) {
  const auto values = j.get<std::vector<double>>();
  require_same_size(expected, static_cast<Eigen::Index>(values.size()), what);
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json params_block(const NetworkParams& p) {
  json layers = json::array();
  for (const auto& l : p.layers) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) rows.push_back(vector_to_json(l.weights.row(r)));
    layers.push_back({{"weights", rows}, {"bias", vector_to_json(l.bias)}});
  }
  return {{"layers", layers}, {"log_std", vector_to_json(p.log_std)}};
}

NetworkParams params_from_block(const json& j, const NetworkLayout& layout) {
  NetworkParams p = init_network(layout, 0, InitScheme::zeros);
  const auto& layers = j.at("layers");
  require_same_size(layout.num_layers(), static_cast<Eigen::Index>(layers.size()), "checkpoint layers");
  for (int i = 0; i < layout.num_layers(); ++i) {
    auto& dst = p.layers[i];
    const auto& rows = layers[i].at("weights");
    require_same_size(dst.weights.rows(), static_cast<Eigen::Index>(rows.size()), "checkpoint weight rows");
    for (Eigen::Index r = 0; r < dst.weights.rows(); ++r) {
      dst.weights.row(r) = vector_from_json(rows[r], dst.weights.cols(), "checkpoint weight row").transpose();
    }
    dst.bias = vector_from_json(layers[i].at("bias"), dst.bias.size(), "checkpoint bias");
  }
  p.log_std = vector_from_json(j.at("log_std"), layout.output_dim, "checkpoint log_std");
  if (!p.all_finite()) throw ConfigError("checkpoint contains non-finite parameters");
  return p;
}

}  // namespace

json layout_to_json(const NetworkLayout& layout) {
  return {{"input_dim", layout.input_dim},
          {"hidden_sizes", layout.hidden_sizes},
          {"output_dim", layout.output_dim},
          {"hidden_activation", "tanh"},
          {"output_activation", layout.output_activation == Activation::tanh ? "tanh" : "linear"}};
}

NetworkLayout layout_from_json(const json& j) {
  NetworkLayout l;
  l.input_dim = j.at("input_dim").get<int>();
  l.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
  l.output_dim = j.at("output_dim").get<int>();
  if (j.value("hidden_activation", "tanh") != "tanh") {
    throw ConfigError("unsupported hidden activation in checkpoint");
  }
  const auto head = j.value("output_activation", "tanh");
  if (head == "tanh") {
    l.output_activation = Activation::tanh;
  } else if (head == "linear") {
    l.output_activation = Activation::linear;
  } else {
    throw ConfigError("unsupported output activation '" + head + "'");
  }
  l.validate();
  return l;
}

json checkpoint_to_json(const NetworkParams& params, const AdamState& adam) {
  return {{"format", "ppo1-checkpoint"},
          {"version", kCheckpointVersion},
          {"layout", layout_to_json(params.layout)},
          {"params", params_block(params)},
          {"adam",
           {{"step_count", adam.step_count},
            {"beta1", adam.beta1},
            {"beta2", adam.beta2},
            {"epsilon", adam.epsilon},
            {"first_moment", params_block(adam.first_moment)},
            {"second_moment", params_block(adam.second_moment)}}}};
}

std::pair<NetworkParams, AdamState> checkpoint_from_json(const json& doc) {
  try {
    if (doc.at("format") != "ppo1-checkpoint") throw ConfigError("not a ppo1 checkpoint");
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ConfigError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto layout = layout_from_json(doc.at("layout"));
    NetworkParams params = params_from_block(doc.at("params"), layout);
    const auto& a = doc.at("adam");
    AdamState adam = make_adam_state(params, a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                                     a.at("epsilon").get<double>());
    adam.step_count = a.at("step_count").get<long>();
    adam.first_moment = params_from_block(a.at("first_moment"), layout);
    adam.second_moment = params_from_block(a.at("second_moment"), layout);
    return {std::move(params), std::move(adam)};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  } catch (const DimensionMismatch& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace ppo1

#pragma once

#include "ppo1/mlp.hpp"

#include <json.hpp>

#include <filesystem>

namespace ppo1 {

inline constexpr int kCheckpointVersion = 1;

// Versioned JSON document: layout header, row-major weight arrays, log_std
// array, and the full Adam state. Doubles round-trip exactly.
nlohmann::json checkpoint_to_json(const NetworkParams& params, const AdamState& adam);
std::pair<NetworkParams, AdamState> checkpoint_from_json(const nlohmann::json& doc);

nlohmann::json layout_to_json(const NetworkLayout& layout);
NetworkLayout layout_from_json(const nlohmann::json& j);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace ppo1

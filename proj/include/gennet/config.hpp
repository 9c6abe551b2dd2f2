#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "gennet/engine.hpp"

namespace gennet {

// Flat `key = value` config, one field per line, `#` comments. Keys mirror
// EngineConfig; values are integers, reals, booleans, "strings" or
// [arrays]. Example:
//
//   population_size = 20
//   generations = 10
//   master_seed = 7
//   evaluator = "external"
//   workers = ["python3 -m worker --transport stdio", "10.0.0.5:7000"]
//   filters_range = [16, 512]
//   kernel_sizes = [3, 5, 7]
//   max_epochs = 3
//
// Unknown keys, type mismatches and invariant violations are all collected
// and thrown together as a ConfigError. With check_values off only syntax and
// field types are checked, so callers can apply overrides first.
EngineConfig parse_config(std::string_view text, bool check_values = true);
EngineConfig load_config(const std::filesystem::path& path, bool check_values = true);

nlohmann::json config_to_json(const EngineConfig& config);
EngineConfig config_from_json(const nlohmann::json& doc);

}  // namespace gennet

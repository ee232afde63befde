#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "byzfed/pipeline.hpp"

namespace byzfed {

/// Full config as JSON; every field is written so the snapshot replays exactly.
nlohmann::json config_to_json(const PipelineConfig& cfg);

/// Missing keys keep their defaults; unknown keys and wrong types are
/// ConfigErrors. Does not call validate().
PipelineConfig config_from_json(const nlohmann::json& j);

/// Reads a JSON config file. Throws ConfigError when unreadable or malformed.
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace byzfed

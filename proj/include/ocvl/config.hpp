#pragma once

// Run configuration: one JSON document with sections train, model, backbone,
// paths, scene and bench. Unknown keys are rejected; every key has a default.

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "ocvl/train_loop.hpp"

namespace ocvl {

struct DataPaths {
  std::string train_data;  // split directory; empty -> generate from `scene`
  std::string val_data;    // split directory; empty -> generate from `scene`
  std::string out_dir = "run";
};

/// Scene settings used when a split is generated in memory.
struct SceneDefaults {
  std::string variant = "a";
  std::size_t train_videos = 500;
  std::size_t val_videos = 100;
  std::size_t frames = 24;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t k_max = 11;
  int objects = -1;  // -1 -> variant default
  std::uint64_t seed = 0;

  VideoGeometry geometry() const;
};

struct RunConfig {
  TrainConfig train;
  DataPaths paths;
  SceneDefaults scene;
  BenchWorkload bench;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Applies "dotted.key=value"; the value is parsed as JSON when possible and
/// taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Defaults, then the file (if any), then the overrides in order.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          std::span<const std::string> overrides = {});

/// Generates `count` videos of the scene settings; video i uses seed
/// mix_seed(seed, i).
std::vector<VideoClip> generate_videos(const SceneDefaults& scene, std::size_t count,
                                       std::uint64_t seed);

}  // namespace ocvl

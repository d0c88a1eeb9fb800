#include "ocvl/config.hpp"

#include <exception>
#include <fstream>

#include "json_fields.hpp"

namespace ocvl {

VideoGeometry SceneDefaults::geometry() const {
  VideoGeometry g;
  g.frames = frames;
  g.height = height;
  g.width = width;
  g.k_max = k_max;
  return g;
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j = to_json(cfg.train);
  j["paths"] = {{"train_data", cfg.paths.train_data},
                {"val_data", cfg.paths.val_data},
                {"out_dir", cfg.paths.out_dir}};
  const SceneDefaults& s = cfg.scene;
  j["scene"] = {{"variant", s.variant},   {"train_videos", s.train_videos},
                {"val_videos", s.val_videos}, {"frames", s.frames},
                {"height", s.height},     {"width", s.width},
                {"k_max", s.k_max},       {"objects", s.objects},
                {"seed", s.seed}};
  const BenchWorkload& b = cfg.bench;
  j["bench"] = {{"slots", b.slots},     {"dim", b.dim},         {"height", b.height},
                {"width", b.width},     {"repeats", b.repeats}, {"seed", b.seed}};
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  nlohmann::json train_part = nlohmann::json::object();
  detail::JsonFields top(j, "config");
  for (const char* key : {"train", "model", "backbone"}) {
    if (const auto* v = top.object(key)) train_part[key] = *v;
  }
  cfg.train = train_config_from_json(train_part);
  if (const auto* p = top.object("paths")) {
    detail::JsonFields f(*p, "paths");
    f.read("train_data", cfg.paths.train_data);
    f.read("val_data", cfg.paths.val_data);
    f.read("out_dir", cfg.paths.out_dir);
    f.finish();
  }
  if (const auto* p = top.object("scene")) {
    detail::JsonFields f(*p, "scene");
    SceneDefaults& s = cfg.scene;
    f.read("variant", s.variant);
    f.read("train_videos", s.train_videos);
    f.read("val_videos", s.val_videos);
    f.read("frames", s.frames);
    f.read("height", s.height);
    f.read("width", s.width);
    f.read("k_max", s.k_max);
    f.read("objects", s.objects);
    f.read("seed", s.seed);
    f.finish();
    parse_variant(s.variant);
  }
  if (const auto* p = top.object("bench")) {
    detail::JsonFields f(*p, "bench");
    BenchWorkload& b = cfg.bench;
    f.read("slots", b.slots);
    f.read("dim", b.dim);
    f.read("height", b.height);
    f.read("width", b.width);
    f.read("repeats", b.repeats);
    f.read("seed", b.seed);
    f.finish();
  }
  top.finish();
  return cfg;
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' walks into a non-object");
    if (dot == std::string::npos) {
      if (!node->contains(part)) throw ConfigError("unknown config key '" + key + "'");
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) throw ConfigError("unknown config key '" + key + "'");
    node = &(*node)[part];
    start = dot + 1;
  }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          std::span<const std::string> overrides) {
  nlohmann::json doc = to_json(RunConfig{});
  if (path) {
    std::ifstream in(*path);
    if (!in) throw IoError("cannot open config '" + path->string() + "'");
    nlohmann::json user;
    try {
      user = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config '" + path->string() + "': " + e.what());
    }
    if (!user.is_object()) throw ConfigError("config '" + path->string() + "' must be a JSON object");
    // Validate the user document on its own so unknown keys are reported
    // against the file, then layer it over the defaults.
    run_config_from_json(user);
    doc.merge_patch(user);
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  return run_config_from_json(doc);
}

std::vector<VideoClip> generate_videos(const SceneDefaults& scene, std::size_t count,
                                       std::uint64_t seed) {
  const Variant variant = parse_variant(scene.variant);
  const VideoGeometry geom = scene.geometry();
  std::vector<VideoClip> videos(count);
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
    try {
      videos[i] = generate_video(sample_scene(variant, mix_seed(seed, i), geom, scene.objects), geom);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return videos;
}

}  // namespace ocvl

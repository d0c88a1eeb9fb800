#pragma once

// Procedural multi-object sprite videos and the OCV1 dataset container.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ocvl/errors.hpp"

namespace ocvl {

enum class Variant { a_like, c_like, e_like };
enum class SpriteShape { disc, square, triangle };

/// "a" / "c" / "e"
std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct VideoGeometry {
  std::uint32_t frames = 24;
  std::uint32_t height = 64;
  std::uint32_t width = 64;
  std::uint32_t k_max = 11;
  friend bool operator==(const VideoGeometry&, const VideoGeometry&) = default;
};

/// One sprite. Position is the frame-0 center in pixels; velocity is in
/// pixels/frame. Larger depth is closer to the camera.
struct SceneObject {
  SpriteShape shape = SpriteShape::disc;
  std::array<std::uint8_t, 3> color{255, 255, 255};
  double radius = 6.0;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  int depth = 0;
};

struct Background {
  std::array<double, 3> base{96.0, 96.0, 96.0};
  double amplitude = 0.0;
  double freq_x = 0.3;
  double freq_y = 0.3;
  double phase_x = 0.0;
  double phase_y = 0.0;
};

struct SceneSpec {
  Variant variant = Variant::a_like;
  std::vector<SceneObject> objects;
  double pan_x = 0.0;  // uniform screen translation, pixels/frame
  double pan_y = 0.0;
  Background background;
  std::uint64_t seed = 0;

  std::size_t num_objects() const { return objects.size(); }
};

struct FeatureBlock {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;  // T x H' x W' x D
  friend bool operator==(const FeatureBlock&, const FeatureBlock&) = default;
};

struct EmbeddingBlock {
  std::uint32_t dim = 0;
  std::vector<float> values;  // T x D
  friend bool operator==(const EmbeddingBlock&, const EmbeddingBlock&) = default;
};

/// Absent-object rows in `boxes` hold this value in all four coordinates.
inline constexpr float kAbsentBox = -1.0f;

/// A fully annotated image sequence. Box row k belongs to mask id k, so row 0
/// (background) is always absent.
struct VideoClip {
  VideoGeometry geometry;
  std::vector<std::uint8_t> rgb;    // T x H x W x 3
  std::vector<std::uint8_t> masks;  // T x H x W, 0 = background
  std::vector<float> boxes;         // T x K_max x 4, (x0, y0, x1, y1) in [0,1]
  std::optional<std::vector<float>> flow;  // T x H x W x 2, pixels/frame
  std::optional<FeatureBlock> features;
  std::optional<EmbeddingBlock> global_embeds;

  std::uint32_t frames() const { return geometry.frames; }
  std::size_t pixels() const { return std::size_t{geometry.height} * geometry.width; }
  std::span<const std::uint8_t> frame_rgb(std::size_t t) const;
  std::span<const std::uint8_t> frame_mask(std::size_t t) const;
  std::span<const float> frame_boxes(std::size_t t) const;
  std::span<const float> frame_flow(std::size_t t) const;
  std::span<const float> frame_features(std::size_t t) const;
  std::span<const float> frame_global_embed(std::size_t t) const;

  friend bool operator==(const VideoClip&, const VideoClip&) = default;
};

/// Draws a random scene for `variant`. `num_objects` < 0 selects the variant
/// default (5 for a, 6 for c, 8 for e).
SceneSpec sample_scene(Variant variant, std::uint64_t seed, const VideoGeometry& geometry,
                       int num_objects = -1);

/// Renders a scene back to front with analytic flow and tight boxes.
/// Throws ConfigError when the spec violates its invariants.
VideoClip generate_video(const SceneSpec& spec, const VideoGeometry& geometry);

/// Default container geometry for a variant (K_max = 11 for a/c, 24 for e).
VideoGeometry default_geometry(Variant variant);

void write_container(std::span<const VideoClip> clips, const std::filesystem::path& path);
std::vector<VideoClip> read_container(const std::filesystem::path& path);
/// In-memory forms of the above; the file functions are thin wrappers.
std::vector<std::uint8_t> encode_container(std::span<const VideoClip> clips);
std::vector<VideoClip> decode_container(std::span<const std::uint8_t> bytes);

/// Consecutive non-overlapping clips; trailing frames that do not fill a clip
/// are dropped. Throws ArgumentError when clip_len <= 0.
std::vector<VideoClip> split_into_clips(const VideoClip& video, long long clip_len);

/// Largest absolute flow component over all clips (0 when none carry flow).
double flow_max_abs(std::span<const VideoClip> clips);

/// Per-video scene parameters recorded in the manifest.
struct SceneSummary {
  std::uint64_t seed = 0;
  std::size_t objects = 0;
  double pan_x = 0.0;
  double pan_y = 0.0;
  friend bool operator==(const SceneSummary&, const SceneSummary&) = default;
};

struct SplitManifest {
  std::vector<std::string> videos;
  std::string variant;
  std::uint64_t seed = 0;
  double flow_max = 0.0;
  std::vector<SceneSummary> scenes;  // empty when not recorded
};

struct Split {
  SplitManifest manifest;
  std::vector<VideoClip> videos;
};

/// Writes one container per video plus manifest.json into `dir`.
void write_split(const std::filesystem::path& dir, std::span<const VideoClip> videos,
                 const std::string& variant, std::uint64_t seed,
                 std::span<const SceneSpec> scenes = {});
Split read_split(const std::filesystem::path& dir);

}  // namespace ocvl

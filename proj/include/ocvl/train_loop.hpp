#pragma once

// Optimization, checkpointing, evaluation and the decoder benchmark.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocvl/metrics.hpp"
#include "ocvl/model.hpp"

namespace ocvl {

enum class ModelKind { slot_model, mask_oracle };
std::string model_kind_name(ModelKind k);
ModelKind parse_model_kind(const std::string& name);

struct TrainConfig {
  std::size_t steps = 50000;
  std::size_t batch_size = 16;
  double lr = 2e-4;
  std::size_t clip_len = 6;
  std::uint64_t seed = 0;
  std::size_t warmup_steps = 100;
  double grad_clip_norm = 1.0;
  std::size_t checkpoint_every = 1000;
  ModelKind kind = ModelKind::slot_model;
  ModelConfig model;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Strict: unknown keys and wrong types throw ConfigError; missing keys keep
/// their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a over the canonical (sorted-key) JSON dump.
std::uint64_t config_hash(const nlohmann::json& j);

struct AdamState {
  ParamStore m;
  ParamStore v;
  std::uint64_t step = 0;
};

struct Checkpoint {
  nlohmann::json config;  // to_json(TrainConfig)
  std::uint64_t hash = 0;
  ParamStore params;
  AdamState adam;
  std::uint64_t step = 0;
  std::string rng_state;

  TrainConfig train_config() const { return train_config_from_json(config); }
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Refuses (ConfigError) when the stored hash disagrees with the stored config
/// or with `expected` unless `force` is set.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const nlohmann::json* expected = nullptr, bool force = false);

/// One Adam update with bias correction; gradients of non-trainable entries
/// are ignored.
void adam_update(ParamStore& params, const ParamStore& grads, AdamState& state, double lr,
                 double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

/// Scales `grads` in place so their global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
double clip_global_norm(ParamStore& grads, const ParamStore& params, double max_norm);

/// Linear warmup from lr/warmup to lr over `warmup` steps, then constant.
double scheduled_lr(const TrainConfig& cfg, std::size_t step);

struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
};

struct TrainOptions {
  /// Appends one JSON line per step when set.
  std::optional<std::filesystem::path> metrics_path;
  /// Writes checkpoint.ock every cfg.checkpoint_every steps and at the end.
  std::optional<std::filesystem::path> checkpoint_dir;
  std::function<void(const StepRecord&)> on_step;
  double flow_max = 1.0;
};

Checkpoint init_checkpoint(const TrainConfig& cfg);

/// Runs cfg.steps optimizer updates over clips sampled uniformly from
/// `clips`. A non-finite loss throws NumericError carrying the step index;
/// checkpoints already on disk are left untouched.
Checkpoint train(const TrainConfig& cfg, std::span<const VideoClip> clips,
                 const TrainOptions& opts = {});

/// Loss and gradients of the mean clip loss over `batch`.
double batch_gradients(const SlotModel& model, const ParamStore& params,
                       std::span<const VideoClip* const> batch, double flow_max, ParamStore& grads);

struct FrameDecoding {
  Matrix logits;          // positions x K
  Matrix weights;         // positions x K
  Matrix reconstruction;  // positions x C, empty when unavailable
  Matrix encoder_attention;  // H'W' x K, empty when unavailable
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t feature_height = 0;
  std::size_t feature_width = 0;
};

/// Anything that maps a video to per-frame decoder attention.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  /// One entry per evaluated frame; trailing frames that do not fill a clip
  /// are dropped.
  virtual std::vector<FrameDecoding> decode_video(const VideoClip& video) const = 0;
  virtual std::size_t slots() const = 0;
};

class ModelSegmenter final : public Segmenter {
 public:
  ModelSegmenter(TrainConfig cfg, ParamStore params, double flow_max = 1.0);
  std::vector<FrameDecoding> decode_video(const VideoClip& video) const override;
  std::size_t slots() const override { return model_.config().slots; }

 private:
  TrainConfig cfg_;
  SlotModel model_;
  ParamStore params_;
  double flow_max_;
};

/// Emits the ground-truth masks as one-hot attention logits.
class MaskOracleSegmenter final : public Segmenter {
 public:
  explicit MaskOracleSegmenter(std::size_t clip_len) : clip_len_(clip_len) {}
  std::vector<FrameDecoding> decode_video(const VideoClip& video) const override;
  std::size_t slots() const override { return 0; }

 private:
  std::size_t clip_len_;
};

std::unique_ptr<Segmenter> make_segmenter(const Checkpoint& ckpt, double flow_max = 1.0);

/// Nearest-neighbour upsampling of per-frame argmax labels to the image grid.
SegmentationVolume predicted_volume(std::span<const FrameDecoding> frames, std::size_t height,
                                    std::size_t width);
/// Ground-truth ids of the first `frames` frames.
SegmentationVolume truth_volume(const VideoClip& video, std::size_t frames);

struct EvalReport {
  std::string variant;
  double ari_fg = 0.0;
  double ari = 0.0;
  std::vector<double> per_video_ari_fg;
  std::vector<double> per_video_ari;
  std::size_t skipped = 0;  // videos without foreground

  nlohmann::json to_json() const;
};

EvalReport evaluate(const Segmenter& segmenter, std::span<const VideoClip> videos,
                    const std::string& variant);

struct BenchWorkload {
  std::size_t slots = 11;
  std::size_t dim = 64;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
};

struct DecoderBench {
  std::size_t passes = 0;
  double wall_seconds = 0.0;
  std::size_t peak_activation_bytes = 0;
};

struct BenchReport {
  BenchWorkload workload;
  DecoderBench attentional;
  DecoderBench broadcast;
  double pass_ratio = 0.0;  // broadcast / attentional
  double time_ratio = 0.0;
  double memory_ratio = 0.0;

  nlohmann::json to_json() const;
};

/// Forward + backward of both decoders on identical random slots and
/// targets (RGB output).
BenchReport bench_decoders(const BenchWorkload& workload);

}  // namespace ocvl

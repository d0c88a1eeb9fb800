#pragma once

// The full object-centric video model: backbone -> Slot Attention (box
// conditioned, carried over frame to frame) -> slot decoder -> reconstruction
// loss.

#include <cstdint>
#include <vector>

#include "ocvl/autodiff.hpp"
#include "ocvl/backbone.hpp"
#include "ocvl/decoders.hpp"
#include "ocvl/params.hpp"
#include "ocvl/pos_embed.hpp"
#include "ocvl/slot_encoder.hpp"
#include "ocvl/synth_data.hpp"

namespace ocvl {

struct ModelConfig {
  std::size_t slots = 11;
  std::size_t dim = 64;
  TargetKind target = TargetKind::rgb;
  DecoderKind decoder = DecoderKind::attentional;
  DecoderFlags flags;
  std::size_t fourier_freqs = kDefaultFourierFreqs;
  bool temporal_queries = false;
  bool encoder_pos = true;
  int first_frame_iters = 2;
  int later_iters = 1;
  bool learned_transition = false;
  bool detach_per_frame = false;
  std::size_t box_hidden = 64;
  std::size_t mlp_hidden = 128;
  BackboneConfig backbone;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
  SlotEncoderConfig slot_encoder() const;
  DecoderConfig decoder_config() const;
};

struct FrameOutput {
  Var reconstruction;     // positions x C
  Var decoder_logits;     // positions x K
  Var decoder_weights;    // positions x K
  Var encoder_attention;  // H'W' x K (invalid when no slot-attention round ran)
  Var slots;              // K x D
  Var loss;               // 1 x 1
  std::size_t grid_height = 0;  // decoder grid
  std::size_t grid_width = 0;
  std::size_t feature_height = 0;  // backbone grid
  std::size_t feature_width = 0;
};

struct ClipOutput {
  Var loss;  // mean of the per-frame losses
  std::vector<FrameOutput> frames;
  std::size_t decoder_passes = 0;
};

class SlotModel {
 public:
  explicit SlotModel(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  ParamStore init_params(std::uint64_t seed) const;

  /// Decoder grid for a clip: the image for rgb/flow, the feature grid for
  /// feature targets.
  std::pair<std::size_t, std::size_t> decoder_grid(const VideoClip& clip) const;

  /// Recurrent forward pass over every frame of `clip`; `flow_max` normalizes
  /// flow targets.
  ClipOutput forward_clip(const VideoClip& clip, ParamBinder& params, double flow_max = 1.0) const;

 private:
  ModelConfig cfg_;
};

/// Runs the backbone over every frame and stores the grids and global
/// embeddings as FEAT/GEMB sections, the same layout an external feature dump
/// would use.
void attach_backbone_features(VideoClip& clip, const BackboneConfig& cfg, const ParamStore& params);

}  // namespace ocvl

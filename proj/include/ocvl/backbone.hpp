#pragma once

// Visual backbones: frame -> feature grid V (H' x W' x D) and global scene
// embedding g (D).

#include <cstdint>
#include <span>
#include <string>

#include "ocvl/autodiff.hpp"
#include "ocvl/params.hpp"

namespace ocvl {

enum class BackboneProvider { trainable_mini, frozen_random_proj, precomputed };

std::string provider_name(BackboneProvider p);
BackboneProvider parse_provider(const std::string& name);

struct BackboneConfig {
  BackboneProvider provider = BackboneProvider::frozen_random_proj;
  std::size_t patch = 8;
  std::size_t dim = 64;
  /// Freezes the trainable_mini encoder; frozen_random_proj is always frozen.
  bool frozen = false;
};

/// One frame as the backbone sees it. Feature spans are only read by the
/// precomputed provider.
struct FrameInput {
  std::span<const std::uint8_t> rgb;  // H x W x 3
  std::size_t height = 0;
  std::size_t width = 0;
  std::span<const float> features;      // H' x W' x D, may be empty
  std::size_t feature_height = 0;
  std::size_t feature_width = 0;
  std::span<const float> global_embed;  // D, may be empty
};

/// Backbone output on a tape. `grid` is (H'*W') x D, `global_embed` is 1 x D.
struct FeatureGrid {
  Var grid;
  Var global_embed;
  std::size_t height = 0;
  std::size_t width = 0;
};

/// Adds the provider's parameters ("backbone.*"). Frozen weights are stored as
/// non-trainable entries so checkpoints carry them but optimizers skip them.
void init_backbone_params(const BackboneConfig& cfg, ParamStore& params, Rng& rng);

/// (H/p * W/p) x (p*p*3) matrix of [0,1] pixel values, patch-major; inside a
/// patch the layout is row, column, channel.
Matrix patchify(std::span<const std::uint8_t> rgb, std::size_t height, std::size_t width,
                std::size_t patch);

FeatureGrid encode_frame(const FrameInput& frame, const BackboneConfig& cfg, ParamBinder& params);

/// Mean over spatial positions (1 x D).
Var global_embedding(Var grid);

}  // namespace ocvl

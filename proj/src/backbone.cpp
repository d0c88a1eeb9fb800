#include "ocvl/backbone.hpp"

#include <cmath>

namespace ocvl {

std::string provider_name(BackboneProvider p) {
  switch (p) {
    case BackboneProvider::trainable_mini: return "trainable_mini";
    case BackboneProvider::frozen_random_proj: return "frozen_random_proj";
    case BackboneProvider::precomputed: return "precomputed";
  }
  return "?";
}

BackboneProvider parse_provider(const std::string& name) {
  if (name == "trainable_mini") return BackboneProvider::trainable_mini;
  if (name == "frozen_random_proj") return BackboneProvider::frozen_random_proj;
  if (name == "precomputed") return BackboneProvider::precomputed;
  throw ConfigError("unknown backbone provider '" + name + "'");
}

void init_backbone_params(const BackboneConfig& cfg, ParamStore& params, Rng& rng) {
  if (cfg.patch == 0 || cfg.dim == 0) throw ConfigError("backbone patch and dim must be positive");
  const std::size_t in = cfg.patch * cfg.patch * 3;
  switch (cfg.provider) {
    case BackboneProvider::frozen_random_proj:
      params.add("backbone.proj.w", random_normal(in, cfg.dim, 1.0 / std::sqrt(double(in)), rng),
                 false);
      params.add("backbone.proj.b", Matrix(1, cfg.dim), false);
      break;
    case BackboneProvider::trainable_mini: {
      const bool train = !cfg.frozen;
      params.add("backbone.embed.w", random_normal(in, cfg.dim, std::sqrt(2.0 / double(in)), rng),
                 train);
      params.add("backbone.embed.b", Matrix(1, cfg.dim), train);
      params.add("backbone.mix.w",
                 random_normal(cfg.dim, cfg.dim, 1.0 / std::sqrt(double(cfg.dim)), rng), train);
      params.add("backbone.mix.b", Matrix(1, cfg.dim), train);
      break;
    }
    case BackboneProvider::precomputed:
      break;
  }
}

Matrix patchify(std::span<const std::uint8_t> rgb, std::size_t height, std::size_t width,
                std::size_t patch) {
  if (patch == 0 || height % patch != 0 || width % patch != 0) {
    throw ConfigError("frame " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not divisible by patch size " + std::to_string(patch));
  }
  if (rgb.size() != height * width * 3) throw ShapeError("patchify: frame buffer size mismatch");
  const std::size_t gh = height / patch, gw = width / patch;
  Matrix out(gh * gw, patch * patch * 3);
  for (std::size_t pi = 0; pi < gh; ++pi) {
    for (std::size_t pj = 0; pj < gw; ++pj) {
      double* row = out.row(pi * gw + pj).data();
      std::size_t c = 0;
      for (std::size_t y = 0; y < patch; ++y) {
        const std::uint8_t* src = rgb.data() + ((pi * patch + y) * width + pj * patch) * 3;
        for (std::size_t x = 0; x < patch * 3; ++x) row[c++] = src[x] / 255.0;
      }
    }
  }
  return out;
}

FeatureGrid encode_frame(const FrameInput& frame, const BackboneConfig& cfg, ParamBinder& params) {
  Tape& tape = params.tape();
  FeatureGrid out;
  switch (cfg.provider) {
    case BackboneProvider::frozen_random_proj: {
      Var patches = tape.constant(patchify(frame.rgb, frame.height, frame.width, cfg.patch));
      out.grid = add_row(matmul(patches, params["backbone.proj.w"]), params["backbone.proj.b"]);
      out.height = frame.height / cfg.patch;
      out.width = frame.width / cfg.patch;
      out.global_embed = global_embedding(out.grid);
      return out;
    }
    case BackboneProvider::trainable_mini: {
      Var patches = tape.constant(patchify(frame.rgb, frame.height, frame.width, cfg.patch));
      Var tokens =
          relu(add_row(matmul(patches, params["backbone.embed.w"]), params["backbone.embed.b"]));
      out.grid = add_row(matmul(tokens, params["backbone.mix.w"]), params["backbone.mix.b"]);
      out.height = frame.height / cfg.patch;
      out.width = frame.width / cfg.patch;
      out.global_embed = global_embedding(out.grid);
      return out;
    }
    case BackboneProvider::precomputed: {
      if (frame.features.empty()) {
        throw ConfigError("precomputed backbone needs a FEAT section in the dataset");
      }
      const std::size_t n = frame.feature_height * frame.feature_width;
      if (n == 0 || frame.features.size() != n * cfg.dim) {
        throw ConfigError("stored features do not match backbone dim " + std::to_string(cfg.dim));
      }
      Matrix grid(n, cfg.dim);
      for (std::size_t i = 0; i < grid.size(); ++i) grid.data()[i] = frame.features[i];
      out.grid = tape.constant(std::move(grid));
      out.height = frame.feature_height;
      out.width = frame.feature_width;
      if (!frame.global_embed.empty()) {
        if (frame.global_embed.size() != cfg.dim) {
          throw ConfigError("stored global embedding width does not match backbone dim");
        }
        Matrix g(1, cfg.dim);
        for (std::size_t i = 0; i < cfg.dim; ++i) g.data()[i] = frame.global_embed[i];
        out.global_embed = tape.constant(std::move(g));
      } else {
        out.global_embed = global_embedding(out.grid);
      }
      return out;
    }
  }
  throw ConfigError("unhandled backbone provider");
}

Var global_embedding(Var grid) { return mean_rows(grid); }

}  // namespace ocvl

#pragma once

// Figure output: frame panels (input, reconstruction, ground-truth masks,
// predicted masks) and per-slot attention heatmaps, written as PNG.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ocvl/decoders.hpp"
#include "ocvl/synth_data.hpp"
#include "ocvl/train_loop.hpp"

namespace ocvl {

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // height x width x 3

  Image() = default;
  Image(std::size_t w, std::size_t h) : width(w), height(h), rgb(w * h * 3, 0) {}
  std::uint8_t* pixel(std::size_t row, std::size_t col) { return rgb.data() + (row * width + col) * 3; }
};

inline constexpr std::size_t kPaletteSize = 24;
/// Fixed label colors; label l uses entry l % kPaletteSize.
const std::array<std::array<std::uint8_t, 3>, kPaletteSize>& label_palette();

/// Rows: input, reconstruction (rgb and flow targets only), ground-truth
/// masks, predicted masks. One column per frame, at most `max_frames`.
Image render_panel(const VideoClip& video, std::span<const FrameDecoding> frames, TargetKind target,
                   std::size_t max_frames);
std::size_t panel_rows(TargetKind target);

/// One row per slot, one column per frame; decoder attention weights as
/// grayscale, upsampled to the image size.
Image render_attention(std::span<const FrameDecoding> frames, std::size_t height, std::size_t width,
                       std::size_t max_frames);

std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace ocvl

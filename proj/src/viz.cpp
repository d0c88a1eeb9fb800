#include "ocvl/viz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <png.h>

#include "ocvl/errors.hpp"

namespace ocvl {

const std::array<std::array<std::uint8_t, 3>, kPaletteSize>& label_palette() {
  static const std::array<std::array<std::uint8_t, 3>, kPaletteSize> palette = {{
      {40, 40, 40},    {230, 25, 75},   {60, 180, 75},   {255, 225, 25},  {0, 130, 200},
      {245, 130, 48},  {145, 30, 180},  {70, 240, 240},  {240, 50, 230},  {210, 245, 60},
      {250, 190, 212}, {0, 128, 128},   {220, 190, 255}, {170, 110, 40},  {255, 250, 200},
      {128, 0, 0},     {170, 255, 195}, {128, 128, 0},   {255, 215, 180}, {0, 0, 128},
      {128, 128, 128}, {255, 255, 255}, {100, 160, 40},  {190, 90, 120},
  }};
  return palette;
}

std::size_t panel_rows(TargetKind target) { return target == TargetKind::features ? 3 : 4; }

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

void paint_labels(Image& img, std::size_t row0, std::size_t col0, std::size_t h, std::size_t w,
                  const std::int32_t* labels) {
  const auto& pal = label_palette();
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const auto l = static_cast<std::size_t>(std::max(labels[i * w + j], 0)) % kPaletteSize;
      std::copy(pal[l].begin(), pal[l].end(), img.pixel(row0 + i, col0 + j));
    }
  }
}

}  // namespace

Image render_panel(const VideoClip& video, std::span<const FrameDecoding> frames, TargetKind target,
                   std::size_t max_frames) {
  const std::size_t h = video.geometry.height;
  const std::size_t w = video.geometry.width;
  const std::size_t cols = std::min(frames.size(), std::max<std::size_t>(1, max_frames));
  const std::size_t rows = panel_rows(target);
  Image img(cols * w, rows * h);
  const SegmentationVolume pred = predicted_volume(frames.first(cols), h, w);
  const SegmentationVolume truth = truth_volume(video, cols);
  for (std::size_t t = 0; t < cols; ++t) {
    const std::size_t x0 = t * w;
    std::size_t row = 0;
    const auto rgb = video.frame_rgb(t);
    for (std::size_t i = 0; i < h; ++i) {
      std::copy_n(rgb.data() + i * w * 3, w * 3, img.pixel(i, x0));
    }
    ++row;
    if (rows == 4) {
      const FrameDecoding& f = frames[t];
      const Matrix& rec = f.reconstruction;
      if (!rec.empty()) {
        for (std::size_t i = 0; i < h; ++i) {
          for (std::size_t j = 0; j < w; ++j) {
            const std::size_t src = (i * f.height / h) * f.width + j * f.width / w;
            std::uint8_t* px = img.pixel(row * h + i, x0 + j);
            if (target == TargetKind::rgb) {
              for (std::size_t c = 0; c < 3; ++c) px[c] = to_byte(rec(src, c));
            } else {
              // Flow (u, v) around mid gray.
              px[0] = to_byte(0.5 + 0.5 * rec(src, 0));
              px[1] = to_byte(0.5 + 0.5 * rec(src, 1));
              px[2] = 128;
            }
          }
        }
      }
      ++row;
    }
    paint_labels(img, row * h, x0, h, w, truth.labels.data() + t * h * w);
    ++row;
    paint_labels(img, row * h, x0, h, w, pred.labels.data() + t * h * w);
  }
  return img;
}

Image render_attention(std::span<const FrameDecoding> frames, std::size_t height, std::size_t width,
                       std::size_t max_frames) {
  const std::size_t cols = std::min(frames.size(), std::max<std::size_t>(1, max_frames));
  const std::size_t slots = frames.empty() ? 0 : frames[0].weights.cols();
  Image img(cols * width, slots * height);
  for (std::size_t t = 0; t < cols; ++t) {
    const FrameDecoding& f = frames[t];
    for (std::size_t k = 0; k < slots; ++k) {
      for (std::size_t i = 0; i < height; ++i) {
        for (std::size_t j = 0; j < width; ++j) {
          const std::size_t src = (i * f.height / height) * f.width + j * f.width / width;
          const std::uint8_t v = to_byte(f.weights(src, k));
          std::uint8_t* px = img.pixel(k * height + i, t * width + j);
          px[0] = px[1] = px[2] = v;
        }
      }
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.width == 0 || image.height == 0) throw ArgumentError("cannot encode an empty image");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed while encoding");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        buf->insert(buf->end(), data, data + n);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < image.height; ++r) {
    png_write_row(png, const_cast<png_bytep>(image.rgb.data() + r * image.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

}  // namespace ocvl

#include "ocvl/synth_data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include <json.hpp>

#include "ocvl/params.hpp"

namespace ocvl {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::a_like: return "a";
    case Variant::c_like: return "c";
    case Variant::e_like: return "e";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "a" || name == "A" || name == "A_like") return Variant::a_like;
  if (name == "c" || name == "C" || name == "C_like") return Variant::c_like;
  if (name == "e" || name == "E" || name == "E_like") return Variant::e_like;
  throw ConfigError("unknown variant '" + name + "' (expected a, c or e)");
}

VideoGeometry default_geometry(Variant variant) {
  VideoGeometry g;
  g.k_max = variant == Variant::e_like ? 24 : 11;
  return g;
}

// ---- VideoClip accessors -----------------------------------------------------

std::span<const std::uint8_t> VideoClip::frame_rgb(std::size_t t) const {
  const std::size_t n = pixels() * 3;
  return {rgb.data() + t * n, n};
}

std::span<const std::uint8_t> VideoClip::frame_mask(std::size_t t) const {
  return {masks.data() + t * pixels(), pixels()};
}

std::span<const float> VideoClip::frame_boxes(std::size_t t) const {
  const std::size_t n = std::size_t{geometry.k_max} * 4;
  return {boxes.data() + t * n, n};
}

std::span<const float> VideoClip::frame_flow(std::size_t t) const {
  if (!flow) throw ConfigError("clip has no FLOW section");
  const std::size_t n = pixels() * 2;
  return {flow->data() + t * n, n};
}

std::span<const float> VideoClip::frame_features(std::size_t t) const {
  if (!features) throw ConfigError("clip has no FEAT section");
  const std::size_t n = std::size_t{features->height} * features->width * features->dim;
  return {features->values.data() + t * n, n};
}

std::span<const float> VideoClip::frame_global_embed(std::size_t t) const {
  if (!global_embeds) throw ConfigError("clip has no GEMB section");
  const std::size_t n = global_embeds->dim;
  return {global_embeds->values.data() + t * n, n};
}

// ---- scene sampling ----------------------------------------------------------

namespace {

std::array<std::uint8_t, 3> hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  auto q = [m](double u) { return static_cast<std::uint8_t>(std::lround(255.0 * (u + m))); };
  return {q(r), q(g), q(b)};
}

int default_object_count(Variant v) {
  switch (v) {
    case Variant::a_like: return 5;
    case Variant::c_like: return 6;
    case Variant::e_like: return 8;
  }
  return 5;
}

}  // namespace

SceneSpec sample_scene(Variant variant, std::uint64_t seed, const VideoGeometry& geometry,
                       int num_objects) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SceneSpec spec;
  spec.variant = variant;
  spec.seed = seed;
  const int count = num_objects < 0 ? default_object_count(variant) : num_objects;
  const double scale = std::min(geometry.height, geometry.width) / 64.0;
  const double max_speed = variant == Variant::c_like ? 1.5 : 1.0;

  Background& bg = spec.background;
  const double gray = uniform(60.0, 110.0);
  for (double& c : bg.base) c = gray + uniform(-12.0, 12.0);
  bg.amplitude = variant == Variant::a_like ? 12.0 : 28.0;
  bg.freq_x = uniform(0.15, 0.45) / scale;
  bg.freq_y = uniform(0.15, 0.45) / scale;
  bg.phase_x = uniform(0.0, 2.0 * std::numbers::pi);
  bg.phase_y = uniform(0.0, 2.0 * std::numbers::pi);

  if (variant == Variant::e_like) {
    const double angle = uniform(0.0, 2.0 * std::numbers::pi);
    const double speed = uniform(0.5, 1.5);
    spec.pan_x = speed * std::cos(angle);
    spec.pan_y = speed * std::sin(angle);
  }

  std::vector<int> depths(static_cast<std::size_t>(std::max(count, 0)));
  std::iota(depths.begin(), depths.end(), 0);
  std::shuffle(depths.begin(), depths.end(), rng);
  const double hue0 = unit(rng);
  for (int i = 0; i < count; ++i) {
    SceneObject o;
    o.shape = static_cast<SpriteShape>(static_cast<int>(uniform(0.0, 3.0)) % 3);
    // Hues are spread around the wheel so sprites in one scene stay distinguishable.
    const double hue = std::fmod(hue0 + (i + uniform(-0.2, 0.2)) / std::max(count, 1), 1.0);
    o.color = hsv_to_rgb(hue < 0 ? hue + 1.0 : hue, uniform(0.6, 1.0), uniform(0.7, 1.0));
    o.radius = uniform(5.0, 10.0) * scale;
    o.x = uniform(o.radius, geometry.width - o.radius);
    o.y = uniform(o.radius, geometry.height - o.radius);
    o.vx = uniform(-max_speed, max_speed);
    o.vy = uniform(-max_speed, max_speed);
    o.depth = depths[static_cast<std::size_t>(i)];
    spec.objects.push_back(o);
  }
  return spec;
}

// ---- rendering ---------------------------------------------------------------

namespace {

bool covers(const SceneObject& o, double cx, double cy, double px, double py) {
  const double r = o.radius;
  switch (o.shape) {
    case SpriteShape::disc:
      return (px - cx) * (px - cx) + (py - cy) * (py - cy) <= r * r;
    case SpriteShape::square:
      return std::abs(px - cx) <= r && std::abs(py - cy) <= r;
    case SpriteShape::triangle: {
      // Apex up: (cx, cy - r), (cx - r, cy + r), (cx + r, cy + r).
      if (py > cy + r || py < cy - r) return false;
      const double half_width = r * (py - (cy - r)) / (2.0 * r);
      return std::abs(px - cx) <= half_width;
    }
  }
  return false;
}

std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

VideoClip generate_video(const SceneSpec& spec, const VideoGeometry& geometry) {
  if (geometry.frames == 0 || geometry.height == 0 || geometry.width == 0) {
    throw ConfigError("video geometry must be non-empty");
  }
  if (geometry.k_max < 1 || spec.objects.size() > geometry.k_max - 1) {
    throw ConfigError("scene has " + std::to_string(spec.objects.size()) +
                      " objects but K_max - 1 = " + std::to_string(geometry.k_max - 1));
  }
  if (geometry.k_max > 256) throw ConfigError("K_max above 256 does not fit u8 mask ids");
  if (spec.variant == Variant::a_like && (spec.pan_x != 0.0 || spec.pan_y != 0.0)) {
    throw ConfigError("A-like scenes have a static camera");
  }

  const std::size_t T = geometry.frames, H = geometry.height, W = geometry.width;
  const std::size_t K = geometry.k_max;
  VideoClip clip;
  clip.geometry = geometry;
  clip.rgb.assign(T * H * W * 3, 0);
  clip.masks.assign(T * H * W, 0);
  clip.boxes.assign(T * K * 4, kAbsentBox);
  clip.flow = std::vector<float>(T * H * W * 2, 0.0f);

  // Front-most first so the first hit wins.
  std::vector<std::size_t> order(spec.objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return spec.objects[a].depth > spec.objects[b].depth;
  });

  const Background& bg = spec.background;
  for (std::size_t t = 0; t < T; ++t) {
    const double td = static_cast<double>(t);
    std::vector<std::array<double, 2>> centers(spec.objects.size());
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
      const SceneObject& o = spec.objects[k];
      centers[k] = {o.x + (o.vx + spec.pan_x) * td, o.y + (o.vy + spec.pan_y) * td};
    }
    std::vector<std::array<long, 4>> bounds(K, {long(W), long(H), -1, -1});
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) {
        const double px = static_cast<double>(j) + 0.5;
        const double py = static_cast<double>(i) + 0.5;
        const std::size_t pix = (t * H + i) * W + j;
        std::size_t id = 0;
        for (std::size_t k : order) {
          if (covers(spec.objects[k], centers[k][0], centers[k][1], px, py)) {
            id = k + 1;
            break;
          }
        }
        std::uint8_t* rgb = &clip.rgb[pix * 3];
        float* flow = &(*clip.flow)[pix * 2];
        if (id == 0) {
          const double wx = px - spec.pan_x * td;
          const double wy = py - spec.pan_y * td;
          const double tex = bg.amplitude * std::sin(bg.freq_x * wx + bg.phase_x) *
                             std::sin(bg.freq_y * wy + bg.phase_y);
          for (int c = 0; c < 3; ++c) rgb[c] = clamp_byte(bg.base[c] + tex);
          flow[0] = static_cast<float>(spec.pan_x);
          flow[1] = static_cast<float>(spec.pan_y);
        } else {
          const SceneObject& o = spec.objects[id - 1];
          for (int c = 0; c < 3; ++c) rgb[c] = o.color[c];
          flow[0] = static_cast<float>(o.vx + spec.pan_x);
          flow[1] = static_cast<float>(o.vy + spec.pan_y);
          auto& b = bounds[id];
          b[0] = std::min(b[0], long(j));
          b[1] = std::min(b[1], long(i));
          b[2] = std::max(b[2], long(j));
          b[3] = std::max(b[3], long(i));
        }
        clip.masks[pix] = static_cast<std::uint8_t>(id);
      }
    }
    for (std::size_t id = 1; id < K; ++id) {
      const auto& b = bounds[id];
      if (b[2] < 0) continue;
      float* row = &clip.boxes[(t * K + id) * 4];
      row[0] = static_cast<float>(double(b[0]) / double(W));
      row[1] = static_cast<float>(double(b[1]) / double(H));
      row[2] = static_cast<float>(double(b[2] + 1) / double(W));
      row[3] = static_cast<float>(double(b[3] + 1) / double(H));
    }
  }
  return clip;
}

// ---- container ---------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'O', 'C', 'V', '1'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out_.insert(out_.end(), b, b + sizeof(T));
  }
  template <typename T>
  void put_all(std::span<const T> vs) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const std::uint8_t*>(vs.data());
      out_.insert(out_.end(), p, p + vs.size_bytes());
    } else {
      for (T v : vs) put(v);
    }
  }
  void tag(const char* t) { out_.insert(out_.end(), t, t + 4); }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  bool done() const { return pos_ >= in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

  template <typename T>
  T get(const std::string& section) {
    if (remaining() < sizeof(T)) throw FormatError(section, "truncated");
    unsigned char b[sizeof(T)];
    std::memcpy(b, in_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
  template <typename T>
  std::vector<T> get_all(std::size_t count, const std::string& section) {
    if (remaining() / sizeof(T) < count) throw FormatError(section, "truncated");
    std::vector<T> v(count);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(v.data(), in_.data() + pos_, count * sizeof(T));
      pos_ += count * sizeof(T);
    } else {
      for (auto& x : v) x = get<T>(section);
    }
    return v;
  }
  std::string tag(const std::string& section) {
    if (remaining() < 4) throw FormatError(section, "truncated tag");
    std::string t(reinterpret_cast<const char*>(in_.data() + pos_), 4);
    pos_ += 4;
    return t;
  }
  std::string peek_tag() const {
    if (remaining() < 4) return {};
    return std::string(reinterpret_cast<const char*>(in_.data() + pos_), 4);
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void check_clip_dims(const VideoClip& c) {
  const std::size_t T = c.frames(), P = c.pixels(), K = c.geometry.k_max;
  auto bad = [](const char* tag) { throw FormatError(tag, "payload size does not match T/H/W/K_max"); };
  if (c.rgb.size() != T * P * 3) bad("RGB8");
  if (c.masks.size() != T * P) bad("MASK");
  if (c.boxes.size() != T * K * 4) bad("BBOX");
  if (c.flow && c.flow->size() != T * P * 2) bad("FLOW");
  if (c.features &&
      c.features->values.size() !=
          T * std::size_t{c.features->height} * c.features->width * c.features->dim) {
    bad("FEAT");
  }
  if (c.global_embeds && c.global_embeds->values.size() != T * std::size_t{c.global_embeds->dim}) {
    bad("GEMB");
  }
}

}  // namespace

std::vector<std::uint8_t> encode_container(std::span<const VideoClip> clips) {
  Writer w;
  for (const VideoClip& c : clips) {
    check_clip_dims(c);
    w.tag(kMagic);
    w.put<std::uint32_t>(c.geometry.frames);
    w.put<std::uint32_t>(c.geometry.height);
    w.put<std::uint32_t>(c.geometry.width);
    w.put<std::uint32_t>(c.geometry.k_max);
    w.tag("RGB8");
    w.put<std::uint64_t>(c.rgb.size());
    w.put_all<std::uint8_t>(c.rgb);
    w.tag("MASK");
    w.put<std::uint64_t>(c.masks.size());
    w.put_all<std::uint8_t>(c.masks);
    w.tag("BBOX");
    w.put<std::uint64_t>(c.boxes.size() * 4);
    w.put_all<float>(c.boxes);
    if (c.flow) {
      w.tag("FLOW");
      w.put<std::uint64_t>(c.flow->size() * 4);
      w.put_all<float>(*c.flow);
    }
    if (c.features) {
      w.tag("FEAT");
      w.put<std::uint64_t>(12 + c.features->values.size() * 4);
      w.put<std::uint32_t>(c.features->height);
      w.put<std::uint32_t>(c.features->width);
      w.put<std::uint32_t>(c.features->dim);
      w.put_all<float>(c.features->values);
    }
    if (c.global_embeds) {
      w.tag("GEMB");
      w.put<std::uint64_t>(4 + c.global_embeds->values.size() * 4);
      w.put<std::uint32_t>(c.global_embeds->dim);
      w.put_all<float>(c.global_embeds->values);
    }
  }
  return std::move(w.bytes());
}

std::vector<VideoClip> decode_container(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  std::vector<VideoClip> clips;
  if (r.done()) throw FormatError("MAGIC", "empty container");
  while (!r.done()) {
    if (r.tag("MAGIC") != std::string(kMagic, 4)) throw FormatError("MAGIC", "bad magic");
    VideoClip c;
    c.geometry.frames = r.get<std::uint32_t>("HEAD");
    c.geometry.height = r.get<std::uint32_t>("HEAD");
    c.geometry.width = r.get<std::uint32_t>("HEAD");
    c.geometry.k_max = r.get<std::uint32_t>("HEAD");
    const std::size_t T = c.frames(), P = c.pixels(), K = c.geometry.k_max;
    bool have_rgb = false, have_mask = false, have_box = false;
    while (!r.done() && r.peek_tag() != std::string(kMagic, 4)) {
      const std::string tag = r.tag("HEAD");
      const auto len = r.get<std::uint64_t>(tag);
      if (len > r.remaining()) throw FormatError(tag, "truncated section");
      auto expect = [&](std::uint64_t want) {
        if (len != want) {
          throw FormatError(tag, "dimension mismatch: length " + std::to_string(len) +
                                     ", expected " + std::to_string(want));
        }
      };
      auto once = [&](bool& seen) {
        if (seen) throw FormatError(tag, "duplicate section");
        seen = true;
      };
      if (tag == "RGB8") {
        once(have_rgb);
        expect(T * P * 3);
        c.rgb = r.get_all<std::uint8_t>(T * P * 3, tag);
      } else if (tag == "MASK") {
        once(have_mask);
        expect(T * P);
        c.masks = r.get_all<std::uint8_t>(T * P, tag);
      } else if (tag == "BBOX") {
        once(have_box);
        expect(T * K * 4 * 4);
        c.boxes = r.get_all<float>(T * K * 4, tag);
      } else if (tag == "FLOW") {
        if (c.flow) throw FormatError(tag, "duplicate section");
        expect(T * P * 2 * 4);
        c.flow = r.get_all<float>(T * P * 2, tag);
      } else if (tag == "FEAT") {
        if (c.features) throw FormatError(tag, "duplicate section");
        if (len < 12) throw FormatError(tag, "truncated section header");
        FeatureBlock f;
        f.height = r.get<std::uint32_t>(tag);
        f.width = r.get<std::uint32_t>(tag);
        f.dim = r.get<std::uint32_t>(tag);
        const std::uint64_t count = std::uint64_t{T} * f.height * f.width * f.dim;
        expect(12 + count * 4);
        f.values = r.get_all<float>(count, tag);
        c.features = std::move(f);
      } else if (tag == "GEMB") {
        if (c.global_embeds) throw FormatError(tag, "duplicate section");
        if (len < 4) throw FormatError(tag, "truncated section header");
        EmbeddingBlock e;
        e.dim = r.get<std::uint32_t>(tag);
        const std::uint64_t count = std::uint64_t{T} * e.dim;
        expect(4 + count * 4);
        e.values = r.get_all<float>(count, tag);
        c.global_embeds = std::move(e);
      } else {
        throw FormatError(tag, "unknown section");
      }
    }
    if (!have_rgb) throw FormatError("RGB8", "missing section");
    if (!have_mask) throw FormatError("MASK", "missing section");
    if (!have_box) throw FormatError("BBOX", "missing section");
    clips.push_back(std::move(c));
  }
  return clips;
}

void write_container(std::span<const VideoClip> clips, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_container(clips);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<VideoClip> read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_container(bytes);
}

// ---- clips and splits ----------------------------------------------------------

std::vector<VideoClip> split_into_clips(const VideoClip& video, long long clip_len) {
  if (clip_len <= 0) throw ArgumentError("clip_len must be positive, got " + std::to_string(clip_len));
  const std::size_t len = static_cast<std::size_t>(clip_len);
  const std::size_t count = video.frames() / len;
  const std::size_t P = video.pixels(), K = video.geometry.k_max;
  auto slice = [&](const auto& src, std::size_t per_frame, std::size_t first) {
    using V = std::decay_t<decltype(src)>;
    return V(src.begin() + static_cast<std::ptrdiff_t>(first * per_frame),
             src.begin() + static_cast<std::ptrdiff_t>((first + len) * per_frame));
  };
  std::vector<VideoClip> clips;
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t first = c * len;
    VideoClip out;
    out.geometry = video.geometry;
    out.geometry.frames = static_cast<std::uint32_t>(len);
    out.rgb = slice(video.rgb, P * 3, first);
    out.masks = slice(video.masks, P, first);
    out.boxes = slice(video.boxes, K * 4, first);
    if (video.flow) out.flow = slice(*video.flow, P * 2, first);
    if (video.features) {
      FeatureBlock f = *video.features;
      f.values = slice(video.features->values,
                       std::size_t{f.height} * f.width * f.dim, first);
      out.features = std::move(f);
    }
    if (video.global_embeds) {
      EmbeddingBlock e = *video.global_embeds;
      e.values = slice(video.global_embeds->values, e.dim, first);
      out.global_embeds = std::move(e);
    }
    clips.push_back(std::move(out));
  }
  return clips;
}

double flow_max_abs(std::span<const VideoClip> clips) {
  double m = 0.0;
  for (const VideoClip& c : clips) {
    if (!c.flow) continue;
    for (float v : *c.flow) m = std::max(m, static_cast<double>(std::abs(v)));
  }
  return m;
}

void write_split(const std::filesystem::path& dir, std::span<const VideoClip> videos,
                 const std::string& variant, std::uint64_t seed, std::span<const SceneSpec> scenes) {
  if (!scenes.empty() && scenes.size() != videos.size()) {
    throw ArgumentError("write_split: one scene per video expected");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  nlohmann::json manifest;
  manifest["videos"] = nlohmann::json::array();
  for (std::size_t i = 0; i < videos.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.ocv", i);
    write_container(videos.subspan(i, 1), dir / name);
    manifest["videos"].push_back(name);
  }
  manifest["variant"] = variant;
  manifest["seed"] = seed;
  manifest["flow_max"] = flow_max_abs(videos);
  if (!scenes.empty()) {
    manifest["scenes"] = nlohmann::json::array();
    for (const SceneSpec& sc : scenes) {
      manifest["scenes"].push_back({{"seed", sc.seed},
                                    {"objects", sc.num_objects()},
                                    {"camera_pan", {sc.pan_x, sc.pan_y}}});
    }
  }
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << "\n";
  if (!out) throw IoError("manifest write failed in '" + dir.string() + "'");
}

Split read_split(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("no manifest.json in '" + dir.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest.json", e.what());
  }
  Split split;
  try {
    split.manifest.videos = j.at("videos").get<std::vector<std::string>>();
    split.manifest.variant = j.at("variant").get<std::string>();
    split.manifest.seed = j.at("seed").get<std::uint64_t>();
    split.manifest.flow_max = j.value("flow_max", 0.0);
    if (j.contains("scenes")) {
      for (const auto& sc : j.at("scenes")) {
        SceneSummary s;
        s.seed = sc.at("seed").get<std::uint64_t>();
        s.objects = sc.at("objects").get<std::size_t>();
        s.pan_x = sc.at("camera_pan").at(0).get<double>();
        s.pan_y = sc.at("camera_pan").at(1).get<double>();
        split.manifest.scenes.push_back(s);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest.json", e.what());
  }
  for (const std::string& name : split.manifest.videos) {
    auto clips = read_container(dir / name);
    for (auto& c : clips) split.videos.push_back(std::move(c));
  }
  return split;
}

}  // namespace ocvl

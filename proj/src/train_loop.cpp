#include "ocvl/train_loop.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <sstream>

#include "json_fields.hpp"
#include "ocvl/objectives.hpp"
#include "ocvl/pos_embed.hpp"

namespace ocvl {

std::string model_kind_name(ModelKind k) {
  return k == ModelKind::mask_oracle ? "mask_oracle" : "slot_model";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "slot_model") return ModelKind::slot_model;
  if (name == "mask_oracle") return ModelKind::mask_oracle;
  throw ConfigError("unknown model kind '" + name + "' (expected slot_model or mask_oracle)");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (clip_len == 0) throw ConfigError("train.clip_len must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be positive");
  if (grad_clip_norm < 0.0 || !std::isfinite(grad_clip_norm)) {
    throw ConfigError("train.grad_clip_norm must be >= 0");
  }
  if (kind == ModelKind::mask_oracle && steps != 0) {
    throw ConfigError("the mask_oracle model has nothing to train; set train.steps=0");
  }
  model.validate();
}

// ---- config <-> JSON ---------------------------------------------------------

nlohmann::json to_json(const TrainConfig& cfg) {
  const ModelConfig& m = cfg.model;
  nlohmann::json j;
  j["train"] = {{"steps", cfg.steps},
                {"batch_size", cfg.batch_size},
                {"lr", cfg.lr},
                {"clip_len", cfg.clip_len},
                {"seed", cfg.seed},
                {"warmup_steps", cfg.warmup_steps},
                {"grad_clip_norm", cfg.grad_clip_norm},
                {"checkpoint_every", cfg.checkpoint_every},
                {"detach_per_frame", m.detach_per_frame}};
  j["model"] = {{"kind", model_kind_name(cfg.kind)},
                {"slots", m.slots},
                {"dim", m.dim},
                {"target", target_name(m.target)},
                {"decoder", decoder_name(m.decoder)},
                {"use_global", m.flags.use_global},
                {"use_pos_residual", m.flags.use_pos_residual},
                {"fourier_freqs", m.fourier_freqs},
                {"temporal_queries", m.temporal_queries},
                {"encoder_pos", m.encoder_pos},
                {"first_frame_iters", m.first_frame_iters},
                {"later_iters", m.later_iters},
                {"learned_transition", m.learned_transition},
                {"box_hidden", m.box_hidden},
                {"mlp_hidden", m.mlp_hidden}};
  j["backbone"] = {{"provider", provider_name(m.backbone.provider)},
                   {"patch", m.backbone.patch},
                   {"dim", m.backbone.dim},
                   {"frozen", m.backbone.frozen}};
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  ModelConfig& m = cfg.model;
  detail::JsonFields top(j, "config");
  if (const auto* t = top.object("train")) {
    detail::JsonFields f(*t, "train");
    f.read("steps", cfg.steps);
    f.read("batch_size", cfg.batch_size);
    f.read("lr", cfg.lr);
    f.read("clip_len", cfg.clip_len);
    f.read("seed", cfg.seed);
    f.read("warmup_steps", cfg.warmup_steps);
    f.read("grad_clip_norm", cfg.grad_clip_norm);
    f.read("checkpoint_every", cfg.checkpoint_every);
    f.read("detach_per_frame", m.detach_per_frame);
    f.finish();
  }
  if (const auto* t = top.object("model")) {
    detail::JsonFields f(*t, "model");
    f.read_enum("kind", cfg.kind, parse_model_kind);
    f.read("slots", m.slots);
    f.read("dim", m.dim);
    f.read_enum("target", m.target, parse_target);
    f.read_enum("decoder", m.decoder, parse_decoder);
    f.read("use_global", m.flags.use_global);
    f.read("use_pos_residual", m.flags.use_pos_residual);
    f.read("fourier_freqs", m.fourier_freqs);
    f.read("temporal_queries", m.temporal_queries);
    f.read("encoder_pos", m.encoder_pos);
    f.read("first_frame_iters", m.first_frame_iters);
    f.read("later_iters", m.later_iters);
    f.read("learned_transition", m.learned_transition);
    f.read("box_hidden", m.box_hidden);
    f.read("mlp_hidden", m.mlp_hidden);
    f.finish();
  }
  if (const auto* t = top.object("backbone")) {
    detail::JsonFields f(*t, "backbone");
    f.read_enum("provider", m.backbone.provider, parse_provider);
    f.read("patch", m.backbone.patch);
    f.read("dim", m.backbone.dim);
    f.read("frozen", m.backbone.frozen);
    f.finish();
  }
  top.finish();
  return cfg;
}

std::uint64_t config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---- checkpoint container ----------------------------------------------------

namespace {

constexpr char kCheckpointMagic[4] = {'O', 'C', 'K', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

class ByteWriter {
 public:
  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void put_raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}
  template <class T>
  T get(const char* section) {
    T v;
    need(sizeof(T), section);
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string(const char* section) {
    const auto n = get<std::uint64_t>(section);
    need(n, section);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void get_raw(void* out, std::size_t n, const char* section) {
    need(n, section);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* section) const {
    if (bytes_.size() - pos_ < n) throw FormatError(section, "truncated checkpoint");
  }
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

void put_store(ByteWriter& w, const ParamStore& store) {
  w.put<std::uint64_t>(store.entries().size());
  for (const auto& [name, e] : store.entries()) {
    w.put_string(name);
    w.put<std::uint8_t>(e.trainable ? 1 : 0);
    w.put<std::uint64_t>(e.value.rows());
    w.put<std::uint64_t>(e.value.cols());
    w.put_raw(e.value.data(), e.value.size() * sizeof(double));
  }
}

ParamStore get_store(ByteReader& r, const char* section) {
  ParamStore store;
  const auto n = r.get<std::uint64_t>(section);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::string name = r.get_string(section);
    const bool trainable = r.get<std::uint8_t>(section) != 0;
    const auto rows = r.get<std::uint64_t>(section);
    const auto cols = r.get<std::uint64_t>(section);
    if (cols != 0 && rows > (std::uint64_t(1) << 40) / cols) throw FormatError(section, "absurd tensor size");
    Matrix m(rows, cols);
    r.get_raw(m.data(), m.size() * sizeof(double), section);
    store.add(name, std::move(m), trainable);
  }
  return store;
}

std::string rng_state_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_state(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng;
  if (!is) throw FormatError("RNG", "unreadable generator state");
  return rng;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ByteWriter w;
  w.put_raw(kCheckpointMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put_string(ckpt.config.dump());
  w.put<std::uint64_t>(ckpt.hash);
  w.put<std::uint64_t>(ckpt.step);
  w.put_string(ckpt.rng_state);
  w.put<std::uint64_t>(ckpt.adam.step);
  put_store(w, ckpt.params);
  put_store(w, ckpt.adam.m);
  put_store(w, ckpt.adam.v);

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp.string() + "'");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw IoError("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const nlohmann::json* expected,
                           bool force) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(std::move(bytes));
  char magic[4];
  r.get_raw(magic, 4, "MAGIC");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw FormatError("MAGIC", "not a checkpoint");
  if (r.get<std::uint32_t>("HEAD") != kCheckpointVersion) {
    throw FormatError("HEAD", "unsupported checkpoint version");
  }
  Checkpoint ck;
  try {
    ck.config = nlohmann::json::parse(r.get_string("CONFIG"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("CONFIG", e.what());
  }
  ck.hash = r.get<std::uint64_t>("CONFIG");
  ck.step = r.get<std::uint64_t>("HEAD");
  ck.rng_state = r.get_string("RNG");
  ck.adam.step = r.get<std::uint64_t>("ADAM");
  ck.params = get_store(r, "PARAMS");
  ck.adam.m = get_store(r, "ADAM");
  ck.adam.v = get_store(r, "ADAM");
  if (!r.done()) throw FormatError("TAIL", "trailing bytes after checkpoint");

  if (!force) {
    if (config_hash(ck.config) != ck.hash) {
      throw ConfigError("checkpoint config hash mismatch (stored config was modified); use --force");
    }
    if (expected != nullptr && config_hash(*expected) != ck.hash) {
      throw ConfigError("checkpoint was trained with a different config; use --force to load anyway");
    }
  }
  return ck;
}

// ---- optimization ------------------------------------------------------------

void adam_update(ParamStore& params, const ParamStore& grads, AdamState& state, double lr,
                 double beta1, double beta2, double eps) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (auto& [name, e] : params.entries()) {
    if (!e.trainable) continue;
    const Matrix& g = grads.at(name);
    Matrix& m = state.m.at(name);
    Matrix& v = state.v.at(name);
    require_same_shape(e.value, g, "adam_update");
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double gi = g.data()[i];
      m.data()[i] = beta1 * m.data()[i] + (1.0 - beta1) * gi;
      v.data()[i] = beta2 * v.data()[i] + (1.0 - beta2) * gi * gi;
      const double mhat = m.data()[i] / c1;
      const double vhat = v.data()[i] / c2;
      e.value.data()[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

double clip_global_norm(ParamStore& grads, const ParamStore& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, e] : grads.entries()) {
    if (!params.trainable(name)) continue;
    for (double g : e.value.values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [name, e] : grads.entries()) {
      for (std::size_t i = 0; i < e.value.size(); ++i) e.value.data()[i] *= s;
    }
  }
  return norm;
}

double scheduled_lr(const TrainConfig& cfg, std::size_t step) {
  if (cfg.warmup_steps == 0 || step + 1 >= cfg.warmup_steps) return cfg.lr;
  return cfg.lr * static_cast<double>(step + 1) / static_cast<double>(cfg.warmup_steps);
}

double batch_gradients(const SlotModel& model, const ParamStore& params,
                       std::span<const VideoClip* const> batch, double flow_max, ParamStore& grads) {
  const std::int64_t n = static_cast<std::int64_t>(batch.size());
  if (n == 0) throw ArgumentError("empty batch");
  std::vector<ParamStore> per_clip(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  std::vector<std::exception_ptr> errors(batch.size());
  // Each clip is independent; per-clip gradients are summed afterwards in
  // batch order so the result does not depend on the thread count.
#pragma omp parallel for schedule(dynamic) if (n > 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      Tape tape;
      ParamBinder binder(tape, params);
      ClipOutput out = model.forward_clip(*batch[i], binder, flow_max);
      losses[i] = out.loss.value()(0, 0);
      tape.backward(out.loss, true);
      per_clip[i] = params.zeros_like();
      binder.accumulate_grads(per_clip[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  grads = params.zeros_like();
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    loss += losses[i];
    for (auto& [name, e] : grads.entries()) {
      const Matrix& g = per_clip[i].at(name);
      for (std::size_t k = 0; k < g.size(); ++k) e.value.data()[k] += g.data()[k];
    }
  }
  for (auto& [name, e] : grads.entries()) {
    for (std::size_t k = 0; k < e.value.size(); ++k) e.value.data()[k] *= inv;
  }
  return loss * inv;
}

namespace {

Rng training_rng(const TrainConfig& cfg) { return Rng(mix_seed(cfg.seed, 0x7261696eULL)); }

}  // namespace

Checkpoint init_checkpoint(const TrainConfig& cfg) {
  cfg.validate();
  Checkpoint ck;
  ck.config = to_json(cfg);
  ck.hash = config_hash(ck.config);
  if (cfg.kind == ModelKind::slot_model) ck.params = SlotModel(cfg.model).init_params(cfg.seed);
  ck.adam.m = ck.params.zeros_like();
  ck.adam.v = ck.params.zeros_like();
  ck.rng_state = rng_state_string(training_rng(cfg));
  return ck;
}

Checkpoint train(const TrainConfig& cfg, std::span<const VideoClip> clips, const TrainOptions& opts) {
  Checkpoint ck = init_checkpoint(cfg);
  std::ofstream metrics;
  if (opts.metrics_path) {
    metrics.open(*opts.metrics_path, std::ios::trunc);
    if (!metrics) throw IoError("cannot write '" + opts.metrics_path->string() + "'");
  }
  std::filesystem::path ckpt_path;
  if (opts.checkpoint_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*opts.checkpoint_dir, ec);
    if (ec) throw IoError("cannot create '" + opts.checkpoint_dir->string() + "': " + ec.message());
    ckpt_path = *opts.checkpoint_dir / "checkpoint.ock";
  }
  if (cfg.steps > 0) {
    if (clips.empty()) throw ArgumentError("training dataset is empty");
    for (const VideoClip& c : clips) {
      if (c.frames() != cfg.clip_len) {
        throw ArgumentError("clip of " + std::to_string(c.frames()) +
                            " frames does not match train.clip_len=" + std::to_string(cfg.clip_len));
      }
    }
  }

  const SlotModel model(cfg.model);
  Rng rng = rng_from_state(ck.rng_state);
  std::vector<const VideoClip*> batch(cfg.batch_size);
  ParamStore grads;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    for (auto& b : batch) b = &clips[rng() % clips.size()];
    double loss = 0.0;
    try {
      loss = batch_gradients(model, ck.params, batch, opts.flow_max, grads);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at step " + std::to_string(step), step);
    }
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite loss at step " + std::to_string(step), step);
    }
    const double norm = clip_global_norm(grads, ck.params, cfg.grad_clip_norm);
    if (!std::isfinite(norm)) {
      throw NumericError("non-finite gradient norm at step " + std::to_string(step), step);
    }
    const double lr = scheduled_lr(cfg, step);
    adam_update(ck.params, grads, ck.adam, lr);
    ck.step = step + 1;

    const StepRecord rec{step, loss, lr, norm};
    if (metrics.is_open()) {
      metrics << nlohmann::json{{"step", step}, {"loss", loss}, {"lr", lr}, {"grad_norm", norm}}.dump()
              << '\n';
      metrics.flush();
    }
    if (opts.on_step) opts.on_step(rec);
    if (!ckpt_path.empty() && cfg.checkpoint_every > 0 && ck.step % cfg.checkpoint_every == 0) {
      ck.rng_state = rng_state_string(rng);
      save_checkpoint(ck, ckpt_path);
    }
  }
  ck.rng_state = rng_state_string(rng);
  if (!ckpt_path.empty()) save_checkpoint(ck, ckpt_path);
  return ck;
}

// ---- evaluation --------------------------------------------------------------

ModelSegmenter::ModelSegmenter(TrainConfig cfg, ParamStore params, double flow_max)
    : cfg_(std::move(cfg)), model_(cfg_.model), params_(std::move(params)), flow_max_(flow_max) {}

std::vector<FrameDecoding> ModelSegmenter::decode_video(const VideoClip& video) const {
  std::vector<FrameDecoding> frames;
  for (const VideoClip& clip : split_into_clips(video, static_cast<long long>(cfg_.clip_len))) {
    Tape tape;
    ParamBinder binder(tape, params_, false);
    ClipOutput out = model_.forward_clip(clip, binder, flow_max_);
    for (const FrameOutput& f : out.frames) {
      FrameDecoding d;
      d.logits = f.decoder_logits.value();
      d.weights = f.decoder_weights.value();
      d.reconstruction = f.reconstruction.value();
      if (f.encoder_attention.valid()) d.encoder_attention = f.encoder_attention.value();
      d.height = f.grid_height;
      d.width = f.grid_width;
      d.feature_height = f.feature_height;
      d.feature_width = f.feature_width;
      frames.push_back(std::move(d));
    }
  }
  return frames;
}

std::vector<FrameDecoding> MaskOracleSegmenter::decode_video(const VideoClip& video) const {
  if (clip_len_ == 0) throw ArgumentError("clip_len must be positive");
  const std::size_t used = video.frames() / clip_len_ * clip_len_;
  const std::size_t k = video.geometry.k_max;
  const std::size_t p = video.pixels();
  std::vector<FrameDecoding> frames;
  for (std::size_t t = 0; t < used; ++t) {
    FrameDecoding d;
    d.logits = Matrix(p, k);
    const auto mask = video.frame_mask(t);
    for (std::size_t i = 0; i < p; ++i) {
      if (mask[i] < k) d.logits(i, mask[i]) = 1.0;
    }
    d.weights = d.logits;
    d.height = video.geometry.height;
    d.width = video.geometry.width;
    frames.push_back(std::move(d));
  }
  return frames;
}

std::unique_ptr<Segmenter> make_segmenter(const Checkpoint& ckpt, double flow_max) {
  TrainConfig cfg = ckpt.train_config();
  if (cfg.kind == ModelKind::mask_oracle) return std::make_unique<MaskOracleSegmenter>(cfg.clip_len);
  return std::make_unique<ModelSegmenter>(std::move(cfg), ckpt.params, flow_max);
}

SegmentationVolume predicted_volume(std::span<const FrameDecoding> frames, std::size_t height,
                                    std::size_t width) {
  SegmentationVolume vol;
  vol.frames = frames.size();
  vol.height = height;
  vol.width = width;
  vol.labels.resize(frames.size() * height * width);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const FrameDecoding& f = frames[t];
    const std::vector<std::int32_t> labels = extract_masks(f.logits, f.height, f.width);
    std::int32_t* out = vol.labels.data() + t * height * width;
    for (std::size_t i = 0; i < height; ++i) {
      const std::size_t si = i * f.height / height;
      for (std::size_t j = 0; j < width; ++j) {
        out[i * width + j] = labels[si * f.width + j * f.width / width];
      }
    }
  }
  return vol;
}

SegmentationVolume truth_volume(const VideoClip& video, std::size_t frames) {
  if (frames > video.frames()) throw ArgumentError("truth_volume: too many frames");
  SegmentationVolume vol;
  vol.frames = frames;
  vol.height = video.geometry.height;
  vol.width = video.geometry.width;
  vol.labels.reserve(frames * video.pixels());
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::uint8_t id : video.frame_mask(t)) vol.labels.push_back(id);
  }
  return vol;
}

nlohmann::json EvalReport::to_json() const {
  return {{"variant", variant},
          {"ari_fg", ari_fg},
          {"ari", ari},
          {"videos", per_video_ari.size()},
          {"skipped_no_foreground", skipped},
          {"per_video", {{"ari_fg", per_video_ari_fg}, {"ari", per_video_ari}}}};
}

EvalReport evaluate(const Segmenter& segmenter, std::span<const VideoClip> videos,
                    const std::string& variant) {
  EvalReport report;
  report.variant = variant;
  for (const VideoClip& video : videos) {
    const std::vector<FrameDecoding> frames = segmenter.decode_video(video);
    if (frames.empty()) throw ArgumentError("video is shorter than one clip");
    const SegmentationVolume pred =
        predicted_volume(frames, video.geometry.height, video.geometry.width);
    const SegmentationVolume truth = truth_volume(video, frames.size());
    report.per_video_ari.push_back(adjusted_rand_index(pred, truth));
    try {
      report.per_video_ari_fg.push_back(ari_foreground(pred, truth));
    } catch (const UndefinedInputError&) {
      ++report.skipped;
    }
  }
  if (report.per_video_ari.empty()) throw ArgumentError("evaluate on an empty dataset");
  report.ari = aggregate_metric(report.per_video_ari);
  if (report.per_video_ari_fg.empty()) throw UndefinedInputError("no evaluated video has foreground");
  report.ari_fg = aggregate_metric(report.per_video_ari_fg);
  return report;
}

// ---- decoder benchmark -------------------------------------------------------

nlohmann::json BenchReport::to_json() const {
  auto one = [](const DecoderBench& b) {
    return nlohmann::json{{"passes", b.passes},
                          {"wall_seconds", b.wall_seconds},
                          {"peak_activation_bytes", b.peak_activation_bytes}};
  };
  return {{"workload",
           {{"slots", workload.slots},
            {"dim", workload.dim},
            {"height", workload.height},
            {"width", workload.width},
            {"repeats", workload.repeats},
            {"seed", workload.seed}}},
          {"attentional", one(attentional)},
          {"broadcast", one(broadcast)},
          {"pass_counts", {{"attentional", attentional.passes}, {"broadcast", broadcast.passes}}},
          {"ratios", {{"passes", pass_ratio}, {"wall_time", time_ratio}, {"peak_activation_bytes", memory_ratio}}}};
}

BenchReport bench_decoders(const BenchWorkload& wl) {
  if (wl.slots == 0 || wl.dim == 0 || wl.height == 0 || wl.width == 0) {
    throw ConfigError("bench workload dimensions must be positive");
  }
  const std::size_t positions = wl.height * wl.width;
  Rng data_rng(mix_seed(wl.seed, 1));
  const Matrix slots = random_normal(wl.slots, wl.dim, 1.0, data_rng);
  const Matrix g = random_normal(1, wl.dim, 1.0, data_rng);
  const Matrix target = random_uniform(positions, 3, 1.0, data_rng);
  const Matrix grid = fourier_grid(wl.height, wl.width, kDefaultFourierFreqs);

  auto run = [&](DecoderKind kind) {
    DecoderConfig dc;
    dc.kind = kind;
    dc.dim = wl.dim;
    dc.out_channels = 3;
    ParamStore params;
    Rng init_rng(mix_seed(wl.seed, 2));
    init_decoder_params(dc, params, init_rng);
    DecoderBench b;
    const std::size_t repeats = std::max<std::size_t>(1, wl.repeats);
    double total = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      Tape tape;
      ParamBinder binder(tape, params);
      Var s = tape.leaf(slots);
      Var pos = project_grid(tape.constant(grid), binder["decoder.pos.w"], binder["decoder.pos.b"]);
      DecodeResult dec;
      std::size_t passes = 0;
      if (kind == DecoderKind::attentional) {
        const ProjectionWeights proj = ProjectionWeights::bind(binder);
        const PositionwiseMlp head = PositionwiseMlp::bind(binder, "decoder.head");
        dec = attentional_decode(s, pos, tape.leaf(g), proj, head, DecoderFlags{});
        passes = head.calls();
      } else {
        const PositionwiseMlp head = PositionwiseMlp::bind(binder, "decoder.bcast");
        dec = broadcast_decode(s, pos, head);
        passes = head.calls();
      }
      Var loss = mse_loss(dec.reconstruction, target);
      tape.backward(loss, true);
      total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      b.passes = passes;
      b.peak_activation_bytes = tape.peak_activation_bytes();
    }
    b.wall_seconds = total / static_cast<double>(repeats);
    return b;
  };

  BenchReport report;
  report.workload = wl;
  report.attentional = run(DecoderKind::attentional);
  report.broadcast = run(DecoderKind::broadcast);
  report.pass_ratio = double(report.broadcast.passes) / double(report.attentional.passes);
  report.time_ratio = report.broadcast.wall_seconds / report.attentional.wall_seconds;
  report.memory_ratio =
      double(report.broadcast.peak_activation_bytes) / double(report.attentional.peak_activation_bytes);
  return report;
}

}  // namespace ocvl

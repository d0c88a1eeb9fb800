#include "ocvl/model.hpp"

#include "ocvl/objectives.hpp"
#include "ocvl/pos_embed.hpp"

namespace ocvl {

void ModelConfig::validate() const {
  if (slots == 0) throw ConfigError("model.slots must be positive");
  if (dim == 0) throw ConfigError("model.dim must be positive");
  if (backbone.dim != dim) {
    throw ConfigError("backbone.dim (" + std::to_string(backbone.dim) + ") must equal model.dim (" +
                      std::to_string(dim) + ")");
  }
  if (fourier_freqs == 0) throw ConfigError("model.fourier_freqs must be positive");
  if (first_frame_iters < 0 || later_iters < 0) throw ConfigError("slot iterations must be >= 0");
  if (backbone.patch == 0) throw ConfigError("backbone.patch must be positive");
}

SlotEncoderConfig ModelConfig::slot_encoder() const {
  SlotEncoderConfig c;
  c.dim = dim;
  c.slots = slots;
  c.box_hidden = box_hidden;
  c.mlp_hidden = mlp_hidden;
  c.first_frame_iters = first_frame_iters;
  c.later_iters = later_iters;
  c.learned_transition = learned_transition;
  return c;
}

DecoderConfig ModelConfig::decoder_config() const {
  DecoderConfig c;
  c.kind = decoder;
  c.dim = dim;
  c.out_channels = target_channels(target, dim);
  c.fourier_freqs = fourier_freqs;
  c.temporal = temporal_queries;
  return c;
}

SlotModel::SlotModel(ModelConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

ParamStore SlotModel::init_params(std::uint64_t seed) const {
  ParamStore params;
  // Separate streams keep each component's init independent of the others'
  // sizes.
  Rng backbone_rng(mix_seed(seed, 0));
  Rng encoder_rng(mix_seed(seed, 1));
  Rng decoder_rng(mix_seed(seed, 2));
  Rng pos_rng(mix_seed(seed, 3));
  init_backbone_params(cfg_.backbone, params, backbone_rng);
  init_slot_encoder_params(cfg_.slot_encoder(), params, encoder_rng);
  init_decoder_params(cfg_.decoder_config(), params, decoder_rng);
  if (cfg_.encoder_pos) {
    const std::size_t raw = 4 * cfg_.fourier_freqs;
    params.add("encoder.pos.w", random_normal(raw, cfg_.dim, 1.0 / std::sqrt(double(raw)), pos_rng));
    params.add("encoder.pos.b", Matrix(1, cfg_.dim));
  }
  return params;
}

std::pair<std::size_t, std::size_t> SlotModel::decoder_grid(const VideoClip& clip) const {
  if (cfg_.target != TargetKind::features) return {clip.geometry.height, clip.geometry.width};
  if (clip.features) return {clip.features->height, clip.features->width};
  return {clip.geometry.height / cfg_.backbone.patch, clip.geometry.width / cfg_.backbone.patch};
}

namespace {

FrameInput frame_input(const VideoClip& clip, std::size_t t) {
  FrameInput in;
  in.rgb = clip.frame_rgb(t);
  in.height = clip.geometry.height;
  in.width = clip.geometry.width;
  if (clip.features) {
    in.features = clip.frame_features(t);
    in.feature_height = clip.features->height;
    in.feature_width = clip.features->width;
  }
  if (clip.global_embeds) in.global_embed = clip.frame_global_embed(t);
  return in;
}

}  // namespace

ClipOutput SlotModel::forward_clip(const VideoClip& clip, ParamBinder& params,
                                   double flow_max) const {
  if (clip.frames() == 0) throw ArgumentError("forward_clip on an empty clip");
  Tape& tape = params.tape();
  const SlotEncoderConfig enc = cfg_.slot_encoder();
  const auto [grid_h, grid_w] = decoder_grid(clip);
  const std::size_t positions = grid_h * grid_w;

  const SlotAttentionWeights sa = SlotAttentionWeights::bind(params, enc.eps);
  const BoxEmbedder boxes = BoxEmbedder::bind(params);
  SlotTransition transition;
  if (cfg_.learned_transition) transition = SlotTransition::bind(params);

  Var pos_all;
  if (cfg_.temporal_queries) {
    pos_all = project_grid(
        tape.constant(fourier_grid_temporal(clip.frames(), grid_h, grid_w, cfg_.fourier_freqs)),
        params["decoder.pos.w"], params["decoder.pos.b"]);
  } else {
    pos_all = project_grid(tape.constant(fourier_grid(grid_h, grid_w, cfg_.fourier_freqs)),
                           params["decoder.pos.w"], params["decoder.pos.b"]);
  }

  ProjectionWeights proj;
  PositionwiseMlp head;
  if (cfg_.decoder == DecoderKind::attentional) {
    proj = ProjectionWeights::bind(params);
    head = PositionwiseMlp::bind(params, "decoder.head");
  } else {
    head = PositionwiseMlp::bind(params, "decoder.bcast");
  }

  ClipOutput out;
  Var slots = init_slots_from_boxes(clip.frame_boxes(0), clip.geometry.k_max, cfg_.slots, boxes);
  Var enc_pos;
  std::vector<Var> losses;
  for (std::size_t t = 0; t < clip.frames(); ++t) {
    FeatureGrid feat = encode_frame(frame_input(clip, t), cfg_.backbone, params);
    Var tokens = feat.grid;
    if (cfg_.encoder_pos) {
      if (!enc_pos.valid()) {
        enc_pos = project_grid(
            tape.constant(fourier_grid(feat.height, feat.width, cfg_.fourier_freqs)),
            params["encoder.pos.w"], params["encoder.pos.b"]);
      }
      tokens = add(tokens, enc_pos);
    }
    Var init = slots;
    if (t > 0) {
      init = carryover(slots, cfg_.learned_transition ? &transition : nullptr);
      if (cfg_.detach_per_frame) init = stop_gradient(init);
    }
    const int iters = t == 0 ? cfg_.first_frame_iters : cfg_.later_iters;
    SlotAttentionResult sa_out = slot_attention_step(tokens, init, sa, iters);
    slots = sa_out.slots;

    Var pos = cfg_.temporal_queries ? slice_rows(pos_all, t * positions, positions) : pos_all;
    DecodeResult dec = cfg_.decoder == DecoderKind::attentional
                           ? attentional_decode(slots, pos, feat.global_embed, proj, head, cfg_.flags)
                           : broadcast_decode(slots, pos, head);
    FrameOutput f;
    f.reconstruction = dec.reconstruction;
    f.decoder_logits = dec.logits;
    f.decoder_weights = dec.weights;
    f.encoder_attention = sa_out.attention;
    f.slots = slots;
    f.loss = mse_loss(dec.reconstruction, prepare_target(clip, cfg_.target, t, flow_max));
    f.grid_height = grid_h;
    f.grid_width = grid_w;
    f.feature_height = feat.height;
    f.feature_width = feat.width;
    losses.push_back(f.loss);
    out.frames.push_back(f);
  }
  out.loss = scale(add_n(losses), 1.0 / static_cast<double>(losses.size()));
  out.decoder_passes = head.calls();
  return out;
}

void attach_backbone_features(VideoClip& clip, const BackboneConfig& cfg, const ParamStore& params) {
  if (cfg.provider == BackboneProvider::precomputed) {
    throw ConfigError("cannot dump features from the precomputed provider");
  }
  FeatureBlock feats;
  EmbeddingBlock embeds;
  feats.dim = embeds.dim = static_cast<std::uint32_t>(cfg.dim);
  for (std::size_t t = 0; t < clip.frames(); ++t) {
    Tape tape;
    ParamBinder binder(tape, params, false);
    FrameInput in;
    in.rgb = clip.frame_rgb(t);
    in.height = clip.geometry.height;
    in.width = clip.geometry.width;
    FeatureGrid g = encode_frame(in, cfg, binder);
    feats.height = static_cast<std::uint32_t>(g.height);
    feats.width = static_cast<std::uint32_t>(g.width);
    for (double v : g.grid.value().values()) feats.values.push_back(static_cast<float>(v));
    for (double v : g.global_embed.value().values()) embeds.values.push_back(static_cast<float>(v));
  }
  clip.features = std::move(feats);
  clip.global_embeds = std::move(embeds);
}

}  // namespace ocvl

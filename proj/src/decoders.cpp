#include "ocvl/decoders.hpp"

#include <cmath>

#include "ocvl/slot_encoder.hpp"

namespace ocvl {

std::string target_name(TargetKind k) {
  switch (k) {
    case TargetKind::rgb: return "rgb";
    case TargetKind::flow: return "flow";
    case TargetKind::features: return "features";
  }
  return "?";
}

TargetKind parse_target(const std::string& name) {
  if (name == "rgb") return TargetKind::rgb;
  if (name == "flow") return TargetKind::flow;
  if (name == "features") return TargetKind::features;
  throw ConfigError("unknown target kind '" + name + "'");
}

std::string decoder_name(DecoderKind k) {
  return k == DecoderKind::attentional ? "attentional" : "broadcast";
}

DecoderKind parse_decoder(const std::string& name) {
  if (name == "attentional") return DecoderKind::attentional;
  if (name == "broadcast") return DecoderKind::broadcast;
  throw ConfigError("unknown decoder kind '" + name + "'");
}

std::size_t target_channels(TargetKind kind, std::size_t feature_dim) {
  switch (kind) {
    case TargetKind::rgb: return 3;
    case TargetKind::flow: return 2;
    case TargetKind::features: return feature_dim;
  }
  return 0;
}

void init_decoder_params(const DecoderConfig& cfg, ParamStore& params, Rng& rng) {
  const std::size_t d = cfg.dim;
  const std::size_t raw = (cfg.temporal ? 6 : 4) * cfg.fourier_freqs;
  params.add("decoder.pos.w", random_normal(raw, d, 1.0 / std::sqrt(double(raw)), rng));
  params.add("decoder.pos.b", Matrix(1, d));
  const double he = std::sqrt(2.0 / double(d));
  const double lecun = 1.0 / std::sqrt(double(d));
  if (cfg.kind == DecoderKind::attentional) {
    params.add("decoder.attn.w_k", random_normal(d, d, lecun, rng));
    params.add("decoder.attn.w_v", random_normal(d, d, lecun, rng));
    params.add("decoder.attn.ln_k.g", Matrix(1, d, 1.0));
    params.add("decoder.attn.ln_k.b", Matrix(1, d));
    params.add("decoder.attn.ln_v.g", Matrix(1, d, 1.0));
    params.add("decoder.attn.ln_v.b", Matrix(1, d));
    params.add("decoder.head.w1", random_normal(d, d, he, rng));
    params.add("decoder.head.b1", Matrix(1, d));
    params.add("decoder.head.w2", random_normal(d, cfg.out_channels, lecun, rng));
    params.add("decoder.head.b2", Matrix(1, cfg.out_channels));
  } else {
    params.add("decoder.bcast.w1", random_normal(d, d, he, rng));
    params.add("decoder.bcast.b1", Matrix(1, d));
    params.add("decoder.bcast.w2", random_normal(d, cfg.out_channels + 1, lecun, rng));
    params.add("decoder.bcast.b2", Matrix(1, cfg.out_channels + 1));
  }
}

ProjectionWeights ProjectionWeights::bind(ParamBinder& p) {
  return {p["decoder.attn.w_k"],    p["decoder.attn.w_v"],    p["decoder.attn.ln_k.g"],
          p["decoder.attn.ln_k.b"], p["decoder.attn.ln_v.g"], p["decoder.attn.ln_v.b"]};
}

PositionwiseMlp PositionwiseMlp::bind(ParamBinder& p, const std::string& prefix) {
  return {p[prefix + ".w1"], p[prefix + ".b1"], p[prefix + ".w2"], p[prefix + ".b2"]};
}

Var PositionwiseMlp::operator()(Var x) const {
  ++calls_;
  Var hidden = relu(add_row(matmul(x, w1_), b1_));
  return add_row(matmul(hidden, w2_), b2_);
}

Var build_queries(Var pos, Var g, bool use_global) {
  if (!use_global) return pos;
  if (g.rows() != 1 || g.cols() != pos.cols()) {
    throw ShapeError("build_queries: global embedding " + g.value().shape_string() +
                     " for positional grid " + pos.value().shape_string());
  }
  return add_row(pos, g);
}

AttendResult attend(Var queries, Var slots, const ProjectionWeights& w) {
  if (queries.cols() != slots.cols()) {
    throw ShapeError("attend: query width " + std::to_string(queries.cols()) + " vs slot width " +
                     std::to_string(slots.cols()));
  }
  Var keys = layer_norm(matmul(slots, w.w_k), w.ln_k_g, w.ln_k_b, kLayerNormEps);
  Var values = layer_norm(matmul(slots, w.w_v), w.ln_v_g, w.ln_v_b, kLayerNormEps);
  Var logits = scale(matmul_nt(queries, keys), 1.0 / std::sqrt(double(queries.cols())));
  if (!logits.value().all_finite()) throw NumericError("decoder attention logits are not finite", 0);
  Var weights = softmax_rows(logits);
  return {matmul(weights, values), logits, weights};
}

DecodeResult attentional_decode(Var slots, Var pos, Var g, const ProjectionWeights& w,
                                const PositionwiseMlp& head, DecoderFlags flags) {
  AttendResult a = attend(build_queries(pos, g, flags.use_global), slots, w);
  Var context = flags.use_pos_residual ? add(a.context, pos) : a.context;
  return {head(context), a.logits, a.weights};
}

DecodeResult broadcast_decode(Var slots, Var pos, const PositionwiseMlp& per_slot) {
  if (slots.cols() != pos.cols()) throw ShapeError("broadcast_decode: slot/grid width mismatch");
  const std::size_t k = slots.rows();
  const std::size_t c = per_slot.out_channels() - 1;
  std::vector<Var> contents;
  std::vector<Var> alphas;
  for (std::size_t s = 0; s < k; ++s) {
    Var decoded = per_slot(add_row(pos, slice_rows(slots, s, 1)));
    contents.push_back(slice_cols(decoded, 0, c));
    alphas.push_back(slice_cols(decoded, c, 1));
  }
  Var logits = concat_cols(alphas);
  Var weights = softmax_rows(logits);
  std::vector<Var> mixed;
  for (std::size_t s = 0; s < k; ++s) mixed.push_back(mul_col(contents[s], slice_cols(weights, s, 1)));
  return {add_n(mixed), logits, weights};
}

std::vector<std::int32_t> extract_masks(const Matrix& logits, std::size_t h, std::size_t w) {
  if (logits.rows() != h * w) {
    throw ShapeError("extract_masks: " + logits.shape_string() + " for a " + std::to_string(h) +
                     "x" + std::to_string(w) + " grid");
  }
  std::vector<std::int32_t> labels(h * w, 0);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.cols(); ++k)
      if (logits(i, k) > logits(i, best)) best = k;
    labels[i] = static_cast<std::int32_t>(best);
  }
  return labels;
}

}  // namespace ocvl

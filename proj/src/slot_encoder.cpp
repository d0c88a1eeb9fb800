#include "ocvl/slot_encoder.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace ocvl {

void init_slot_encoder_params(const SlotEncoderConfig& cfg, ParamStore& params, Rng& rng) {
  const std::size_t d = cfg.dim;
  if (d == 0 || cfg.slots == 0) throw ConfigError("slot encoder needs dim > 0 and slots > 0");
  const double sd = 1.0 / std::sqrt(double(d));
  auto ln = [&](const std::string& name) {
    params.add(name + ".g", Matrix(1, d, 1.0));
    params.add(name + ".b", Matrix(1, d));
  };
  ln("slot_attn.ln_in");
  ln("slot_attn.ln_slot");
  ln("slot_attn.ln_mlp");
  params.add("slot_attn.w_k", random_normal(d, d, sd, rng));
  params.add("slot_attn.w_v", random_normal(d, d, sd, rng));
  params.add("slot_attn.w_q", random_normal(d, d, sd, rng));
  params.add("slot_attn.gru.wi", random_uniform(d, 3 * d, sd, rng));
  params.add("slot_attn.gru.bi", Matrix(1, 3 * d));
  params.add("slot_attn.gru.wh", random_uniform(d, 3 * d, sd, rng));
  params.add("slot_attn.gru.bh", Matrix(1, 3 * d));
  params.add("slot_attn.mlp.w1", random_normal(d, cfg.mlp_hidden, std::sqrt(2.0 / double(d)), rng));
  params.add("slot_attn.mlp.b1", Matrix(1, cfg.mlp_hidden));
  params.add("slot_attn.mlp.w2",
             random_normal(cfg.mlp_hidden, d, 1.0 / std::sqrt(double(cfg.mlp_hidden)), rng));
  params.add("slot_attn.mlp.b2", Matrix(1, d));

  params.add("box.w1", random_normal(4, cfg.box_hidden, std::sqrt(2.0 / 4.0), rng));
  params.add("box.b1", Matrix(1, cfg.box_hidden));
  params.add("box.w2", random_normal(cfg.box_hidden, d, 1.0 / std::sqrt(double(cfg.box_hidden)), rng));
  params.add("box.b2", Matrix(1, d));
  params.add("box.null_slot", random_normal(1, d, 1.0, rng));

  if (cfg.learned_transition) {
    params.add("transition.w1", random_normal(d, d, std::sqrt(2.0 / double(d)), rng));
    params.add("transition.b1", Matrix(1, d));
    params.add("transition.w2", Matrix(d, d));
    params.add("transition.b2", Matrix(1, d));
  }
}

SlotAttentionWeights SlotAttentionWeights::bind(ParamBinder& p, double eps) {
  SlotAttentionWeights w;
  w.ln_in_g = p["slot_attn.ln_in.g"];
  w.ln_in_b = p["slot_attn.ln_in.b"];
  w.w_k = p["slot_attn.w_k"];
  w.w_v = p["slot_attn.w_v"];
  w.w_q = p["slot_attn.w_q"];
  w.ln_slot_g = p["slot_attn.ln_slot.g"];
  w.ln_slot_b = p["slot_attn.ln_slot.b"];
  w.gru_wi = p["slot_attn.gru.wi"];
  w.gru_bi = p["slot_attn.gru.bi"];
  w.gru_wh = p["slot_attn.gru.wh"];
  w.gru_bh = p["slot_attn.gru.bh"];
  w.ln_mlp_g = p["slot_attn.ln_mlp.g"];
  w.ln_mlp_b = p["slot_attn.ln_mlp.b"];
  w.mlp_w1 = p["slot_attn.mlp.w1"];
  w.mlp_b1 = p["slot_attn.mlp.b1"];
  w.mlp_w2 = p["slot_attn.mlp.w2"];
  w.mlp_b2 = p["slot_attn.mlp.b2"];
  w.eps = eps;
  return w;
}

BoxEmbedder BoxEmbedder::bind(ParamBinder& p) {
  return {p["box.w1"], p["box.b1"], p["box.w2"], p["box.b2"], p["box.null_slot"]};
}

SlotTransition SlotTransition::bind(ParamBinder& p) {
  return {p["transition.w1"], p["transition.b1"], p["transition.w2"], p["transition.b2"]};
}

bool box_absent(std::span<const float> row) {
  for (float v : row)
    if (v < 0.0f) return true;
  return false;
}

Var init_slots_from_boxes(std::span<const float> boxes, std::size_t k_max, std::size_t slots,
                          const BoxEmbedder& embedder) {
  if (boxes.size() != k_max * 4) throw ShapeError("box array does not hold K_max rows of 4");
  Tape& tape = *embedder.null_slot.tape;
  std::vector<std::size_t> valid;
  for (std::size_t r = 0; r < k_max; ++r) {
    if (!box_absent(boxes.subspan(r * 4, 4))) valid.push_back(r);
  }
  if (valid.size() > slots || (!valid.empty() && valid.back() >= slots)) {
    throw CapacityError(std::to_string(valid.size()) + " valid boxes (highest row " +
                        std::to_string(valid.empty() ? 0 : valid.back()) + ") do not fit " +
                        std::to_string(slots) + " slots");
  }
  std::vector<Var> rows(slots, embedder.null_slot);
  if (!valid.empty()) {
    Matrix coords(valid.size(), 4);
    for (std::size_t i = 0; i < valid.size(); ++i)
      for (std::size_t c = 0; c < 4; ++c) coords(i, c) = boxes[valid[i] * 4 + c];
    Var in = tape.constant(std::move(coords));
    Var hidden = relu(add_row(matmul(in, embedder.w1), embedder.b1));
    Var embedded = add_row(matmul(hidden, embedder.w2), embedder.b2);
    for (std::size_t i = 0; i < valid.size(); ++i) rows[valid[i]] = slice_rows(embedded, i, 1);
  }
  return concat_rows(rows);
}

SlotAttentionResult slot_attention_step(Var features, Var slots, const SlotAttentionWeights& w,
                                        int iters) {
  if (features.cols() != slots.cols()) {
    throw ShapeError("slot attention: feature width " + std::to_string(features.cols()) +
                     " vs slot width " + std::to_string(slots.cols()));
  }
  SlotAttentionResult out{slots, Var{}};
  if (iters <= 0) return out;
  const std::size_t d = slots.cols();
  const double temperature = 1.0 / std::sqrt(double(d));

  Var inputs = layer_norm(features, w.ln_in_g, w.ln_in_b, kLayerNormEps);
  Var keys = matmul(inputs, w.w_k);
  Var values = matmul(inputs, w.w_v);
  Var current = slots;
  for (int it = 0; it < iters; ++it) {
    Var prev = current;
    Var q = matmul(layer_norm(current, w.ln_slot_g, w.ln_slot_b, kLayerNormEps), w.w_q);
    Var logits = scale(matmul_nt(keys, q), temperature);  // N x K
    Var attn = softmax_rows(logits);
    Var weights = normalize_cols(attn, w.eps);
    Var updates = matmul_tn(weights, values);  // K x D

    Var gi = add_row(matmul(updates, w.gru_wi), w.gru_bi);
    Var gh = add_row(matmul(prev, w.gru_wh), w.gru_bh);
    Var r = sigmoid(add(slice_cols(gi, 0, d), slice_cols(gh, 0, d)));
    Var z = sigmoid(add(slice_cols(gi, d, d), slice_cols(gh, d, d)));
    Var n = tanh(add(slice_cols(gi, 2 * d, d), mul(r, slice_cols(gh, 2 * d, d))));
    // h' = (1 - z) * n + z * h
    Var gru = add(mul(affine(z, -1.0, 1.0), n), mul(z, prev));

    Var hidden = relu(add_row(
        matmul(layer_norm(gru, w.ln_mlp_g, w.ln_mlp_b, kLayerNormEps), w.mlp_w1), w.mlp_b1));
    current = add(gru, add_row(matmul(hidden, w.mlp_w2), w.mlp_b2));
    if (!current.value().all_finite()) {
      throw NumericError("slot attention produced non-finite slots", it);
    }
    out.attention = attn;
  }
  out.slots = current;
  return out;
}

Var carryover(Var prev, const SlotTransition* transition) {
  if (transition == nullptr) return prev;
  Var hidden = relu(add_row(matmul(prev, transition->w1), transition->b1));
  return add(prev, add_row(matmul(hidden, transition->w2), transition->b2));
}

}  // namespace ocvl

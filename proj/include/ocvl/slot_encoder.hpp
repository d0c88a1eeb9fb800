#pragma once

// Slot Attention with bounding-box conditional initialization and
// frame-to-frame carryover.

#include <span>

#include "ocvl/autodiff.hpp"
#include "ocvl/params.hpp"

namespace ocvl {

struct SlotEncoderConfig {
  std::size_t dim = 64;
  std::size_t slots = 11;
  std::size_t box_hidden = 64;
  std::size_t mlp_hidden = 128;
  int first_frame_iters = 2;
  int later_iters = 1;
  bool learned_transition = false;
  double eps = 1e-8;  // weighted-mean normalization
};

inline constexpr double kLayerNormEps = 1e-5;

void init_slot_encoder_params(const SlotEncoderConfig& cfg, ParamStore& params, Rng& rng);

/// Slot Attention parameters bound onto a tape ("slot_attn.*").
struct SlotAttentionWeights {
  Var ln_in_g, ln_in_b;
  Var w_k, w_v, w_q;
  Var ln_slot_g, ln_slot_b;
  Var gru_wi, gru_bi, gru_wh, gru_bh;  // D x 3D / 1 x 3D, gate order r, z, n
  Var ln_mlp_g, ln_mlp_b;
  Var mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  double eps = 1e-8;

  static SlotAttentionWeights bind(ParamBinder& p, double eps);
};

/// Two-layer position-wise box embedder plus the learned null slot ("box.*").
struct BoxEmbedder {
  Var w1, b1, w2, b2;
  Var null_slot;  // 1 x D

  static BoxEmbedder bind(ParamBinder& p);
};

/// Residual slot transition ("transition.*"); its output layer starts at zero.
struct SlotTransition {
  Var w1, b1, w2, b2;

  static SlotTransition bind(ParamBinder& p);
};

/// True when a box row holds the absent sentinel.
bool box_absent(std::span<const float> row);

/// Slot i is the embedding of box row i, or the null slot when that row is
/// absent. Row 0 (background) is always absent, which reserves slot 0 for the
/// background whenever K exceeds the object count. Throws CapacityError when a
/// valid box cannot be assigned a slot.
Var init_slots_from_boxes(std::span<const float> boxes, std::size_t k_max, std::size_t slots,
                          const BoxEmbedder& embedder);

struct SlotAttentionResult {
  Var slots;      // K x D
  Var attention;  // N x K softmax-over-slots weights of the last round; invalid when iters == 0
};

/// `iters` rounds of competitive attention, weighted-mean aggregation, GRU
/// update and residual MLP. Throws NumericError carrying the round index when
/// slots stop being finite.
SlotAttentionResult slot_attention_step(Var features, Var slots, const SlotAttentionWeights& w,
                                        int iters);

/// Identity by default; with a transition, prev + MLP(prev).
Var carryover(Var prev, const SlotTransition* transition = nullptr);

}  // namespace ocvl

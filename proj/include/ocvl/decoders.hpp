#pragma once

// Slot decoders.
//
// The attentional decoder cross-attends from positional queries (plus the
// broadcast global embedding) to keys/values derived from the slots, adds a
// positional residual and decodes every position with ONE pass of a
// position-wise MLP head. Its slot-axis attention weights are the alpha masks.
//
// The broadcast decoder is the mixture-of-components baseline: every slot is
// broadcast over the grid and decoded independently (K head passes); the extra
// output channel is an alpha logit softmaxed across slots.

#include <cstdint>
#include <string>
#include <vector>

#include "ocvl/autodiff.hpp"
#include "ocvl/params.hpp"

namespace ocvl {

enum class TargetKind { rgb, flow, features };
enum class DecoderKind { attentional, broadcast };

std::string target_name(TargetKind k);
TargetKind parse_target(const std::string& name);
std::string decoder_name(DecoderKind k);
DecoderKind parse_decoder(const std::string& name);

/// Output channels C: 3 for RGB, 2 for flow, the feature width for features.
std::size_t target_channels(TargetKind kind, std::size_t feature_dim);

struct DecoderFlags {
  bool use_global = true;        // add g to every query ("-CLS" ablation when false)
  bool use_pos_residual = true;  // add the positional grid after attention ("-Pos" when false)
};

struct DecoderConfig {
  DecoderKind kind = DecoderKind::attentional;
  std::size_t dim = 64;
  std::size_t out_channels = 3;
  std::size_t fourier_freqs = 8;
  bool temporal = false;  // third Fourier axis for time
};

/// Adds "decoder.*" parameters for the configured decoder kind.
void init_decoder_params(const DecoderConfig& cfg, ParamStore& params, Rng& rng);

/// Key/value projections, each followed by a layer norm.
struct ProjectionWeights {
  Var w_k, w_v;
  Var ln_k_g, ln_k_b, ln_v_g, ln_v_b;

  static ProjectionWeights bind(ParamBinder& p);
};

/// Two-layer position-wise MLP (D -> D -> C) with a ReLU. Counts its own
/// invocations so tests can assert how many decoding passes ran.
class PositionwiseMlp {
 public:
  PositionwiseMlp() = default;
  PositionwiseMlp(Var w1, Var b1, Var w2, Var b2) : w1_(w1), b1_(b1), w2_(w2), b2_(b2) {}
  static PositionwiseMlp bind(ParamBinder& p, const std::string& prefix);

  Var operator()(Var x) const;
  std::size_t calls() const noexcept { return calls_; }
  std::size_t out_channels() const { return w2_.cols(); }

 private:
  Var w1_, b1_, w2_, b2_;
  mutable std::size_t calls_ = 0;
};

/// Flattened positional grid plus g on every row when `use_global`.
Var build_queries(Var pos, Var g, bool use_global);

struct AttendResult {
  Var context;  // HW x D
  Var logits;   // HW x K
  Var weights;  // HW x K, rows sum to 1
};

/// K = LN(S W_K), V = LN(S W_V); logits = Q K^T / sqrt(D); softmax over slots.
AttendResult attend(Var queries, Var slots, const ProjectionWeights& w);

struct DecodeResult {
  Var reconstruction;  // HW x C
  Var logits;          // HW x K
  Var weights;         // HW x K
};

DecodeResult attentional_decode(Var slots, Var pos, Var g, const ProjectionWeights& w,
                                const PositionwiseMlp& head, DecoderFlags flags);

DecodeResult broadcast_decode(Var slots, Var pos, const PositionwiseMlp& per_slot);

/// Argmax over slots per position; ties resolve to the lowest slot index.
std::vector<std::int32_t> extract_masks(const Matrix& logits, std::size_t h, std::size_t w);

}  // namespace ocvl

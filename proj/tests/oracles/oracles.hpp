#pragma once

// Reference computations for tests. Everything here is written with plain
// loops over its own row-major container and never calls library code, so an
// agreement between oracle and production is evidence rather than tautology.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace oracle {

struct Mat {
  std::size_t r = 0, c = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0) : r(rows), c(cols), v(rows * cols, fill) {}
  double& at(std::size_t i, std::size_t j) { return v[i * c + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * c + j]; }
};

using Params = std::map<std::string, Mat>;

// ---- linear algebra ----------------------------------------------------------
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
Mat add(const Mat& a, const Mat& b);
Mat add_bias(const Mat& a, const Mat& row);
Mat relu(const Mat& a);
Mat softmax_rows(const Mat& a);
Mat layer_norm(const Mat& x, const Mat& gamma, const Mat& beta, double eps);
double max_abs_diff(const Mat& a, const Mat& b);

// ---- pos_embed ---------------------------------------------------------------
/// Channel `ch` of the Fourier encoding at (row, col) of an h x w grid.
double fourier_value(std::size_t row, std::size_t col, std::size_t h, std::size_t w, std::size_t f,
                     std::size_t ch);
Mat fourier_grid(std::size_t h, std::size_t w, std::size_t f);

// ---- backbone ----------------------------------------------------------------
/// Flattened p x p x 3 patch whose top-left pixel is (y0, x0), in [0, 1].
std::vector<double> patch_vector(const std::vector<std::uint8_t>& rgb, std::size_t width,
                                 std::size_t y0, std::size_t x0, std::size_t p);
Mat frozen_projection(const std::vector<std::uint8_t>& rgb, std::size_t h, std::size_t w,
                      std::size_t p, const Mat& weight, const Mat& bias);
Mat trainable_mini(const std::vector<std::uint8_t>& rgb, std::size_t h, std::size_t w,
                   std::size_t p, const Params& params);
Mat column_mean(const Mat& grid);

// ---- slot encoder ------------------------------------------------------------
Mat box_slots(const std::vector<float>& boxes, std::size_t k_max, std::size_t slots,
              const Params& params);
struct SlotStep {
  Mat slots;
  Mat attention;  // last round, tokens x K
};
SlotStep slot_attention(const Mat& features, const Mat& slots, const Params& params, int iters,
                        double eps = 1e-8);
Mat transition(const Mat& slots, const Params& params);

// ---- decoders ----------------------------------------------------------------
struct Decoded {
  Mat recon;
  Mat logits;
  Mat weights;
};
Mat mlp(const Mat& x, const Params& params, const std::string& prefix);
Decoded attentional(const Mat& slots, const Mat& pos, const Mat& g, const Params& params,
                    bool use_global, bool use_pos_residual);
Decoded broadcast(const Mat& slots, const Mat& pos, const Params& params);
std::vector<int> argmax_rows(const Mat& logits);

// ---- objectives / metrics ----------------------------------------------------
double mse(const Mat& a, const Mat& b);
/// Pair-counting ARI: enumerates every unordered pair of selected points.
double ari_pairs(const std::vector<int>& pred, const std::vector<int>& truth,
                 const std::vector<bool>& select = {});

// ---- composition -------------------------------------------------------------
struct ClipSpec {
  std::size_t frames = 0, height = 0, width = 0, k_max = 0;
  std::vector<std::uint8_t> rgb;
  std::vector<float> boxes;
  std::size_t slots = 0;
  std::size_t patch = 0;
  bool trainable_backbone = false;
  bool encoder_pos = true;
  std::size_t fourier_freqs = 0;
  int first_iters = 2, later_iters = 1;
  bool use_global = true, use_pos_residual = true;
  bool broadcast = false;
};
/// Mean over frames of the RGB reconstruction MSE of the full recurrent model.
double clip_loss(const ClipSpec& clip, const Params& params);

// ---- container ---------------------------------------------------------------
struct RawClip {
  std::uint32_t t = 0, h = 0, w = 0, k = 0;
  std::vector<std::uint8_t> rgb, mask;
  std::vector<float> boxes, flow;
  std::uint32_t feat_h = 0, feat_w = 0, feat_d = 0;
  std::vector<float> feat;
  std::uint32_t gemb_d = 0;
  std::vector<float> gemb;
};
/// Little-endian OCV1 bytes written field by field.
std::vector<std::uint8_t> container_bytes(const RawClip& clip);

// ---- finite differences ------------------------------------------------------
/// Central differences of `f` with respect to every entry of `x`.
std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x, double h = 1e-5);

}  // namespace oracle

#include "oracles.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace oracle {

Mat matmul(const Mat& a, const Mat& b) {
  if (a.c != b.r) throw std::invalid_argument("oracle matmul shape");
  Mat out(a.r, b.c);
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t j = 0; j < b.c; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.c; ++k) s += a.at(i, k) * b.at(k, j);
      out.at(i, j) = s;
    }
  return out;
}

Mat transpose(const Mat& a) {
  Mat out(a.c, a.r);
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t j = 0; j < a.c; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Mat add(const Mat& a, const Mat& b) {
  if (a.r != b.r || a.c != b.c) throw std::invalid_argument("oracle add shape");
  Mat out = a;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.v[i];
  return out;
}

Mat add_bias(const Mat& a, const Mat& row) {
  Mat out = a;
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t j = 0; j < a.c; ++j) out.at(i, j) += row.v[j];
  return out;
}

Mat relu(const Mat& a) {
  Mat out = a;
  for (double& x : out.v) x = x > 0.0 ? x : 0.0;
  return out;
}

Mat softmax_rows(const Mat& a) {
  Mat out(a.r, a.c);
  for (std::size_t i = 0; i < a.r; ++i) {
    double m = -INFINITY;
    for (std::size_t j = 0; j < a.c; ++j) m = std::max(m, a.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < a.c; ++j) z += std::exp(a.at(i, j) - m);
    for (std::size_t j = 0; j < a.c; ++j) out.at(i, j) = std::exp(a.at(i, j) - m) / z;
  }
  return out;
}

Mat layer_norm(const Mat& x, const Mat& gamma, const Mat& beta, double eps) {
  Mat out(x.r, x.c);
  for (std::size_t i = 0; i < x.r; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < x.c; ++j) mean += x.at(i, j);
    mean /= double(x.c);
    double var = 0.0;
    for (std::size_t j = 0; j < x.c; ++j) var += (x.at(i, j) - mean) * (x.at(i, j) - mean);
    var /= double(x.c);
    for (std::size_t j = 0; j < x.c; ++j) {
      out.at(i, j) = (x.at(i, j) - mean) / std::sqrt(var + eps) * gamma.v[j] + beta.v[j];
    }
  }
  return out;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  if (a.r != b.r || a.c != b.c) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

// ---- pos_embed ---------------------------------------------------------------

double fourier_value(std::size_t row, std::size_t col, std::size_t h, std::size_t w, std::size_t f,
                     std::size_t ch) {
  const std::size_t axis = ch / (2 * f);
  const std::size_t freq = (ch % (2 * f)) / 2;
  const bool is_cos = ch % 2 == 1;
  const double idx = axis == 0 ? double(row) : double(col);
  const double n = axis == 0 ? double(h) : double(w);
  const double coord = -1.0 + (idx + 0.5) * (2.0 / n);
  const double arg = std::pow(2.0, double(freq)) * M_PI * coord;
  return is_cos ? std::cos(arg) : std::sin(arg);
}

Mat fourier_grid(std::size_t h, std::size_t w, std::size_t f) {
  Mat out(h * w, 4 * f);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t ch = 0; ch < 4 * f; ++ch) out.at(i * w + j, ch) = fourier_value(i, j, h, w, f, ch);
  return out;
}

// ---- backbone ----------------------------------------------------------------

std::vector<double> patch_vector(const std::vector<std::uint8_t>& rgb, std::size_t width,
                                 std::size_t y0, std::size_t x0, std::size_t p) {
  std::vector<double> out;
  for (std::size_t y = 0; y < p; ++y)
    for (std::size_t x = 0; x < p; ++x)
      for (std::size_t c = 0; c < 3; ++c) out.push_back(rgb[((y0 + y) * width + x0 + x) * 3 + c] / 255.0);
  return out;
}

namespace {

Mat patch_matrix(const std::vector<std::uint8_t>& rgb, std::size_t h, std::size_t w, std::size_t p) {
  Mat out((h / p) * (w / p), p * p * 3);
  std::size_t r = 0;
  for (std::size_t py = 0; py < h / p; ++py)
    for (std::size_t px = 0; px < w / p; ++px, ++r) {
      const std::vector<double> v = patch_vector(rgb, w, py * p, px * p, p);
      for (std::size_t k = 0; k < v.size(); ++k) out.at(r, k) = v[k];
    }
  return out;
}

const Mat& get(const Params& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw std::out_of_range("oracle param " + name);
  return it->second;
}

}  // namespace

Mat frozen_projection(const std::vector<std::uint8_t>& rgb, std::size_t h, std::size_t w,
                      std::size_t p, const Mat& weight, const Mat& bias) {
  return add_bias(matmul(patch_matrix(rgb, h, w, p), weight), bias);
}

Mat trainable_mini(const std::vector<std::uint8_t>& rgb, std::size_t h, std::size_t w,
                   std::size_t p, const Params& params) {
  Mat tokens = relu(add_bias(matmul(patch_matrix(rgb, h, w, p), get(params, "backbone.embed.w")),
                             get(params, "backbone.embed.b")));
  return add_bias(matmul(tokens, get(params, "backbone.mix.w")), get(params, "backbone.mix.b"));
}

Mat column_mean(const Mat& grid) {
  Mat out(1, grid.c);
  for (std::size_t j = 0; j < grid.c; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.r; ++i) s += grid.at(i, j);
    out.v[j] = s / double(grid.r);
  }
  return out;
}

// ---- slot encoder ------------------------------------------------------------

Mat box_slots(const std::vector<float>& boxes, std::size_t k_max, std::size_t slots,
              const Params& params) {
  const Mat& null_slot = get(params, "box.null_slot");
  Mat out(slots, null_slot.c);
  for (std::size_t s = 0; s < slots; ++s) {
    bool absent = true;
    if (s < k_max) {
      for (std::size_t c = 0; c < 4; ++c) absent = absent && boxes[s * 4 + c] == -1.0f;
    }
    if (absent) {
      for (std::size_t j = 0; j < out.c; ++j) out.at(s, j) = null_slot.v[j];
      continue;
    }
    Mat row(1, 4);
    for (std::size_t c = 0; c < 4; ++c) row.v[c] = boxes[s * 4 + c];
    Mat hidden = relu(add_bias(matmul(row, get(params, "box.w1")), get(params, "box.b1")));
    Mat e = add_bias(matmul(hidden, get(params, "box.w2")), get(params, "box.b2"));
    for (std::size_t j = 0; j < out.c; ++j) out.at(s, j) = e.v[j];
  }
  return out;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SlotStep slot_attention(const Mat& features, const Mat& slots, const Params& P, int iters, double eps) {
  SlotStep out{slots, Mat()};
  if (iters <= 0) return out;
  const std::size_t n = features.r, k = slots.r, d = slots.c;
  const Mat x = layer_norm(features, get(P, "slot_attn.ln_in.g"), get(P, "slot_attn.ln_in.b"), 1e-5);
  const Mat keys = matmul(x, get(P, "slot_attn.w_k"));
  const Mat values = matmul(x, get(P, "slot_attn.w_v"));
  Mat s = slots;
  for (int it = 0; it < iters; ++it) {
    const Mat q = matmul(layer_norm(s, get(P, "slot_attn.ln_slot.g"), get(P, "slot_attn.ln_slot.b"), 1e-5),
                         get(P, "slot_attn.w_q"));
    // Competition: softmax over slots for every token.
    Mat attn(n, k);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> logit(k);
      double m = -INFINITY;
      for (std::size_t a = 0; a < k; ++a) {
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += keys.at(i, c) * q.at(a, c);
        logit[a] = dot / std::sqrt(double(d));
        m = std::max(m, logit[a]);
      }
      double z = 0.0;
      for (std::size_t a = 0; a < k; ++a) z += std::exp(logit[a] - m);
      for (std::size_t a = 0; a < k; ++a) attn.at(i, a) = std::exp(logit[a] - m) / z;
    }
    // Weighted mean of values per slot.
    Mat updates(k, d);
    for (std::size_t a = 0; a < k; ++a) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += attn.at(i, a) + eps;
      for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += (attn.at(i, a) + eps) / total * values.at(i, c);
        updates.at(a, c) = acc;
      }
    }
    // GRU cell, gates r, z, n.
    const Mat gi = add_bias(matmul(updates, get(P, "slot_attn.gru.wi")), get(P, "slot_attn.gru.bi"));
    const Mat gh = add_bias(matmul(s, get(P, "slot_attn.gru.wh")), get(P, "slot_attn.gru.bh"));
    Mat h(k, d);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t c = 0; c < d; ++c) {
        const double r = sigmoid(gi.at(a, c) + gh.at(a, c));
        const double zg = sigmoid(gi.at(a, d + c) + gh.at(a, d + c));
        const double nn = std::tanh(gi.at(a, 2 * d + c) + r * gh.at(a, 2 * d + c));
        h.at(a, c) = (1.0 - zg) * nn + zg * s.at(a, c);
      }
    const Mat hidden = relu(add_bias(
        matmul(layer_norm(h, get(P, "slot_attn.ln_mlp.g"), get(P, "slot_attn.ln_mlp.b"), 1e-5),
               get(P, "slot_attn.mlp.w1")),
        get(P, "slot_attn.mlp.b1")));
    s = add(h, add_bias(matmul(hidden, get(P, "slot_attn.mlp.w2")), get(P, "slot_attn.mlp.b2")));
    out.attention = attn;
  }
  out.slots = s;
  return out;
}

Mat transition(const Mat& slots, const Params& P) {
  const Mat hidden = relu(add_bias(matmul(slots, get(P, "transition.w1")), get(P, "transition.b1")));
  return add(slots, add_bias(matmul(hidden, get(P, "transition.w2")), get(P, "transition.b2")));
}

// ---- decoders ----------------------------------------------------------------

Mat mlp(const Mat& x, const Params& P, const std::string& prefix) {
  const Mat hidden = relu(add_bias(matmul(x, get(P, prefix + ".w1")), get(P, prefix + ".b1")));
  return add_bias(matmul(hidden, get(P, prefix + ".w2")), get(P, prefix + ".b2"));
}

Decoded attentional(const Mat& slots, const Mat& pos, const Mat& g, const Params& P, bool use_global,
                    bool use_pos_residual) {
  const std::size_t n = pos.r, k = slots.r, d = slots.c;
  Mat q = pos;
  if (use_global) q = add_bias(pos, g);
  const Mat keys = layer_norm(matmul(slots, get(P, "decoder.attn.w_k")), get(P, "decoder.attn.ln_k.g"),
                              get(P, "decoder.attn.ln_k.b"), 1e-5);
  const Mat vals = layer_norm(matmul(slots, get(P, "decoder.attn.w_v")), get(P, "decoder.attn.ln_v.g"),
                              get(P, "decoder.attn.ln_v.b"), 1e-5);
  Decoded out;
  out.logits = Mat(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < k; ++a) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += q.at(i, c) * keys.at(a, c);
      out.logits.at(i, a) = dot / std::sqrt(double(d));
    }
  out.weights = softmax_rows(out.logits);
  Mat context(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::size_t a = 0; a < k; ++a) acc += out.weights.at(i, a) * vals.at(a, c);
      context.at(i, c) = acc + (use_pos_residual ? pos.at(i, c) : 0.0);
    }
  out.recon = mlp(context, P, "decoder.head");
  return out;
}

Decoded broadcast(const Mat& slots, const Mat& pos, const Params& P) {
  const std::size_t n = pos.r, k = slots.r;
  std::vector<Mat> decoded;
  for (std::size_t a = 0; a < k; ++a) {
    Mat in = pos;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < pos.c; ++c) in.at(i, c) += slots.at(a, c);
    decoded.push_back(mlp(in, P, "decoder.bcast"));
  }
  const std::size_t ch = decoded[0].c - 1;
  Decoded out;
  out.logits = Mat(n, k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t i = 0; i < n; ++i) out.logits.at(i, a) = decoded[a].at(i, ch);
  out.weights = softmax_rows(out.logits);
  out.recon = Mat(n, ch);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < ch; ++c) {
      double acc = 0.0;
      for (std::size_t a = 0; a < k; ++a) acc += out.weights.at(i, a) * decoded[a].at(i, c);
      out.recon.at(i, c) = acc;
    }
  return out;
}

std::vector<int> argmax_rows(const Mat& logits) {
  std::vector<int> out;
  for (std::size_t i = 0; i < logits.r; ++i) {
    int best = 0;
    double best_v = logits.at(i, 0);
    for (std::size_t a = 0; a < logits.c; ++a) {
      if (logits.at(i, a) > best_v) {
        best_v = logits.at(i, a);
        best = int(a);
      }
    }
    out.push_back(best);
  }
  return out;
}

// ---- objectives / metrics ----------------------------------------------------

double mse(const Mat& a, const Mat& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) s += (a.v[i] - b.v[i]) * (a.v[i] - b.v[i]);
  return s / double(a.v.size());
}

double ari_pairs(const std::vector<int>& pred, const std::vector<int>& truth, const std::vector<bool>& select) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (select.empty() || select[i]) idx.push_back(i);
  // n11: together in both; n00: apart in both; n10 / n01: together in one only.
  double n11 = 0, n00 = 0, n10 = 0, n01 = 0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const bool sp = pred[idx[a]] == pred[idx[b]];
      const bool st = truth[idx[a]] == truth[idx[b]];
      if (sp && st) n11 += 1;
      else if (!sp && !st) n00 += 1;
      else if (sp) n10 += 1;
      else n01 += 1;
    }
  const double denom = (n11 + n01) * (n01 + n00) + (n11 + n10) * (n10 + n00);
  if (denom == 0.0) return 1.0;
  return 2.0 * (n11 * n00 - n10 * n01) / denom;
}

// ---- composition -------------------------------------------------------------

double clip_loss(const ClipSpec& clip, const Params& P) {
  const std::size_t H = clip.height, W = clip.width, p = clip.patch;
  const Mat dec_pos = add_bias(matmul(fourier_grid(H, W, clip.fourier_freqs), get(P, "decoder.pos.w")),
                               get(P, "decoder.pos.b"));
  Mat enc_pos;
  if (clip.encoder_pos) {
    enc_pos = add_bias(matmul(fourier_grid(H / p, W / p, clip.fourier_freqs), get(P, "encoder.pos.w")),
                       get(P, "encoder.pos.b"));
  }
  const std::vector<float> first_boxes(clip.boxes.begin(), clip.boxes.begin() + clip.k_max * 4);
  Mat slots = box_slots(first_boxes, clip.k_max, clip.slots, P);
  double total = 0.0;
  for (std::size_t t = 0; t < clip.frames; ++t) {
    const std::vector<std::uint8_t> frame(clip.rgb.begin() + t * H * W * 3,
                                          clip.rgb.begin() + (t + 1) * H * W * 3);
    const Mat feat = clip.trainable_backbone
                         ? trainable_mini(frame, H, W, p, P)
                         : frozen_projection(frame, H, W, p, get(P, "backbone.proj.w"), get(P, "backbone.proj.b"));
    const Mat g = column_mean(feat);
    const Mat tokens = clip.encoder_pos ? add(feat, enc_pos) : feat;
    slots = slot_attention(tokens, slots, P, t == 0 ? clip.first_iters : clip.later_iters).slots;
    const Decoded dec = clip.broadcast ? broadcast(slots, dec_pos, P)
                                       : attentional(slots, dec_pos, g, P, clip.use_global, clip.use_pos_residual);
    Mat target(H * W, 3);
    for (std::size_t i = 0; i < H * W * 3; ++i) target.v[i] = frame[i] / 255.0;
    total += mse(dec.recon, target);
  }
  return total / double(clip.frames);
}

// ---- container ---------------------------------------------------------------

namespace {

void put_bytes(std::vector<std::uint8_t>& out, const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  out.insert(out.end(), b, b + n);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t((v >> (8 * i)) & 0xff));
}

void put_f32s(std::vector<std::uint8_t>& out, const std::vector<float>& v) {
  for (float f : v) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { put_bytes(out, tag, 4); }

}  // namespace

std::vector<std::uint8_t> container_bytes(const RawClip& c) {
  std::vector<std::uint8_t> out;
  put_tag(out, "OCV1");
  put_u32(out, c.t);
  put_u32(out, c.h);
  put_u32(out, c.w);
  put_u32(out, c.k);
  put_tag(out, "RGB8");
  put_u64(out, c.rgb.size());
  put_bytes(out, c.rgb.data(), c.rgb.size());
  put_tag(out, "MASK");
  put_u64(out, c.mask.size());
  put_bytes(out, c.mask.data(), c.mask.size());
  put_tag(out, "BBOX");
  put_u64(out, c.boxes.size() * 4);
  put_f32s(out, c.boxes);
  if (!c.flow.empty()) {
    put_tag(out, "FLOW");
    put_u64(out, c.flow.size() * 4);
    put_f32s(out, c.flow);
  }
  if (!c.feat.empty()) {
    put_tag(out, "FEAT");
    put_u64(out, 12 + c.feat.size() * 4);
    put_u32(out, c.feat_h);
    put_u32(out, c.feat_w);
    put_u32(out, c.feat_d);
    put_f32s(out, c.feat);
  }
  if (!c.gemb.empty()) {
    put_tag(out, "GEMB");
    put_u64(out, 4 + c.gemb.size() * 4);
    put_u32(out, c.gemb_d);
    put_f32s(out, c.gemb);
  }
  return out;
}

// ---- finite differences ------------------------------------------------------

std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x, double h) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace oracle

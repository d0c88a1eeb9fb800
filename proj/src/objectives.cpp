#include "ocvl/objectives.hpp"

namespace ocvl {

double mse_loss(const Matrix& pred, const Matrix& target) {
  require_same_shape(pred, target, "mse_loss");
  if (pred.empty()) throw ShapeError("mse_loss of empty tensors");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data()[i] - target.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

Var mse_loss(Var pred, const Matrix& target) { return mse(pred, target); }

Matrix prepare_target(const VideoClip& clip, TargetKind kind, std::size_t frame, double flow_max) {
  if (frame >= clip.frames()) throw ArgumentError("frame index out of range");
  const std::size_t p = clip.pixels();
  switch (kind) {
    case TargetKind::rgb: {
      Matrix out(p, 3);
      const auto rgb = clip.frame_rgb(frame);
      for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = rgb[i] / 255.0;
      return out;
    }
    case TargetKind::flow: {
      if (!clip.flow) throw ConfigError("flow target requested but the clip has no FLOW section");
      Matrix out(p, 2);
      const auto flow = clip.frame_flow(frame);
      const double norm = flow_max > 0.0 ? flow_max : 1.0;
      for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = flow[i] / norm;
      return out;
    }
    case TargetKind::features: {
      if (!clip.features) {
        throw ConfigError("feature target requested but the clip has no FEAT section");
      }
      const FeatureBlock& f = *clip.features;
      Matrix out(std::size_t{f.height} * f.width, f.dim);
      const auto values = clip.frame_features(frame);
      for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = values[i];
      return out;
    }
  }
  throw ConfigError("unhandled target kind");
}

}  // namespace ocvl

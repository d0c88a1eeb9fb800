#pragma once

#include <cstddef>

#include "ocvl/autodiff.hpp"
#include "ocvl/decoders.hpp"
#include "ocvl/synth_data.hpp"

namespace ocvl {

/// Mean over all elements of the squared difference.
double mse_loss(const Matrix& pred, const Matrix& target);
Var mse_loss(Var pred, const Matrix& target);

/// Reconstruction target for one frame as a (positions x C) matrix.
///   rgb      -> pixels scaled to [0, 1], HW x 3
///   flow     -> displacement divided by the split-wide `flow_max`, HW x 2
///   features -> the stored FEAT slice, H'W' x D (the global embedding is not
///               part of the target)
/// Throws ConfigError when the clip lacks the requested channel.
Matrix prepare_target(const VideoClip& clip, TargetKind kind, std::size_t frame,
                      double flow_max = 1.0);

}  // namespace ocvl

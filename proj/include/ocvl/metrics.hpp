#pragma once

// Clustering agreement between predicted and ground-truth segmentations.
// Every point of a T x H x W volume is one sample; the same label at two
// different frames is the same cluster, so identity swaps over time cost score.

#include <cstdint>
#include <span>
#include <vector>

namespace ocvl {

struct SegmentationVolume {
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::int32_t> labels;  // T x H x W

  std::size_t size() const { return labels.size(); }
};

/// Adjusted Rand index from the contingency table over the points selected
/// by `point_mask` (all points when empty). Two single-cluster labelings
/// score 1.0. Throws UndefinedInputError when no point is selected.
double adjusted_rand_index(std::span<const std::int32_t> pred, std::span<const std::int32_t> truth,
                           std::span<const std::uint8_t> point_mask = {});
double adjusted_rand_index(const SegmentationVolume& pred, const SegmentationVolume& truth);

/// ARI over ground-truth foreground points (truth != 0); predictions are not
/// remapped.
double ari_foreground(const SegmentationVolume& pred, const SegmentationVolume& truth);

/// Arithmetic mean; throws ArgumentError when empty.
double aggregate_metric(std::span<const double> per_video);

}  // namespace ocvl

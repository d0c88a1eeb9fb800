#include "ocvl/metrics.hpp"

#include <unordered_map>

#include "ocvl/errors.hpp"

namespace ocvl {
namespace {

double pairs(std::int64_t n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

std::uint64_t cell_key(std::int32_t a, std::int32_t b) {
  return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

void check_volumes(const SegmentationVolume& pred, const SegmentationVolume& truth) {
  if (pred.frames != truth.frames || pred.height != truth.height || pred.width != truth.width ||
      pred.labels.size() != truth.labels.size()) {
    throw ShapeError("segmentation volumes differ in shape");
  }
}

}  // namespace

double adjusted_rand_index(std::span<const std::int32_t> pred, std::span<const std::int32_t> truth,
                           std::span<const std::uint8_t> point_mask) {
  if (pred.size() != truth.size()) throw ShapeError("ARI: label arrays differ in length");
  if (!point_mask.empty() && point_mask.size() != pred.size()) {
    throw ShapeError("ARI: point mask length differs from labels");
  }
  std::unordered_map<std::uint64_t, std::int64_t> cells;
  std::unordered_map<std::int32_t, std::int64_t> pred_sizes;
  std::unordered_map<std::int32_t, std::int64_t> truth_sizes;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!point_mask.empty() && point_mask[i] == 0) continue;
    ++cells[cell_key(pred[i], truth[i])];
    ++pred_sizes[pred[i]];
    ++truth_sizes[truth[i]];
    ++n;
  }
  if (n == 0) throw UndefinedInputError("ARI over zero points");

  double index = 0.0;
  for (const auto& [key, count] : cells) index += pairs(count);
  double sum_pred = 0.0;
  for (const auto& [label, count] : pred_sizes) sum_pred += pairs(count);
  double sum_truth = 0.0;
  for (const auto& [label, count] : truth_sizes) sum_truth += pairs(count);

  const double total = pairs(n);
  const double expected = total > 0.0 ? sum_pred * sum_truth / total : 0.0;
  const double max_index = 0.5 * (sum_pred + sum_truth);
  const double denom = max_index - expected;
  // A zero denominator only occurs for identical degenerate partitions
  // (both single-cluster, both all-singletons, or a single point).
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

double adjusted_rand_index(const SegmentationVolume& pred, const SegmentationVolume& truth) {
  check_volumes(pred, truth);
  return adjusted_rand_index(pred.labels, truth.labels);
}

double ari_foreground(const SegmentationVolume& pred, const SegmentationVolume& truth) {
  check_volumes(pred, truth);
  std::vector<std::uint8_t> fg(truth.labels.size());
  bool any = false;
  for (std::size_t i = 0; i < fg.size(); ++i) {
    fg[i] = truth.labels[i] != 0;
    any = any || fg[i];
  }
  if (!any) throw UndefinedInputError("ARI-FG on a video without foreground");
  return adjusted_rand_index(pred.labels, truth.labels, fg);
}

double aggregate_metric(std::span<const double> per_video) {
  if (per_video.empty()) throw ArgumentError("aggregate_metric of no videos");
  double s = 0.0;
  for (double v : per_video) s += v;
  return s / static_cast<double>(per_video.size());
}

}  // namespace ocvl

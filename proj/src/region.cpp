#include "focusdd/region.hpp"

#include <algorithm>

namespace focusdd {

void SelectorConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ValidationError("alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw ValidationError("eta must be a finite value >= 0, got " + std::to_string(eta));
  }
}

WindowDims window_dims(int rows, int cols, double alpha) {
  if (rows < 1 || cols < 1) throw DimensionError("window_dims on an empty grid");
  return {std::clamp(scaled_floor(alpha, rows), 1, rows),
          std::clamp(scaled_floor(alpha, cols), 1, cols)};
}

double area_score(const AttentionGrid& grid, double alpha, AreaMode mode) {
  const auto dims = window_dims(static_cast<int>(grid.scores.rows()),
                                static_cast<int>(grid.scores.cols()), alpha);
  const double sum = window_sum_argmax(grid.scores, dims).sum;
  return mode == AreaMode::kMean ? sum / (static_cast<double>(dims.height) * dims.width) : sum;
}

ScoredImage score_image(ImageId id, const ForwardResult& result, const SelectorConfig& config) {
  const auto& scores = result.attention.scores;
  ScoredImage out;
  out.image_id = id;
  out.window = window_dims(static_cast<int>(scores.rows()), static_cast<int>(scores.cols()),
                           config.alpha);
  const WindowMax best = window_sum_argmax(scores, out.window);
  out.center = best.center;
  out.area_score = config.area_mode == AreaMode::kMean
                       ? best.sum / (static_cast<double>(out.window.height) * out.window.width)
                       : best.sum;
  out.confidence = result.prediction.confidence();
  out.realism = realism_score(out.confidence, out.area_score, config.eta);
  return out;
}

std::vector<ScoredImage> rank_class(std::vector<ScoredImage> scored) {
  std::sort(scored.begin(), scored.end(), [](const ScoredImage& a, const ScoredImage& b) {
    if (a.realism != b.realism) return a.realism > b.realism;
    return a.image_id < b.image_id;
  });
  return scored;
}

}  // namespace focusdd

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "focusdd/error.hpp"
#include "focusdd/image.hpp"
#include "focusdd/vit.hpp"

namespace focusdd {

enum class AreaMode {
  kSum,   // raw window sum
  kMean,  // window sum divided by window cell count
};

struct SelectorConfig {
  double alpha = 0.8;
  double eta = 30.0;
  AreaMode area_mode = AreaMode::kSum;

  void validate() const;
};

struct GridCell {
  int row = 0;
  int col = 0;
  bool operator==(const GridCell&) const = default;
};

struct WindowDims {
  int height = 0;
  int width = 0;
  bool operator==(const WindowDims&) const = default;
};

struct WindowMax {
  GridCell center;
  GridCell top_left;
  double sum = 0.0;
};

struct ScoredImage {
  ImageId image_id = 0;
  double confidence = 0.0;
  double area_score = 0.0;
  double realism = 0.0;
  GridCell center;
  WindowDims window;
};

// floor(alpha * n) with a little slack so that decimal alphas like 0.29 * 100 land on 29.
inline int scaled_floor(double alpha, double n) {
  return static_cast<int>(std::floor(alpha * n + 1e-9));
}

/// h = max(1, floor(alpha * rows)), w = max(1, floor(alpha * cols)).
WindowDims window_dims(int rows, int cols, double alpha);

/// Maximal h x w window sum over all placements fully inside `grid`, via a summed-area
/// table accumulated in double. Ties keep the smallest (top row, left column). The
/// reported center is top_left + (h/2, w/2).
template <typename Derived>
WindowMax window_sum_argmax(const Eigen::MatrixBase<Derived>& grid, WindowDims window) {
  const auto rows = static_cast<int>(grid.rows());
  const auto cols = static_cast<int>(grid.cols());
  if (rows == 0 || cols == 0) throw DimensionError("window search on an empty grid");
  if (window.height < 1 || window.width < 1 || window.height > rows || window.width > cols) {
    throw DimensionError("window " + std::to_string(window.height) + "x" +
                         std::to_string(window.width) + " does not fit grid " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(rows + 1, cols + 1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      table(r + 1, c + 1) = static_cast<double>(grid.derived()(r, c)) + table(r, c + 1) +
                            table(r + 1, c) - table(r, c);
    }
  }
  WindowMax best;
  bool first = true;
  for (int top = 0; top + window.height <= rows; ++top) {
    for (int left = 0; left + window.width <= cols; ++left) {
      const int bottom = top + window.height;
      const int right = left + window.width;
      const double sum =
          table(bottom, right) - table(top, right) - table(bottom, left) + table(top, left);
      if (first || sum > best.sum) {
        first = false;
        best.sum = sum;
        best.top_left = {top, left};
      }
    }
  }
  best.center = {best.top_left.row + window.height / 2, best.top_left.col + window.width / 2};
  return best;
}

/// Highest attention region score with window_dims(grid, alpha).
double area_score(const AttentionGrid& grid, double alpha, AreaMode mode = AreaMode::kSum);

inline double realism_score(double confidence, double area, double eta) {
  return confidence + eta * area;
}

/// Joins one forward pass with its selection scores.
ScoredImage score_image(ImageId id, const ForwardResult& result, const SelectorConfig& config);

/// Realism descending, image_id ascending on ties.
std::vector<ScoredImage> rank_class(std::vector<ScoredImage> scored);

}  // namespace focusdd

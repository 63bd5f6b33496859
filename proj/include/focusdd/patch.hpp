#pragma once

#include "focusdd/image.hpp"
#include "focusdd/region.hpp"

namespace focusdd {

/// Box-filter (area-average) resampling to a size no larger than the input. Output
/// values are exact area means and are not quantized. Integer ratios take a fast path.
ImageTensor downsample(const ImageTensor& image, int out_height, int out_width);

/// Bilinear resampling with half-pixel centers, quantized on write:
///   s = max(0, (d + 0.5) * in / out - 0.5),  i0 = floor(s),  i1 = min(i0 + 1, in - 1),  f = s - i0
///   v = (1 - fy) * ((1 - fx) * p00 + fx * p01) + fy * ((1 - fx) * p10 + fx * p11)
/// evaluated in double, then quantize_pixel(v).
ImageTensor resize_bilinear(const ImageTensor& image, int out_height, int out_width);

/// Box filter when shrinking on both axes, otherwise bilinear; identity when sizes match.
ImageTensor resize(const ImageTensor& image, int out_height, int out_width);

/// Where an attention grid sits relative to the original image.
struct GridGeometry {
  int patch_size = 1;
  double scale_y = 1.0;  // original / downsampled height
  double scale_x = 1.0;
  int grid_rows = 1;
  int grid_cols = 1;
  int original_height = 1;
  int original_width = 1;
};

/// Maps a grid-cell center back to a key region in the original image. The mapped pixel is
/// (round((i + 0.5) P sy), round((j + 0.5) P sx)); the rect is centered there with sides
/// 2 floor(alpha H / 2) x 2 floor(alpha W / 2) (at least 1; the full image when alpha = 1)
/// and is translated, never shrunk, to fit inside the image.
PixelRect map_center_to_original(GridCell center, const GridGeometry& geometry, double alpha,
                                 ImageId source_image_id = 0);

/// Exact pixel copy of `rect`.
ImageTensor crop(const ImageTensor& image, const PixelRect& rect);

}  // namespace focusdd

#include "focusdd/patch.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace focusdd {
namespace {

struct Tap {
  int index;
  double weight;
};

// Area weights of every input sample overlapping output cell o, in units of 1/out.
std::vector<std::vector<Tap>> box_taps(int in, int out) {
  std::vector<std::vector<Tap>> taps(out);
  for (int o = 0; o < out; ++o) {
    const long start = static_cast<long>(o) * in;
    const long end = static_cast<long>(o + 1) * in;
    for (int i = static_cast<int>(start / out); i < in && static_cast<long>(i) * out < end; ++i) {
      const long lo = std::max(start, static_cast<long>(i) * out);
      const long hi = std::min(end, static_cast<long>(i + 1) * out);
      if (hi > lo) taps[o].push_back({i, static_cast<double>(hi - lo) / in});
    }
  }
  return taps;
}

struct LerpTap {
  int i0;
  int i1;
  double f;
};

std::vector<LerpTap> lerp_taps(int in, int out) {
  std::vector<LerpTap> taps(out);
  for (int d = 0; d < out; ++d) {
    const double s = std::max(0.0, (d + 0.5) * in / out - 0.5);
    const int i0 = std::min(static_cast<int>(std::floor(s)), in - 1);
    taps[d] = {i0, std::min(i0 + 1, in - 1), s - i0};
  }
  return taps;
}

}  // namespace

ImageTensor downsample(const ImageTensor& image, int out_height, int out_width) {
  if (out_height < 1 || out_width < 1 || out_height > image.height() ||
      out_width > image.width()) {
    throw DimensionError("downsample cannot map " + std::to_string(image.width()) + "x" +
                         std::to_string(image.height()) + " to " + std::to_string(out_width) +
                         "x" + std::to_string(out_height));
  }
  const int ch = image.channels();
  ImageTensor out(out_width, out_height, ch);

  if (image.height() % out_height == 0 && image.width() % out_width == 0) {
    const int ky = image.height() / out_height;
    const int kx = image.width() / out_width;
    const double norm = 1.0 / (static_cast<double>(ky) * kx);
    for (int y = 0; y < out_height; ++y) {
      for (int x = 0; x < out_width; ++x) {
        for (int c = 0; c < ch; ++c) {
          double sum = 0.0;
          for (int dy = 0; dy < ky; ++dy) {
            for (int dx = 0; dx < kx; ++dx) sum += image.at(y * ky + dy, x * kx + dx, c);
          }
          out.at(y, x, c) = static_cast<float>(sum * norm);
        }
      }
    }
    return out;
  }

  const auto rows = box_taps(image.height(), out_height);
  const auto cols = box_taps(image.width(), out_width);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      for (int c = 0; c < ch; ++c) {
        double sum = 0.0;
        for (const Tap& ty : rows[y]) {
          for (const Tap& tx : cols[x]) sum += ty.weight * tx.weight * image.at(ty.index, tx.index, c);
        }
        out.at(y, x, c) = static_cast<float>(sum);
      }
    }
  }
  return out;
}

ImageTensor resize_bilinear(const ImageTensor& image, int out_height, int out_width) {
  if (out_height < 1 || out_width < 1) throw DimensionError("resize to an empty image");
  const auto ys = lerp_taps(image.height(), out_height);
  const auto xs = lerp_taps(image.width(), out_width);
  ImageTensor out(out_width, out_height, image.channels());
  for (int y = 0; y < out_height; ++y) {
    const LerpTap& ty = ys[y];
    for (int x = 0; x < out_width; ++x) {
      const LerpTap& tx = xs[x];
      for (int c = 0; c < image.channels(); ++c) {
        const double p00 = image.at(ty.i0, tx.i0, c);
        const double p01 = image.at(ty.i0, tx.i1, c);
        const double p10 = image.at(ty.i1, tx.i0, c);
        const double p11 = image.at(ty.i1, tx.i1, c);
        const double v = (1.0 - ty.f) * ((1.0 - tx.f) * p00 + tx.f * p01) +
                         ty.f * ((1.0 - tx.f) * p10 + tx.f * p11);
        out.at(y, x, c) = quantize_pixel(v);
      }
    }
  }
  return out;
}

ImageTensor resize(const ImageTensor& image, int out_height, int out_width) {
  if (out_height == image.height() && out_width == image.width()) return image;
  if (out_height <= image.height() && out_width <= image.width()) {
    return downsample(image, out_height, out_width);
  }
  return resize_bilinear(image, out_height, out_width);
}

PixelRect map_center_to_original(GridCell center, const GridGeometry& g, double alpha,
                                 ImageId source_image_id) {
  if (center.row < 0 || center.col < 0 || center.row >= g.grid_rows || center.col >= g.grid_cols) {
    throw DimensionError("grid center (" + std::to_string(center.row) + ", " +
                         std::to_string(center.col) + ") outside " + std::to_string(g.grid_rows) +
                         "x" + std::to_string(g.grid_cols) + " grid");
  }
  auto place = [alpha](long mapped_center, int extent, int& origin, int& side) {
    if (alpha >= 1.0) {
      origin = 0;
      side = extent;
      return;
    }
    const int half = scaled_floor(alpha, extent / 2.0);
    side = std::max(1, 2 * half);
    const long start = mapped_center - half;
    origin = static_cast<int>(std::clamp(start, 0L, static_cast<long>(extent - side)));
  };

  const long cy = std::lround((center.row + 0.5) * g.patch_size * g.scale_y);
  const long cx = std::lround((center.col + 0.5) * g.patch_size * g.scale_x);
  PixelRect rect;
  rect.source_image_id = source_image_id;
  place(cy, g.original_height, rect.y0, rect.height);
  place(cx, g.original_width, rect.x0, rect.width);
  return rect;
}

ImageTensor crop(const ImageTensor& image, const PixelRect& rect) {
  if (!rect.inside(image.width(), image.height())) {
    throw DimensionError("crop rect (" + std::to_string(rect.x0) + ", " + std::to_string(rect.y0) +
                         ", " + std::to_string(rect.width) + "x" + std::to_string(rect.height) +
                         ") outside " + std::to_string(image.width()) + "x" +
                         std::to_string(image.height()) + " image");
  }
  ImageTensor out(rect.width, rect.height, image.channels());
  for (int y = 0; y < rect.height; ++y) {
    for (int x = 0; x < rect.width; ++x) {
      for (int c = 0; c < image.channels(); ++c) out.at(y, x, c) = image.at(rect.y0 + y, rect.x0 + x, c);
    }
  }
  return out;
}

}  // namespace focusdd

#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "focusdd/error.hpp"

namespace focusdd {

using ImageId = std::uint64_t;

/// H x W x Ch raster. Pixels are row-major and channel-interleaved, stored as
/// reals on the [0, 255] scale; decoded images hold integral values.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int width, int height, int channels, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return pixels_.size() == 0; }
  Eigen::Index size() const { return pixels_.size(); }

  float& at(int y, int x, int c) { return pixels_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return pixels_[index(y, x, c)]; }

  Eigen::ArrayXf& pixels() { return pixels_; }
  const Eigen::ArrayXf& pixels() const { return pixels_; }

  bool operator==(const ImageTensor& other) const;

 private:
  Eigen::Index index(int y, int x, int c) const {
    return (static_cast<Eigen::Index>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  Eigen::ArrayXf pixels_;
};

/// Axis-aligned pixel rectangle in a source image; (x0, y0) is the inclusive top-left.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
  ImageId source_image_id = 0;

  bool inside(int image_width, int image_height) const {
    return width >= 1 && height >= 1 && x0 >= 0 && y0 >= 0 && x0 + width <= image_width &&
           y0 + height <= image_height;
  }
  bool contains(int x, int y) const {
    return x >= x0 && x < x0 + width && y >= y0 && y < y0 + height;
  }
  bool operator==(const PixelRect&) const = default;
};

// Round half away from zero, clamped to [0, 255]. Every quantizing pixel write goes through here.
inline float quantize_pixel(double v) {
  if (!(v > 0.0)) return 0.0f;
  if (v >= 255.0) return 255.0f;
  return static_cast<float>(static_cast<long>(v + 0.5));
}

/// Gray -> RGB replicates; RGB -> gray takes the channel mean.
ImageTensor convert_channels(const ImageTensor& image, int channels);

/// Grayscale view: per-pixel channel mean as a height x width matrix.
Eigen::MatrixXd channel_mean_matrix(const ImageTensor& image);

}  // namespace focusdd

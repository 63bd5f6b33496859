#include "focusdd/image.hpp"

namespace focusdd {

ImageTensor::ImageTensor(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
    throw DimensionError("image must be at least 1x1 with 1 or 3 channels, got " +
                         std::to_string(width) + "x" + std::to_string(height) + "x" +
                         std::to_string(channels));
  }
  pixels_ = Eigen::ArrayXf::Constant(static_cast<Eigen::Index>(width) * height * channels, fill);
}

bool ImageTensor::operator==(const ImageTensor& other) const {
  return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_ &&
         (pixels_ == other.pixels_).all();
}

ImageTensor convert_channels(const ImageTensor& image, int channels) {
  if (image.channels() == channels) return image;
  ImageTensor out(image.width(), image.height(), channels);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (channels == 3) {
        const float v = image.at(y, x, 0);
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = v;
      } else {
        const double sum = double(image.at(y, x, 0)) + image.at(y, x, 1) + image.at(y, x, 2);
        out.at(y, x, 0) = static_cast<float>(sum / 3.0);
      }
    }
  }
  return out;
}

Eigen::MatrixXd channel_mean_matrix(const ImageTensor& image) {
  Eigen::MatrixXd gray(image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double sum = 0.0;
      for (int c = 0; c < image.channels(); ++c) sum += image.at(y, x, c);
      gray(y, x) = sum / image.channels();
    }
  }
  return gray;
}

}  // namespace focusdd

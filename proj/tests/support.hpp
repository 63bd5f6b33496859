#pragma once

// Test-only helpers and oracles. Nothing here calls the code path it checks.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Core>

#include "focusdd/image.hpp"
#include "focusdd/patch.hpp"
#include "focusdd/rng.hpp"

namespace focusdd::test {

// Uniform grid values on a 2^-24 lattice so that every window sum is exact in double.
inline Eigen::MatrixXf lattice_grid(std::mt19937_64& gen, int rows, int cols) {
  Eigen::MatrixXf g(rows, cols);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = static_cast<float>(gen() >> 40) * 0x1.0p-24f;
  return g;
}

struct BruteWindow {
  int top = 0;
  int left = 0;
  double sum = 0.0;
};

// O(n^4) scan over every placement; first strict maximum in (top, left) order wins.
inline BruteWindow brute_force_window(const Eigen::MatrixXf& grid, int h, int w) {
  BruteWindow best{0, 0, -1.0};
  for (int r = 0; r + h <= grid.rows(); ++r) {
    for (int c = 0; c + w <= grid.cols(); ++c) {
      double s = 0.0;
      for (int p = 0; p < h; ++p) {
        for (int q = 0; q < w; ++q) s += grid(r + p, c + q);
      }
      if (s > best.sum) best = {r, c, s};
    }
  }
  return best;
}

inline ImageTensor random_image(std::mt19937_64& gen, int width, int height, int channels) {
  ImageTensor img(width, height, channels);
  std::uniform_int_distribution<int> px(0, 255);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.pixels()[i] = static_cast<float>(px(gen));
  return img;
}

// Independent transcription of the documented bilinear rule.
inline ImageTensor reference_bilinear(const ImageTensor& src, int out_h, int out_w) {
  ImageTensor out(out_w, out_h, src.channels());
  for (int y = 0; y < out_h; ++y) {
    double sy = (y + 0.5) * src.height() / out_h - 0.5;
    if (sy < 0.0) sy = 0.0;
    int y0 = static_cast<int>(std::floor(sy));
    if (y0 > src.height() - 1) y0 = src.height() - 1;
    const int y1 = y0 + 1 < src.height() ? y0 + 1 : src.height() - 1;
    const double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      double sx = (x + 0.5) * src.width() / out_w - 0.5;
      if (sx < 0.0) sx = 0.0;
      int x0 = static_cast<int>(std::floor(sx));
      if (x0 > src.width() - 1) x0 = src.width() - 1;
      const int x1 = x0 + 1 < src.width() ? x0 + 1 : src.width() - 1;
      const double fx = sx - x0;
      for (int c = 0; c < src.channels(); ++c) {
        const double v = (1.0 - fy) * ((1.0 - fx) * src.at(y0, x0, c) + fx * src.at(y0, x1, c)) +
                         fy * ((1.0 - fx) * src.at(y1, x0, c) + fx * src.at(y1, x1, c));
        double r = std::floor(v + 0.5);
        if (r < 0) r = 0;
        if (r > 255) r = 255;
        out.at(y, x, c) = static_cast<float>(r);
      }
    }
  }
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("focusdd_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// 64x64 noisy gray scene with one bright disc; returns the disc center.
struct PlantedImage {
  ImageTensor image;
  int center_x = 0;
  int center_y = 0;
};

inline PlantedImage planted_blob_image(std::mt19937_64& gen, int size = 64, int radius = 5) {
  PlantedImage out{ImageTensor(size, size, 3), 0, 0};
  std::normal_distribution<double> noise(100.0, 12.0);
  std::uniform_int_distribution<int> where(radius, size - 1 - radius);
  out.center_x = where(gen);
  out.center_y = where(gen);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool in_blob = (x - out.center_x) * (x - out.center_x) + (y - out.center_y) * (y - out.center_y) <=
                           radius * radius;
      const double base = in_blob ? 240.0 : noise(gen);
      for (int c = 0; c < 3; ++c) out.image.at(y, x, c) = quantize_pixel(base);
    }
  }
  return out;
}

}  // namespace focusdd::test

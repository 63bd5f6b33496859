#include "focusdd/analyzer.hpp"

#include <cmath>
#include <numbers>

namespace focusdd {

void EssParams::validate() const {
  if (!(d_prime >= 0.0) || !(m >= 0.0) || !(n >= 0.0)) {
    throw ValidationError("ess: |D'|, m and n must be >= 0");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0) || !(beta >= 0.0 && beta <= 1.0)) {
    throw ValidationError("ess: gamma and beta must lie in [0, 1]");
  }
}

double ess(const EssParams& p) { return p.d_prime * (p.m * p.gamma + p.n * p.beta); }

SnrEstimate laplacian_snr(const ImageTensor& image, NoiseKernel kernel) {
  if (image.width() < 3 || image.height() < 3) {
    throw DimensionError("SNR needs an image of at least 3x3 pixels");
  }
  const Eigen::MatrixXd g = channel_mean_matrix(image);
  const Eigen::Index rows = g.rows() - 2;
  const Eigen::Index cols = g.cols() - 2;

  Eigen::MatrixXd response;
  double norm = 0.0;
  if (kernel == NoiseKernel::kLaplacian) {
    response = g.block(0, 1, rows, cols) + g.block(2, 1, rows, cols) + g.block(1, 0, rows, cols) +
               g.block(1, 2, rows, cols) - 4.0 * g.block(1, 1, rows, cols);
    norm = std::sqrt(20.0);
  } else {
    response = g.block(0, 0, rows, cols) + g.block(0, 2, rows, cols) + g.block(2, 0, rows, cols) +
               g.block(2, 2, rows, cols) -
               2.0 * (g.block(0, 1, rows, cols) + g.block(2, 1, rows, cols) + g.block(1, 0, rows, cols) +
                      g.block(1, 2, rows, cols)) +
               4.0 * g.block(1, 1, rows, cols);
    norm = 6.0;
  }

  SnrEstimate out;
  out.signal_mean = g.mean();
  out.noise_sigma = std::sqrt(std::numbers::pi / 2.0) * response.cwiseAbs().mean() / norm;
  if (!(out.noise_sigma > 0.0)) throw InfiniteSnrError("image has no high-frequency response (infinite SNR)");
  out.snr_db = 20.0 * std::log10(out.signal_mean / out.noise_sigma);
  return out;
}

SnrReport snr_distribution(const std::vector<NamedImage>& images, NoiseKernel kernel) {
  if (images.empty()) throw ValidationError("SNR distribution of an empty image set");
  SnrReport report;
  report.kernel = kernel;
  for (const auto& item : images) {
    try {
      report.per_image.push_back({item.name, laplacian_snr(item.image, kernel)});
    } catch (const InfiniteSnrError&) {
      report.constant_images.push_back(item.name);
    }
  }
  if (report.per_image.empty()) throw InfiniteSnrError("every image in the set is constant");

  double lo = report.per_image.front().estimate.snr_db;
  double hi = lo;
  double sum = 0.0;
  for (const auto& e : report.per_image) {
    lo = std::min(lo, e.estimate.snr_db);
    hi = std::max(hi, e.estimate.snr_db);
    sum += e.estimate.snr_db;
  }
  report.mean_snr_db = sum / static_cast<double>(report.per_image.size());
  report.counts.assign(kSnrBins, 0);
  for (int b = 0; b <= kSnrBins; ++b) report.bin_edges.push_back(lo + (hi - lo) * b / kSnrBins);
  for (const auto& e : report.per_image) {
    int bin = 0;
    if (hi > lo) bin = std::min(kSnrBins - 1, static_cast<int>(std::floor(kSnrBins * (e.estimate.snr_db - lo) / (hi - lo))));
    report.counts[static_cast<std::size_t>(bin)] += 1;
  }
  return report;
}

nlohmann::ordered_json snr_report_json(const SnrReport& report) {
  nlohmann::ordered_json per_image = nlohmann::ordered_json::array();
  for (const auto& e : report.per_image) {
    per_image.push_back({{"image", e.name},
                         {"signal_mean", e.estimate.signal_mean},
                         {"noise_sigma", e.estimate.noise_sigma},
                         {"snr_db", e.estimate.snr_db}});
  }
  return {{"estimator", report.kernel == NoiseKernel::kLaplacian ? "laplacian-3x3" : "immerkaer-3x3"},
          {"kernel", report.kernel == NoiseKernel::kLaplacian ? "laplacian" : "immerkaer"},
          {"unit", "dB"},
          {"mean_snr_db", report.mean_snr_db},
          {"per_image", per_image},
          {"histogram", {{"bin_edges", report.bin_edges}, {"counts", report.counts}}},
          {"constant_images", report.constant_images}};
}

}  // namespace focusdd

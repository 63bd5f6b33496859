#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "focusdd/error.hpp"
#include "focusdd/image.hpp"

namespace focusdd {

struct EssParams {
  double d_prime = 0.0;  // |D'|
  double m = 0.0;
  double n = 0.0;
  double gamma = 1.0;
  double beta = 1.0;

  void validate() const;
};

/// |D'_eff| = |D'| (m gamma + n beta).
double ess(const EssParams& p);

/// Raised when the high-pass response is identically zero.
class InfiniteSnrError : public Error {
 public:
  using Error::Error;
};

enum class NoiseKernel {
  // [[0,1,0],[1,-4,1],[0,1,0]], ||L||_2 = sqrt(20)
  kLaplacian,
  // Immerkaer's [[1,-2,1],[-2,4,-2],[1,-2,1]], ||N||_2 = 6
  kImmerkaer,
};

struct SnrEstimate {
  double signal_mean = 0.0;
  double noise_sigma = 0.0;
  double snr_db = 0.0;
};

/// Fast noise estimate on the channel-mean gray image. With r the valid-mode response
/// of the kernel over the (W-2)(H-2) interior,
///   sigma = sqrt(pi/2) * mean|r| / ||kernel||_2,   snr_db = 20 log10(mean pixel / sigma).
/// The kernel norm makes sigma unbiased for i.i.d. Gaussian noise on a smooth image.
SnrEstimate laplacian_snr(const ImageTensor& image, NoiseKernel kernel = NoiseKernel::kLaplacian);

struct SnrReport {
  struct Entry {
    std::string name;
    SnrEstimate estimate;
  };
  std::vector<Entry> per_image;
  std::vector<std::string> constant_images;
  std::vector<double> bin_edges;  // 33 edges over [min, max]
  std::vector<std::size_t> counts;  // 32 bins
  double mean_snr_db = 0.0;
  NoiseKernel kernel = NoiseKernel::kLaplacian;
};

struct NamedImage {
  std::string name;
  ImageTensor image;
};

inline constexpr int kSnrBins = 32;

/// Per-image SNR, constant images set aside, and a 32-bin histogram over [min, max]
/// (value v goes to bin min(31, floor(32 (v - min) / (max - min))); all into bin 0 when
/// max == min).
SnrReport snr_distribution(const std::vector<NamedImage>& images, NoiseKernel kernel = NoiseKernel::kLaplacian);

nlohmann::ordered_json snr_report_json(const SnrReport& report);

}  // namespace focusdd

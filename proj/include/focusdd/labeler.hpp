#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "focusdd/composer.hpp"
#include "focusdd/manifest.hpp"
#include "focusdd/rng.hpp"
#include "focusdd/vit.hpp"

namespace focusdd {

struct RegionSoftLabel {
  PixelRect region;
  Eigen::VectorXf label;
};

/// Crops every region from `composite`, resizes it to the teacher input and stores the
/// softmax of the teacher logits.
std::vector<RegionSoftLabel> relabel(const AttentionProvider& teacher, const ImageTensor& composite,
                                     std::span<const PixelRect> regions);

/// Provenance cells of a distilled image, the default relabel regions.
std::vector<PixelRect> cell_regions(const DistilledImage& image);

/// `count` square-ish crops with sides uniform in [min_scale, max_scale] of each axis,
/// placed uniformly inside a width x height composite.
std::vector<PixelRect> random_regions(int width, int height, int count, double min_scale,
                                      double max_scale, KeyedRng& rng);

/// L = -sum_r sum_c labels(r, c) * log(max(softmax(logits.row(r))_c, 1e-12)).
template <typename DerivedA, typename DerivedB>
double soft_ce_loss(const Eigen::MatrixBase<DerivedA>& logits, const Eigen::MatrixBase<DerivedB>& labels) {
  if (logits.rows() != labels.rows() || logits.cols() != labels.cols()) {
    throw DimensionError("soft_ce_loss: logits and labels differ in shape");
  }
  double loss = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Eigen::VectorXd p = softmax(logits.row(r).transpose().template cast<double>());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      loss -= static_cast<double>(labels(r, c)) * std::log(std::max(p[c], 1e-12));
    }
  }
  return loss;
}

/// dL/dlogits = softmax(logits) * sum_c(labels) - labels, row by row (the clamp is ignored).
template <typename DerivedA, typename DerivedB>
Eigen::MatrixXd soft_ce_gradient(const Eigen::MatrixBase<DerivedA>& logits,
                                 const Eigen::MatrixBase<DerivedB>& labels) {
  if (logits.rows() != labels.rows() || logits.cols() != labels.cols()) {
    throw DimensionError("soft_ce_gradient: logits and labels differ in shape");
  }
  Eigen::MatrixXd grad(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Eigen::VectorXd p = softmax(logits.row(r).transpose().template cast<double>());
    const Eigen::RowVectorXd y = labels.row(r).template cast<double>();
    grad.row(r) = p.transpose() * y.sum() - y;
  }
  return grad;
}

struct DftManifest {
  int epoch = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<ImageId>> per_class;  // indexed by class_id, draw order
};

/// Per class, min(ipc, |class|) ids drawn without replacement from
/// KeyedRng(seed, Stream::kDftSample, {epoch, class_id}).
DftManifest dft_sample(const DatasetManifest& manifest, int ipc, std::uint64_t seed, int epoch);

/// {"class_id", "image_id"} per line, class order then draw order.
std::string dft_to_jsonl(const DftManifest& dft);

struct RelabelOptions {
  int random_crops = 0;  // 0: use the provenance cells
  double min_scale = 0.25;
  double max_scale = 0.5;
  std::uint64_t seed = 0;
};

/// Reads out_dir/provenance.jsonl and the composites it names, writes out_dir/labels.jsonl:
/// {"image": path, "regions": [{"x", "y", "w", "h", "label": [f32 x C]}]} per composite.
std::size_t relabel_directory(const std::filesystem::path& distilled_dir, const AttentionProvider& teacher,
                              const RelabelOptions& options, unsigned workers);

}  // namespace focusdd

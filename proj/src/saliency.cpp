#include "focusdd/saliency.hpp"

namespace focusdd {

SaliencyProvider::SaliencyProvider(ModelConfig config) : config_(config) { config_.validate(); }

ForwardResult SaliencyProvider::evaluate(const ImageTensor& image, bool /*keep_attention*/) const {
  if (image.height() != config_.input_height || image.width() != config_.input_width) {
    throw DimensionError("saliency provider expects " + std::to_string(config_.input_width) +
                         "x" + std::to_string(config_.input_height) + " input");
  }
  const Eigen::MatrixXd gray = channel_mean_matrix(image);
  const double global = gray.mean();
  const int P = config_.patch_size;
  Eigen::MatrixXd contrast(config_.grid_rows(), config_.grid_cols());
  for (int r = 0; r < contrast.rows(); ++r) {
    for (int c = 0; c < contrast.cols(); ++c) {
      contrast(r, c) = std::abs(gray.block(r * P, c * P, P, P).mean() - global);
    }
  }
  const double total = contrast.sum();
  if (total > 0.0) {
    contrast /= total;
  } else {
    contrast.setConstant(1.0 / static_cast<double>(contrast.size()));
  }

  ForwardResult result;
  result.prediction.logits = Eigen::VectorXf::Zero(config_.num_classes);
  result.attention.scores = contrast.cast<float>();
  return result;
}

}  // namespace focusdd

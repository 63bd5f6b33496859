#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "focusdd/error.hpp"
#include "focusdd/image.hpp"

namespace focusdd {

/// Hyper-parameters of the toy ViT. `attention_block` selects which block's
/// attention feeds the saliency grid; negative values count from the end (-1 = last).
struct ModelConfig {
  int depth = 1;
  int heads = 1;
  int embed_dim = 16;
  int patch_size = 8;
  int num_classes = 10;
  int input_height = 32;
  int input_width = 32;
  int channels = 3;
  int attention_block = -1;

  int grid_rows() const { return input_height / patch_size; }
  int grid_cols() const { return input_width / patch_size; }
  int num_patches() const { return grid_rows() * grid_cols(); }
  int token_dim() const { return patch_size * patch_size * channels; }
  int head_dim() const { return embed_dim / heads; }
  int mlp_dim() const { return 4 * embed_dim; }
  int resolved_attention_block() const {
    return attention_block < 0 ? depth + attention_block : attention_block;
  }

  /// Throws ValidationError on any broken invariant.
  void validate() const;

  std::map<std::string, std::string> to_metadata() const;
  static ModelConfig from_metadata(const std::map<std::string, std::string>& metadata);

  bool operator==(const ModelConfig&) const = default;
};

/// Dense f32 tensor with an explicit shape; values are row-major.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;

  std::int64_t element_count() const;
  bool operator==(const Tensor&) const = default;
};

/// Named-tensor bundle plus free-form string metadata (the model config travels there).
struct ModelWeights {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> metadata;

  bool operator==(const ModelWeights&) const = default;
};

struct PredictionDistribution {
  Eigen::VectorXf logits;

  Eigen::VectorXf probabilities() const;
  /// Max softmax probability.
  float confidence() const;
  Eigen::Index argmax() const;
};

struct AttentionGrid {
  Eigen::MatrixXf scores;
  ImageId source_image_id = 0;
};

struct ForwardResult {
  PredictionDistribution prediction;
  AttentionGrid attention;
  /// Per-head (K+1)x(K+1) attention of the selected block; filled only on request.
  std::vector<Eigen::MatrixXf> head_attention;
};

/// Numerically stable softmax: max-subtracted, normaliser accumulated in double.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.size() == 0) throw DimensionError("softmax of an empty vector");
  const Scalar peak = v.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(v.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[i] = static_cast<Scalar>(std::exp(static_cast<double>(v.derived()(i) - peak)));
    total += static_cast<double>(out[i]);
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[i] = static_cast<Scalar>(static_cast<double>(out[i]) / total);
  }
  return out;
}

/// Splits an image into K = (H/P)(W/P) non-overlapping P x P patches. Row k of the
/// result is patch k (row-major patch order), flattened as (py, px, channel).
Eigen::MatrixXf patchify(const ImageTensor& image, int patch_size);

/// Anything that turns a model-resolution image into (logits, attention grid).
class AttentionProvider {
 public:
  virtual ~AttentionProvider() = default;
  virtual const ModelConfig& config() const = 0;
  virtual ForwardResult evaluate(const ImageTensor& image, bool keep_attention = false) const = 0;
};

/// Pre-norm DeiT-style encoder: GELU MLP (ratio 4), no dropout, class token only.
/// Immutable after construction; evaluate() may be called concurrently.
class VisionTransformer final : public AttentionProvider {
 public:
  VisionTransformer(ModelConfig config, const ModelWeights& weights);

  const ModelConfig& config() const override { return config_; }
  ForwardResult evaluate(const ImageTensor& image, bool keep_attention = false) const override;

 private:
  struct Linear {
    Eigen::MatrixXf weight;  // out x in
    Eigen::RowVectorXf bias;
    Eigen::MatrixXf operator()(const Eigen::MatrixXf& x) const;
  };
  struct LayerNorm {
    Eigen::RowVectorXf scale;
    Eigen::RowVectorXf shift;
    Eigen::MatrixXf operator()(const Eigen::MatrixXf& x) const;
  };
  struct Block {
    LayerNorm norm1, norm2;
    Linear q, k, v, proj, fc1, fc2;
  };

  ModelConfig config_;
  Linear patch_embed_;
  Eigen::RowVectorXf cls_token_;
  Eigen::MatrixXf pos_embed_;
  std::vector<Block> blocks_;
  LayerNorm norm_;
  Linear head_;
};

/// Convenience wrapper: builds the transformer and runs one forward pass.
ForwardResult forward(const ModelWeights& weights, const ModelConfig& config,
                      const ImageTensor& image);

}  // namespace focusdd

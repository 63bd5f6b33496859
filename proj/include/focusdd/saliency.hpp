#pragma once

#include "focusdd/vit.hpp"

namespace focusdd {

/// Model-free attention provider. Each patch scores its absolute contrast against the
/// image mean, |mean(patch) - mean(image)|, and the grid is normalised to sum 1
/// (uniform when the image is flat). Logits are all zero, so confidence is 1/C.
/// Used for planted-object fixtures and for running the pipeline without weights.
class SaliencyProvider final : public AttentionProvider {
 public:
  explicit SaliencyProvider(ModelConfig config);

  const ModelConfig& config() const override { return config_; }
  ForwardResult evaluate(const ImageTensor& image, bool keep_attention = false) const override;

 private:
  ModelConfig config_;
};

}  // namespace focusdd

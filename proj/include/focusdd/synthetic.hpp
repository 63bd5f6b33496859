#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "focusdd/vit.hpp"

namespace focusdd {

/// FNV-1a over the bytes of `text`; keys per-tensor weight streams.
std::uint64_t fnv1a64(std::string_view text);

/// Deterministic weights for `config`. Every tensor draws from
/// KeyedRng(seed, Stream::kSyntheticWeights, {fnv1a64(name)}) with u = 2*uniform()-1:
///   linear weights  u * gain / sqrt(fan_in)   (gain 2 for q/k, 1 otherwise)
///   linear biases   0.05 u
///   norm scales     1 + 0.1 u,  norm shifts 0.05 u
///   cls_token, pos_embed  0.5 u
/// The config is recorded in the metadata.
ModelWeights synthetic_weights(const ModelConfig& config, std::uint64_t seed);

/// Hand-built one-block teacher whose prediction is the bucket of the mean input
/// intensity (in [0, 1]) relative to the ascending `thresholds`: class c means exactly c
/// thresholds lie below the intensity. Requires num_classes == thresholds.size() + 1 and
/// embed_dim >= 2 * thresholds.size().
ModelWeights intensity_bucket_teacher(const ModelConfig& config, const std::vector<float>& thresholds);

/// value(y, x, c) = (4x + 2y + 40c) mod 256, used as a fixed non-trivial test input.
ImageTensor gradient_ramp(int width, int height, int channels);

}  // namespace focusdd

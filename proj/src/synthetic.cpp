#include "focusdd/synthetic.hpp"

#include <cmath>
#include <functional>

#include "focusdd/rng.hpp"

namespace focusdd {
namespace {

using Fill = std::function<float(std::int64_t index, double u)>;

void add(ModelWeights& w, std::uint64_t seed, const std::string& name,
         std::vector<std::int64_t> shape, const Fill& fill) {
  Tensor t{std::move(shape), {}};
  const auto n = t.element_count();
  t.values.resize(static_cast<std::size_t>(n));
  KeyedRng rng(seed, Stream::kSyntheticWeights, {fnv1a64(name)});
  for (std::int64_t i = 0; i < n; ++i) {
    t.values[static_cast<std::size_t>(i)] = fill(i, 2.0 * rng.uniform() - 1.0);
  }
  w.tensors.emplace(name, std::move(t));
}

Fill scaled(double s) {
  return [s](std::int64_t, double u) { return static_cast<float>(s * u); };
}

Fill constant(float v) {
  return [v](std::int64_t, double) { return v; };
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001B3ull;
  }
  return h;
}

ModelWeights synthetic_weights(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelWeights w;
  w.metadata = config.to_metadata();
  const std::int64_t d = config.embed_dim;
  const std::int64_t hidden = config.mlp_dim();

  auto linear = [&](const std::string& prefix, std::int64_t out, std::int64_t in, double gain) {
    add(w, seed, prefix + ".weight", {out, in}, scaled(gain / std::sqrt(static_cast<double>(in))));
    add(w, seed, prefix + ".bias", {out}, scaled(0.05));
  };
  auto norm = [&](const std::string& prefix) {
    add(w, seed, prefix + ".weight", {d},
        [](std::int64_t, double u) { return static_cast<float>(1.0 + 0.1 * u); });
    add(w, seed, prefix + ".bias", {d}, scaled(0.05));
  };

  linear("patch_embed", d, config.token_dim(), 1.0);
  add(w, seed, "cls_token", {d}, scaled(0.5));
  add(w, seed, "pos_embed", {config.num_patches() + 1, d}, scaled(0.5));
  for (int b = 0; b < config.depth; ++b) {
    const std::string p = "blocks." + std::to_string(b);
    norm(p + ".norm1");
    linear(p + ".attn.q", d, d, 2.0);
    linear(p + ".attn.k", d, d, 2.0);
    linear(p + ".attn.v", d, d, 1.0);
    linear(p + ".attn.proj", d, d, 1.0);
    norm(p + ".norm2");
    linear(p + ".mlp.fc1", hidden, d, 1.0);
    linear(p + ".mlp.fc2", d, hidden, 1.0);
  }
  norm("norm");
  linear("head", config.num_classes, d, 1.0);
  return w;
}

ModelWeights intensity_bucket_teacher(const ModelConfig& config,
                                      const std::vector<float>& thresholds) {
  config.validate();
  const auto T = static_cast<std::int64_t>(thresholds.size());
  if (config.num_classes != T + 1 || config.embed_dim < 2 * T) {
    throw ValidationError("intensity teacher needs num_classes = thresholds + 1 and embed_dim >= 2 * thresholds");
  }
  ModelWeights w;
  w.metadata = config.to_metadata();
  const std::int64_t d = config.embed_dim;
  const std::int64_t td = config.token_dim();
  const std::int64_t hidden = config.mlp_dim();
  constexpr float kHeadGain = 5.0f;

  // Patch token dims (2t, 2t+1) = +-(mean intensity - threshold_t). Layer norm rescales
  // but keeps the signs, and uniform attention carries the mean onto the class token.
  add(w, 0, "patch_embed.weight", {d, td}, [&](std::int64_t i, double) {
    const auto row = i / td;
    if (row >= 2 * T) return 0.0f;
    const float v = 1.0f / static_cast<float>(td);
    return row % 2 == 0 ? v : -v;
  });
  add(w, 0, "patch_embed.bias", {d}, [&](std::int64_t i, double) {
    if (i >= 2 * T) return 0.0f;
    const float t = thresholds[static_cast<std::size_t>(i / 2)];
    return i % 2 == 0 ? -t : t;
  });
  add(w, 0, "cls_token", {d}, constant(0.0f));
  add(w, 0, "pos_embed", {config.num_patches() + 1, d}, constant(0.0f));

  auto identity_on_signal = [&](std::int64_t i, double) {
    const auto r = i / d;
    const auto c = i % d;
    return (r == c && r < 2 * T) ? 1.0f : 0.0f;
  };
  for (int b = 0; b < config.depth; ++b) {
    const std::string p = "blocks." + std::to_string(b);
    add(w, 0, p + ".norm1.weight", {d}, constant(1.0f));
    add(w, 0, p + ".norm1.bias", {d}, constant(0.0f));
    for (const char* name : {".attn.q", ".attn.k"}) {
      add(w, 0, p + name + ".weight", {d, d}, constant(0.0f));
      add(w, 0, p + name + ".bias", {d}, constant(0.0f));
    }
    for (const char* name : {".attn.v", ".attn.proj"}) {
      add(w, 0, p + name + ".weight", {d, d}, identity_on_signal);
      add(w, 0, p + name + ".bias", {d}, constant(0.0f));
    }
    add(w, 0, p + ".norm2.weight", {d}, constant(1.0f));
    add(w, 0, p + ".norm2.bias", {d}, constant(0.0f));
    add(w, 0, p + ".mlp.fc1.weight", {hidden, d}, constant(0.0f));
    add(w, 0, p + ".mlp.fc1.bias", {hidden}, constant(0.0f));
    add(w, 0, p + ".mlp.fc2.weight", {d, hidden}, constant(0.0f));
    add(w, 0, p + ".mlp.fc2.bias", {d}, constant(0.0f));
  }
  add(w, 0, "norm.weight", {d}, constant(1.0f));
  add(w, 0, "norm.bias", {d}, constant(0.0f));
  add(w, 0, "head.weight", {config.num_classes, d}, [&](std::int64_t i, double) {
    const auto cls = i / d;
    const auto col = i % d;
    if (col >= 2 * T || col % 2 != 0) return 0.0f;
    return (col / 2 < cls) ? kHeadGain : -kHeadGain;
  });
  add(w, 0, "head.bias", {config.num_classes}, constant(0.0f));
  return w;
}

ImageTensor gradient_ramp(int width, int height, int channels) {
  ImageTensor img(width, height, channels);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        img.at(y, x, c) = static_cast<float>((4 * x + 2 * y + 40 * c) % 256);
      }
    }
  }
  return img;
}

}  // namespace focusdd

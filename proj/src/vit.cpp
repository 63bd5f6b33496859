#include "focusdd/vit.hpp"

#include <cmath>

namespace focusdd {
namespace {

constexpr double kLayerNormEps = 1e-6;

std::string shape_string(const std::vector<std::int64_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

const Tensor& require(const ModelWeights& weights, const std::string& name,
                      std::vector<std::int64_t> shape) {
  auto it = weights.tensors.find(name);
  if (it == weights.tensors.end()) throw DimensionError("missing tensor '" + name + "'");
  const Tensor& t = it->second;
  if (t.shape != shape) {
    throw DimensionError("tensor '" + name + "' has shape " + shape_string(t.shape) +
                         ", config expects " + shape_string(shape));
  }
  if (static_cast<std::int64_t>(t.values.size()) != t.element_count()) {
    throw DimensionError("tensor '" + name + "' value count does not match its shape");
  }
  for (float v : t.values) {
    if (!std::isfinite(v)) throw DimensionError("tensor '" + name + "' has non-finite values");
  }
  return t;
}

Eigen::MatrixXf as_matrix(const Tensor& t) {
  const auto rows = t.shape.size() == 1 ? 1 : t.shape[0];
  const auto cols = t.shape.back();
  return Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      t.values.data(), rows, cols);
}

Eigen::RowVectorXf as_row(const Tensor& t) {
  return Eigen::Map<const Eigen::RowVectorXf>(t.values.data(), t.element_count());
}

float gelu(float x) {
  return static_cast<float>(0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))));
}

int parse_int(const std::map<std::string, std::string>& metadata, const std::string& key) {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw FormatError("weights metadata lacks '" + key + "'");
  try {
    std::size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw FormatError("weights metadata '" + key + "' is not an integer: " + it->second);
  }
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("model config: " + what); };
  if (depth < 1 || heads < 1 || embed_dim < 1 || patch_size < 1 || num_classes < 1 ||
      input_height < 1 || input_width < 1) {
    fail("all counts must be >= 1");
  }
  if (channels != 1 && channels != 3) fail("channels must be 1 or 3");
  if (embed_dim % heads != 0) fail("embed_dim must be divisible by heads");
  if (input_height % patch_size != 0 || input_width % patch_size != 0) {
    fail("input dimensions must be divisible by patch_size");
  }
  const int block = resolved_attention_block();
  if (block < 0 || block >= depth) fail("attention_block out of range");
}

std::map<std::string, std::string> ModelConfig::to_metadata() const {
  return {
      {"attention_block", std::to_string(attention_block)},
      {"channels", std::to_string(channels)},
      {"depth", std::to_string(depth)},
      {"embed_dim", std::to_string(embed_dim)},
      {"heads", std::to_string(heads)},
      {"input_height", std::to_string(input_height)},
      {"input_width", std::to_string(input_width)},
      {"num_classes", std::to_string(num_classes)},
      {"patch_size", std::to_string(patch_size)},
  };
}

ModelConfig ModelConfig::from_metadata(const std::map<std::string, std::string>& metadata) {
  ModelConfig cfg;
  cfg.depth = parse_int(metadata, "depth");
  cfg.heads = parse_int(metadata, "heads");
  cfg.embed_dim = parse_int(metadata, "embed_dim");
  cfg.patch_size = parse_int(metadata, "patch_size");
  cfg.num_classes = parse_int(metadata, "num_classes");
  cfg.input_height = parse_int(metadata, "input_height");
  cfg.input_width = parse_int(metadata, "input_width");
  cfg.channels = parse_int(metadata, "channels");
  if (metadata.count("attention_block")) cfg.attention_block = parse_int(metadata, "attention_block");
  cfg.validate();
  return cfg;
}

std::int64_t Tensor::element_count() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Eigen::VectorXf PredictionDistribution::probabilities() const { return softmax(logits); }

float PredictionDistribution::confidence() const { return probabilities().maxCoeff(); }

Eigen::Index PredictionDistribution::argmax() const {
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  return best;
}

Eigen::MatrixXf patchify(const ImageTensor& image, int patch_size) {
  if (patch_size < 1 || image.height() % patch_size != 0 || image.width() % patch_size != 0) {
    throw DimensionError("image " + std::to_string(image.width()) + "x" +
                         std::to_string(image.height()) + " is not divisible into " +
                         std::to_string(patch_size) + "-pixel patches");
  }
  const int rows = image.height() / patch_size;
  const int cols = image.width() / patch_size;
  const int ch = image.channels();
  Eigen::MatrixXf tokens(rows * cols, patch_size * patch_size * ch);
  for (int pr = 0; pr < rows; ++pr) {
    for (int pc = 0; pc < cols; ++pc) {
      const int k = pr * cols + pc;
      int col = 0;
      for (int py = 0; py < patch_size; ++py) {
        for (int px = 0; px < patch_size; ++px) {
          for (int c = 0; c < ch; ++c) {
            tokens(k, col++) = image.at(pr * patch_size + py, pc * patch_size + px, c);
          }
        }
      }
    }
  }
  return tokens;
}

Eigen::MatrixXf VisionTransformer::Linear::operator()(const Eigen::MatrixXf& x) const {
  Eigen::MatrixXf y = x * weight.transpose();
  y.rowwise() += bias;
  return y;
}

Eigen::MatrixXf VisionTransformer::LayerNorm::operator()(const Eigen::MatrixXf& x) const {
  Eigen::MatrixXf y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).cast<double>().mean();
    const double var = (x.row(r).cast<double>().array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      y(r, c) = static_cast<float>((x(r, c) - mean) * inv) * scale[c] + shift[c];
    }
  }
  return y;
}

VisionTransformer::VisionTransformer(ModelConfig config, const ModelWeights& weights)
    : config_(config) {
  config_.validate();
  const std::int64_t d = config_.embed_dim;
  const std::int64_t tokens = config_.num_patches() + 1;
  auto linear = [&](const std::string& prefix, std::int64_t out, std::int64_t in) {
    return Linear{as_matrix(require(weights, prefix + ".weight", {out, in})),
                  as_row(require(weights, prefix + ".bias", {out}))};
  };
  auto norm = [&](const std::string& prefix) {
    return LayerNorm{as_row(require(weights, prefix + ".weight", {d})),
                     as_row(require(weights, prefix + ".bias", {d}))};
  };

  patch_embed_ = linear("patch_embed", d, config_.token_dim());
  cls_token_ = as_row(require(weights, "cls_token", {d}));
  pos_embed_ = as_matrix(require(weights, "pos_embed", {tokens, d}));
  for (int b = 0; b < config_.depth; ++b) {
    const std::string p = "blocks." + std::to_string(b);
    blocks_.push_back(Block{norm(p + ".norm1"), norm(p + ".norm2"),
                            linear(p + ".attn.q", d, d), linear(p + ".attn.k", d, d),
                            linear(p + ".attn.v", d, d), linear(p + ".attn.proj", d, d),
                            linear(p + ".mlp.fc1", config_.mlp_dim(), d),
                            linear(p + ".mlp.fc2", d, config_.mlp_dim())});
  }
  norm_ = norm("norm");
  head_ = linear("head", config_.num_classes, d);
}

ForwardResult VisionTransformer::evaluate(const ImageTensor& image, bool keep_attention) const {
  if (image.height() != config_.input_height || image.width() != config_.input_width ||
      image.channels() != config_.channels) {
    throw DimensionError("model expects " + std::to_string(config_.input_width) + "x" +
                         std::to_string(config_.input_height) + "x" +
                         std::to_string(config_.channels) + " input, got " +
                         std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                         "x" + std::to_string(image.channels()));
  }
  const int K = config_.num_patches();
  const int dh = config_.head_dim();
  const float scale = static_cast<float>(1.0 / std::sqrt(static_cast<double>(dh)));
  const int attention_block = config_.resolved_attention_block();

  Eigen::MatrixXf x(K + 1, config_.embed_dim);
  x.row(0) = cls_token_;
  x.bottomRows(K) = patch_embed_(patchify(image, config_.patch_size) / 255.0f);
  x += pos_embed_;

  ForwardResult result;
  Eigen::MatrixXd grid_sum = Eigen::MatrixXd::Zero(1, K);

  for (int b = 0; b < config_.depth; ++b) {
    const Block& block = blocks_[b];
    const Eigen::MatrixXf h = block.norm1(x);
    const Eigen::MatrixXf q = block.q(h);
    const Eigen::MatrixXf k = block.k(h);
    const Eigen::MatrixXf v = block.v(h);
    Eigen::MatrixXf mixed(K + 1, config_.embed_dim);
    for (int head = 0; head < config_.heads; ++head) {
      Eigen::MatrixXf attn =
          (q.middleCols(head * dh, dh) * k.middleCols(head * dh, dh).transpose()) * scale;
      for (Eigen::Index r = 0; r < attn.rows(); ++r) {
        attn.row(r) = softmax(attn.row(r).transpose()).transpose();
      }
      mixed.middleCols(head * dh, dh) = attn * v.middleCols(head * dh, dh);
      if (b == attention_block) {
        grid_sum += attn.rightCols(K).cast<double>().colwise().sum();
        if (keep_attention) result.head_attention.push_back(std::move(attn));
      }
    }
    x += block.proj(mixed);
    x += block.fc2(block.fc1(block.norm2(x)).unaryExpr(&gelu));
  }

  result.prediction.logits = head_(norm_(x.topRows(1))).row(0).transpose();
  const double denom = static_cast<double>(config_.heads) * (K + 1);
  Eigen::MatrixXf grid(config_.grid_rows(), config_.grid_cols());
  for (int k = 0; k < K; ++k) {
    grid(k / config_.grid_cols(), k % config_.grid_cols()) =
        static_cast<float>(grid_sum(0, k) / denom);
  }
  result.attention.scores = std::move(grid);
  return result;
}

ForwardResult forward(const ModelWeights& weights, const ModelConfig& config,
                      const ImageTensor& image) {
  return VisionTransformer(config, weights).evaluate(image);
}

}  // namespace focusdd

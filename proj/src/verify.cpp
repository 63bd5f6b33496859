#include "focusdd/verify.hpp"

#include <functional>
#include <string>

#include "focusdd/codec.hpp"
#include "focusdd/ntf.hpp"
#include "focusdd/patch.hpp"
#include "focusdd/region.hpp"
#include "focusdd/rng.hpp"
#include "focusdd/synthetic.hpp"

namespace focusdd {
namespace {

ImageTensor random_image(KeyedRng& rng, int max_side) {
  const int w = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_side)));
  const int h = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_side)));
  ImageTensor img(w, h, rng.below(2) ? 3 : 1);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.pixels()[i] = static_cast<float>(rng.below(256));
  return img;
}

bool window_suite(KeyedRng& rng, std::string& detail) {
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + static_cast<int>(rng.below(16));
    const int cols = 1 + static_cast<int>(rng.below(16));
    Eigen::MatrixXf grid(rows, cols);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      grid.data()[i] = static_cast<float>(rng() >> 40) * 0x1.0p-24f;
    }
    const WindowDims dims{1 + static_cast<int>(rng.below(rows)), 1 + static_cast<int>(rng.below(cols))};
    double best = -1.0;
    int best_r = 0, best_c = 0;
    for (int r = 0; r + dims.height <= rows; ++r) {
      for (int c = 0; c + dims.width <= cols; ++c) {
        double s = 0.0;
        for (int p = 0; p < dims.height; ++p) {
          for (int q = 0; q < dims.width; ++q) s += grid(r + p, c + q);
        }
        if (s > best) {
          best = s;
          best_r = r;
          best_c = c;
        }
      }
    }
    const WindowMax got = window_sum_argmax(grid, dims);
    if (got.sum != best || got.top_left.row != best_r || got.top_left.col != best_c) {
      detail = "mismatch on trial " + std::to_string(trial);
      return false;
    }
  }
  detail = "200 grids";
  return true;
}

bool crop_suite(KeyedRng& rng, std::string& detail) {
  for (int trial = 0; trial < 100; ++trial) {
    const ImageTensor img = random_image(rng, 40);
    PixelRect r;
    r.width = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(img.width())));
    r.height = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(img.height())));
    r.x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.width() - r.width + 1)));
    r.y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.height() - r.height + 1)));
    const ImageTensor out = crop(img, r);
    const int ch = img.channels();
    for (int y = 0; y < r.height; ++y) {
      for (int x = 0; x < r.width; ++x) {
        for (int c = 0; c < ch; ++c) {
          const auto src = (static_cast<Eigen::Index>(r.y0 + y) * img.width() + (r.x0 + x)) * ch + c;
          const auto dst = (static_cast<Eigen::Index>(y) * r.width + x) * ch + c;
          if (out.pixels()[dst] != img.pixels()[src]) {
            detail = "pixel mismatch on trial " + std::to_string(trial);
            return false;
          }
        }
      }
    }
  }
  detail = "100 rects";
  return true;
}

bool image_roundtrip_suite(KeyedRng& rng, std::string& detail) {
  for (int trial = 0; trial < 50; ++trial) {
    const ImageTensor img = random_image(rng, 48);
    if (!(decode_image(encode_png(img)) == img) || !(decode_image(encode_pnm(img)) == img)) {
      detail = "round-trip mismatch on trial " + std::to_string(trial);
      return false;
    }
  }
  detail = "50 images x {png, pnm}";
  return true;
}

bool ntf_roundtrip_suite(KeyedRng& rng, std::string& detail) {
  for (int trial = 0; trial < 5; ++trial) {
    ModelConfig cfg;
    cfg.depth = 1 + static_cast<int>(rng.below(2));
    cfg.heads = 2;
    cfg.embed_dim = 8;
    cfg.patch_size = 4;
    cfg.input_height = cfg.input_width = 16;
    cfg.num_classes = 3;
    const ModelWeights w = synthetic_weights(cfg, rng());
    if (!(parse_ntf(serialize_ntf(w)) == w)) {
      detail = "mismatch on trial " + std::to_string(trial);
      return false;
    }
  }
  detail = "5 weight bundles";
  return true;
}

bool attention_suite(KeyedRng& rng, std::string& detail) {
  ModelConfig cfg;
  cfg.depth = 2;
  cfg.heads = 2;
  cfg.embed_dim = 16;
  cfg.patch_size = 8;
  cfg.input_height = cfg.input_width = 32;
  cfg.num_classes = 4;
  const VisionTransformer vit(cfg, synthetic_weights(cfg, rng()));
  for (int trial = 0; trial < 10; ++trial) {
    ImageTensor img(32, 32, 3);
    for (Eigen::Index i = 0; i < img.size(); ++i) img.pixels()[i] = static_cast<float>(rng.below(256));
    const auto result = vit.evaluate(img, true);
    for (const auto& a : result.head_attention) {
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double s = a.row(r).cast<double>().sum();
        if (std::abs(s - 1.0) > 1e-5) {
          detail = "row sum " + std::to_string(s);
          return false;
        }
      }
    }
  }
  detail = "10 forwards";
  return true;
}

}  // namespace

bool run_verification(std::ostream& out, std::uint64_t seed) {
  struct Suite {
    const char* name;
    std::function<bool(KeyedRng&, std::string&)> run;
  };
  const Suite suites[] = {
      {"window-argmax-vs-brute-force", window_suite},
      {"crop-vs-direct-indexing", crop_suite},
      {"image-round-trip", image_roundtrip_suite},
      {"ntf-round-trip", ntf_roundtrip_suite},
      {"attention-row-stochastic", attention_suite},
  };
  bool all = true;
  std::uint64_t tag = 0;
  for (const auto& suite : suites) {
    KeyedRng rng(seed, {++tag});
    std::string detail;
    bool ok = false;
    try {
      ok = suite.run(rng, detail);
    } catch (const std::exception& e) {
      detail = std::string("threw: ") + e.what();
    }
    out << (ok ? "PASS " : "FAIL ") << suite.name << " (" << detail << ")\n";
    all = all && ok;
  }
  return all;
}

}  // namespace focusdd

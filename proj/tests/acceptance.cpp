// Acceptance checks, one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <openssl/evp.h>

#include "cli.hpp"
#include "focusdd/analyzer.hpp"
#include "focusdd/codec.hpp"
#include "focusdd/composer.hpp"
#include "focusdd/labeler.hpp"
#include "focusdd/ntf.hpp"
#include "focusdd/region.hpp"
#include "focusdd/saliency.hpp"
#include "focusdd/synthetic.hpp"
#include "focusdd/vit.hpp"
#include "support.hpp"

using namespace focusdd;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

Outcome window_argmax() {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> side(4, 16);
  long windows = 0, mismatches = 0;
  double fast_seconds = 0.0;
  for (int g = 0; g < 500; ++g) {
    const int rows = side(gen), cols = side(gen);
    const Eigen::MatrixXf grid = test::lattice_grid(gen, rows, cols);
    for (int h = 1; h <= rows; ++h) {
      for (int w = 1; w <= cols; ++w) {
        const auto t0 = Clock::now();
        const WindowMax fast = window_sum_argmax(grid, {h, w});
        fast_seconds += seconds_since(t0);
        const test::BruteWindow slow = test::brute_force_window(grid, h, w);
        const bool same = fast.center == GridCell{slow.top + h / 2, slow.left + w / 2} && fast.sum == slow.sum;
        mismatches += same ? 0 : 1;
        ++windows;
      }
    }
  }
  return {mismatches == 0 && fast_seconds < 5.0,
          std::to_string(windows) + " windows on 500 grids, " + std::to_string(mismatches) + " mismatches, " +
              fmt(fast_seconds, 3) + " s"};
}

Outcome attention_invariants() {
  double worst_row = 0.0, worst_grid = 0.0;
  for (int t = 0; t < 50; ++t) {
    ModelConfig cfg;
    cfg.depth = 1 + t % 3;
    cfg.heads = 1 << (t % 3);
    cfg.embed_dim = 8 * cfg.heads;
    cfg.patch_size = 4;
    cfg.num_classes = 2 + t % 5;
    cfg.input_height = 16 + 4 * (t % 3);
    cfg.input_width = 16 + 4 * (t % 2);
    cfg.channels = t % 4 == 0 ? 1 : 3;
    std::mt19937_64 gen(static_cast<std::uint64_t>(t));
    const VisionTransformer vit(cfg, synthetic_weights(cfg, static_cast<std::uint64_t>(t)));
    const auto r = vit.evaluate(test::random_image(gen, cfg.input_width, cfg.input_height, cfg.channels), true);
    const int k = cfg.num_patches();
    for (const auto& a : r.head_attention) {
      for (Eigen::Index row = 0; row < a.rows(); ++row) {
        worst_row = std::max(worst_row, std::abs(a.row(row).cast<double>().sum() - 1.0));
      }
    }
    for (int p = 0; p < k; ++p) {
      double s = 0.0;
      for (const auto& a : r.head_attention) {
        for (int q = 0; q <= k; ++q) s += a(q, p + 1);
      }
      s /= static_cast<double>(r.head_attention.size()) * (k + 1);
      worst_grid = std::max(worst_grid, std::abs(s - r.attention.scores(p / cfg.grid_cols(), p % cfg.grid_cols())));
    }
  }
  return {worst_row <= 1e-5 && worst_grid <= 1e-6,
          "max |row sum - 1| = " + fmt(worst_row, 3) + ", max grid deviation = " + fmt(worst_grid, 3)};
}

Outcome realism_reduction() {
  std::mt19937_64 gen(3);
  int mismatched_sets = 0;
  for (int t = 0; t < 100; ++t) {
    const int count = 2 + static_cast<int>(gen() % 40);
    std::vector<ScoredImage> scored(count);
    std::vector<ImageId> ids(count);
    for (int i = 0; i < count; ++i) ids[i] = static_cast<ImageId>(i * 7 + 3);
    std::shuffle(ids.begin(), ids.end(), gen);
    for (int i = 0; i < count; ++i) {
      scored[i].image_id = ids[i];
      scored[i].confidence = static_cast<double>(gen() % 8) / 8.0;  // frequent ties
      scored[i].area_score = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
      scored[i].realism = realism_score(scored[i].confidence, scored[i].area_score, 0.0);
    }
    std::vector<ScoredImage> expect = scored;
    std::sort(expect.begin(), expect.end(), [](const ScoredImage& a, const ScoredImage& b) {
      return a.confidence != b.confidence ? a.confidence > b.confidence : a.image_id < b.image_id;
    });
    const auto ranked = rank_class(scored);
    bool same = ranked.size() == expect.size();
    for (std::size_t i = 0; same && i < ranked.size(); ++i) same = ranked[i].image_id == expect[i].image_id;
    mismatched_sets += same ? 0 : 1;
  }
  return {mismatched_sets == 0, "100 score sets, " + std::to_string(mismatched_sets) + " orderings differ"};
}

Outcome center_mapping() {
  std::mt19937_64 gen(4);
  int full_fail = 0, side_fail = 0, bound_fail = 0;
  for (int t = 0; t < 200; ++t) {
    GridGeometry g;
    g.patch_size = 1 << (gen() % 5);
    g.grid_rows = 1 + static_cast<int>(gen() % 16);
    g.grid_cols = 1 + static_cast<int>(gen() % 16);
    const int down_h = g.grid_rows * g.patch_size, down_w = g.grid_cols * g.patch_size;
    g.original_height = down_h + static_cast<int>(gen() % (3 * down_h + 1));
    g.original_width = down_w + static_cast<int>(gen() % (3 * down_w + 1));
    g.scale_y = static_cast<double>(g.original_height) / down_h;
    g.scale_x = static_cast<double>(g.original_width) / down_w;
    const GridCell c{static_cast<int>(gen() % g.grid_rows), static_cast<int>(gen() % g.grid_cols)};
    if (t < 100) {
      const PixelRect r = map_center_to_original(c, g, 1.0, 5);
      full_fail += r == PixelRect{0, 0, g.original_width, g.original_height, 5} ? 0 : 1;
    } else {
      const double alpha = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
      const PixelRect r = map_center_to_original(c, g, alpha);
      // A side of zero cannot be cropped; those cases become one pixel.
      const int want_h = std::max(1, 2 * static_cast<int>(std::floor(alpha * g.original_height / 2.0)));
      const int want_w = std::max(1, 2 * static_cast<int>(std::floor(alpha * g.original_width / 2.0)));
      side_fail += r.height == want_h && r.width == want_w ? 0 : 1;
      bound_fail += r.inside(g.original_width, g.original_height) ? 0 : 1;
    }
  }
  return {full_fail == 0 && side_fail == 0 && bound_fail == 0,
          "alpha=1: " + std::to_string(full_fail) + "/100 not full; random alpha: " + std::to_string(side_fail) +
              "/100 wrong side, " + std::to_string(bound_fail) + "/100 out of bounds"};
}

Outcome composition_fidelity() {
  ModelConfig model;
  model.depth = 1;
  model.heads = 1;
  model.embed_dim = 4;
  model.patch_size = 4;
  model.num_classes = 10;
  model.input_height = model.input_width = 16;
  const SaliencyProvider provider(model);
  DistillConfig cfg;
  cfg.ipc = 5;
  cfg.out_height = 40;
  cfg.out_width = 36;
  cfg.seed = 17;
  std::mt19937_64 gen(5);
  int composites = 0, bad_cells = 0, cells = 0;
  for (int c = 0; c < 10; ++c) {
    std::vector<SourceImage> sources;
    for (int i = 0; i < 22; ++i) {
      const int w = 16 + static_cast<int>(gen() % 40), h = 16 + static_cast<int>(gen() % 40);
      sources.push_back(prepare_source(static_cast<ImageId>(c * 100 + i), "s.png", test::random_image(gen, w, h, 3), model));
    }
    std::map<ImageId, const SourceImage*> by_id;
    for (const auto& s : sources) by_id[s.image_id] = &s;
    const auto result = distill_class(c, sources, provider, cfg, 2);
    for (const auto& comp : result.composites) {
      ++composites;
      for (const auto& cell : comp.cells) {
        ++cells;
        const SourceImage& src = *by_id.at(cell.source_image_id);
        const ImageTensor from = cell.source_rect ? crop(src.original, *cell.source_rect) : src.downsampled;
        const ImageTensor expect = test::reference_bilinear(from, cfg.out_height / 2, cfg.out_width / 2);
        bad_cells += crop(comp.composite, cell.cell_rect) == expect ? 0 : 1;
      }
    }
  }
  return {composites == 50 && bad_cells == 0,
          std::to_string(composites) + " composites, " + std::to_string(bad_cells) + "/" + std::to_string(cells) +
              " cells differ from the resize oracle"};
}

Outcome ess_arithmetic() {
  const double naive = ess({10, 3, 1, 1, 1});
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> unit(0.0, 1.0), count(0.0, 10.0), size(0.0, 1e6);
  double worst = 0.0;
  auto rel = [](double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
  };
  for (int t = 0; t < 1000; ++t) {
    const EssParams p{size(gen), count(gen), count(gen), unit(gen), unit(gen)};
    const double lambda = unit(gen);
    EssParams d = p, g = p, g0 = p, b = p, b0 = p;
    d.d_prime *= lambda;
    g.gamma *= lambda;
    g0.gamma = 0.0;
    b.beta *= lambda;
    b0.beta = 0.0;
    worst = std::max(worst, rel(ess(d), lambda * ess(p)));
    worst = std::max(worst, rel(ess(g), (1 - lambda) * ess(g0) + lambda * ess(p)));
    worst = std::max(worst, rel(ess(b), (1 - lambda) * ess(b0) + lambda * ess(p)));
  }
  return {naive == 40.0 && worst <= 1e-12, "ess(10,3,1,1,1) = " + fmt(naive, 17) + ", worst linearity error " + fmt(worst, 3)};
}

Outcome soft_ce() {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_real_distribution<double> unit(0.001, 1.0);
  double worst_grad = 0.0, worst_uniform = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int regions = 1 + static_cast<int>(gen() % 4), classes = 2 + static_cast<int>(gen() % 9);
    Eigen::MatrixXd logits(regions, classes), labels(regions, classes);
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      logits.data()[i] = normal(gen);
      labels.data()[i] = unit(gen);
    }
    for (int r = 0; r < regions; ++r) labels.row(r) /= labels.row(r).sum();
    const Eigen::MatrixXd grad = soft_ce_gradient(logits, labels);
    Eigen::MatrixXd numeric(regions, classes);
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      Eigen::MatrixXd up = logits, down = logits;
      up.data()[i] += 1e-3;
      down.data()[i] -= 1e-3;
      numeric.data()[i] = (soft_ce_loss(up, labels) - soft_ce_loss(down, labels)) / 2e-3;
    }
    worst_grad = std::max(worst_grad, (grad - numeric).norm() / grad.norm());
  }
  for (int c = 2; c <= 10; ++c) {
    for (int regions = 1; regions <= 4; ++regions) {
      const double loss = soft_ce_loss(Eigen::MatrixXd::Zero(regions, c), Eigen::MatrixXd::Constant(regions, c, 1.0 / c));
      worst_uniform = std::max(worst_uniform, std::abs(loss / regions - std::log(static_cast<double>(c))));
    }
  }
  return {worst_grad < 1e-4 && worst_uniform <= 1e-9,
          "worst gradient relative error " + fmt(worst_grad, 3) + ", worst |loss - ln C| " + fmt(worst_uniform, 3)};
}

Outcome snr_estimator() {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> noise(128.0, 10.0);
  double mean_sigma = 0.0;
  for (int t = 0; t < 100; ++t) {
    ImageTensor img(256, 256, 1);
    for (Eigen::Index i = 0; i < img.size(); ++i) img.pixels()[i] = static_cast<float>(noise(gen));
    mean_sigma += laplacian_snr(img).noise_sigma / 100.0;
  }
  bool sentinel = false;
  try {
    laplacian_snr(ImageTensor(256, 256, 1, 128.0f));
  } catch (const InfiniteSnrError&) {
    sentinel = true;
  }
  const double rel = std::abs(mean_sigma - 10.0) / 10.0;
  return {rel <= 0.15 && sentinel, "mean sigma " + fmt(mean_sigma, 5) + " (" + fmt(100 * rel, 3) +
                                       "% off), constant image " + (sentinel ? "raises" : "does not raise") +
                                       " the infinite-SNR error"};
}

Outcome planted_object() {
  ModelConfig model;
  model.depth = 1;
  model.heads = 1;
  model.embed_dim = 4;
  model.patch_size = 4;
  model.num_classes = 3;
  model.input_height = model.input_width = 32;
  const SaliencyProvider provider(model);
  DistillConfig cfg;
  cfg.ipc = 1;
  cfg.out_height = cfg.out_width = 64;
  cfg.selector.alpha = 0.5;
  int hits = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    std::mt19937_64 gen(1000 + trial);
    bool all = true;
    for (int c = 0; c < 3; ++c) {
      std::vector<SourceImage> sources;
      std::map<ImageId, std::pair<int, int>> centers;
      for (int i = 0; i < 6; ++i) {
        auto planted = test::planted_blob_image(gen);
        const auto id = static_cast<ImageId>(c * 6 + i);
        centers[id] = {planted.center_x, planted.center_y};
        sources.push_back(prepare_source(id, "p.png", std::move(planted.image), model));
      }
      cfg.seed = trial;
      const auto result = distill_class(c, sources, provider, cfg);
      const PixelRect& rect = result.keys.patches.front().rect;
      const auto [x, y] = centers.at(result.ranked.front().image_id);
      all = all && rect.source_image_id == result.ranked.front().image_id && rect.contains(x, y);
    }
    hits += all ? 1 : 0;
  }
  return {hits >= 90, std::to_string(hits) + "/100 trials with the blob center inside every class's top key crop"};
}

std::string sha256_hex(const Bytes& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream s;
  for (unsigned i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return s.str();
}

std::map<std::string, std::string> digest_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[e.path().lexically_relative(root).generic_string()] = sha256_hex(read_file(e.path()));
  }
  return out;
}

Outcome determinism() {
  const auto t0 = Clock::now();
  test::TempDir dir("acceptance_det");
  std::mt19937_64 gen(10);
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 24; ++i) {
      write_file(dir.path() / "data" / ("class" + std::to_string(c)) / (std::to_string(i) + ".png"),
                 encode_png(test::random_image(gen, 128 + 16 * (i % 3), 128, 3)));
    }
  }
  ModelConfig cfg;
  cfg.depth = 4;
  cfg.heads = 4;
  cfg.embed_dim = 64;
  cfg.patch_size = 16;
  cfg.num_classes = 4;
  cfg.input_height = cfg.input_width = 96;
  save_weights(synthetic_weights(cfg, 0), dir.path() / "w.ntf");
  std::map<std::string, std::string> digests[2];
  const char* workers[2] = {"1", "8"};
  for (int k = 0; k < 2; ++k) {
    const fs::path out = dir.path() / ("out" + std::string(workers[k]));
    const std::string weights = (dir.path() / "w.ntf").string();
    std::ostringstream sink;
    int code = cli::run({"distill", "--data", (dir.path() / "data").string(), "--weights", weights, "--ipc", "4",
                         "--seed", "42", "--out", out.string(), "--workers", workers[k]},
                        sink, sink);
    if (code == 0) {
      code = cli::run({"relabel", "--dir", out.string(), "--weights", weights, "--random-crops", "4", "--seed", "7",
                       "--workers", workers[k]},
                      sink, sink);
    }
    if (code != 0) return {false, "pipeline exited " + std::to_string(code) + ": " + sink.str()};
    digests[k] = digest_tree(out);
  }
  const double elapsed = seconds_since(t0);
  const bool same = !digests[0].empty() && digests[0] == digests[1];
  return {same && elapsed < 60.0, std::to_string(digests[0].size()) + " files, digests " +
                                      (same ? "identical" : "differ") + " for 1 vs 8 workers, " + fmt(elapsed, 3) + " s"};
}

Outcome io_round_trips() {
  test::TempDir dir("acceptance_io");
  std::mt19937_64 gen(11);
  int failures = 0;
  for (int t = 0; t < 100; ++t) {
    const int ch = t % 2 ? 3 : 1;
    const ImageTensor img = test::random_image(gen, 1 + static_cast<int>(gen() % 64), 1 + static_cast<int>(gen() % 64), ch);
    const fs::path png = dir.path() / "i.png", pnm = dir.path() / (ch == 3 ? "i.ppm" : "i.pgm");
    write_file(png, encode_image(img, ImageFormat::kPng));
    write_file(pnm, encode_image(img, ImageFormat::kPnm));
    const ImageTensor a = load_image(png), b = load_image(pnm);
    const bool images = a == img && b == img && encode_png(a) == read_file(png) && encode_pnm(b) == read_file(pnm);

    ModelConfig cfg;
    cfg.depth = 1 + t % 2;
    cfg.heads = 1 + t % 2;
    cfg.embed_dim = 4 * cfg.heads;
    cfg.patch_size = 2 << (t % 3);
    cfg.num_classes = 2 + t % 7;
    cfg.input_height = cfg.input_width = cfg.patch_size * (1 + t % 3);
    cfg.channels = ch;
    const ModelWeights w = synthetic_weights(cfg, gen());
    save_weights(w, dir.path() / "w.ntf");
    const bool weights = load_weights(dir.path() / "w.ntf") == w && serialize_ntf(load_weights(dir.path() / "w.ntf")) == read_file(dir.path() / "w.ntf");
    failures += images && weights ? 0 : 1;
  }
  return {failures == 0, "100 cases (PNG, PNM, NTF), " + std::to_string(failures) + " failed"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"window-argmax oracle", window_argmax},
      {"attention invariants", attention_invariants},
      {"realism reduction at eta = 0", realism_reduction},
      {"center mapping", center_mapping},
      {"composition fidelity", composition_fidelity},
      {"ESS arithmetic", ess_arithmetic},
      {"soft-CE gradient and uniform loss", soft_ce},
      {"SNR estimator", snr_estimator},
      {"planted-object selection", planted_object},
      {"determinism across worker counts", determinism},
      {"I/O round-trips", io_round_trips},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << i + 1 << ". " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "focusdd/image.hpp"
#include "focusdd/manifest.hpp"
#include "focusdd/patch.hpp"
#include "focusdd/region.hpp"
#include "focusdd/rng.hpp"
#include "focusdd/vit.hpp"

namespace focusdd {

struct DistillConfig {
  int ipc = 1;
  std::optional<int> key_count;         // M, defaults to 3 * ipc
  std::optional<int> background_count;  // N, defaults to ipc
  int patches_per_composite = 3;        // m
  int backgrounds_per_composite = 1;    // n
  int out_height = 224;
  int out_width = 224;
  std::uint64_t seed = 0;
  SelectorConfig selector;
  bool shuffle_keys = false;

  int resolved_key_count() const { return key_count.value_or(3 * ipc); }
  int resolved_background_count() const { return background_count.value_or(ipc); }
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

/// An image of one class, held at full and at model resolution.
struct SourceImage {
  ImageId image_id = 0;
  std::filesystem::path path;
  ImageTensor original;
  ImageTensor downsampled;
};

/// Loads a manifest record, converts it to the model's channel count and box-downsamples
/// it to the model input size. Images smaller than the model input are rejected.
SourceImage prepare_source(const ManifestRecord& record, const ModelConfig& model);
SourceImage prepare_source(ImageId id, std::filesystem::path path, ImageTensor original,
                           const ModelConfig& model);

ScoredImage score_source(const SourceImage& source, const AttentionProvider& provider,
                         const SelectorConfig& selector);

GridGeometry grid_geometry(const SourceImage& source, const ModelConfig& model);

struct KeyPatch {
  ImageTensor crop;
  PixelRect rect;
  double realism = 0.0;
  std::filesystem::path source_path;
};

/// T~_c: key patches of the top-M images, realism descending.
struct KeyPatchSet {
  int class_id = 0;
  std::vector<KeyPatch> patches;
};

struct BackgroundImage {
  ImageTensor image;  // model-resolution image
  double confidence = 0.0;
  ImageId image_id = 0;
  std::filesystem::path source_path;
};

/// T'_c: confidence-weighted draw from the images that were not selected as keys.
struct BackgroundSet {
  int class_id = 0;
  std::vector<BackgroundImage> images;
};

/// Ranks `scores`, keeps the first min(M, |class|) and crops each one's key region.
KeyPatchSet build_key_set(int class_id, std::span<const SourceImage> sources,
                          std::span<const ScoredImage> scores, int key_count,
                          const ModelConfig& model, double alpha);

/// Sequential draws without replacement, P(pick i) proportional to weights[i] among the
/// remaining items (uniform once every remaining weight is zero). Returns indices in
/// draw order; at most min(count, weights.size()) of them.
std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights,
                                                             std::size_t count, KeyedRng& rng);

BackgroundSet select_backgrounds(int class_id, std::vector<BackgroundImage> candidates,
                                 std::size_t count, KeyedRng& rng);

enum class CellKind { kKey, kBackground };

struct CellRecord {
  PixelRect cell_rect;  // inside the composite
  ImageId source_image_id = 0;
  std::optional<PixelRect> source_rect;  // empty: whole downsampled image
  CellKind kind = CellKind::kKey;
  std::string source_path;
};

struct DistilledImage {
  ImageTensor composite;
  std::vector<CellRecord> cells;
  int class_id = 0;
  int index = 0;
};

struct CellSource {
  const ImageTensor* image = nullptr;
  ImageId source_image_id = 0;
  std::optional<PixelRect> source_rect;
  std::string source_path;
};

/// 2 x 2 composite: keys fill cells from the top-left, backgrounds the remaining cells,
/// row-major. Every source is bilinearly resized to (out_height/2) x (out_width/2).
DistilledImage compose(std::span<const CellSource> keys, std::span<const CellSource> backgrounds,
                       int out_height, int out_width);

struct ClassDistillation {
  std::vector<ScoredImage> ranked;
  KeyPatchSet keys;
  BackgroundSet backgrounds;
  std::vector<DistilledImage> composites;
};

/// Algorithm for one class. Composite j takes ranked keys [m j, m j + m) modulo |T~_c|
/// (over a per-class seeded permutation when shuffle_keys is set) and n backgrounds
/// from a per-class seeded permutation of T'_c, again in consecutive blocks. When every
/// image is a key, backgrounds fall back to the downsampled key images.
ClassDistillation distill_class(int class_id, std::span<const SourceImage> sources,
                                const AttentionProvider& provider, const DistillConfig& config,
                                unsigned workers = 1);

struct DistillSummary {
  int classes = 0;
  int composites = 0;
  std::vector<std::filesystem::path> written;
};

using LogFn = std::function<void(const std::string&)>;

/// Runs the whole pipeline and writes
///   out_dir/<class_id>/<index>.png, out_dir/provenance.jsonl, out_dir/config.json.
/// Output bytes depend only on (inputs, config), never on `workers`.
DistillSummary distill_dataset(const DatasetManifest& manifest, const AttentionProvider& provider,
                               const DistillConfig& config, const std::filesystem::path& out_dir,
                               unsigned workers, const LogFn& log = {},
                               const nlohmann::ordered_json& extra_config = {});

nlohmann::ordered_json scored_image_json(const ScoredImage& s);
nlohmann::ordered_json provenance_json(const DistilledImage& image, const std::string& image_path);

}  // namespace focusdd

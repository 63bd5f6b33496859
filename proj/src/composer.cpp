#include "focusdd/composer.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "focusdd/codec.hpp"
#include "focusdd/parallel.hpp"

namespace focusdd {
namespace fs = std::filesystem;

namespace {

nlohmann::ordered_json rect_json(const PixelRect& r) {
  return {{"x", r.x0}, {"y", r.y0}, {"w", r.width}, {"h", r.height}};
}

std::string class_context(int class_id, const std::string& name) {
  return "class " + std::to_string(class_id) + " ('" + name + "')";
}

}  // namespace

void DistillConfig::validate() const {
  selector.validate();
  if (ipc < 1) throw ValidationError("ipc must be >= 1");
  if (resolved_key_count() < 0) throw ValidationError("key count M must be >= 0");
  if (resolved_background_count() < 0) throw ValidationError("background count N must be >= 0");
  if (patches_per_composite < 0 || backgrounds_per_composite < 0 ||
      patches_per_composite + backgrounds_per_composite != 4) {
    throw ValidationError("the 2x2 layout needs m + n = 4 (got m = " +
                          std::to_string(patches_per_composite) +
                          ", n = " + std::to_string(backgrounds_per_composite) + ")");
  }
  if (out_height < 2 || out_width < 2 || out_height % 2 != 0 || out_width % 2 != 0) {
    throw ValidationError("composite size must be even on both axes");
  }
}

nlohmann::ordered_json DistillConfig::to_json() const {
  return {{"ipc", ipc},
          {"key_count", resolved_key_count()},
          {"background_count", resolved_background_count()},
          {"patches_per_composite", patches_per_composite},
          {"backgrounds_per_composite", backgrounds_per_composite},
          {"out_height", out_height},
          {"out_width", out_width},
          {"seed", seed},
          {"alpha", selector.alpha},
          {"eta", selector.eta},
          {"area_mode", selector.area_mode == AreaMode::kSum ? "sum" : "mean"},
          {"shuffle_keys", shuffle_keys}};
}

SourceImage prepare_source(ImageId id, fs::path path, ImageTensor original, const ModelConfig& model) {
  SourceImage s;
  s.image_id = id;
  s.path = std::move(path);
  s.original = convert_channels(original, model.channels);
  if (s.original.height() < model.input_height || s.original.width() < model.input_width) {
    throw DimensionError(s.path.string() + ": image " + std::to_string(s.original.width()) + "x" +
                         std::to_string(s.original.height()) + " is smaller than the model input " +
                         std::to_string(model.input_width) + "x" + std::to_string(model.input_height));
  }
  s.downsampled = downsample(s.original, model.input_height, model.input_width);
  return s;
}

SourceImage prepare_source(const ManifestRecord& record, const ModelConfig& model) {
  return prepare_source(record.image_id, record.path, load_image(record.path), model);
}

ScoredImage score_source(const SourceImage& source, const AttentionProvider& provider,
                         const SelectorConfig& selector) {
  ForwardResult result = provider.evaluate(source.downsampled);
  result.attention.source_image_id = source.image_id;
  return score_image(source.image_id, result, selector);
}

GridGeometry grid_geometry(const SourceImage& source, const ModelConfig& model) {
  return {model.patch_size,
          static_cast<double>(source.original.height()) / model.input_height,
          static_cast<double>(source.original.width()) / model.input_width,
          model.grid_rows(),
          model.grid_cols(),
          source.original.height(),
          source.original.width()};
}

KeyPatchSet build_key_set(int class_id, std::span<const SourceImage> sources,
                          std::span<const ScoredImage> scores, int key_count,
                          const ModelConfig& model, double alpha) {
  if (sources.empty()) throw Error("class " + std::to_string(class_id) + " has no images");
  std::map<ImageId, const SourceImage*> by_id;
  for (const auto& s : sources) by_id[s.image_id] = &s;

  const auto ranked = rank_class({scores.begin(), scores.end()});
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(std::max(key_count, 0)), ranked.size());
  KeyPatchSet set;
  set.class_id = class_id;
  for (std::size_t i = 0; i < take; ++i) {
    auto it = by_id.find(ranked[i].image_id);
    if (it == by_id.end()) throw Error("score for unknown image id " + std::to_string(ranked[i].image_id));
    const SourceImage& src = *it->second;
    const PixelRect rect = map_center_to_original(ranked[i].center, grid_geometry(src, model), alpha, src.image_id);
    set.patches.push_back({crop(src.original, rect), rect, ranked[i].realism, src.path});
  }
  return set;
}

std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights,
                                                             std::size_t count, KeyedRng& rng) {
  std::vector<std::size_t> remaining(weights.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::vector<std::size_t> picked;
  while (picked.size() < count && !remaining.empty()) {
    double total = 0.0;
    for (auto i : remaining) total += std::max(0.0, weights[i]);
    std::size_t slot = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      slot = remaining.size() - 1;
      for (std::size_t k = 0; k < remaining.size(); ++k) {
        cumulative += std::max(0.0, weights[remaining[k]]);
        if (target < cumulative) {
          slot = k;
          break;
        }
      }
      // Never land on a zero-weight tail item through rounding.
      while (weights[remaining[slot]] <= 0.0 && slot > 0) --slot;
    } else {
      slot = static_cast<std::size_t>(rng.below(remaining.size()));
    }
    picked.push_back(remaining[slot]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(slot));
  }
  return picked;
}

BackgroundSet select_backgrounds(int class_id, std::vector<BackgroundImage> candidates,
                                 std::size_t count, KeyedRng& rng) {
  std::vector<double> weights;
  weights.reserve(candidates.size());
  for (const auto& c : candidates) weights.push_back(c.confidence);
  BackgroundSet set;
  set.class_id = class_id;
  for (auto i : weighted_sample_without_replacement(weights, count, rng)) {
    set.images.push_back(std::move(candidates[i]));
  }
  return set;
}

DistilledImage compose(std::span<const CellSource> keys, std::span<const CellSource> backgrounds,
                       int out_height, int out_width) {
  if (keys.size() + backgrounds.size() != 4) {
    throw DimensionError("a 2x2 composite needs exactly 4 sources, got " +
                         std::to_string(keys.size() + backgrounds.size()));
  }
  if (out_height < 2 || out_width < 2 || out_height % 2 != 0 || out_width % 2 != 0) {
    throw DimensionError("composite size " + std::to_string(out_width) + "x" +
                         std::to_string(out_height) + " is not divisible by 2");
  }
  const int channels = (keys.empty() ? backgrounds[0] : keys[0]).image->channels();
  const int cell_h = out_height / 2;
  const int cell_w = out_width / 2;
  DistilledImage out;
  out.composite = ImageTensor(out_width, out_height, channels);
  for (std::size_t slot = 0; slot < 4; ++slot) {
    const bool is_key = slot < keys.size();
    const CellSource& src = is_key ? keys[slot] : backgrounds[slot - keys.size()];
    if (src.image == nullptr || src.image->channels() != channels) {
      throw DimensionError("composite sources must share one channel count");
    }
    const ImageTensor cell = resize_bilinear(*src.image, cell_h, cell_w);
    CellRecord record;
    record.cell_rect = {static_cast<int>(slot % 2) * cell_w, static_cast<int>(slot / 2) * cell_h, cell_w,
                        cell_h, src.source_image_id};
    record.source_image_id = src.source_image_id;
    record.source_rect = src.source_rect;
    record.kind = is_key ? CellKind::kKey : CellKind::kBackground;
    record.source_path = src.source_path;
    for (int y = 0; y < cell_h; ++y) {
      for (int x = 0; x < cell_w; ++x) {
        for (int c = 0; c < channels; ++c) {
          out.composite.at(record.cell_rect.y0 + y, record.cell_rect.x0 + x, c) = cell.at(y, x, c);
        }
      }
    }
    out.cells.push_back(std::move(record));
  }
  return out;
}

ClassDistillation distill_class(int class_id, std::span<const SourceImage> sources,
                                const AttentionProvider& provider, const DistillConfig& config,
                                unsigned workers) {
  config.validate();
  if (sources.empty()) throw Error("class " + std::to_string(class_id) + " has no images");
  const ModelConfig& model = provider.config();

  std::vector<ScoredImage> scores(sources.size());
  parallel_for(sources.size(), workers, [&](std::size_t i) {
    scores[i] = score_source(sources[i], provider, config.selector);
  });

  ClassDistillation result;
  result.ranked = rank_class(scores);
  result.keys = build_key_set(class_id, sources, result.ranked, config.resolved_key_count(), model,
                              config.selector.alpha);
  if (result.keys.patches.empty() && config.patches_per_composite > 0) {
    throw Error("class " + std::to_string(class_id) + ": key count M = 0 leaves no key patches");
  }

  std::map<ImageId, std::size_t> index_of;
  for (std::size_t i = 0; i < sources.size(); ++i) index_of[sources[i].image_id] = i;
  std::map<ImageId, double> confidence_of;
  for (const auto& s : result.ranked) confidence_of[s.image_id] = s.confidence;

  std::vector<BackgroundImage> candidates;
  const std::size_t key_span = result.keys.patches.size();
  for (std::size_t r = key_span; r < result.ranked.size(); ++r) {
    const auto& src = sources[index_of.at(result.ranked[r].image_id)];
    candidates.push_back({src.downsampled, result.ranked[r].confidence, src.image_id, src.path});
  }
  // Candidates in image-id order so the weighted draw does not depend on score ties.
  std::sort(candidates.begin(), candidates.end(),
            [](const BackgroundImage& a, const BackgroundImage& b) { return a.image_id < b.image_id; });
  KeyedRng select_rng(config.seed, Stream::kBackgroundSelect, {static_cast<std::uint64_t>(class_id)});
  result.backgrounds = select_backgrounds(class_id, std::move(candidates),
                                          static_cast<std::size_t>(config.resolved_background_count()),
                                          select_rng);

  // Cell sources for keys and backgrounds, in the order composites consume them.
  std::vector<CellSource> key_pool;
  for (const auto& p : result.keys.patches) {
    key_pool.push_back({&p.crop, p.rect.source_image_id, p.rect, p.source_path.string()});
  }
  if (config.shuffle_keys) {
    KeyedRng shuffle_rng(config.seed, Stream::kKeyShuffle, {static_cast<std::uint64_t>(class_id)});
    shuffle_rng.shuffle(key_pool);
  }
  std::vector<CellSource> background_pool;
  for (const auto& b : result.backgrounds.images) {
    background_pool.push_back({&b.image, b.image_id, std::nullopt, b.source_path.string()});
  }
  if (background_pool.empty() && config.backgrounds_per_composite > 0) {
    for (const auto& p : result.keys.patches) {
      const auto& src = sources[index_of.at(p.rect.source_image_id)];
      background_pool.push_back({&src.downsampled, src.image_id, std::nullopt, src.path.string()});
    }
  }
  KeyedRng draw_rng(config.seed, Stream::kBackgroundDraw, {static_cast<std::uint64_t>(class_id)});
  draw_rng.shuffle(background_pool);

  const auto m = static_cast<std::size_t>(config.patches_per_composite);
  const auto n = static_cast<std::size_t>(config.backgrounds_per_composite);
  result.composites.resize(static_cast<std::size_t>(config.ipc));
  parallel_for(result.composites.size(), workers, [&](std::size_t j) {
    std::vector<CellSource> keys, backgrounds;
    for (std::size_t t = 0; t < m; ++t) keys.push_back(key_pool[(m * j + t) % key_pool.size()]);
    for (std::size_t t = 0; t < n; ++t) backgrounds.push_back(background_pool[(n * j + t) % background_pool.size()]);
    DistilledImage image = compose(keys, backgrounds, config.out_height, config.out_width);
    image.class_id = class_id;
    image.index = static_cast<int>(j);
    result.composites[j] = std::move(image);
  });
  return result;
}

DistillSummary distill_dataset(const DatasetManifest& manifest, const AttentionProvider& provider,
                               const DistillConfig& config, const fs::path& out_dir, unsigned workers,
                               const LogFn& log, const nlohmann::ordered_json& extra_config) {
  config.validate();
  const ModelConfig& model = provider.config();
  const auto groups = manifest.by_class();
  DistillSummary summary;
  std::string provenance;

  for (int c = 0; c < manifest.num_classes(); ++c) {
    const auto& members = groups[static_cast<std::size_t>(c)];
    const std::string context = class_context(c, manifest.class_names[static_cast<std::size_t>(c)]);
    if (members.empty()) throw Error(context + " has no images");

    std::vector<SourceImage> sources(members.size());
    ClassDistillation result;
    try {
      parallel_for(members.size(), workers, [&](std::size_t i) {
        sources[i] = prepare_source(manifest.records[members[i]], model);
      });
      result = distill_class(c, sources, provider, config, workers);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(context + ": " + e.what());
    }

    std::vector<Bytes> encoded(result.composites.size());
    parallel_for(encoded.size(), workers, [&](std::size_t j) {
      encoded[j] = encode_png(result.composites[j].composite);
    });
    for (std::size_t j = 0; j < encoded.size(); ++j) {
      const std::string rel = std::to_string(c) + "/" + std::to_string(j) + ".png";
      write_file(out_dir / rel, encoded[j]);
      summary.written.push_back(out_dir / rel);
      provenance += provenance_json(result.composites[j], rel).dump() + "\n";
    }
    summary.classes += 1;
    summary.composites += static_cast<int>(encoded.size());
    if (log) {
      log(context + ": " + std::to_string(members.size()) + " images, " +
          std::to_string(result.keys.patches.size()) + " key patches, " +
          std::to_string(result.backgrounds.images.size()) + " backgrounds, " +
          std::to_string(encoded.size()) + " composites");
    }
  }

  const std::string prov_path = (out_dir / "provenance.jsonl").string();
  write_file(out_dir / "provenance.jsonl", std::span(reinterpret_cast<const std::uint8_t*>(provenance.data()), provenance.size()));
  summary.written.push_back(prov_path);

  nlohmann::ordered_json cfg = config.to_json();
  cfg["model"] = model.to_metadata();
  for (const auto& [key, value] : extra_config.items()) cfg[key] = value;
  const std::string cfg_text = cfg.dump(2) + "\n";
  write_file(out_dir / "config.json", std::span(reinterpret_cast<const std::uint8_t*>(cfg_text.data()), cfg_text.size()));
  summary.written.push_back(out_dir / "config.json");
  return summary;
}

nlohmann::ordered_json scored_image_json(const ScoredImage& s) {
  return {{"image_id", s.image_id},
          {"confidence", s.confidence},
          {"area_score", s.area_score},
          {"realism", s.realism},
          {"center", {s.center.row, s.center.col}},
          {"window", {s.window.height, s.window.width}}};
}

nlohmann::ordered_json provenance_json(const DistilledImage& image, const std::string& image_path) {
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& cell : image.cells) {
    nlohmann::ordered_json j = rect_json(cell.cell_rect);
    j["kind"] = cell.kind == CellKind::kKey ? "key" : "background";
    j["source_image_id"] = cell.source_image_id;
    j["source_path"] = fs::path(cell.source_path).generic_string();
    if (cell.source_rect) {
      j["source_rect"] = rect_json(*cell.source_rect);
    } else {
      j["source_rect"] = "downsampled-full";
    }
    cells.push_back(std::move(j));
  }
  return {{"image", image_path}, {"class_id", image.class_id}, {"index", image.index}, {"cells", cells}};
}

}  // namespace focusdd

#include "focusdd/labeler.hpp"

#include <algorithm>
#include <fstream>

#include "focusdd/codec.hpp"
#include "focusdd/parallel.hpp"

namespace focusdd {
namespace fs = std::filesystem;

std::vector<RegionSoftLabel> relabel(const AttentionProvider& teacher, const ImageTensor& composite,
                                     std::span<const PixelRect> regions) {
  const ModelConfig& cfg = teacher.config();
  std::vector<RegionSoftLabel> labels;
  labels.reserve(regions.size());
  for (const auto& region : regions) {
    if (!region.inside(composite.width(), composite.height())) {
      throw DimensionError("relabel region (" + std::to_string(region.x0) + ", " + std::to_string(region.y0) +
                           ", " + std::to_string(region.width) + "x" + std::to_string(region.height) +
                           ") outside the composite");
    }
    const ImageTensor patch =
        resize(convert_channels(crop(composite, region), cfg.channels), cfg.input_height, cfg.input_width);
    labels.push_back({region, teacher.evaluate(patch).prediction.probabilities()});
  }
  return labels;
}

std::vector<PixelRect> cell_regions(const DistilledImage& image) {
  std::vector<PixelRect> out;
  for (const auto& cell : image.cells) out.push_back(cell.cell_rect);
  return out;
}

std::vector<PixelRect> random_regions(int width, int height, int count, double min_scale, double max_scale,
                                      KeyedRng& rng) {
  if (!(min_scale > 0.0 && min_scale <= max_scale && max_scale <= 1.0)) {
    throw ValidationError("random crop scales must satisfy 0 < min <= max <= 1");
  }
  std::vector<PixelRect> out;
  for (int i = 0; i < count; ++i) {
    const double s = min_scale + (max_scale - min_scale) * rng.uniform();
    PixelRect r;
    r.width = std::clamp(static_cast<int>(std::lround(s * width)), 1, width);
    r.height = std::clamp(static_cast<int>(std::lround(s * height)), 1, height);
    r.x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - r.width + 1)));
    r.y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - r.height + 1)));
    out.push_back(r);
  }
  return out;
}

DftManifest dft_sample(const DatasetManifest& manifest, int ipc, std::uint64_t seed, int epoch) {
  if (ipc < 1) throw ValidationError("ipc must be >= 1");
  DftManifest dft;
  dft.epoch = epoch;
  dft.seed = seed;
  const auto groups = manifest.by_class();
  for (std::size_t c = 0; c < groups.size(); ++c) {
    KeyedRng rng(seed, Stream::kDftSample, {static_cast<std::uint64_t>(epoch), c});
    std::vector<ImageId> ids;
    for (auto i : groups[c]) ids.push_back(manifest.records[i].image_id);
    // Partial Fisher-Yates: the first `take` slots become the draw.
    const std::size_t take = std::min(ids.size(), static_cast<std::size_t>(ipc));
    for (std::size_t k = 0; k < take; ++k) {
      std::swap(ids[k], ids[k + rng.below(ids.size() - k)]);
    }
    ids.resize(take);
    dft.per_class.push_back(std::move(ids));
  }
  return dft;
}

std::string dft_to_jsonl(const DftManifest& dft) {
  std::string out;
  for (std::size_t c = 0; c < dft.per_class.size(); ++c) {
    for (auto id : dft.per_class[c]) {
      nlohmann::ordered_json j{{"class_id", c}, {"image_id", id}};
      out += j.dump() + "\n";
    }
  }
  return out;
}

std::size_t relabel_directory(const fs::path& distilled_dir, const AttentionProvider& teacher,
                              const RelabelOptions& options, unsigned workers) {
  const fs::path prov_path = distilled_dir / "provenance.jsonl";
  std::ifstream in(prov_path);
  if (!in) throw Error("cannot open " + prov_path.string());

  struct Job {
    std::string image;
    std::vector<PixelRect> regions;
  };
  std::vector<Job> jobs;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    const std::string where = prov_path.string() + ":" + std::to_string(line_no);
    try {
      const auto j = nlohmann::json::parse(line);
      Job job{j.at("image").get<std::string>(), {}};
      for (const auto& cell : j.at("cells")) {
        job.regions.push_back({cell.at("x").get<int>(), cell.at("y").get<int>(), cell.at("w").get<int>(),
                               cell.at("h").get<int>(), 0});
      }
      jobs.push_back(std::move(job));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
  }

  std::vector<std::string> lines(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const ImageTensor composite = load_image(distilled_dir / jobs[i].image);
    std::vector<PixelRect> regions = jobs[i].regions;
    if (options.random_crops > 0) {
      KeyedRng rng(options.seed, Stream::kRandomCrop, {i});
      regions = random_regions(composite.width(), composite.height(), options.random_crops, options.min_scale,
                               options.max_scale, rng);
    }
    nlohmann::ordered_json out{{"image", jobs[i].image}, {"regions", nlohmann::ordered_json::array()}};
    for (const auto& label : relabel(teacher, composite, regions)) {
      nlohmann::ordered_json r{{"x", label.region.x0}, {"y", label.region.y0},
                               {"w", label.region.width}, {"h", label.region.height}};
      r["label"] = std::vector<float>(label.label.data(), label.label.data() + label.label.size());
      out["regions"].push_back(std::move(r));
    }
    lines[i] = out.dump() + "\n";
  });

  std::string text;
  for (const auto& l : lines) text += l;
  write_file(distilled_dir / "labels.jsonl", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return jobs.size();
}

}  // namespace focusdd

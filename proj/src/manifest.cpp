#include "focusdd/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

namespace focusdd {
namespace fs = std::filesystem;

std::vector<std::vector<std::size_t>> DatasetManifest::by_class() const {
  std::vector<std::vector<std::size_t>> groups(class_names.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    groups.at(static_cast<std::size_t>(records[i].class_id)).push_back(i);
  }
  for (auto& g : groups) {
    std::sort(g.begin(), g.end(),
              [&](std::size_t a, std::size_t b) { return records[a].image_id < records[b].image_id; });
  }
  return groups;
}

DatasetManifest scan(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error("dataset root is not a readable directory: " + root.string());

  std::vector<fs::path> class_dirs;
  for (fs::directory_iterator it(root, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_directory()) class_dirs.push_back(it->path());
  }
  if (ec) throw Error("cannot read " + root.string() + ": " + ec.message());
  if (class_dirs.empty()) throw Error("dataset root has no class directories: " + root.string());
  std::sort(class_dirs.begin(), class_dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  DatasetManifest manifest;
  ImageId next_id = 0;
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    const std::string name = class_dirs[c].filename().string();
    manifest.class_names.push_back(name);
    std::vector<fs::path> files;
    for (fs::directory_iterator it(class_dirs[c], ec), end; !ec && it != end; it.increment(ec)) {
      if (!it->is_regular_file()) continue;
      std::string ext = it->path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (ext == ".png" || ext == ".ppm") {
        files.push_back(it->path());
      } else {
        ++manifest.skipped_files;
      }
    }
    if (ec) throw Error("cannot read " + class_dirs[c].string() + ": " + ec.message());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    if (files.empty()) manifest.warnings.push_back("class '" + name + "' has no images");
    for (auto& f : files) {
      manifest.records.push_back({std::move(f), static_cast<int>(c), name, next_id++});
    }
  }
  if (manifest.skipped_files > 0) {
    manifest.warnings.push_back("skipped " + std::to_string(manifest.skipped_files) +
                                " file(s) that are not .png or .ppm");
  }
  return manifest;
}

DatasetManifest read_manifest(const fs::path& jsonl_path) {
  std::ifstream in(jsonl_path);
  if (!in) throw Error("cannot open manifest " + jsonl_path.string());
  const fs::path base = jsonl_path.parent_path();
  DatasetManifest manifest;
  std::map<int, std::string> names;
  std::set<ImageId> seen;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = jsonl_path.string() + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("path") || !j["path"].is_string() || !j.contains("class_id") ||
        !j["class_id"].is_number_unsigned() || !j.contains("image_id") || !j["image_id"].is_number_unsigned()) {
      throw FormatError(where + ": expected {\"path\": string, \"class_id\": uint, \"image_id\": uint}");
    }
    ManifestRecord r;
    r.path = j["path"].get<std::string>();
    if (r.path.is_relative()) r.path = base / r.path;
    r.class_id = j["class_id"].get<int>();
    r.image_id = j["image_id"].get<ImageId>();
    if (!seen.insert(r.image_id).second) {
      throw FormatError(where + ": duplicate image_id " + std::to_string(r.image_id));
    }
    auto& name = names[r.class_id];
    if (j.contains("class_name") && j["class_name"].is_string()) name = j["class_name"].get<std::string>();
    manifest.records.push_back(std::move(r));
  }
  if (manifest.records.empty()) throw Error("manifest " + jsonl_path.string() + " lists no images");
  const int num_classes = names.rbegin()->first + 1;
  for (int c = 0; c < num_classes; ++c) {
    auto it = names.find(c);
    manifest.class_names.push_back(it == names.end() || it->second.empty() ? std::to_string(c) : it->second);
    if (it == names.end()) manifest.warnings.push_back("class " + std::to_string(c) + " has no images");
  }
  for (auto& r : manifest.records) r.class_name = manifest.class_names[static_cast<std::size_t>(r.class_id)];
  return manifest;
}

std::string manifest_to_jsonl(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& r : manifest.records) {
    nlohmann::ordered_json j;
    j["path"] = r.path.generic_string();
    j["class_id"] = r.class_id;
    j["image_id"] = r.image_id;
    j["class_name"] = r.class_name;
    out += j.dump() + "\n";
  }
  return out;
}

DatasetManifest load_dataset(const fs::path& source) {
  return fs::is_directory(source) ? scan(source) : read_manifest(source);
}

}  // namespace focusdd

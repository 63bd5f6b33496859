#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "focusdd/image.hpp"

namespace focusdd {

struct ManifestRecord {
  std::filesystem::path path;
  int class_id = 0;
  std::string class_name;
  ImageId image_id = 0;

  bool operator==(const ManifestRecord&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;
  std::vector<std::string> class_names;  // indexed by class_id
  std::size_t skipped_files = 0;
  std::vector<std::string> warnings;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  /// Record indices per class, each list in ascending image_id order.
  std::vector<std::vector<std::size_t>> by_class() const;
};

/// Scans root/<class_name>/<file>. Classes are sorted lexicographically and numbered
/// from 0; image ids run over (class, file name) order. Only .png and .ppm are taken,
/// everything else is counted in skipped_files.
DatasetManifest scan(const std::filesystem::path& root);

/// JSON-lines with one {"path", "class_id", "image_id"[, "class_name"]} per line.
/// Relative paths resolve against the manifest's directory.
DatasetManifest read_manifest(const std::filesystem::path& jsonl_path);
std::string manifest_to_jsonl(const DatasetManifest& manifest);

/// A directory is scanned, anything else is read as a JSON-lines manifest.
DatasetManifest load_dataset(const std::filesystem::path& source);

}  // namespace focusdd

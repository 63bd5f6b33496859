#include "focusdd/ntf.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>

#include <nlohmann/json.hpp>

namespace focusdd {
namespace {

constexpr char kMagic[8] = {'F', 'D', 'D', 'N', 'T', 'F', '0', '1'};
constexpr const char* kMetadataKey = "__metadata__";

void append_f32(Bytes& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

float read_f32(const std::uint8_t* p) {
  const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                             (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
  return std::bit_cast<float>(bits);
}

std::uint64_t checked_u64(const nlohmann::json& j, const std::string& what) {
  if (!j.is_number_unsigned()) throw FormatError("NTF: " + what + " must be a non-negative integer");
  return j.get<std::uint64_t>();
}

}  // namespace

Bytes serialize_ntf(const ModelWeights& weights) {
  nlohmann::json header = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : weights.tensors) {
    if (name == kMetadataKey) throw ValidationError("NTF: tensor name collides with metadata key");
    if (static_cast<std::int64_t>(tensor.values.size()) != tensor.element_count()) {
      throw DimensionError("NTF: tensor '" + name + "' value count does not match its shape");
    }
    const std::uint64_t length = 4 * tensor.values.size();
    header[name] = {{"dtype", "f32"}, {"length", length}, {"offset", offset}, {"shape", tensor.shape}};
    offset += length;
  }
  header[kMetadataKey] = weights.metadata;
  const std::string text = header.dump();

  Bytes out(kMagic, kMagic + 8);
  const auto len = static_cast<std::uint32_t>(text.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const auto& [name, tensor] : weights.tensors) {
    for (float v : tensor.values) append_f32(out, v);
  }
  return out;
}

ModelWeights parse_ntf(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw FormatError("NTF: bad magic");
  }
  const std::uint64_t header_len = std::uint64_t{bytes[8]} | (std::uint64_t{bytes[9]} << 8) |
                                   (std::uint64_t{bytes[10]} << 16) | (std::uint64_t{bytes[11]} << 24);
  if (header_len > bytes.size() - 12) {
    throw FormatError("NTF: header length " + std::to_string(header_len) + " runs past end of file");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("NTF: malformed header: ") + e.what());
  }
  if (!header.is_object()) throw FormatError("NTF: header is not a JSON object");

  const std::span<const std::uint8_t> payload = bytes.subspan(12 + header_len);
  ModelWeights weights;
  struct Extent {
    std::uint64_t begin, end;
    std::string name;
  };
  std::vector<Extent> extents;

  for (const auto& [name, entry] : header.items()) {
    if (name == kMetadataKey) {
      if (!entry.is_object()) throw FormatError("NTF: metadata must be an object");
      for (const auto& [key, value] : entry.items()) {
        if (!value.is_string()) throw FormatError("NTF: metadata '" + key + "' is not a string");
        weights.metadata[key] = value.get<std::string>();
      }
      continue;
    }
    if (!entry.is_object() || !entry.contains("dtype") || !entry.contains("shape") ||
        !entry.contains("offset") || !entry.contains("length")) {
      throw FormatError("NTF: tensor '" + name + "' entry is incomplete");
    }
    if (entry["dtype"] != "f32") throw FormatError("NTF: tensor '" + name + "' has unsupported dtype");
    if (!entry["shape"].is_array()) throw FormatError("NTF: tensor '" + name + "' shape is not an array");

    Tensor tensor;
    std::uint64_t count = 1;
    for (const auto& dim : entry["shape"]) {
      const std::uint64_t d = checked_u64(dim, "shape of '" + name + "'");
      if (d != 0 && count > std::numeric_limits<std::uint64_t>::max() / 8 / d) {
        throw FormatError("NTF: tensor '" + name + "' shape overflows");
      }
      count *= d;
      tensor.shape.push_back(static_cast<std::int64_t>(d));
    }
    const std::uint64_t offset = checked_u64(entry["offset"], "offset of '" + name + "'");
    const std::uint64_t length = checked_u64(entry["length"], "length of '" + name + "'");
    if (length != 4 * count) {
      throw FormatError("NTF: tensor '" + name + "' length " + std::to_string(length) +
                        " disagrees with its shape");
    }
    if (offset > payload.size() || length > payload.size() - offset) {
      throw FormatError("NTF: tensor '" + name + "' extent [" + std::to_string(offset) + ", +" +
                        std::to_string(length) + ") exceeds payload of " +
                        std::to_string(payload.size()) + " bytes");
    }
    tensor.values.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) tensor.values[i] = read_f32(&payload[offset + 4 * i]);
    extents.push_back({offset, offset + length, name});
    weights.tensors.emplace(name, std::move(tensor));
  }

  std::sort(extents.begin(), extents.end(),
            [](const Extent& a, const Extent& b) { return a.begin < b.begin; });
  std::uint64_t covered = 0;
  for (std::size_t i = 0; i < extents.size(); ++i) {
    if (i > 0 && extents[i].begin < extents[i - 1].end && extents[i].end > extents[i].begin) {
      throw FormatError("NTF: tensors '" + extents[i - 1].name + "' and '" + extents[i].name + "' overlap");
    }
    covered = std::max(covered, extents[i].end);
  }
  if (covered != payload.size()) {
    throw FormatError("NTF: payload is " + std::to_string(payload.size()) + " bytes but tensors cover " +
                      std::to_string(covered));
  }
  return weights;
}

void save_weights(const ModelWeights& weights, const std::filesystem::path& path) {
  write_file(path, serialize_ntf(weights));
}

ModelWeights load_weights(const std::filesystem::path& path) {
  try {
    return parse_ntf(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace focusdd

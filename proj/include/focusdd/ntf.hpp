#pragma once

#include <filesystem>

#include "focusdd/codec.hpp"
#include "focusdd/vit.hpp"

namespace focusdd {

/// NTF v1 named-tensor container:
///
///   bytes 0..7    magic "FDDNTF01"
///   bytes 8..11   header length L, little-endian u32
///   bytes 12..    L bytes of UTF-8 JSON: { name: {"dtype": "f32", "shape": [...],
///                 "offset": byte offset into payload, "length": byte count}, ...,
///                 "__metadata__": {string: string} }
///   then          raw little-endian f32 payload
///
/// The loader rejects a bad magic, a header running past the file, unknown dtypes,
/// extents that overflow or overlap, a length that disagrees with the shape, and a
/// payload that is not exactly covered up to its last extent.
Bytes serialize_ntf(const ModelWeights& weights);
ModelWeights parse_ntf(std::span<const std::uint8_t> bytes);

void save_weights(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path);

}  // namespace focusdd

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "focusdd/image.hpp"

namespace focusdd {

using Bytes = std::vector<std::uint8_t>;

enum class ImageFormat { kPng, kPnm };

// PNG: 8-bit grayscale or RGB, Adam7 accepted on decode; encode is non-interlaced with
// filter type 0 on every row.
ImageTensor decode_png(std::span<const std::uint8_t> bytes);
Bytes encode_png(const ImageTensor& image);

// Binary PNM: P5 (gray) or P6 (RGB), maxval 255.
ImageTensor decode_pnm(std::span<const std::uint8_t> bytes);
Bytes encode_pnm(const ImageTensor& image);

/// Sniffs the signature and dispatches.
ImageTensor decode_image(std::span<const std::uint8_t> bytes);
Bytes encode_image(const ImageTensor& image, ImageFormat format = ImageFormat::kPng);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
ImageTensor load_image(const std::filesystem::path& path);

}  // namespace focusdd

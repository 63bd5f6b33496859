#include <array>
#include <cstring>
#include <fstream>
#include <string>

#include <zlib.h>

#include "focusdd/codec.hpp"

namespace focusdd {
namespace {

constexpr std::array<std::uint8_t, 8> kSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

void put_be32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(Bytes& out, const char* type, const Bytes& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + type_at, static_cast<uInt>(4 + data.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

std::uint8_t paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
  if (pb <= pc) return static_cast<std::uint8_t>(b);
  return static_cast<std::uint8_t>(c);
}

// Reverses the per-row filters of one (sub)image in place; `data` points at its first filter byte.
void unfilter(std::uint8_t* data, std::size_t width, std::size_t height, int bpp, std::size_t offset) {
  const std::size_t stride = width * bpp;
  std::uint8_t* prev = nullptr;
  for (std::size_t y = 0; y < height; ++y) {
    std::uint8_t* row = data + y * (stride + 1);
    const std::uint8_t filter = row[0];
    std::uint8_t* px = row + 1;
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<std::size_t>(bpp) ? px[i - bpp] : 0;
      const int b = prev ? prev[i] : 0;
      const int c = (prev && i >= static_cast<std::size_t>(bpp)) ? prev[i - bpp] : 0;
      switch (filter) {
        case 0: break;
        case 1: px[i] = static_cast<std::uint8_t>(px[i] + a); break;
        case 2: px[i] = static_cast<std::uint8_t>(px[i] + b); break;
        case 3: px[i] = static_cast<std::uint8_t>(px[i] + ((a + b) >> 1)); break;
        case 4: px[i] = static_cast<std::uint8_t>(px[i] + paeth(a, b, c)); break;
        default:
          throw FormatError("PNG: invalid filter type " + std::to_string(filter) + " in row " +
                            std::to_string(y) + " of image data at offset " +
                            std::to_string(offset + y * (stride + 1)));
      }
    }
    prev = px;
  }
}

Bytes inflate_all(const Bytes& compressed, std::size_t expected) {
  Bytes out(expected);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw FormatError("PNG: zlib initialisation failed");
  zs.next_in = const_cast<Bytef*>(compressed.data());
  zs.avail_in = static_cast<uInt>(compressed.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) {
    throw FormatError("PNG: image data inflates to " + std::to_string(produced) + " bytes, expected " +
                      std::to_string(expected) + (rc == Z_DATA_ERROR ? " (corrupt deflate stream)" : ""));
  }
  return out;
}

}  // namespace

ImageTensor decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSignature.size() ||
      std::memcmp(bytes.data(), kSignature.data(), kSignature.size()) != 0) {
    throw FormatError("PNG: bad signature at offset 0");
  }
  std::size_t pos = kSignature.size();
  std::uint32_t width = 0, height = 0;
  int channels = 0;
  bool interlaced = false, have_header = false, have_end = false;
  Bytes idat;

  while (!have_end) {
    if (pos + 12 > bytes.size()) {
      throw FormatError("PNG: truncated chunk header at offset " + std::to_string(pos));
    }
    const std::uint32_t length = read_be32(&bytes[pos]);
    if (length > 0x7FFFFFFFu || pos + 12 + length > bytes.size()) {
      throw FormatError("PNG: truncated chunk at offset " + std::to_string(pos) + " (declares " +
                        std::to_string(length) + " data bytes)");
    }
    const std::string type(reinterpret_cast<const char*>(&bytes[pos + 4]), 4);
    const std::uint8_t* data = &bytes[pos + 8];
    const std::uint32_t stored_crc = read_be32(data + length);
    const auto crc = static_cast<std::uint32_t>(crc32(0L, &bytes[pos + 4], length + 4));
    if (crc != stored_crc) {
      throw FormatError("PNG: CRC mismatch in " + type + " chunk at offset " + std::to_string(pos));
    }

    if (type == "IHDR") {
      if (length != 13) throw FormatError("PNG: IHDR at offset " + std::to_string(pos) + " has wrong length");
      width = read_be32(data);
      height = read_be32(data + 4);
      const int depth = data[8];
      const int color = data[9];
      if (width == 0 || height == 0 || width > (1u << 24) || height > (1u << 24)) {
        throw FormatError("PNG: unsupported dimensions " + std::to_string(width) + "x" + std::to_string(height));
      }
      if (depth != 8) throw FormatError("PNG: unsupported bit depth " + std::to_string(depth));
      if (color == 0) {
        channels = 1;
      } else if (color == 2) {
        channels = 3;
      } else {
        throw FormatError("PNG: unsupported color type " + std::to_string(color));
      }
      if (data[10] != 0 || data[11] != 0 || data[12] > 1) {
        throw FormatError("PNG: unsupported compression/filter/interlace method in IHDR");
      }
      interlaced = data[12] == 1;
      have_header = true;
    } else if (!have_header) {
      throw FormatError("PNG: first chunk at offset " + std::to_string(pos) + " is " + type + ", not IHDR");
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data, data + length);
    } else if (type == "IEND") {
      have_end = true;
    } else if (type[0] >= 'A' && type[0] <= 'Z' && type != "PLTE") {
      throw FormatError("PNG: unsupported critical chunk " + type + " at offset " + std::to_string(pos));
    }
    pos += 12 + length;
  }
  if (idat.empty()) throw FormatError("PNG: no image data");

  ImageTensor image(static_cast<int>(width), static_cast<int>(height), channels);
  auto store = [&](std::size_t x, std::size_t y, const std::uint8_t* px) {
    for (int c = 0; c < channels; ++c) {
      image.at(static_cast<int>(y), static_cast<int>(x), c) = px[c];
    }
  };

  if (!interlaced) {
    const std::size_t stride = std::size_t{width} * channels;
    Bytes raw = inflate_all(idat, (stride + 1) * height);
    unfilter(raw.data(), width, height, channels, 0);
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) store(x, y, &raw[y * (stride + 1) + 1 + x * channels]);
    }
    return image;
  }

  // Adam7: pass origins and steps.
  constexpr int kStartX[7] = {0, 4, 0, 2, 0, 1, 0};
  constexpr int kStartY[7] = {0, 0, 4, 0, 2, 0, 1};
  constexpr int kStepX[7] = {8, 8, 4, 4, 2, 2, 1};
  constexpr int kStepY[7] = {8, 8, 8, 4, 4, 2, 2};
  std::size_t total = 0;
  std::array<std::size_t, 7> pw{}, ph{};
  for (int p = 0; p < 7; ++p) {
    pw[p] = width > static_cast<std::uint32_t>(kStartX[p]) ? (width - kStartX[p] + kStepX[p] - 1) / kStepX[p] : 0;
    ph[p] = height > static_cast<std::uint32_t>(kStartY[p]) ? (height - kStartY[p] + kStepY[p] - 1) / kStepY[p] : 0;
    if (pw[p] && ph[p]) total += (pw[p] * channels + 1) * ph[p];
  }
  Bytes raw = inflate_all(idat, total);
  std::size_t offset = 0;
  for (int p = 0; p < 7; ++p) {
    if (!pw[p] || !ph[p]) continue;
    const std::size_t stride = pw[p] * channels;
    unfilter(raw.data() + offset, pw[p], ph[p], channels, offset);
    for (std::size_t y = 0; y < ph[p]; ++y) {
      for (std::size_t x = 0; x < pw[p]; ++x) {
        store(kStartX[p] + x * kStepX[p], kStartY[p] + y * kStepY[p],
              &raw[offset + y * (stride + 1) + 1 + x * channels]);
      }
    }
    offset += (stride + 1) * ph[p];
  }
  return image;
}

Bytes encode_png(const ImageTensor& image) {
  const int ch = image.channels();
  const std::size_t stride = static_cast<std::size_t>(image.width()) * ch;
  Bytes raw((stride + 1) * image.height());
  for (int y = 0; y < image.height(); ++y) {
    std::uint8_t* row = &raw[y * (stride + 1)];
    row[0] = 0;
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < ch; ++c) {
        row[1 + x * ch + c] = static_cast<std::uint8_t>(quantize_pixel(image.at(y, x, c)));
      }
    }
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  Bytes packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw Error("PNG: deflate failed");
  }
  packed.resize(packed_size);

  Bytes header;
  put_be32(header, static_cast<std::uint32_t>(image.width()));
  put_be32(header, static_cast<std::uint32_t>(image.height()));
  header.insert(header.end(), {8, static_cast<std::uint8_t>(ch == 3 ? 2 : 0), 0, 0, 0});

  Bytes out(kSignature.begin(), kSignature.end());
  put_chunk(out, "IHDR", header);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

ImageTensor decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes);
  }
  if (bytes.size() >= 1 && bytes[0] == kSignature[0]) return decode_png(bytes);
  throw FormatError("unrecognised image signature at offset 0");
}

Bytes encode_image(const ImageTensor& image, ImageFormat format) {
  return format == ImageFormat::kPng ? encode_png(image) : encode_pnm(image);
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error("read failed: " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

ImageTensor load_image(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace focusdd

#include <cctype>
#include <string>

#include "focusdd/codec.hpp"

namespace focusdd {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  int next_int() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1L << 24)) throw FormatError("PNM: header value too large at offset " + std::to_string(start));
      ++pos_;
    }
    if (pos_ == start) {
      throw FormatError(pos_ >= bytes_.size()
                            ? "PNM: truncated header at offset " + std::to_string(pos_)
                            : "PNM: expected a number at offset " + std::to_string(pos_));
    }
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("PNM: missing separator before raster at offset " + std::to_string(pos_));
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

ImageTensor decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("PNM: expected P5 or P6 magic at offset 0");
  }
  const int channels = bytes[1] == '6' ? 3 : 1;
  HeaderReader header(bytes);
  const int width = header.next_int();
  const int height = header.next_int();
  const int maxval = header.next_int();
  if (width < 1 || height < 1) throw FormatError("PNM: empty image");
  if (maxval != 255) throw FormatError("PNM: unsupported maxval " + std::to_string(maxval));
  const std::size_t start = header.raster_start();
  const std::size_t needed = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() < start + needed) {
    throw FormatError("PNM: truncated raster at offset " + std::to_string(bytes.size()) + " (expected " +
                      std::to_string(start + needed) + " bytes)");
  }
  ImageTensor image(width, height, channels);
  for (std::size_t i = 0; i < needed; ++i) image.pixels()[static_cast<Eigen::Index>(i)] = bytes[start + i];
  return image;
}

Bytes encode_pnm(const ImageTensor& image) {
  const std::string header = std::string(image.channels() == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(image.width()) + " " + std::to_string(image.height()) +
                             "\n255\n";
  Bytes out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(image.size()));
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    out.push_back(static_cast<std::uint8_t>(quantize_pixel(image.pixels()[i])));
  }
  return out;
}

}  // namespace focusdd

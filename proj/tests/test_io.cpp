#include <algorithm>
#include <cstring>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "doctest.h"
#include "focusdd/codec.hpp"
#include "focusdd/manifest.hpp"
#include "focusdd/ntf.hpp"
#include "focusdd/synthetic.hpp"
#include "support.hpp"

using namespace focusdd;
namespace fs = std::filesystem;

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_chunk(Bytes& out, const char* type, const Bytes& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  Bytes body(type, type + 4);
  body.insert(body.end(), data.begin(), data.end());
  out.insert(out.end(), body.begin(), body.end());
  put_u32(out, static_cast<std::uint32_t>(crc32(0, body.data(), static_cast<uInt>(body.size()))));
}

std::uint8_t paeth(int a, int b, int c) {
  const int p = a + b - c, pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  return static_cast<std::uint8_t>(pa <= pb && pa <= pc ? a : (pb <= pc ? b : c));
}

// Filters one pass of raw rows with the given filter type (0-4).
Bytes filter_rows(const std::vector<Bytes>& rows, int bpp, int type) {
  Bytes out;
  Bytes prev(rows.empty() ? 0 : rows[0].size(), 0);
  for (const auto& row : rows) {
    out.push_back(static_cast<std::uint8_t>(type));
    for (std::size_t i = 0; i < row.size(); ++i) {
      const int a = i >= static_cast<std::size_t>(bpp) ? row[i - bpp] : 0;
      const int b = prev[i];
      const int c = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
      int pred = 0;
      if (type == 1) pred = a;
      if (type == 2) pred = b;
      if (type == 3) pred = (a + b) / 2;
      if (type == 4) pred = paeth(a, b, c);
      out.push_back(static_cast<std::uint8_t>(row[i] - pred));
    }
    prev = row;
  }
  return out;
}

// Stand-alone PNG writer with optional Adam7 interlacing and a fixed filter type.
Bytes handmade_png(const ImageTensor& img, bool interlace, int filter) {
  const int ch = img.channels();
  Bytes raw;
  auto pass_rows = [&](int y0, int x0, int dy, int dx) {
    std::vector<Bytes> rows;
    for (int y = y0; y < img.height(); y += dy) {
      Bytes row;
      for (int x = x0; x < img.width(); x += dx) {
        for (int c = 0; c < ch; ++c) row.push_back(static_cast<std::uint8_t>(img.at(y, x, c)));
      }
      if (!row.empty()) rows.push_back(row);
    }
    const Bytes f = filter_rows(rows, ch, filter);
    raw.insert(raw.end(), f.begin(), f.end());
  };
  if (interlace) {
    const int sy[7] = {0, 0, 4, 0, 2, 0, 1}, sx[7] = {0, 4, 0, 2, 0, 1, 0};
    const int dy[7] = {8, 8, 8, 4, 4, 2, 2}, dx[7] = {8, 8, 4, 4, 2, 2, 1};
    for (int p = 0; p < 7; ++p) pass_rows(sy[p], sx[p], dy[p], dx[p]);
  } else {
    pass_rows(0, 0, 1, 1);
  }
  uLongf size = compressBound(static_cast<uLong>(raw.size()));
  Bytes z(size);
  REQUIRE(compress(z.data(), &size, raw.data(), static_cast<uLong>(raw.size())) == Z_OK);
  z.resize(size);

  Bytes out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  Bytes ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(img.width()));
  put_u32(ihdr, static_cast<std::uint32_t>(img.height()));
  ihdr.insert(ihdr.end(), {8, static_cast<std::uint8_t>(ch == 3 ? 2 : 0), 0, 0, static_cast<std::uint8_t>(interlace)});
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "tEXt", Bytes{'k', 0, 'v'});
  // Split the stream over two IDAT chunks.
  const std::size_t half = z.size() / 2;
  put_chunk(out, "IDAT", Bytes(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(half)));
  put_chunk(out, "IDAT", Bytes(z.begin() + static_cast<std::ptrdiff_t>(half), z.end()));
  put_chunk(out, "IEND", {});
  return out;
}

void touch_png(const fs::path& p, float value = 0.0f) {
  write_file(p, encode_png(ImageTensor(4, 4, 3, value)));
}

std::string what_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("PNM decode and round trip") {
  const Bytes p6 = {'P', '6', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n', 255, 0, 0};
  const ImageTensor px = decode_image(p6);
  REQUIRE(px.width() == 1);
  REQUIRE(px.channels() == 3);
  CHECK(px.at(0, 0, 0) == 255.0f);
  CHECK(px.at(0, 0, 1) == 0.0f);
  CHECK(px.at(0, 0, 2) == 0.0f);

  const Bytes p5 = {'P', '5', ' ', '#', 'c', '\n', '2', ' ', '1', ' ', '2', '5', '5', '\n', 7, 9};
  const ImageTensor gray = decode_pnm(p5);
  CHECK(gray.channels() == 1);
  CHECK(gray.at(0, 1, 0) == 9.0f);

  std::mt19937_64 gen(1);
  for (int ch : {1, 3}) {
    const ImageTensor img = test::random_image(gen, 13, 7, ch);
    CHECK(decode_image(encode_image(img, ImageFormat::kPnm)) == img);
  }
  const Bytes short_p6 = {'P', '6', '\n', '2', ' ', '2', '\n', '2', '5', '5', '\n', 1, 2, 3};
  CHECK(what_of([&] { decode_pnm(short_p6); }).find("offset") != std::string::npos);
  const Bytes maxval = {'P', '5', '\n', '1', ' ', '1', '\n', '6', '5', '5', '3', '5', '\n', 0, 0};
  CHECK_THROWS_AS(decode_pnm(maxval), FormatError);
}

TEST_CASE("PNG round trip and independent writer") {
  std::mt19937_64 gen(2);
  for (int t = 0; t < 10; ++t) {
    const int ch = t % 2 ? 3 : 1;
    const ImageTensor img = test::random_image(gen, 1 + static_cast<int>(gen() % 40), 1 + static_cast<int>(gen() % 40), ch);
    const Bytes encoded = encode_png(img);
    CHECK(decode_png(encoded) == img);
    CHECK(encode_png(decode_png(encoded)) == encoded);
    for (int filter = 0; filter < 5; ++filter) {
      CHECK(decode_png(handmade_png(img, false, filter)) == img);
      CHECK(decode_png(handmade_png(img, true, filter)) == img);
    }
  }
}

TEST_CASE("PNG corruption is reported with an offset") {
  std::mt19937_64 gen(3);
  const Bytes good = encode_png(test::random_image(gen, 16, 16, 3));
  const Bytes truncated(good.begin(), good.begin() + 40);
  const std::string msg = what_of([&] { decode_image(truncated); });
  CHECK(msg.find("offset 33") != std::string::npos);

  Bytes crc = good;
  crc[20] ^= 0x01;  // inside IHDR data
  CHECK(what_of([&] { decode_png(crc); }).find("CRC") != std::string::npos);

  Bytes sig = good;
  sig[1] = 'X';
  CHECK_THROWS_AS(decode_image(sig), FormatError);
  CHECK_THROWS_AS(decode_image(Bytes{}), FormatError);

  test::TempDir dir("png");
  write_file(dir.path() / "bad.png", truncated);
  CHECK(what_of([&] { load_image(dir.path() / "bad.png"); }).find("bad.png") != std::string::npos);
}

TEST_CASE("NTF round trip and validation") {
  ModelConfig cfg;
  cfg.depth = 1;
  cfg.heads = 2;
  cfg.embed_dim = 8;
  cfg.patch_size = 4;
  cfg.num_classes = 3;
  cfg.input_height = cfg.input_width = 8;
  const ModelWeights w = synthetic_weights(cfg, 11);
  const Bytes bytes = serialize_ntf(w);
  CHECK(parse_ntf(bytes) == w);
  CHECK(std::memcmp(bytes.data(), "FDDNTF01", 8) == 0);

  test::TempDir dir("ntf");
  save_weights(w, dir.path() / "w.ntf");
  CHECK(load_weights(dir.path() / "w.ntf") == w);

  Bytes magic = bytes;
  magic[3] = 'X';
  CHECK_THROWS_AS(parse_ntf(magic), FormatError);

  const std::uint32_t header_len = bytes[8] | (bytes[9] << 8) | (bytes[10] << 16) | (static_cast<std::uint32_t>(bytes[11]) << 24);
  auto header = nlohmann::json::parse(std::string(bytes.begin() + 12, bytes.begin() + 12 + header_len));
  const Bytes payload(bytes.begin() + 12 + header_len, bytes.end());
  auto rebuild = [&](const nlohmann::json& h, const Bytes& body) {
    const std::string text = h.dump();
    Bytes out(bytes.begin(), bytes.begin() + 8);
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(text.size() >> s));
    out.insert(out.end(), text.begin(), text.end());
    out.insert(out.end(), body.begin(), body.end());
    return out;
  };
  CHECK(parse_ntf(rebuild(header, payload)) == w);

  auto beyond = header;
  beyond["head.bias"]["offset"] = payload.size() + 4;
  CHECK_THROWS_AS(parse_ntf(rebuild(beyond, payload)), FormatError);

  auto overlap = header;
  overlap["head.bias"]["offset"] = header["cls_token"]["offset"];
  CHECK_THROWS_AS(parse_ntf(rebuild(overlap, payload)), FormatError);

  auto shape = header;
  shape["head.bias"]["shape"] = {4};
  CHECK_THROWS_AS(parse_ntf(rebuild(shape, payload)), FormatError);

  auto dtype = header;
  dtype["head.bias"]["dtype"] = "f64";
  CHECK_THROWS_AS(parse_ntf(rebuild(dtype, payload)), FormatError);

  Bytes trailing = payload;
  trailing.push_back(0);
  CHECK_THROWS_AS(parse_ntf(rebuild(header, trailing)), FormatError);

  Bytes long_header = bytes;
  long_header[11] = 0x7f;
  CHECK_THROWS_AS(parse_ntf(long_header), FormatError);
  CHECK_THROWS_AS(parse_ntf(Bytes(bytes.begin(), bytes.begin() + 10)), FormatError);
}

TEST_CASE("scan orders classes and images") {
  test::TempDir root("scan");
  for (const char* cls : {"dog", "cat", "emu"}) fs::create_directories(root.path() / cls);
  touch_png(root.path() / "dog" / "b.png");
  touch_png(root.path() / "dog" / "a.png");
  touch_png(root.path() / "cat" / "z.png");
  write_file(root.path() / "cat" / "notes.txt", Bytes{'x'});
  write_file(root.path() / "cat" / "y.ppm", encode_pnm(ImageTensor(4, 4, 3)));

  const DatasetManifest m = scan(root.path());
  CHECK(m.class_names == std::vector<std::string>{"cat", "dog", "emu"});
  REQUIRE(m.records.size() == 4);
  CHECK(m.records[0].path.filename() == "y.ppm");
  CHECK(m.records[1].path.filename() == "z.png");
  CHECK(m.records[2].path.filename() == "a.png");
  CHECK(m.records[2].class_id == 1);
  for (std::size_t i = 0; i < 4; ++i) CHECK(m.records[i].image_id == i);
  CHECK(m.skipped_files == 1);
  REQUIRE(m.warnings.size() == 2);
  CHECK(m.warnings[0].find("emu") != std::string::npos);
  CHECK(m.warnings[1].find("skipped 1") != std::string::npos);
  CHECK(m.by_class()[2].empty());

  // Same tree created in another order.
  test::TempDir other("scan2");
  for (const char* cls : {"emu", "dog", "cat"}) fs::create_directories(other.path() / cls);
  write_file(other.path() / "cat" / "y.ppm", encode_pnm(ImageTensor(4, 4, 3)));
  touch_png(other.path() / "dog" / "a.png");
  write_file(other.path() / "cat" / "notes.txt", Bytes{'x'});
  touch_png(other.path() / "cat" / "z.png");
  touch_png(other.path() / "dog" / "b.png");
  const DatasetManifest again = scan(other.path());
  CHECK(again.class_names == m.class_names);
  REQUIRE(again.records.size() == m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    CHECK(again.records[i].path.lexically_relative(other.path()) == m.records[i].path.lexically_relative(root.path()));
    CHECK(again.records[i].image_id == m.records[i].image_id);
    CHECK(again.records[i].class_id == m.records[i].class_id);
  }
  CHECK_THROWS_AS(scan(root.path() / "missing"), Error);
}

TEST_CASE("JSON-lines manifests") {
  test::TempDir root("manifest");
  touch_png(root.path() / "imgs" / "one.png");
  touch_png(root.path() / "imgs" / "two.png");
  const std::string text =
      "{\"path\": \"imgs/one.png\", \"class_id\": 1, \"image_id\": 7}\n"
      "\n"
      "{\"path\": \"imgs/two.png\", \"class_id\": 0, \"image_id\": 3, \"class_name\": \"zero\"}\n";
  write_file(root.path() / "m.jsonl", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  const DatasetManifest m = load_dataset(root.path() / "m.jsonl");
  REQUIRE(m.records.size() == 2);
  CHECK(m.num_classes() == 2);
  CHECK(m.class_names[0] == "zero");
  CHECK(m.records[0].path == root.path() / "imgs" / "one.png");
  CHECK(read_manifest(root.path() / "m.jsonl").records == m.records);

  const std::string round = manifest_to_jsonl(m);
  write_file(root.path() / "r.jsonl", std::span(reinterpret_cast<const std::uint8_t*>(round.data()), round.size()));
  CHECK(read_manifest(root.path() / "r.jsonl").records == m.records);

  const std::string dup = "{\"path\": \"a.png\", \"class_id\": 0, \"image_id\": 1}\n"
                          "{\"path\": \"b.png\", \"class_id\": 0, \"image_id\": 1}\n";
  write_file(root.path() / "dup.jsonl", std::span(reinterpret_cast<const std::uint8_t*>(dup.data()), dup.size()));
  CHECK_THROWS_AS(read_manifest(root.path() / "dup.jsonl"), Error);

  const std::string broken = "{\"path\": 3}\n";
  write_file(root.path() / "broken.jsonl", std::span(reinterpret_cast<const std::uint8_t*>(broken.data()), broken.size()));
  CHECK(what_of([&] { read_manifest(root.path() / "broken.jsonl"); }).find("broken.jsonl:1") != std::string::npos);
}

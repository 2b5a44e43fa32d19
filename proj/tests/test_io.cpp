#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <png.h>

#include "oracles.hpp"
#include "wavefuse/io.hpp"

using namespace wavefuse;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("wavefuse-io-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_png(const fs::path& p, std::uint32_t w, std::uint32_t h, bool rgb,
               const std::vector<std::uint8_t>& pixels) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = w;
  img.height = h;
  img.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  REQUIRE(png_image_write_to_file(&img, p.c_str(), 0, pixels.data(), 0, nullptr) != 0);
}

std::string message_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("images") {
  TempDir dir;

  SUBCASE("binary 2x2 pgm") {
    write_bytes(dir / "a.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x00\xff", 4));
    const FeatureMap m = load_image(dir / "a.pgm");
    CHECK(m.shape() == Shape{1, 2, 2});
    CHECK(m.values() == std::vector<float>{0.0f, 1.0f, 0.0f, 1.0f});
  }
  SUBCASE("ascii pgm with a comment") {
    write_bytes(dir / "b.pgm", "P2\n# made by hand\n2 2\n255\n0 255\n0 255\n");
    CHECK(load_image(dir / "b.pgm").values() == std::vector<float>{0.0f, 1.0f, 0.0f, 1.0f});
  }
  SUBCASE("binary ppm is planar after loading") {
    write_bytes(dir / "c.ppm", std::string("P6\n2 1\n255\n") + std::string("\xff\x00\x00\x00\x00\xff", 6));
    const FeatureMap m = load_image(dir / "c.ppm");
    CHECK(m.shape() == Shape{3, 1, 2});
    CHECK(m.values() == std::vector<float>{1.0f, 0.0f, 0.0f, 0.0f, 0.0f, 1.0f});
  }
  SUBCASE("rgb png 4x4") {
    std::vector<std::uint8_t> px(4 * 4 * 3);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i * 5);
    write_png(dir / "d.png", 4, 4, true, px);
    const FeatureMap m = load_image(dir / "d.png");
    CHECK(m.shape() == Shape{3, 4, 4});
    // Pixel (row 1, col 2), green channel.
    CHECK(m.at(1, 1, 2) == doctest::Approx(px[(1 * 4 + 2) * 3 + 1] / 255.0));
  }
  SUBCASE("gray png") {
    write_png(dir / "e.png", 3, 2, false, {0, 51, 102, 153, 204, 255});
    const FeatureMap m = load_image(dir / "e.png");
    CHECK(m.shape() == Shape{1, 2, 3});
    CHECK(m.at(0, 1, 2) == 1.0f);
    CHECK(m.at(0, 0, 1) == doctest::Approx(0.2));
  }
  SUBCASE("corrupt header") {
    write_bytes(dir / "f.pgm", "P5\n2 x\n255\n\x00\x00\x00\x00");
    CHECK(message_of([&] { load_image(dir / "f.pgm"); }).find("decode error") != std::string::npos);
    write_bytes(dir / "g.png", "\x89PNG\r\n\x1a\n garbage");
    CHECK_THROWS_AS(load_image(dir / "g.png"), Error);
  }
  SUBCASE("truncated pixels and unsupported formats") {
    write_bytes(dir / "h.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\xff", 2));
    CHECK_THROWS_AS(load_image(dir / "h.pgm"), Error);
    write_bytes(dir / "i.pgm", "P5\n2 2\n65535\n\x00\x00\x00\x00\x00\x00\x00\x00");
    CHECK_THROWS_AS(load_image(dir / "i.pgm"), Error);
    write_bytes(dir / "j.bmp", "BM not an image");
    CHECK_THROWS_AS(load_image(dir / "j.bmp"), Error);
    CHECK_THROWS_AS(load_image(dir / "missing.pgm"), Error);
  }
  SUBCASE("pnm save and reload") {
    const FeatureMap x(Shape{1, 2, 2}, {0.0f, 1.0f, 0.2f, 2.0f});
    save_pnm(dir / "k.pgm", x);
    const FeatureMap y = load_image(dir / "k.pgm");
    CHECK(y.at(0, 0, 1) == 1.0f);
    CHECK(y.at(0, 1, 1) == 1.0f);  // clamped
    CHECK(y.at(0, 1, 0) == doctest::Approx(51.0 / 255.0));
    CHECK_THROWS_AS(save_pnm(dir / "l.pgm", FeatureMap(Shape{2, 2, 2})), Error);
  }
}

TEST_CASE("tensor files") {
  TempDir dir;

  SUBCASE("bitwise roundtrip") {
    std::mt19937_64 gen(8);
    const FeatureMap x = oracle::random_map({3, 8, 8}, gen, -1e6f, 1e6f);
    CHECK(tensor_roundtrip(x, dir / "x.wmt") == x);
  }
  SUBCASE("byte layout") {
    write_tensor(dir / "t.wmt", Tensor{{1, 2}, {1.0f, -2.0f}});
    const std::string want = std::string("WMT1") + std::string("\x02\x00\x00\x00", 4) +
                             std::string("\x01\x00\x00\x00\x02\x00\x00\x00", 8) +
                             std::string("\x00\x00\x80\x3f\x00\x00\x00\xc0", 8);
    CHECK(read_bytes(dir / "t.wmt") == want);
  }
  SUBCASE("rank bounds") {
    CHECK_THROWS_AS(write_tensor(dir / "r5.wmt", Tensor{{1, 1, 1, 1, 1}, {0.0f}}), Error);
    CHECK_FALSE(fs::exists(dir / "r5.wmt"));
    CHECK_THROWS_AS(write_tensor(dir / "r0.wmt", Tensor{{}, {}}), Error);
    CHECK_THROWS_AS(write_tensor(dir / "bad.wmt", Tensor{{2, 2}, {0.0f}}), Error);
  }
  SUBCASE("empty and malformed files") {
    write_bytes(dir / "empty.wmt", "");
    CHECK(message_of([&] { read_tensor(dir / "empty.wmt"); }).find("magic") != std::string::npos);
    write_bytes(dir / "magic.wmt", "WMT2\x01\x00\x00\x00\x01\x00\x00\x00\x00\x00\x00\x00");
    CHECK(message_of([&] { read_tensor(dir / "magic.wmt"); }).find("magic") != std::string::npos);
    write_bytes(dir / "short.wmt", std::string("WMT1\x01\x00\x00\x00\x02\x00\x00\x00", 12) +
                                       std::string(4, '\0'));
    CHECK_THROWS_AS(read_tensor(dir / "short.wmt"), Error);
    write_bytes(dir / "long.wmt", std::string("WMT1\x01\x00\x00\x00\x01\x00\x00\x00", 12) +
                                      std::string(8, '\0'));
    CHECK_THROWS_AS(read_tensor(dir / "long.wmt"), Error);
    write_bytes(dir / "rank.wmt", std::string("WMT1\x05\x00\x00\x00", 8));
    CHECK_THROWS_AS(read_tensor(dir / "rank.wmt"), Error);
  }
  SUBCASE("dimension product overflow") {
    write_bytes(dir / "big.wmt", std::string("WMT1\x04\x00\x00\x00", 8) + std::string(16, '\xff'));
    CHECK(message_of([&] { read_tensor(dir / "big.wmt"); }).find("overflow") != std::string::npos);
  }
  SUBCASE("feature map views of tensors") {
    CHECK(to_feature_map(Tensor{{2, 3}, std::vector<float>(6, 1.0f)}).shape() == Shape{1, 2, 3});
    CHECK(to_feature_map(Tensor{{1, 2, 2, 2}, std::vector<float>(8, 1.0f)}).shape() == Shape{2, 2, 2});
    CHECK_THROWS_AS(to_feature_map(Tensor{{2, 2, 2, 2}, std::vector<float>(16, 1.0f)}), Error);
    CHECK_THROWS_AS(to_feature_map(Tensor{{4}, std::vector<float>(4, 1.0f)}), Error);
  }
  SUBCASE("load_input dispatches on the magic") {
    const FeatureMap x(Shape{1, 2, 2}, {0.0f, 0.5f, 0.25f, 1.0f});
    write_feature_map(dir / "in.bin", x);
    CHECK(load_input(dir / "in.bin") == x);
    write_bytes(dir / "in.pgm", std::string("P5\n1 1\n255\n\xff", 12));
    CHECK(load_input(dir / "in.pgm").values() == std::vector<float>{1.0f});
  }
}

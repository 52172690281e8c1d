#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "vroc/image.hpp"
#include "vroc/rng.hpp"

using namespace vroc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("vroc_img_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Image random_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Image img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (auto& b : img.rgb) b = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

}  // namespace

TEST_SUITE("image") {

TEST_CASE("png round trip preserves every byte") {
  const fs::path dir = temp_dir("png");
  Image img = random_image(37, 21, 5);
  const std::string path = (dir / "r.png").string();
  write_png(path, img);
  Image back = read_png(path);
  REQUIRE(back.width == img.width);
  REQUIRE(back.height == img.height);
  CHECK(back.rgb == img.rgb);
  fs::remove_all(dir);
}

TEST_CASE("read_png on a missing file raises IoError") {
  CHECK_THROWS_AS(read_png("/nonexistent/frame.png"), IoError);
}

TEST_CASE("png directory source lists frames in order") {
  const fs::path dir = temp_dir("dir");
  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.png", i);
    Image img = Image::filled(4, 4, static_cast<std::uint8_t>(i * 10), 0, 0);
    write_png((dir / name).string(), img);
  }
  auto src = open_png_dir(dir.string(), 8.0);
  REQUIRE(src->count() == 3);
  CHECK(src->fps() == 8.0);
  CHECK(src->frame(2).at(0, 0, 0) == 20);
  CHECK_THROWS_AS(src->frame(3), IndexOutOfRangeError);
  fs::remove_all(dir);
}

TEST_CASE("raw stream writer and source round trip") {
  const fs::path dir = temp_dir("raw");
  const std::string path = (dir / "s.rgb").string();
  Image a = random_image(8, 6, 9);
  Image b = random_image(8, 6, 10);
  {
    RawStreamWriter w(path, 8, 6, 8.0);
    w.append(a);
    w.append(b);
    w.close();
  }
  auto src = open_raw_stream(path);
  REQUIRE(src->count() == 2);
  CHECK(src->fps() == 8.0);
  CHECK(src->frame(0).rgb == a.rgb);
  CHECK(src->frame(1).rgb == b.rgb);
  fs::remove_all(dir);
}

TEST_CASE("downsample_box2 averages 2x2 blocks with half-up rounding") {
  Image img = Image::filled(2, 2, 0, 0, 0);
  img.at(0, 0, 0) = 10;
  img.at(1, 0, 0) = 20;
  img.at(0, 1, 0) = 30;
  img.at(1, 1, 0) = 41;  // sum 101 -> (101+2)/4 = 25
  Image out = downsample_box2(img);
  REQUIRE(out.width == 1);
  REQUIRE(out.height == 1);
  CHECK(out.at(0, 0, 0) == 25);
  CHECK(out.at(0, 0, 1) == 0);

  Image odd = Image::filled(3, 2, 0, 0, 0);
  CHECK_THROWS_AS(downsample_box2(odd), ShapeMismatchError);
}

TEST_CASE("to_gray maps white to 1 and black to 0") {
  Image img = Image::filled(2, 1, 255, 255, 255);
  img.at(1, 0, 0) = 0;
  img.at(1, 0, 1) = 0;
  img.at(1, 0, 2) = 0;
  auto g = to_gray(img);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 0.0);
}

}  // TEST_SUITE

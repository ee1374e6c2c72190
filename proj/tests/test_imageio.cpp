#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <png.h>

#include "bgd/error.hpp"
#include "bgd/imageio.hpp"
#include "oracles.hpp"

using namespace bgd;

namespace {

RgbImage random_rgb(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RgbImage img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

GrayImage ramp(int w, int h) {
  GrayImage g{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
  for (std::size_t i = 0; i < g.luma.size(); ++i) g.luma[i] = static_cast<double>(i % 251);
  return g;
}

Errc error_code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::parse;
}

void write_gray_png(const std::filesystem::path& path, int w, int h, std::uint8_t base) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(base + i % 7);
  REQUIRE(png_image_write_to_file(&image, path.c_str(), 0, px.data(), 0, nullptr));
}

}  // namespace

TEST_SUITE("imageio") {
  TEST_CASE("png round trip keeps dimensions and pixels") {
    oracle::TempDir dir;
    const auto img = random_rgb(256, 256, 1);
    save_png(img, dir.path() / "a.png");
    const auto back = load_image(dir.path() / "a.png");
    CHECK(back.width == 256);
    CHECK(back.height == 256);
    CHECK(back.pixels == img.pixels);
  }

  TEST_CASE("8x8 black image loads as 64 black pixels") {
    oracle::TempDir dir;
    save_png(RgbImage{8, 8, std::vector<std::uint8_t>(192, 0)}, dir.path() / "black.png");
    const auto img = load_image(dir.path() / "black.png");
    CHECK(img.pixel_count() == 64);
    CHECK(std::all_of(img.pixels.begin(), img.pixels.end(), [](auto v) { return v == 0; }));
  }

  TEST_CASE("images narrower than 8 pixels are rejected") {
    oracle::TempDir dir;
    save_png(random_rgb(7, 256, 2), dir.path() / "thin.png");
    CHECK(error_code_of([&] { load_image(dir.path() / "thin.png"); }) == Errc::too_small);
    CHECK(error_code_of([] { partition_blocks(GrayImage{8, 7, std::vector<double>(56)}); }) == Errc::too_small);
  }

  TEST_CASE("unreadable and corrupt files") {
    oracle::TempDir dir;
    CHECK(error_code_of([&] { load_image(dir.path() / "missing.png"); }) == Errc::io);
    std::ofstream(dir.path() / "junk.png") << "definitely not an image";
    CHECK(error_code_of([&] { load_image(dir.path() / "junk.png"); }) == Errc::decode);
    // Valid PNG signature followed by garbage.
    std::ofstream(dir.path() / "trunc.png", std::ios::binary) << "\x89PNG\r\n\x1a\n garbage";
    CHECK(error_code_of([&] { load_image(dir.path() / "trunc.png"); }) == Errc::decode);
  }

  TEST_CASE("gray sources are replicated across channels") {
    oracle::TempDir dir;
    write_gray_png(dir.path() / "g.png", 16, 9, 100);
    const auto img = load_image(dir.path() / "g.png");
    REQUIRE(img.pixel_count() == 144);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      CHECK(img.pixels[3 * i] == 100 + i % 7);
      CHECK(img.pixels[3 * i + 1] == img.pixels[3 * i]);
      CHECK(img.pixels[3 * i + 2] == img.pixels[3 * i]);
    }
  }

  TEST_CASE("luma uses BT.601 weights without rounding") {
    const RgbImage img{8, 8, [] {
                         std::vector<std::uint8_t> px(192, 0);
                         px[0] = px[1] = px[2] = 255;
                         px[3] = 255;
                         return px;
                       }()};
    const auto g = to_luma(img);
    CHECK(g.luma[0] == doctest::Approx(255.0).epsilon(1e-15));
    CHECK(g.luma[1] == doctest::Approx(76.245).epsilon(1e-15));
    CHECK(g.luma[2] == 0.0);
  }

  TEST_CASE("luma scales with the channels") {
    auto img = random_rgb(16, 16, 3);
    for (auto& p : img.pixels) p &= 0xfe;  // even values halve exactly
    auto half = img;
    for (auto& p : half.pixels) p /= 2;
    const auto a = to_luma(img), b = to_luma(half);
    for (std::size_t i = 0; i < a.luma.size(); ++i) CHECK(b.luma[i] == doctest::Approx(a.luma[i] / 2).epsilon(1e-12));
  }

  TEST_CASE("block counts follow floor arithmetic") {
    CHECK(partition_blocks(ramp(256, 256)).block_count() == 1024);
    const auto one = partition_blocks(ramp(8, 8));
    REQUIRE(one.block_count() == 1);
    for (int i = 0; i < 64; ++i) CHECK(one.blocks[0][i] == ramp(8, 8).luma[i]);
    const auto odd = partition_blocks(ramp(260, 259));
    CHECK(odd.block_count() == 1024);
    CHECK(odd.cropped_width() == 256);
    CHECK(odd.cropped_height() == 256);
  }

  TEST_CASE("blocks reassemble the cropped image exactly") {
    const auto img = ramp(43, 29);
    const auto grid = partition_blocks(img);
    REQUIRE(grid.blocks_x == 5);
    REQUIRE(grid.blocks_y == 3);
    for (int y = 0; y < grid.cropped_height(); ++y) {
      for (int x = 0; x < grid.cropped_width(); ++x) {
        const auto& block = grid.blocks[(y / 8) * grid.blocks_x + x / 8];
        CHECK(block[(y % 8) * 8 + x % 8] == img.at(y, x));
      }
    }
  }

  TEST_CASE("load, luma and partition are deterministic") {
    oracle::TempDir dir;
    save_png(random_rgb(40, 24, 4), dir.path() / "d.png");
    const auto a = partition_blocks(to_luma(load_image(dir.path() / "d.png")));
    const auto b = partition_blocks(to_luma(load_image(dir.path() / "d.png")));
    CHECK(a.blocks == b.blocks);
  }

  TEST_CASE("recompression writes a decodable baseline JPEG") {
    oracle::TempDir dir;
    save_png(random_rgb(64, 48, 5), dir.path() / "img.png");
    const auto out = recompress_jpeg(dir.path() / "img.png", 95, dir.path() / "out.jpg");
    const auto img = load_image(out);
    CHECK(img.width == 64);
    CHECK(img.height == 48);
    std::ifstream in(out, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(bytes.substr(0, 2) == "\xff\xd8");
    CHECK(bytes.find("\xff\xc0") != std::string::npos);  // SOF0: baseline
    CHECK(bytes.find("\xff\xc2") == std::string::npos);  // no progressive frame
    CHECK(!std::filesystem::exists(dir.path() / "out.jpg.tmp"));
  }

  TEST_CASE("quality factor outside 1..100 is rejected") {
    oracle::TempDir dir;
    save_png(random_rgb(16, 16, 6), dir.path() / "img.png");
    CHECK(error_code_of([&] { recompress_jpeg(dir.path() / "img.png", 0, dir.path() / "o.jpg"); }) ==
          Errc::out_of_range);
    CHECK(error_code_of([&] { recompress_jpeg(dir.path() / "img.png", 101, dir.path() / "o.jpg"); }) ==
          Errc::out_of_range);
  }

  TEST_CASE("quality 100 round trip stays within 2 luma levels on average") {
    oracle::TempDir dir;
    // A smooth natural-looking gradient plus mild texture.
    GrayImage g{128, 128, std::vector<double>(128 * 128)};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> n(-8, 8);
    for (int y = 0; y < 128; ++y) {
      for (int x = 0; x < 128; ++x) g.luma[y * 128 + x] = std::clamp(60 + x + 0.5 * y + n(rng), 0.0, 255.0);
    }
    const auto src = gray_to_rgb(g);
    save_png(src, dir.path() / "img.png");
    for (const auto sub : {ChromaSubsampling::s420, ChromaSubsampling::s444}) {
      recompress_jpeg(dir.path() / "img.png", 100, dir.path() / "img.jpg", sub);
      const auto a = to_luma(src), b = to_luma(load_image(dir.path() / "img.jpg"));
      double mad = 0;
      for (std::size_t i = 0; i < a.luma.size(); ++i) mad += std::abs(a.luma[i] - b.luma[i]);
      mad /= static_cast<double>(a.luma.size());
      MESSAGE(subsampling_name(sub), " mean absolute luma difference at qf 100: ", mad);
      CHECK(mad < 2.0);
    }
  }

  TEST_CASE("encoder identity names the codec") {
    CHECK(jpeg_encoder_identity().find("libjpeg") != std::string::npos);
    CHECK(std::string(subsampling_name(ChromaSubsampling::s420)) == "4:2:0");
    CHECK(std::string(subsampling_name(ChromaSubsampling::s444)) == "4:4:4");
  }
}

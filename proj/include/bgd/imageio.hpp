#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bgd {

inline constexpr int kBlockSize = 8;
inline constexpr int kBlockArea = kBlockSize * kBlockSize;

/// 8-bit interleaved RGB image, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

/// Real-valued luma image with values in [0, 255].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> luma;

  double at(int row, int col) const { return luma[static_cast<std::size_t>(row) * width + col]; }
};

using Block = std::array<double, kBlockArea>;

/// Non-overlapping 8x8 tiling of the top-left cropped region, raster order.
struct BlockGrid {
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<Block> blocks;

  std::size_t block_count() const { return blocks.size(); }
  int cropped_width() const { return blocks_x * kBlockSize; }
  int cropped_height() const { return blocks_y * kBlockSize; }
};

/// Decodes a PNG or baseline JPEG file. Gray sources are replicated to RGB.
/// Throws Error{io|decode|too_small}.
RgbImage load_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG.
void save_png(const RgbImage& img, const std::filesystem::path& path);

/// BT.601 luma, unrounded.
GrayImage to_luma(const RgbImage& img);

/// Replicates a gray image into RGB after rounding and clamping to [0, 255].
RgbImage gray_to_rgb(const GrayImage& img);

BlockGrid partition_blocks(const GrayImage& img);

enum class ChromaSubsampling { s420, s444 };

/// Encodes src as a baseline JFIF JPEG at IJG quality qf and writes it to dst.
std::filesystem::path recompress_jpeg(const std::filesystem::path& src, int qf,
                                      const std::filesystem::path& dst,
                                      ChromaSubsampling subsampling = ChromaSubsampling::s420);

/// In-memory variant used by recompress_jpeg.
std::vector<std::uint8_t> encode_jpeg(const RgbImage& img, int qf,
                                      ChromaSubsampling subsampling = ChromaSubsampling::s420);
RgbImage decode_jpeg(const std::vector<std::uint8_t>& bytes);

/// Encoder identity string, e.g. "libjpeg-turbo 2.1.2 (jpeg6b+ API 80)".
std::string jpeg_encoder_identity();
const char* subsampling_name(ChromaSubsampling subsampling);

}  // namespace bgd

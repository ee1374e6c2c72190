#include "bgd/imageio.hpp"

#include <cmath>
#include <csetjmp>
#include <cstdlib>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "bgd/error.hpp"

namespace bgd {
namespace {

constexpr double kWeightR = 0.299;
constexpr double kWeightG = 0.587;
constexpr double kWeightB = 0.114;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::io, "read failed: " + path.string());
  return bytes;
}

void check_size(int width, int height, const std::string& what) {
  if (width < kBlockSize || height < kBlockSize) {
    throw Error(Errc::too_small, what + ": " + std::to_string(width) + "x" + std::to_string(height) +
                                     " is smaller than 8x8");
  }
}

RgbImage decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(Errc::decode, std::string("png: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  RgbImage out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(Errc::decode, "png: " + msg);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silent(j_common_ptr, int) {}

}  // namespace

RgbImage decode_jpeg(const std::vector<std::uint8_t>& bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  jerr.base.emit_message = jpeg_silent;

  // Everything touched after setjmp lives in storage that outlives the jump.
  RgbImage out;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(Errc::decode, std::string("jpeg: ") + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.pixels.resize(out.pixel_count() * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

std::vector<std::uint8_t> encode_jpeg(const RgbImage& img, int qf, ChromaSubsampling subsampling) {
  if (qf < 1 || qf > 100) throw Error(Errc::out_of_range, "quality factor must be in [1, 100]");
  if (img.pixels.size() != img.pixel_count() * 3 || img.width <= 0 || img.height <= 0) {
    throw Error(Errc::invalid_argument, "malformed RGB image");
  }
  jpeg_compress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  jerr.base.emit_message = jpeg_silent;

  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw Error(Errc::encode, std::string("jpeg: ") + jerr.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, qf, TRUE);
  const int h = subsampling == ChromaSubsampling::s420 ? 2 : 1;
  cinfo.comp_info[0].h_samp_factor = h;
  cinfo.comp_info[0].v_samp_factor = h;
  for (int c = 1; c < 3; ++c) {
    cinfo.comp_info[c].h_samp_factor = 1;
    cinfo.comp_info[c].v_samp_factor = 1;
  }
  cinfo.dct_method = JDCT_ISLOW;
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPROW>(img.pixels.data() +
                                     static_cast<std::size_t>(cinfo.next_scanline) * img.width * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return out;
}

RgbImage load_image(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  static constexpr std::uint8_t kPngMagic[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  RgbImage img;
  if (bytes.size() >= sizeof kPngMagic && std::memcmp(bytes.data(), kPngMagic, sizeof kPngMagic) == 0) {
    img = decode_png(bytes);
  } else if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    img = decode_jpeg(bytes);
  } else {
    throw Error(Errc::decode, "unsupported image format: " + path.string());
  }
  check_size(img.width, img.height, path.string());
  return img;
}

void save_png(const RgbImage& img, const std::filesystem::path& path) {
  if (img.pixels.size() != img.pixel_count() * 3) throw Error(Errc::invalid_argument, "malformed RGB image");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.pixels.data(), 0, nullptr)) {
    throw Error(Errc::io, std::string("png write failed: ") + image.message);
  }
}

GrayImage to_luma(const RgbImage& img) {
  check_size(img.width, img.height, "to_luma");
  GrayImage out;
  out.width = img.width;
  out.height = img.height;
  out.luma.resize(img.pixel_count());
  const std::uint8_t* p = img.pixels.data();
  for (std::size_t i = 0; i < out.luma.size(); ++i, p += 3) {
    out.luma[i] = kWeightR * p[0] + kWeightG * p[1] + kWeightB * p[2];
  }
  return out;
}

RgbImage gray_to_rgb(const GrayImage& img) {
  RgbImage out;
  out.width = img.width;
  out.height = img.height;
  out.pixels.resize(img.luma.size() * 3);
  for (std::size_t i = 0; i < img.luma.size(); ++i) {
    double v = std::round(img.luma[i]);
    v = v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v);
    const auto byte = static_cast<std::uint8_t>(v);
    out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = byte;
  }
  return out;
}

BlockGrid partition_blocks(const GrayImage& img) {
  check_size(img.width, img.height, "partition_blocks");
  BlockGrid grid;
  grid.blocks_x = img.width / kBlockSize;
  grid.blocks_y = img.height / kBlockSize;
  grid.blocks.resize(static_cast<std::size_t>(grid.blocks_x) * grid.blocks_y);
  for (int by = 0; by < grid.blocks_y; ++by) {
    for (int bx = 0; bx < grid.blocks_x; ++bx) {
      Block& block = grid.blocks[static_cast<std::size_t>(by) * grid.blocks_x + bx];
      for (int r = 0; r < kBlockSize; ++r) {
        const double* src = img.luma.data() + static_cast<std::size_t>(by * kBlockSize + r) * img.width +
                            bx * kBlockSize;
        std::copy(src, src + kBlockSize, block.begin() + r * kBlockSize);
      }
    }
  }
  return grid;
}

std::filesystem::path recompress_jpeg(const std::filesystem::path& src, int qf,
                                      const std::filesystem::path& dst, ChromaSubsampling subsampling) {
  if (qf < 1 || qf > 100) throw Error(Errc::out_of_range, "quality factor must be in [1, 100]");
  const RgbImage img = load_image(src);
  const auto bytes = encode_jpeg(img, qf, subsampling);
  if (dst.has_parent_path()) std::filesystem::create_directories(dst.parent_path());
  // Write-then-rename so concurrent readers never observe a partial file.
  auto tmp = dst;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, dst, ec);
  if (ec) throw Error(Errc::io, "cannot rename to " + dst.string() + ": " + ec.message());
  return dst;
}

std::string jpeg_encoder_identity() {
#ifdef LIBJPEG_TURBO_VERSION
#define BGD_STR2(x) #x
#define BGD_STR(x) BGD_STR2(x)
  return std::string("libjpeg-turbo ") + BGD_STR(LIBJPEG_TURBO_VERSION) + " (API " +
         std::to_string(JPEG_LIB_VERSION) + ", islow DCT)";
#undef BGD_STR
#undef BGD_STR2
#else
  return "libjpeg (API " + std::to_string(JPEG_LIB_VERSION) + ", islow DCT)";
#endif
}

const char* subsampling_name(ChromaSubsampling subsampling) {
  return subsampling == ChromaSubsampling::s420 ? "4:2:0" : "4:4:4";
}

}  // namespace bgd

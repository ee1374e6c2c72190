#include "bgd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bgd/error.hpp"

namespace bgd {
namespace {

// basis[u][x] = a(u) cos((2x + 1) u pi / 16)
std::array<std::array<double, kBlockSize>, kBlockSize> make_dct_basis() {
  std::array<std::array<double, kBlockSize>, kBlockSize> basis{};
  for (int u = 0; u < kBlockSize; ++u) {
    const double a = u == 0 ? std::sqrt(1.0 / kBlockSize) : std::sqrt(2.0 / kBlockSize);
    for (int x = 0; x < kBlockSize; ++x) {
      basis[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / (2.0 * kBlockSize));
    }
  }
  return basis;
}

const auto& dct_basis() {
  static const auto basis = make_dct_basis();
  return basis;
}

std::array<std::pair<int, int>, kBlockArea> make_zigzag() {
  std::array<std::pair<int, int>, kBlockArea> order{};
  int row = 0;
  int col = 0;
  for (int n = 0; n < kBlockArea; ++n) {
    order[n] = {row, col};
    if ((row + col) % 2 == 0) {  // moving up-right
      if (col == kBlockSize - 1) {
        ++row;
      } else if (row == 0) {
        ++col;
      } else {
        --row;
        ++col;
      }
    } else {  // moving down-left
      if (row == kBlockSize - 1) {
        ++col;
      } else if (col == 0) {
        ++row;
      } else {
        ++row;
        --col;
      }
    }
  }
  return order;
}

constexpr std::array<int, kBlockArea> kLuminanceBase = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

void check_ac_index(int n) {
  if (n < 1 || n >= kBlockArea) throw Error(Errc::out_of_range, "AC frequency index must be in [1, 63], got " + std::to_string(n));
}

}  // namespace

BlockSpectrum dct2_block(const Block& block) {
  const auto& c = dct_basis();
  // Rows first: tmp = X * C^T, then out = C * tmp.
  std::array<double, kBlockArea> tmp{};
  for (int r = 0; r < kBlockSize; ++r) {
    for (int v = 0; v < kBlockSize; ++v) {
      double acc = 0.0;
      for (int x = 0; x < kBlockSize; ++x) acc += block[r * kBlockSize + x] * c[v][x];
      tmp[r * kBlockSize + v] = acc;
    }
  }
  BlockSpectrum out;
  for (int u = 0; u < kBlockSize; ++u) {
    for (int v = 0; v < kBlockSize; ++v) {
      double acc = 0.0;
      for (int y = 0; y < kBlockSize; ++y) acc += c[u][y] * tmp[y * kBlockSize + v];
      out.coeffs[u * kBlockSize + v] = acc;
    }
  }
  return out;
}

std::vector<BlockSpectrum> transform_blocks(const BlockGrid& grid) {
  std::vector<BlockSpectrum> out;
  out.reserve(grid.blocks.size());
  for (const auto& block : grid.blocks) out.push_back(dct2_block(block));
  return out;
}

std::pair<int, int> zigzag_index(int n) {
  static const auto order = make_zigzag();
  if (n < 0 || n >= kBlockArea) throw Error(Errc::out_of_range, "zig-zag index must be in [0, 63], got " + std::to_string(n));
  return order[n];
}

const std::array<int, kBlockArea>& luminance_base_table() { return kLuminanceBase; }

QuantTable quant_table(int qf) {
  if (qf < 1 || qf > 100) throw Error(Errc::out_of_range, "quality factor must be in [1, 100], got " + std::to_string(qf));
  // Integer scale, as in IJG jpeg_quality_scaling.
  const long scale = qf < 50 ? 5000 / qf : 200 - 2 * qf;
  QuantTable table;
  table.qf = qf;
  for (int i = 0; i < kBlockArea; ++i) {
    const long step = (kLuminanceBase[i] * scale + 50) / 100;
    table.steps[i] = static_cast<int>(std::clamp(step, 1L, 255L));
  }
  return table;
}

std::int32_t quantize_coefficient(double coeff, int step) {
  return static_cast<std::int32_t>(std::round(coeff / step));
}

QuantizedFrequency quantize_frequency(std::span<const BlockSpectrum> spectra, int n, const QuantTable& table) {
  check_ac_index(n);
  const auto [row, col] = zigzag_index(n);
  const int step = table.at(row, col);
  QuantizedFrequency out;
  out.n = n;
  out.qf = table.qf;
  out.values.reserve(spectra.size());
  for (const auto& s : spectra) out.values.push_back(quantize_coefficient(s.at(row, col), step));
  return out;
}

QuantizedFrequency quantize_frequency(const BlockGrid& grid, int n, const QuantTable& table) {
  check_ac_index(n);
  const auto spectra = transform_blocks(grid);
  return quantize_frequency(std::span<const BlockSpectrum>(spectra), n, table);
}

}  // namespace bgd

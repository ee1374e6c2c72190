#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bgd/imageio.hpp"

namespace bgd {

/// Orthonormal 2-D DCT-II coefficients of one block, raster order (row = vertical frequency).
struct BlockSpectrum {
  std::array<double, kBlockArea> coeffs{};

  double at(int row, int col) const { return coeffs[row * kBlockSize + col]; }
};

/// Quantization steps for one quality factor, raster order.
struct QuantTable {
  int qf = 0;
  std::array<int, kBlockArea> steps{};

  int at(int row, int col) const { return steps[row * kBlockSize + col]; }
};

/// Quantized coefficients c_{n,qf}(k) for every block k.
struct QuantizedFrequency {
  int n = 0;
  int qf = 0;
  std::vector<std::int32_t> values;
};

BlockSpectrum dct2_block(const Block& block);

/// DCTs of every block in a grid; computed once and shared across (n, qf) pairs.
std::vector<BlockSpectrum> transform_blocks(const BlockGrid& grid);

/// JPEG zig-zag scan position (row, col) of index n in [0, 63].
std::pair<int, int> zigzag_index(int n);

/// IJG-scaled luminance table (JPEG Annex K base) for qf in [1, 100].
QuantTable quant_table(int qf);

/// The unscaled Annex K luminance table, raster order.
const std::array<int, kBlockArea>& luminance_base_table();

/// Round half away from zero of coeff / step.
std::int32_t quantize_coefficient(double coeff, int step);

QuantizedFrequency quantize_frequency(std::span<const BlockSpectrum> spectra, int n, const QuantTable& table);
QuantizedFrequency quantize_frequency(const BlockGrid& grid, int n, const QuantTable& table);

}  // namespace bgd

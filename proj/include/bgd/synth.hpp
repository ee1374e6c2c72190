#pragma once

#include <cstdint>
#include <filesystem>

#include "bgd/imageio.hpp"

namespace bgd {

/// Separable 2-D AR(1) field x[i][j] = r x[i-1][j] + r x[i][j-1] - r^2 x[i-1][j-1] + e,
/// e ~ Laplace(0, 1), min-max stretched to [0, 255]. Stand-in for a natural photograph.
GrayImage natural_proxy(int width, int height, std::uint64_t seed, double rho = 0.95);

/// Uniform white noise low-pass filtered by the 3x3 binomial kernel, min-max stretched to [0, 255].
/// Stand-in for a generator built from short FIR convolutions.
GrayImage fir_proxy(int width, int height, std::uint64_t seed);

struct SyntheticCorpusSpec {
  int groups = 2;
  int images_per_group = 200;  // half natural (label 0), half FIR (label 1)
  int size = 256;
  std::uint64_t seed = 1;
};

/// Writes <dir>/g<k>/{nat,fir}_<i>.png and <dir>/manifest.csv; returns the manifest path.
std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticCorpusSpec& spec);

}  // namespace bgd

#include "bgd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "bgd/error.hpp"
#include "bgd/rng.hpp"

namespace bgd {
namespace {

constexpr int kBurnIn = 32;

GrayImage stretch(std::vector<double> field, int width, int height) {
  const auto [lo, hi] = std::minmax_element(field.begin(), field.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& v : field) v = range > 0.0 ? 255.0 * (v - min) / range : 0.0;
  return GrayImage{width, height, std::move(field)};
}

void check_dims(int width, int height) {
  if (width < kBlockSize || height < kBlockSize) throw Error(Errc::too_small, "synthetic image smaller than 8x8");
}

double laplace(RngStream& rng) {
  // Inverse CDF on u in (-1/2, 1/2).
  double u = rng.uniform() - 0.5;
  while (u == -0.5) u = rng.uniform() - 0.5;
  return u < 0.0 ? std::log1p(2.0 * u) : -std::log1p(-2.0 * u);
}

}  // namespace

GrayImage natural_proxy(int width, int height, std::uint64_t seed, double rho) {
  check_dims(width, height);
  RngStream rng(seed, 0x4e41);
  const int w = width + kBurnIn;
  const int h = height + kBurnIn;
  std::vector<double> x(static_cast<std::size_t>(w) * h, 0.0);
  auto at = [&](int i, int j) -> double& { return x[static_cast<std::size_t>(i) * w + j]; };
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double up = i > 0 ? at(i - 1, j) : 0.0;
      const double left = j > 0 ? at(i, j - 1) : 0.0;
      const double diag = i > 0 && j > 0 ? at(i - 1, j - 1) : 0.0;
      at(i, j) = rho * up + rho * left - rho * rho * diag + laplace(rng);
    }
  }
  std::vector<double> crop(static_cast<std::size_t>(width) * height);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) crop[static_cast<std::size_t>(i) * width + j] = at(i + kBurnIn, j + kBurnIn);
  }
  return stretch(std::move(crop), width, height);
}

GrayImage fir_proxy(int width, int height, std::uint64_t seed) {
  check_dims(width, height);
  RngStream rng(seed, 0x4649);
  const int w = width + 2;
  const int h = height + 2;
  std::vector<double> noise(static_cast<std::size_t>(w) * h);
  for (double& v : noise) v = rng.uniform();
  static constexpr double kKernel[3][3] = {{1, 2, 1}, {2, 4, 2}, {1, 2, 1}};
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      double acc = 0.0;
      for (int di = 0; di < 3; ++di) {
        for (int dj = 0; dj < 3; ++dj) acc += kKernel[di][dj] * noise[static_cast<std::size_t>(i + di) * w + j + dj];
      }
      out[static_cast<std::size_t>(i) * width + j] = acc / 16.0;
    }
  }
  return stretch(std::move(out), width, height);
}

std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticCorpusSpec& spec) {
  if (spec.groups < 1 || spec.images_per_group < 2 || spec.images_per_group % 2 != 0) {
    throw Error(Errc::invalid_argument, "need >= 1 group and an even number (>= 2) of images per group");
  }
  std::filesystem::create_directories(dir);
  const auto manifest_path = dir / "manifest.csv";
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest) throw Error(Errc::io, "cannot write " + manifest_path.string());
  manifest << "path,label,group\n";
  const int half = spec.images_per_group / 2;
  for (int g = 0; g < spec.groups; ++g) {
    const std::string group = "g" + std::to_string(g);
    std::filesystem::create_directories(dir / group);
    for (int i = 0; i < spec.images_per_group; ++i) {
      const bool natural = i < half;
      const int k = natural ? i : i - half;
      const std::uint64_t image_seed = derive_seed(spec.seed, static_cast<std::uint64_t>(g) * 1000003ULL + i);
      const GrayImage img =
          natural ? natural_proxy(spec.size, spec.size, image_seed) : fir_proxy(spec.size, spec.size, image_seed);
      const std::string name = group + "/" + (natural ? "nat_" : "fir_") + std::to_string(k) + ".png";
      save_png(gray_to_rgb(img), dir / name);
      manifest << name << ',' << (natural ? 0 : 1) << ',' << group << '\n';
    }
  }
  if (!manifest) throw Error(Errc::io, "write failed: " + manifest_path.string());
  return manifest_path;
}

}  // namespace bgd

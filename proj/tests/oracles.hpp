// Independent reference implementations used to check the library.
#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

namespace oracle {

// Row r of the 64x64 matrix maps the flattened block to coefficient r, straight from the DCT-II basis.
inline const std::array<std::array<double, 64>, 64>& dct_matrix() {
  static const auto m = [] {
    std::array<std::array<double, 64>, 64> out{};
    const long double pi = 3.141592653589793238462643383279502884L;
    for (int u = 0; u < 8; ++u) {
      for (int v = 0; v < 8; ++v) {
        const long double cu = u == 0 ? std::sqrt(1.0L / 8) : std::sqrt(2.0L / 8);
        const long double cv = v == 0 ? std::sqrt(1.0L / 8) : std::sqrt(2.0L / 8);
        for (int x = 0; x < 8; ++x) {
          for (int y = 0; y < 8; ++y) {
            out[u * 8 + v][x * 8 + y] = static_cast<double>(cu * cv * std::cos((2 * x + 1) * u * pi / 16) *
                                                            std::cos((2 * y + 1) * v * pi / 16));
          }
        }
      }
    }
    return out;
  }();
  return m;
}

inline std::array<double, 64> dct_by_matrix(const std::array<double, 64>& block) {
  std::array<double, 64> out{};
  const auto& m = dct_matrix();
  for (int r = 0; r < 64; ++r) {
    long double acc = 0;
    for (int c = 0; c < 64; ++c) acc += static_cast<long double>(m[r][c]) * block[c];
    out[r] = static_cast<double>(acc);
  }
  return out;
}

// jpeg_natural_order from the IJG library (jutils.c): zig-zag index -> raster position.
inline constexpr int kNaturalOrder[64] = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  12, 19, 26, 33, 40, 48,
    41, 34, 27, 20, 13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23,
    30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

// ITU T.81 Annex K, Table K.1.
inline constexpr int kLuminanceK1[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

// Leading digit from a textual rendering of |value| in `base`. Bases up to 36 use std::to_chars;
// larger bases find the top power by multiplication in 128-bit arithmetic.
inline int first_digit_by_string(std::int64_t value, int base) {
  const unsigned __int128 mag =
      value < 0 ? static_cast<unsigned __int128>(-static_cast<__int128>(value)) : static_cast<unsigned __int128>(value);
  if (base <= 36) {
    char buf[80];
    const auto res = std::to_chars(buf, buf + sizeof buf, static_cast<std::uint64_t>(mag), base);
    if (res.ec != std::errc{}) throw std::runtime_error("to_chars failed");
    const char c = buf[0];
    return c <= '9' ? c - '0' : c - 'a' + 10;
  }
  unsigned __int128 power = 1;
  while (power * static_cast<unsigned>(base) <= mag) power *= static_cast<unsigned>(base);
  int digit = 0;
  for (unsigned __int128 acc = power; acc <= mag; acc += power) ++digit;
  return digit;
}

inline long double kl_sum(std::span<const double> q, std::span<const double> p, double eps = 1e-12) {
  long double acc = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0) continue;
    const long double pi = p[i] < eps ? eps : p[i];
    acc += q[i] * std::log(static_cast<long double>(q[i]) / pi);
  }
  return acc;
}

inline long double s_alpha_sum(std::span<const double> q, std::span<const double> p, double alpha, double eps = 1e-12) {
  long double acc = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0 && alpha > 0) continue;
    const long double qi = q[i] < eps ? eps : q[i];
    const long double pi = p[i] < eps ? eps : p[i];
    acc += std::pow(qi, static_cast<long double>(alpha)) / std::pow(pi, static_cast<long double>(alpha) - 1);
  }
  return acc;
}

inline std::vector<double> generalized_law(double beta, double gamma, double delta, int base) {
  std::vector<double> out;
  for (int d = 1; d < base; ++d) {
    out.push_back(beta * std::log1p(1.0 / (gamma + std::pow(d, delta))) / std::log(base));
  }
  return out;
}

inline std::vector<double> random_pmf(std::mt19937_64& rng, std::size_t n, bool sparse) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  double total = 0;
  for (auto& x : p) {
    x = sparse && u(rng) < 0.3 ? 0.0 : u(rng);
    total += x;
  }
  if (total == 0) {
    p[0] = 1;
    return p;
  }
  for (auto& x : p) x /= total;
  return p;
}

class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "bgd-test") {
    std::string tmpl = (std::filesystem::temp_directory_path() / (prefix + "-XXXXXX")).string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle

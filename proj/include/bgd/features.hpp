#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bgd/benford.hpp"
#include "bgd/imageio.hpp"

namespace bgd {

inline constexpr int kAllBases[] = {10, 20, 40, 60};
inline constexpr int kAllFreqs[] = {1, 2, 3, 4, 5, 6, 7, 8, 9};
inline constexpr int kAllQfs[] = {80, 85, 90, 95, 100};
inline constexpr std::size_t kDivergencesPerCombo = 3;

/// Sets of bases, zig-zag AC frequencies and quality factors plus the Renyi/Tsallis order.
struct FeatureConfig {
  std::vector<int> bases;
  std::vector<int> freqs;
  std::vector<int> qfs;
  double alpha = kDefaultAlpha;

  /// Throws Error{invalid_argument} when a set is empty, unsorted, duplicated or out of domain.
  void validate() const;
  std::size_t dimensionality() const { return kDivergencesPerCombo * bases.size() * freqs.size() * qfs.size(); }
  /// 16 hex digits, FNV-1a over the canonical text form.
  std::string fingerprint() const;
  /// Canonical text form, e.g. "bases=10,20;freqs=1;qfs=95,100;alpha=2".
  std::string canonical() const;
  /// Inverse of canonical(); throws Error{parse}.
  static FeatureConfig from_canonical(const std::string& text);

  static FeatureConfig minimal();
  static FeatureConfig maximal();

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

struct FeatureVector {
  std::vector<double> values;
  std::string config_fingerprint;
  /// One flag per (qf, n, b) combination in extraction order; 1 when every coefficient quantized to 0.
  std::vector<std::uint8_t> degenerate_flags;

  std::size_t degenerate_count() const;
};

/// All 675 sweep configurations: 15 base subsets x 9 frequency prefixes x 5 QF suffixes.
/// Order: base subset (by size, then lexicographic) outermost, then frequency prefix, then QF set.
std::vector<FeatureConfig> enumerate_configs();

/// Loop order qf (outer), n, b, then (js, renyi, tsallis).
FeatureVector extract_features(const GrayImage& img, const FeatureConfig& cfg);

/// Offset of the js entry for (qf, n, b) inside a vector produced with cfg.
std::size_t feature_offset(const FeatureConfig& cfg, int qf, int n, int base);

/// Positions in a `super` vector that make up a `sub` vector, in sub's order.
/// Throws Error{invalid_argument} if sub is not contained in super or alphas differ.
std::vector<std::size_t> slice_positions(const FeatureConfig& super, const FeatureConfig& sub);

/// `d_{qf}_{n}_{b}_{js|renyi|tsallis}` in extraction order.
std::vector<std::string> feature_names(const FeatureConfig& cfg);

/// Recovers (bases, freqs, qfs) from feature column names; alpha is left at its default.
FeatureConfig config_from_names(const std::vector<std::string>& names);

}  // namespace bgd

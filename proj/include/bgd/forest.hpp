#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bgd/features.hpp"

namespace bgd {

inline constexpr int kNaturalLabel = 0;
inline constexpr int kGanLabel = 1;

struct LabeledSample {
  std::vector<double> features;
  int label = 0;
  std::string group;
  /// Canonical identity (image path); bootstrap draws index samples sorted stably by id.
  std::string id;
};

struct ForestParams {
  int tree_count = 100;
  int min_samples_split = 2;
  bool bootstrap = true;

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// Flattened CART node. Leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<std::uint32_t, 2> class_counts{};

  bool is_leaf() const { return feature < 0; }
  int majority() const { return class_counts[1] > class_counts[0] ? 1 : 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const double> x) const;
  int predict(std::span<const double> x) const { return leaf_for(x).majority(); }
  std::size_t depth() const;
};

struct Prediction {
  int label = 0;
  double score = 0.0;  // fraction of trees voting GAN
};

struct ForestModel {
  static constexpr int kSchemaVersion = 1;

  std::vector<DecisionTree> trees;
  ForestParams params;
  std::uint64_t seed = 0;
  std::size_t dimensionality = 0;
  std::string config_fingerprint;
  /// Feature config that produced the training vectors, when known; needed to extract from raw images.
  FeatureConfig feature_config;
  bool has_feature_config = false;
  /// Out-of-bag accuracy over samples left out by at least one tree; NaN if none.
  double oob_accuracy = 0.0;

  /// Checks fingerprint and length, then votes.
  Prediction predict(const FeatureVector& fv) const;
  /// Votes without a fingerprint check.
  Prediction predict_values(std::span<const double> x) const;
};

double gini_impurity(std::span<const std::uint32_t> class_counts);

/// Throws Error{single_class | dimension_mismatch | invalid_argument}.
/// `jobs` only affects speed; the model is identical for any value.
ForestModel train_forest(const std::vector<LabeledSample>& samples, const ForestParams& params, std::uint64_t seed,
                         const std::string& config_fingerprint = {}, int jobs = 1);

std::string model_to_json(const ForestModel& model, const std::string& provenance_json = {});
ForestModel model_from_json(const std::string& text);

}  // namespace bgd

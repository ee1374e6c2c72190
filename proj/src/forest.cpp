#include "bgd/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include <json.hpp>

#include "bgd/error.hpp"
#include "bgd/parallel.hpp"
#include "bgd/rng.hpp"

namespace bgd {
namespace {

using json = nlohmann::json;

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;
};

double gini2(double n0, double n1) {
  const double n = n0 + n1;
  const double p0 = n0 / n;
  const double p1 = n1 / n;
  return 1.0 - (p0 * p0 + p1 * p1);
}

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<const LabeledSample*>& samples, std::size_t dim, const ForestParams& params,
              RngStream& rng)
      : samples_(samples), dim_(dim), params_(params), rng_(rng),
        mtry_(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim))))),
        feature_pool_(dim) {
    std::iota(feature_pool_.begin(), feature_pool_.end(), 0);
  }

  DecisionTree build(std::vector<int> rows) {
    DecisionTree tree;
    struct Pending {
      int node;
      std::vector<int> rows;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, std::move(rows)});
    while (!stack.empty()) {
      Pending item = std::move(stack.back());
      stack.pop_back();
      std::array<std::uint32_t, 2> counts{};
      for (const int r : item.rows) ++counts[samples_[r]->label];
      tree.nodes[item.node].class_counts = counts;

      const bool pure = counts[0] == 0 || counts[1] == 0;
      if (pure || item.rows.size() < static_cast<std::size_t>(params_.min_samples_split)) continue;
      const SplitChoice split = best_split(item.rows, counts);
      if (split.feature < 0 || !(split.decrease > 0.0)) continue;

      std::vector<int> left, right;
      for (const int r : item.rows) {
        (samples_[r]->features[split.feature] <= split.threshold ? left : right).push_back(r);
      }
      const int li = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      const int ri = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      TreeNode& node = tree.nodes[item.node];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = li;
      node.right = ri;
      // Right is pushed first so the left subtree is expanded first.
      stack.push_back({ri, std::move(right)});
      stack.push_back({li, std::move(left)});
    }
    return tree;
  }

 private:
  std::vector<int> sample_features() {
    // Partial Fisher-Yates over a persistent pool; the pool order is part of the RNG contract.
    const std::size_t k = std::min(mtry_, dim_);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.below(dim_ - i));
      std::swap(feature_pool_[i], feature_pool_[j]);
    }
    std::vector<int> chosen(feature_pool_.begin(), feature_pool_.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  SplitChoice best_split(const std::vector<int>& rows, const std::array<std::uint32_t, 2>& counts) {
    const double n = static_cast<double>(rows.size());
    const double parent = gini2(counts[0], counts[1]);
    SplitChoice best;
    std::vector<std::pair<double, int>> column(rows.size());
    for (const int f : sample_features()) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        column[i] = {samples_[rows[i]]->features[f], samples_[rows[i]]->label};
      }
      std::sort(column.begin(), column.end());
      double left0 = 0.0, left1 = 0.0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        (column[i].second == 0 ? left0 : left1) += 1.0;
        const double a = column[i].first;
        const double b = column[i + 1].first;
        if (!(a < b)) continue;
        const double nl = left0 + left1;
        const double nr = n - nl;
        const double right0 = counts[0] - left0;
        const double right1 = counts[1] - left1;
        const double decrease = parent - (nl / n) * gini2(left0, left1) - (nr / n) * gini2(right0, right1);
        // Strict improvement only: earlier (lower) features and thresholds win ties.
        if (decrease > best.decrease) {
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best = {f, mid, decrease};
        }
      }
    }
    return best;
  }

  const std::vector<const LabeledSample*>& samples_;
  std::size_t dim_;
  const ForestParams& params_;
  RngStream& rng_;
  std::size_t mtry_;
  std::vector<int> feature_pool_;
};

json config_to_json(const FeatureConfig& cfg) {
  return json{{"bases", cfg.bases}, {"freqs", cfg.freqs}, {"qfs", cfg.qfs}, {"alpha", cfg.alpha}};
}

FeatureConfig config_from_json(const json& j) {
  FeatureConfig cfg;
  cfg.bases = j.at("bases").get<std::vector<int>>();
  cfg.freqs = j.at("freqs").get<std::vector<int>>();
  cfg.qfs = j.at("qfs").get<std::vector<int>>();
  cfg.alpha = j.at("alpha").get<double>();
  cfg.validate();
  return cfg;
}

}  // namespace

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf()) node = &nodes[x[node->feature] <= node->threshold ? node->left : node->right];
  return *node;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) level[nodes[i].left] = level[nodes[i].right] = level[i] + 1;
  }
  return deepest;
}

double gini_impurity(std::span<const std::uint32_t> class_counts) {
  double total = 0.0;
  for (const auto c : class_counts) total += c;
  if (total == 0.0) throw Error(Errc::empty_node, "Gini impurity of an empty node");
  double sum_sq = 0.0;
  for (const auto c : class_counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

Prediction ForestModel::predict_values(std::span<const double> x) const {
  if (x.size() != dimensionality) {
    throw Error(Errc::dimension_mismatch, "feature vector has length " + std::to_string(x.size()) + ", model expects " +
                                              std::to_string(dimensionality));
  }
  std::size_t votes = 0;
  for (const auto& tree : trees) votes += static_cast<std::size_t>(tree.predict(x));
  Prediction p;
  p.score = trees.empty() ? 0.0 : static_cast<double>(votes) / static_cast<double>(trees.size());
  p.label = 2 * votes > trees.size() ? kGanLabel : kNaturalLabel;
  return p;
}

Prediction ForestModel::predict(const FeatureVector& fv) const {
  if (fv.config_fingerprint != config_fingerprint) {
    throw Error(Errc::fingerprint_mismatch, "feature fingerprint " + fv.config_fingerprint +
                                                " does not match model fingerprint " + config_fingerprint);
  }
  return predict_values(fv.values);
}

ForestModel train_forest(const std::vector<LabeledSample>& samples, const ForestParams& params, std::uint64_t seed,
                         const std::string& config_fingerprint, int jobs) {
  if (params.tree_count < 1) throw Error(Errc::invalid_argument, "tree_count must be >= 1");
  if (params.min_samples_split < 2) throw Error(Errc::invalid_argument, "min_samples_split must be >= 2");
  if (samples.size() < 2) throw Error(Errc::single_class, "need at least two training samples");
  const std::size_t dim = samples.front().features.size();
  if (dim == 0) throw Error(Errc::dimension_mismatch, "training vectors are empty");
  std::array<std::size_t, 2> label_counts{};
  for (const auto& s : samples) {
    if (s.features.size() != dim) throw Error(Errc::dimension_mismatch, "training vectors have differing lengths");
    if (s.label != kNaturalLabel && s.label != kGanLabel) throw Error(Errc::invalid_argument, "labels must be 0 or 1");
    ++label_counts[s.label];
  }
  if (label_counts[0] == 0 || label_counts[1] == 0) {
    throw Error(Errc::single_class, "training set contains a single class");
  }

  // Canonical order: stable sort by id, so bootstrap draws do not depend on input order.
  std::vector<const LabeledSample*> ordered;
  ordered.reserve(samples.size());
  for (const auto& s : samples) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const LabeledSample* a, const LabeledSample* b) { return a->id < b->id; });

  const std::size_t n = ordered.size();
  ForestModel model;
  model.params = params;
  model.seed = seed;
  model.dimensionality = dim;
  model.config_fingerprint = config_fingerprint;
  model.trees.resize(static_cast<std::size_t>(params.tree_count));
  std::vector<std::vector<std::uint8_t>> in_bag(model.trees.size());

  parallel_for(model.trees.size(), jobs, [&](std::size_t t) {
    RngStream rng(seed, t);
    std::vector<int> rows(n);
    in_bag[t].assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      rows[i] = params.bootstrap ? static_cast<int>(rng.below(n)) : static_cast<int>(i);
      in_bag[t][rows[i]] = 1;
    }
    model.trees[t] = TreeBuilder(ordered, dim, params, rng).build(std::move(rows));
  });

  std::size_t evaluated = 0, correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t votes = 0, voters = 0;
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      if (in_bag[t][i]) continue;
      ++voters;
      votes += static_cast<std::size_t>(model.trees[t].predict(ordered[i]->features));
    }
    if (voters == 0) continue;
    ++evaluated;
    const int label = 2 * votes > voters ? kGanLabel : kNaturalLabel;
    correct += label == ordered[i]->label ? 1 : 0;
  }
  model.oob_accuracy = evaluated == 0 ? std::numeric_limits<double>::quiet_NaN()
                                      : static_cast<double>(correct) / static_cast<double>(evaluated);
  return model;
}

std::string model_to_json(const ForestModel& model, const std::string& provenance_json) {
  json j;
  j["schema_version"] = ForestModel::kSchemaVersion;
  j["hyperparams"] = {{"tree_count", model.params.tree_count},
                      {"max_features", "sqrt"},
                      {"min_samples_split", model.params.min_samples_split},
                      {"bootstrap", model.params.bootstrap},
                      {"criterion", "gini"}};
  j["seed"] = std::to_string(model.seed);
  j["dimensionality"] = model.dimensionality;
  j["config_fingerprint"] = model.config_fingerprint;
  j["feature_config"] = model.has_feature_config ? config_to_json(model.feature_config) : json(nullptr);
  j["oob_accuracy"] = std::isfinite(model.oob_accuracy) ? json(model.oob_accuracy) : json(nullptr);
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json nodes = json::array();
    for (const auto& node : tree.nodes) {
      json jn;
      jn["kind"] = node.is_leaf() ? "leaf" : "split";
      jn["class_counts"] = node.class_counts;
      if (!node.is_leaf()) {
        jn["feature"] = node.feature;
        jn["threshold"] = node.threshold;
        jn["left"] = node.left;
        jn["right"] = node.right;
      }
      nodes.push_back(std::move(jn));
    }
    trees.push_back(json{{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  if (!provenance_json.empty()) j["provenance"] = json::parse(provenance_json);
  return j.dump(1) + "\n";
}

ForestModel model_from_json(const std::string& text) {
  ForestModel model;
  try {
    const json j = json::parse(text);
    if (j.at("schema_version").get<int>() != ForestModel::kSchemaVersion) {
      throw Error(Errc::parse, "unsupported model schema_version");
    }
    const auto& hp = j.at("hyperparams");
    model.params.tree_count = hp.at("tree_count").get<int>();
    model.params.min_samples_split = hp.at("min_samples_split").get<int>();
    model.params.bootstrap = hp.at("bootstrap").get<bool>();
    model.seed = std::stoull(j.at("seed").get<std::string>());
    model.dimensionality = j.at("dimensionality").get<std::size_t>();
    model.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    if (!j.at("feature_config").is_null()) {
      model.feature_config = config_from_json(j.at("feature_config"));
      model.has_feature_config = true;
    }
    model.oob_accuracy = j.at("oob_accuracy").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                        : j.at("oob_accuracy").get<double>();
    for (const auto& jt : j.at("trees")) {
      DecisionTree tree;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode node;
        node.class_counts = jn.at("class_counts").get<std::array<std::uint32_t, 2>>();
        if (jn.at("kind").get<std::string>() == "split") {
          node.feature = jn.at("feature").get<int>();
          node.threshold = jn.at("threshold").get<double>();
          node.left = jn.at("left").get<int>();
          node.right = jn.at("right").get<int>();
        }
        tree.nodes.push_back(node);
      }
      model.trees.push_back(std::move(tree));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("malformed model file: ") + e.what());
  }
  if (static_cast<int>(model.trees.size()) != model.params.tree_count) {
    throw Error(Errc::parse, "model tree count does not match hyperparams");
  }
  for (const auto& tree : model.trees) {
    if (tree.nodes.empty()) throw Error(Errc::parse, "model contains an empty tree");
    const auto size = static_cast<int>(tree.nodes.size());
    for (int i = 0; i < size; ++i) {
      const auto& node = tree.nodes[static_cast<std::size_t>(i)];
      if (node.is_leaf()) continue;
      // Children always follow their parent, which also rules out cycles.
      if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= model.dimensionality || node.left <= i ||
          node.right <= i || node.left >= size || node.right >= size) {
        throw Error(Errc::parse, "model node references out of range");
      }
    }
  }
  return model;
}

}  // namespace bgd

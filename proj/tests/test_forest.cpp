#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "bgd/error.hpp"
#include "bgd/forest.hpp"

using namespace bgd;

namespace {

Errc error_code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::parse;
}

// Class is the sign of feature 0 with a margin of 1.0 between classes.
std::vector<LabeledSample> separable(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 3.0), v(-3.0, 3.0);
  std::vector<LabeledSample> out;
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    out.push_back({{(label ? 0.5 : -0.5) + (label ? 1 : -1) * u(rng), v(rng)}, label, "g", "s" + std::to_string(i)});
  }
  return out;
}

double accuracy(const ForestModel& m, const std::vector<LabeledSample>& s) {
  std::size_t ok = 0;
  for (const auto& x : s) ok += m.predict_values(x.features).label == x.label;
  return static_cast<double>(ok) / s.size();
}

}  // namespace

TEST_SUITE("forest") {
  TEST_CASE("gini impurity") {
    const std::uint32_t a[] = {2, 2}, b[] = {4, 0}, c[] = {1, 3}, z[] = {0, 0};
    CHECK(gini_impurity(a) == doctest::Approx(0.5));
    CHECK(gini_impurity(b) == 0.0);
    CHECK(gini_impurity(c) == doctest::Approx(0.375));
    CHECK(error_code_of([&] { gini_impurity(z); }) == Errc::empty_node);
  }

  TEST_CASE("separable data is learned perfectly") {
    const auto train = separable(1, 200);
    const auto model = train_forest(train, {}, 42, "fp");
    CHECK(model.trees.size() == 100);
    CHECK(model.oob_accuracy == 1.0);
    CHECK(accuracy(model, separable(2, 100)) == 1.0);
    for (const auto& s : train) {
      const auto p = model.predict_values(s.features);
      CHECK(p.label == s.label);
    }
  }

  TEST_CASE("any tree count reaches full accuracy on separable data") {
    const auto train = separable(3, 100);
    for (int trees : {1, 2, 5}) {
      ForestParams params;
      params.tree_count = trees;
      CHECK(accuracy(train_forest(train, params, 7), separable(4, 100)) == 1.0);
    }
  }

  TEST_CASE("unanimous forests score 0 or 1") {
    const auto model = train_forest(separable(5, 200), {}, 9);
    for (double x : {-50.0, -10.0, 10.0, 50.0}) {
      const auto p = model.predict_values(std::vector<double>{x, 0.0});
      CHECK((p.score == 0.0 || p.score == 1.0));
      CHECK(p.label == (x > 0 ? 1 : 0));
    }
  }

  TEST_CASE("same seed gives identical bytes, another seed differs") {
    const auto train = separable(6, 120);
    const auto a = model_to_json(train_forest(train, {}, 11, "fp"));
    CHECK(a == model_to_json(train_forest(train, {}, 11, "fp")));
    CHECK(a == model_to_json(train_forest(train, {}, 11, "fp", 4)));
    CHECK(a != model_to_json(train_forest(train, {}, 12, "fp")));
  }

  TEST_CASE("training order does not matter when ids are stable") {
    auto train = separable(7, 150);
    // Make the task non-trivial so trees actually differ between bootstraps.
    std::mt19937_64 rng(8);
    for (auto& s : train) s.features.push_back(std::uniform_real_distribution<double>(-1, 1)(rng));
    const auto a = model_to_json(train_forest(train, {}, 13));
    std::shuffle(train.begin(), train.end(), rng);
    CHECK(model_to_json(train_forest(train, {}, 13)) == a);
  }

  TEST_CASE("leaf counts add up to the bootstrap sample") {
    const auto train = separable(9, 80);
    const auto model = train_forest(train, {}, 14);
    for (const auto& tree : model.trees) {
      std::uint64_t total = 0;
      for (const auto& n : tree.nodes) {
        if (n.is_leaf()) total += n.class_counts[0] + n.class_counts[1];
      }
      CHECK(total == train.size());
      CHECK(tree.nodes[0].class_counts[0] + tree.nodes[0].class_counts[1] == train.size());
    }
  }

  TEST_CASE("without bootstrap every tree sees the full set") {
    ForestParams params;
    params.bootstrap = false;
    params.tree_count = 3;
    const auto train = separable(10, 40);
    const auto model = train_forest(train, params, 1);
    for (const auto& tree : model.trees) CHECK(tree.nodes[0].class_counts == std::array<std::uint32_t, 2>{20, 20});
  }

  TEST_CASE("training preconditions") {
    auto one = separable(11, 10);
    for (auto& s : one) s.label = 0;
    CHECK(error_code_of([&] { train_forest(one, {}, 1); }) == Errc::single_class);
    auto ragged = separable(12, 10);
    ragged[3].features.push_back(1.0);
    CHECK(error_code_of([&] { train_forest(ragged, {}, 1); }) == Errc::dimension_mismatch);
    ForestParams bad;
    bad.tree_count = 0;
    CHECK(error_code_of([&] { train_forest(separable(13, 10), bad, 1); }) == Errc::invalid_argument);
  }

  TEST_CASE("prediction checks fingerprint and length") {
    const auto model = train_forest(separable(14, 40), {}, 1, "abc");
    FeatureVector fv{{1.0, 0.0}, "abc", {}};
    CHECK(model.predict(fv).label == 1);
    fv.config_fingerprint = "xyz";
    CHECK(error_code_of([&] { model.predict(fv); }) == Errc::fingerprint_mismatch);
    FeatureVector short_fv{{1.0}, "abc", {}};
    CHECK(error_code_of([&] { model.predict(short_fv); }) == Errc::dimension_mismatch);
    CHECK(error_code_of([&] { model.predict_values(std::vector<double>{1, 2, 3}); }) == Errc::dimension_mismatch);
  }

  TEST_CASE("ties go to class 0") {
    ForestModel m;
    m.dimensionality = 1;
    m.params.tree_count = 2;
    DecisionTree gan, nat, tie;
    gan.nodes.push_back(TreeNode{-1, 0, -1, -1, {0, 3}});
    nat.nodes.push_back(TreeNode{-1, 0, -1, -1, {3, 0}});
    tie.nodes.push_back(TreeNode{-1, 0, -1, -1, {2, 2}});
    m.trees = {gan, nat};
    const auto p = m.predict_values(std::vector<double>{0.0});
    CHECK(p.label == 0);
    CHECK(p.score == 0.5);
    CHECK(tie.predict(std::vector<double>{0.0}) == 0);
  }

  TEST_CASE("serialization round trip") {
    const auto model = train_forest(separable(15, 100), {}, 99, "feedbeef");
    const auto text = model_to_json(model, R"({"note":"x"})");
    const auto back = model_from_json(text);
    CHECK(model_to_json(back, R"({"note":"x"})") == text);
    CHECK(back.seed == 99);
    CHECK(back.config_fingerprint == "feedbeef");
    CHECK(back.oob_accuracy == model.oob_accuracy);
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 1000; ++i) {
      const std::vector<double> x{u(rng), u(rng)};
      const auto a = model.predict_values(x), b = back.predict_values(x);
      REQUIRE(a.label == b.label);
      REQUIRE(a.score == b.score);
    }
    const auto j = nlohmann::json::parse(text);
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("seed") == "99");
    CHECK(j.at("provenance").at("note") == "x");
    CHECK(j.at("trees").size() == 100);
  }

  TEST_CASE("malformed model files are rejected") {
    const auto text = model_to_json(train_forest(separable(17, 40), {}, 1));
    auto j = nlohmann::json::parse(text);
    CHECK(error_code_of([] { model_from_json("{not json"); }) == Errc::parse);

    auto wrong_count = j;
    wrong_count["trees"].erase(0);
    CHECK(error_code_of([&] { model_from_json(wrong_count.dump()); }) == Errc::parse);

    auto schema = j;
    schema["schema_version"] = 7;
    CHECK(error_code_of([&] { model_from_json(schema.dump()); }) == Errc::parse);

    // Find a split node and point it back at the root.
    auto cyclic = j;
    for (auto& tree : cyclic["trees"]) {
      for (auto& node : tree["nodes"]) {
        if (node["kind"] == "split") {
          node["left"] = 0;
          break;
        }
      }
    }
    CHECK(error_code_of([&] { model_from_json(cyclic.dump()); }) == Errc::parse);

    auto out_of_range = j;
    for (auto& node : out_of_range["trees"][0]["nodes"]) {
      if (node["kind"] == "split") {
        node["feature"] = 5;
        break;
      }
    }
    CHECK(error_code_of([&] { model_from_json(out_of_range.dump()); }) == Errc::parse);
  }
}

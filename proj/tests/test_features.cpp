#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <set>

#include "bgd/error.hpp"
#include "bgd/features.hpp"
#include "bgd/synth.hpp"

using namespace bgd;

namespace {

GrayImage noise_image(int w, int h, std::uint64_t seed, bool laplace) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  std::exponential_distribution<double> e(1.0 / 20);
  GrayImage g{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
  for (auto& x : g.luma) {
    x = laplace ? std::clamp(128 + (rng() & 1 ? 1 : -1) * e(rng), 0.0, 255.0) : u(rng);
  }
  return g;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("675 sweep configurations") {
    const auto configs = enumerate_configs();
    REQUIRE(configs.size() == 675);
    CHECK(configs.front() == FeatureConfig::minimal());
    CHECK(configs.front().dimensionality() == 3);
    CHECK(configs.back() == FeatureConfig::maximal());
    CHECK(configs.back().dimensionality() == 540);
    std::set<std::string> fingerprints;
    std::set<std::size_t> dims;
    for (const auto& c : configs) {
      c.validate();
      CHECK(c.dimensionality() == 3 * c.bases.size() * c.freqs.size() * c.qfs.size());
      fingerprints.insert(c.fingerprint());
      dims.insert(c.dimensionality());
      // Frequency sets are prefixes of 1..9; QF sets are suffixes ending at 100.
      for (std::size_t i = 0; i < c.freqs.size(); ++i) CHECK(c.freqs[i] == static_cast<int>(i) + 1);
      CHECK(c.qfs.back() == 100);
      CHECK(c.qfs.front() == 100 - 5 * static_cast<int>(c.qfs.size() - 1));
    }
    CHECK(fingerprints.size() == 675);
    CHECK(*dims.begin() == 3);
    CHECK(*dims.rbegin() == 540);
    CHECK(enumerate_configs() == configs);
  }

  TEST_CASE("base subsets are ordered by size, then lexicographically") {
    const auto configs = enumerate_configs();
    std::vector<std::vector<int>> bases;
    for (std::size_t i = 0; i < configs.size(); i += 45) bases.push_back(configs[i].bases);
    REQUIRE(bases.size() == 15);
    CHECK(bases[0] == std::vector<int>{10});
    CHECK(bases[3] == std::vector<int>{60});
    CHECK(bases[4] == std::vector<int>{10, 20});
    CHECK(bases[14] == std::vector<int>{10, 20, 40, 60});
    CHECK(configs[1].qfs == std::vector<int>{95, 100});
    CHECK(configs[5].freqs == std::vector<int>{1, 2});
  }

  TEST_CASE("invalid configs are rejected") {
    CHECK_THROWS_AS((FeatureConfig{{}, {1}, {100}, 2}.validate()), Error);
    CHECK_THROWS_AS((FeatureConfig{{30}, {1}, {100}, 2}.validate()), Error);
    CHECK_THROWS_AS((FeatureConfig{{20, 10}, {1}, {100}, 2}.validate()), Error);
    CHECK_THROWS_AS((FeatureConfig{{10}, {0}, {100}, 2}.validate()), Error);
    CHECK_THROWS_AS((FeatureConfig{{10}, {1, 1}, {100}, 2}.validate()), Error);
    CHECK_THROWS_AS((FeatureConfig{{10}, {1}, {97}, 2}.validate()), Error);
    try {
      FeatureConfig{{10}, {1}, {100}, 1.0}.validate();
      FAIL("alpha 1 accepted");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::alpha_one);
    }
  }

  TEST_CASE("fingerprints are stable and sensitive to every field") {
    const FeatureConfig a{{10, 20}, {1, 2}, {95, 100}, 2.0};
    CHECK(a.fingerprint() == FeatureConfig(a).fingerprint());
    CHECK(a.fingerprint().size() == 16);
    CHECK(a.canonical() == "bases=10,20;freqs=1,2;qfs=95,100;alpha=2");
    CHECK(FeatureConfig{{10, 40}, {1, 2}, {95, 100}, 2.0}.fingerprint() != a.fingerprint());
    CHECK(FeatureConfig{{10, 20}, {1, 3}, {95, 100}, 2.0}.fingerprint() != a.fingerprint());
    CHECK(FeatureConfig{{10, 20}, {1, 2}, {90, 100}, 2.0}.fingerprint() != a.fingerprint());
    CHECK(FeatureConfig{{10, 20}, {1, 2}, {95, 100}, 0.5}.fingerprint() != a.fingerprint());
    CHECK(FeatureConfig{{10, 20}, {1, 2}, {95, 100}, std::nextafter(2.0, 3.0)}.fingerprint() != a.fingerprint());
  }

  TEST_CASE("canonical text round trips") {
    for (const auto& c : {FeatureConfig::minimal(), FeatureConfig::maximal(), FeatureConfig{{20, 60}, {3}, {80}, 0.1}}) {
      CHECK(FeatureConfig::from_canonical(c.canonical()) == c);
    }
    CHECK_THROWS_AS(FeatureConfig::from_canonical("bases=10;freqs=1"), Error);
    CHECK_THROWS_AS(FeatureConfig::from_canonical("bases=10;freqs=x;qfs=100;alpha=2"), Error);
    CHECK_THROWS_AS(FeatureConfig::from_canonical("bases=10;freqs=1;qfs=100;alpha=2;extra=1"), Error);
  }

  TEST_CASE("feature names follow the extraction order") {
    const FeatureConfig c{{10, 20}, {1, 2}, {95, 100}, 2.0};
    const auto names = feature_names(c);
    REQUIRE(names.size() == 24);
    CHECK(names[0] == "d_95_1_10_js");
    CHECK(names[1] == "d_95_1_10_renyi");
    CHECK(names[2] == "d_95_1_10_tsallis");
    CHECK(names[3] == "d_95_1_20_js");
    CHECK(names[6] == "d_95_2_10_js");
    CHECK(names[12] == "d_100_1_10_js");
    CHECK(feature_offset(c, 100, 2, 20) == 21);
    CHECK(config_from_names(names) == c);
    auto shuffled = names;
    std::swap(shuffled[0], shuffled[3]);
    CHECK_THROWS_AS(config_from_names(shuffled), Error);
    CHECK_THROWS_AS(config_from_names({"d_95_1_10_js", "bogus"}), Error);
  }

  TEST_CASE("slice positions map a sub-config into a super-config") {
    const auto max = FeatureConfig::maximal();
    const auto pos = slice_positions(max, FeatureConfig::minimal());
    REQUIRE(pos.size() == 3);
    CHECK(pos[0] == feature_offset(max, 100, 1, 10));
    CHECK(pos[1] == pos[0] + 1);
    CHECK(slice_positions(max, max).size() == 540);
    CHECK_THROWS_AS(slice_positions(FeatureConfig::minimal(), max), Error);
    CHECK_THROWS_AS(slice_positions(max, FeatureConfig{{10}, {1}, {100}, 0.5}), Error);
  }

  TEST_CASE("constant image gives finite degenerate features") {
    GrayImage g{64, 64, std::vector<double>(64 * 64, 128.0)};
    const auto fv = extract_features(g, FeatureConfig{{10, 60}, {1, 5, 9}, {80, 100}, 2.0});
    CHECK(fv.values.size() == 36);
    CHECK(fv.degenerate_flags.size() == 12);
    CHECK(fv.degenerate_count() == 12);
    for (double v : fv.values) CHECK(std::isfinite(v));
  }

  TEST_CASE("extraction is deterministic and fingerprinted") {
    const auto img = natural_proxy(64, 64, 3);
    const FeatureConfig c{{10, 40}, {1, 2, 3}, {90, 95, 100}, 2.0};
    const auto a = extract_features(img, c), b = extract_features(img, c);
    REQUIRE(a.values.size() == c.dimensionality());
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(same_bits(a.values[i], b.values[i]));
    CHECK(a.config_fingerprint == c.fingerprint());
    CHECK_THROWS_AS(extract_features(img, FeatureConfig{{}, {1}, {100}, 2.0}), Error);
  }

  TEST_CASE("every sweep config is a bit-exact slice of the maximal vector") {
    const auto img = natural_proxy(48, 40, 4);
    const auto full = extract_features(img, FeatureConfig::maximal());
    REQUIRE(full.values.size() == 540);
    for (const auto& c : enumerate_configs()) {
      const auto v = extract_features(img, c);
      REQUIRE(v.values.size() == c.dimensionality());
      const auto pos = slice_positions(FeatureConfig::maximal(), c);
      for (std::size_t i = 0; i < pos.size(); ++i) REQUIRE(same_bits(v.values[i], full.values[pos[i]]));
    }
  }

  TEST_CASE("Laplacian pixel field is closer to the law than uniform pixels") {
    const FeatureConfig c{{10}, {1}, {95}, 2.0};
    const auto lap = extract_features(noise_image(256, 256, 5, true), c);
    const auto uni = extract_features(noise_image(256, 256, 6, false), c);
    REQUIRE(lap.values.size() == 3);
    for (double v : lap.values) CHECK(std::isfinite(v));
    MESSAGE("js laplacian = ", lap.values[0], ", js uniform = ", uni.values[0]);
    CHECK(lap.values[0] < uni.values[0]);
  }
}

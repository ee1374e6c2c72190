#include "bgd/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <set>
#include <span>

#include "bgd/error.hpp"
#include "bgd/spectral.hpp"

namespace bgd {
namespace {

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

void check_set(const std::vector<int>& values, std::span<const int> domain, const char* name) {
  if (values.empty()) throw Error(Errc::invalid_argument, std::string(name) + " set is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::find(domain.begin(), domain.end(), values[i]) == domain.end()) {
      throw Error(Errc::invalid_argument, std::string(name) + " value " + std::to_string(values[i]) + " is not allowed");
    }
    if (i > 0 && values[i] <= values[i - 1]) {
      throw Error(Errc::invalid_argument, std::string(name) + " set must be strictly ascending");
    }
  }
}

std::size_t index_of(const std::vector<int>& v, int x, const char* name) {
  const auto it = std::find(v.begin(), v.end(), x);
  if (it == v.end()) throw Error(Errc::invalid_argument, std::string(name) + " " + std::to_string(x) + " not in config");
  return static_cast<std::size_t>(it - v.begin());
}

constexpr const char* kDivergenceNames[kDivergencesPerCombo] = {"js", "renyi", "tsallis"};

}  // namespace

void FeatureConfig::validate() const {
  check_set(bases, kAllBases, "base");
  check_set(freqs, kAllFreqs, "frequency");
  check_set(qfs, kAllQfs, "quality factor");
  if (!std::isfinite(alpha) || alpha == 1.0) throw Error(Errc::alpha_one, "alpha must be finite and != 1");
}

std::string FeatureConfig::canonical() const {
  char a[32];
  std::snprintf(a, sizeof a, "%.17g", alpha);
  return "bases=" + join(bases) + ";freqs=" + join(freqs) + ";qfs=" + join(qfs) + ";alpha=" + a;
}

std::string FeatureConfig::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FeatureConfig FeatureConfig::from_canonical(const std::string& text) {
  FeatureConfig cfg;
  bool seen[4] = {};
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(';', pos), text.size());
    const std::string field = text.substr(pos, end - pos);
    const std::size_t eq = field.find('=');
    if (eq == std::string::npos) throw Error(Errc::parse, "malformed config field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    auto parse_list = [&](std::vector<int>& out) {
      out.clear();
      std::size_t p = 0;
      while (p <= value.size()) {
        const std::size_t e = std::min(value.find(',', p), value.size());
        try {
          std::size_t used = 0;
          const std::string item = value.substr(p, e - p);
          out.push_back(std::stoi(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          throw Error(Errc::parse, "malformed integer list '" + value + "'");
        }
        p = e + 1;
      }
    };
    if (key == "bases") {
      parse_list(cfg.bases);
      seen[0] = true;
    } else if (key == "freqs") {
      parse_list(cfg.freqs);
      seen[1] = true;
    } else if (key == "qfs") {
      parse_list(cfg.qfs);
      seen[2] = true;
    } else if (key == "alpha") {
      char* stop = nullptr;
      cfg.alpha = std::strtod(value.c_str(), &stop);
      if (value.empty() || *stop != '\0') throw Error(Errc::parse, "malformed alpha '" + value + "'");
      seen[3] = true;
    } else {
      throw Error(Errc::parse, "unknown config key '" + key + "'");
    }
    pos = end + 1;
  }
  if (!(seen[0] && seen[1] && seen[2] && seen[3])) throw Error(Errc::parse, "incomplete config '" + text + "'");
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(Errc::parse, e.what());
  }
  return cfg;
}

FeatureConfig FeatureConfig::minimal() { return {{10}, {1}, {100}, kDefaultAlpha}; }

FeatureConfig FeatureConfig::maximal() {
  return {{std::begin(kAllBases), std::end(kAllBases)},
          {std::begin(kAllFreqs), std::end(kAllFreqs)},
          {std::begin(kAllQfs), std::end(kAllQfs)},
          kDefaultAlpha};
}

std::size_t FeatureVector::degenerate_count() const {
  return static_cast<std::size_t>(std::count(degenerate_flags.begin(), degenerate_flags.end(), std::uint8_t{1}));
}

std::vector<FeatureConfig> enumerate_configs() {
  constexpr int kBaseCount = static_cast<int>(std::size(kAllBases));
  std::vector<std::vector<int>> base_sets;
  for (int size = 1; size <= kBaseCount; ++size) {
    std::vector<std::vector<int>> of_size;
    for (int mask = 1; mask < (1 << kBaseCount); ++mask) {
      if (std::popcount(static_cast<unsigned>(mask)) != size) continue;
      std::vector<int> set;
      for (int i = 0; i < kBaseCount; ++i) {
        if (mask & (1 << i)) set.push_back(kAllBases[i]);
      }
      of_size.push_back(std::move(set));
    }
    std::sort(of_size.begin(), of_size.end());
    base_sets.insert(base_sets.end(), of_size.begin(), of_size.end());
  }

  std::vector<FeatureConfig> out;
  for (const auto& bases : base_sets) {
    for (std::size_t nf = 1; nf <= std::size(kAllFreqs); ++nf) {
      std::vector<int> freqs(std::begin(kAllFreqs), std::begin(kAllFreqs) + nf);
      // QF sets grow downward from 100: {100}, {95,100}, ..., {80,...,100}.
      for (std::size_t nq = 1; nq <= std::size(kAllQfs); ++nq) {
        std::vector<int> qfs(std::end(kAllQfs) - nq, std::end(kAllQfs));
        out.push_back({bases, freqs, qfs, kDefaultAlpha});
      }
    }
  }
  return out;
}

FeatureVector extract_features(const GrayImage& img, const FeatureConfig& cfg) {
  cfg.validate();
  const BlockGrid grid = partition_blocks(img);
  const auto spectra = transform_blocks(grid);

  FeatureVector out;
  out.config_fingerprint = cfg.fingerprint();
  out.values.reserve(cfg.dimensionality());
  out.degenerate_flags.reserve(cfg.qfs.size() * cfg.freqs.size() * cfg.bases.size());
  for (const int qf : cfg.qfs) {
    const QuantTable table = quant_table(qf);
    for (const int n : cfg.freqs) {
      const QuantizedFrequency coeffs = quantize_frequency(std::span<const BlockSpectrum>(spectra), n, table);
      for (const int b : cfg.bases) {
        const DigitPmf pmf = digit_pmf(coeffs.values, b);
        const DivergenceTriple t = divergence_triple(pmf, cfg.alpha);
        out.values.push_back(t.js);
        out.values.push_back(t.renyi);
        out.values.push_back(t.tsallis);
        out.degenerate_flags.push_back(pmf.degenerate() ? 1 : 0);
      }
    }
  }
  return out;
}

std::size_t feature_offset(const FeatureConfig& cfg, int qf, int n, int base) {
  const std::size_t iq = index_of(cfg.qfs, qf, "quality factor");
  const std::size_t in = index_of(cfg.freqs, n, "frequency");
  const std::size_t ib = index_of(cfg.bases, base, "base");
  return kDivergencesPerCombo * ((iq * cfg.freqs.size() + in) * cfg.bases.size() + ib);
}

std::vector<std::size_t> slice_positions(const FeatureConfig& super, const FeatureConfig& sub) {
  if (super.alpha != sub.alpha) throw Error(Errc::invalid_argument, "configs use different alpha values");
  std::vector<std::size_t> out;
  out.reserve(sub.dimensionality());
  for (const int qf : sub.qfs) {
    for (const int n : sub.freqs) {
      for (const int b : sub.bases) {
        const std::size_t base = feature_offset(super, qf, n, b);
        for (std::size_t k = 0; k < kDivergencesPerCombo; ++k) out.push_back(base + k);
      }
    }
  }
  return out;
}

std::vector<std::string> feature_names(const FeatureConfig& cfg) {
  std::vector<std::string> out;
  out.reserve(cfg.dimensionality());
  for (const int qf : cfg.qfs) {
    for (const int n : cfg.freqs) {
      for (const int b : cfg.bases) {
        for (const char* d : kDivergenceNames) {
          out.push_back("d_" + std::to_string(qf) + "_" + std::to_string(n) + "_" + std::to_string(b) + "_" + d);
        }
      }
    }
  }
  return out;
}

FeatureConfig config_from_names(const std::vector<std::string>& names) {
  std::set<int> qfs, freqs, bases;
  for (const auto& name : names) {
    int q = 0, n = 0, b = 0;
    char kind[16] = {};
    if (std::sscanf(name.c_str(), "d_%d_%d_%d_%15s", &q, &n, &b, kind) != 4) {
      throw Error(Errc::parse, "malformed feature column '" + name + "'");
    }
    qfs.insert(q);
    freqs.insert(n);
    bases.insert(b);
  }
  FeatureConfig cfg{{bases.begin(), bases.end()}, {freqs.begin(), freqs.end()}, {qfs.begin(), qfs.end()}, kDefaultAlpha};
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(Errc::parse, std::string("feature columns do not describe a valid config: ") + e.what());
  }
  if (feature_names(cfg) != names) {
    throw Error(Errc::parse, "feature columns are not the full (qf, n, b) product in extraction order");
  }
  return cfg;
}

}  // namespace bgd

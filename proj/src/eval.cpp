#include "bgd/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bgd/error.hpp"
#include "bgd/parallel.hpp"
#include "bgd/rng.hpp"

namespace bgd {
namespace {

using json = nlohmann::json;

// Stream tags for derive_seed; changing them changes every replayed experiment.
constexpr std::uint64_t kTagFold = 0x464f4c44;      // "FOLD"
constexpr std::uint64_t kTagSplit = 0x53504c54;     // "SPLT"
constexpr std::uint64_t kTagQf = 0x51465251;        // "QFRQ"
constexpr std::uint64_t kTagGroup = 0x47525550;     // "GRUP"

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int parse_label(const std::string& s, const std::string& where) {
  if (s == "0") return kNaturalLabel;
  if (s == "1") return kGanLabel;
  throw Error(Errc::parse, where + ": label must be 0 or 1, got '" + s + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(Errc::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io, "cannot rename to " + path.string() + ": " + ec.message());
}

std::string join_ints(const std::vector<int>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

// Feature cache keyed by absolute image path; one CSV file per config fingerprint.
class FeatureCache {
 public:
  FeatureCache(const std::filesystem::path& dir, const FeatureConfig& cfg) : cfg_(cfg) {
    if (dir.empty()) return;
    path_ = dir / ("features-" + cfg.fingerprint() + ".csv");
    if (!std::filesystem::exists(path_)) return;
    const FeatureTable cached = read_feature_csv(path_);
    if (cached.config != cfg) return;
    for (const auto& row : cached.rows) rows_.emplace(row.path, row);
  }

  bool enabled() const { return !path_.empty(); }

  const FeatureRow* find(const std::string& key) const {
    const auto it = rows_.find(key);
    return it == rows_.end() ? nullptr : &it->second;
  }

  void put(FeatureRow row) {
    dirty_ = true;
    rows_[row.path] = std::move(row);
  }

  void flush() {
    if (!enabled() || !dirty_) return;
    FeatureTable table;
    table.config = cfg_;
    for (const auto& [key, row] : rows_) table.rows.push_back(row);
    write_text_atomic(path_, feature_csv(table, {"feature cache"}));
    dirty_ = false;
  }

 private:
  FeatureConfig cfg_;
  std::filesystem::path path_;
  std::map<std::string, FeatureRow> rows_;
  bool dirty_ = false;
};

std::string cache_key(const std::filesystem::path& p) {
  std::error_code ec;
  auto abs = std::filesystem::weakly_canonical(p, ec);
  if (ec) abs = std::filesystem::absolute(p).lexically_normal();
  return abs.string();
}

std::vector<std::size_t> valid_rows(const FeatureTable& table) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].ok) out.push_back(i);
  }
  return out;
}

ForestModel fit_on(const FeatureTable& table, const std::vector<std::size_t>& rows,
                   const std::vector<std::size_t>& columns, const ForestParams& params, std::uint64_t seed, int jobs) {
  return train_forest(table.samples(rows, columns), params, seed, {}, jobs);
}

// LOGO where training rows come from `train_table` and test rows from `test_table`;
// the two tables are row-aligned (same manifest order).
EvalReport logo_across(const FeatureTable& train_table, const FeatureTable& test_table, const ForestParams& params,
                       std::uint64_t seed, int jobs, const std::vector<std::size_t>& columns) {
  if (train_table.rows.size() != test_table.rows.size()) {
    throw Error(Errc::invalid_argument, "train and test feature tables are not row-aligned");
  }
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train_table.rows.size(); ++i) {
    if (train_table.rows[i].ok && test_table.rows[i].ok) usable.push_back(i);
  }
  std::vector<std::string> groups;
  for (const auto i : usable) groups.push_back(test_table.rows[i].group);
  const auto folds = logo_folds(groups);

  EvalReport report;
  report.scenario = "logo";
  report.config = test_table.config;
  report.params = params;
  report.seed = seed;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train, test;
    for (const auto i : folds[f].train) train.push_back(usable[i]);
    for (const auto i : folds[f].test) test.push_back(usable[i]);
    const ForestModel model = fit_on(train_table, train, columns, params, derive_seed(seed, kTagFold + f), jobs);
    const auto scored = score_groups(model, test_table, test, columns);
    report.per_group.insert(report.per_group.end(), scored.begin(), scored.end());
  }
  report.average = mean_accuracy(report.per_group);
  return report;
}

json config_json(const FeatureConfig& cfg) {
  return json{{"bases", cfg.bases},
              {"freqs", cfg.freqs},
              {"qfs", cfg.qfs},
              {"alpha", cfg.alpha},
              {"dimensionality", cfg.dimensionality()},
              {"fingerprint", cfg.fingerprint()}};
}

}  // namespace

std::vector<std::string> DatasetManifest::groups() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (std::find(out.begin(), out.end(), e.group) == out.end()) out.push_back(e.group);
  }
  return out;
}

DatasetManifest load_manifest(const std::filesystem::path& csv_path, bool check_exists) {
  const std::string text = read_text(csv_path);
  std::istringstream in(text);
  DatasetManifest manifest;
  manifest.root = csv_path.has_parent_path() ? csv_path.parent_path() : std::filesystem::path(".");
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    const std::string where = csv_path.string() + ":" + std::to_string(line_no);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"path", "label", "group"}) {
        throw Error(Errc::parse, where + ": manifest header must be 'path,label,group'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) throw Error(Errc::parse, where + ": expected 3 columns, got " + std::to_string(fields.size()));
    if (fields[0].empty() || fields[2].empty()) throw Error(Errc::parse, where + ": empty path or group");
    ManifestEntry e;
    e.path = fields[0];
    e.resolved = std::filesystem::path(fields[0]).is_absolute() ? std::filesystem::path(fields[0])
                                                                 : manifest.root / fields[0];
    e.label = parse_label(fields[1], where);
    e.group = fields[2];
    if (check_exists && !std::filesystem::exists(e.resolved)) {
      throw Error(Errc::io, where + ": image not found: " + e.resolved.string());
    }
    manifest.entries.push_back(std::move(e));
  }
  if (manifest.entries.empty()) throw Error(Errc::invalid_argument, "empty manifest");
  return manifest;
}

std::vector<LabeledSample> FeatureTable::samples(const std::vector<std::size_t>& indices) const {
  return samples(indices, {});
}

std::vector<LabeledSample> FeatureTable::samples(const std::vector<std::size_t>& indices,
                                                 const std::vector<std::size_t>& columns) const {
  std::vector<LabeledSample> out;
  out.reserve(indices.size());
  for (const auto i : indices) {
    const FeatureRow& row = rows.at(i);
    LabeledSample s;
    if (columns.empty()) {
      s.features = row.values;
    } else {
      s.features.reserve(columns.size());
      for (const auto c : columns) s.features.push_back(row.values.at(c));
    }
    s.label = row.label;
    s.group = row.group;
    s.id = row.path;
    out.push_back(std::move(s));
  }
  return out;
}

FeatureVector extract_image(const std::filesystem::path& path, const FeatureConfig& cfg) {
  return extract_features(to_luma(load_image(path)), cfg);
}

FeatureTable extract_table(const DatasetManifest& manifest, const FeatureConfig& cfg, const ExtractOptions& options) {
  cfg.validate();
  FeatureTable table;
  table.config = cfg;
  table.rows.resize(manifest.entries.size());
  FeatureCache cache(options.cache_dir, cfg);
  std::vector<std::uint8_t> fresh(manifest.entries.size(), 0);
  std::vector<std::string> keys(manifest.entries.size());
  std::atomic<std::size_t> done{0};

  parallel_for(manifest.entries.size(), options.jobs, [&](std::size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    FeatureRow& row = table.rows[i];
    row.path = e.path;
    row.label = e.label;
    row.group = e.group;
    if (cache.enabled()) keys[i] = cache_key(e.resolved);
    if (const FeatureRow* hit = cache.enabled() ? cache.find(keys[i]) : nullptr) {
      row.values = hit->values;
    } else if (options.cache_only) {
      throw Error(Errc::missing_cache, "no cached features for " + e.resolved.string());
    } else {
      try {
        const FeatureVector fv = extract_image(e.resolved, cfg);
        row.values = fv.values;
        row.degenerate = fv.degenerate_count();
        fresh[i] = 1;
      } catch (const Error& err) {
        if (options.strict) throw Error(err.code(), e.path + ": " + err.what());
        row.ok = false;
        row.error = std::string(errc_name(err.code())) + ": " + err.what();
      }
    }
    if (options.progress) options.progress(++done, manifest.entries.size(), e.path);
  });

  if (cache.enabled()) {
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      if (!fresh[i]) continue;
      FeatureRow cached = table.rows[i];
      cached.path = keys[i];
      cache.put(std::move(cached));
    }
    cache.flush();
  }
  return table;
}

std::string feature_csv(const FeatureTable& table, const std::vector<std::string>& comment_lines) {
  std::string out;
  for (const auto& c : comment_lines) out += "# " + c + "\n";
  out += "# config=" + table.config.canonical() + "\n";
  out += "# config_fingerprint=" + table.config.fingerprint() + "\n";
  out += "image_path,label,group";
  for (const auto& name : feature_names(table.config)) out += "," + name;
  out += "\n";
  const std::size_t dim = table.config.dimensionality();
  for (const auto& row : table.rows) {
    if (!row.ok) continue;
    if (row.values.size() != dim) throw Error(Errc::dimension_mismatch, row.path + ": feature length mismatch");
    out += csv_field(row.path) + "," + std::to_string(row.label) + "," + csv_field(row.group);
    for (const double v : row.values) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path,
                       const std::vector<std::string>& comment_lines) {
  write_text_atomic(path, feature_csv(table, comment_lines));
}

FeatureTable parse_feature_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  bool config_known = false;
  FeatureTable table;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim(line.substr(1));
      if (body.rfind("config=", 0) == 0) {
        table.config = FeatureConfig::from_canonical(body.substr(7));
        config_known = true;
      }
      continue;
    }
    const auto fields = split_csv_line(line);
    const std::string where = "line " + std::to_string(line_no);
    if (!header_seen) {
      static const char* kMeta[] = {"image_path", "label", "group"};
      for (std::size_t c = 0; c < 3; ++c) {
        if (c >= fields.size() || fields[c] != kMeta[c]) {
          throw Error(Errc::parse, "feature CSV header column " + std::to_string(c + 1) + ": expected '" + kMeta[c] +
                                       "', got '" + (c < fields.size() ? fields[c] : std::string()) + "'");
        }
      }
      const std::vector<std::string> names(fields.begin() + 3, fields.end());
      if (names.empty()) throw Error(Errc::parse, "feature CSV header has no feature columns");
      const FeatureConfig from_names = config_from_names(names);
      if (config_known) {
        if (feature_names(table.config) != names) {
          throw Error(Errc::parse, "feature CSV header does not match its config comment");
        }
      } else {
        table.config = from_names;
      }
      columns = fields.size();
      header_seen = true;
      continue;
    }
    if (fields.size() != columns) {
      throw Error(Errc::parse, where + ": expected " + std::to_string(columns) + " columns, got " +
                                  std::to_string(fields.size()));
    }
    FeatureRow row;
    row.path = fields[0];
    row.label = parse_label(fields[1], where);
    row.group = fields[2];
    row.values.reserve(columns - 3);
    for (std::size_t c = 3; c < columns; ++c) {
      char* end = nullptr;
      const double v = std::strtod(fields[c].c_str(), &end);
      if (fields[c].empty() || *end != '\0' || !std::isfinite(v)) {
        throw Error(Errc::parse, where + ": column " + std::to_string(c + 1) + " is not a finite number");
      }
      row.values.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (!header_seen) throw Error(Errc::parse, "feature CSV has no header row");
  return table;
}

FeatureTable read_feature_csv(const std::filesystem::path& path) { return parse_feature_csv(read_text(path)); }

std::vector<Fold> logo_folds(const std::vector<std::string>& row_groups) {
  std::vector<std::string> order;
  for (const auto& g : row_groups) {
    if (std::find(order.begin(), order.end(), g) == order.end()) order.push_back(g);
  }
  if (order.size() < 2) {
    throw Error(Errc::too_few_groups, "leave-one-group-out needs at least 2 groups, got " + std::to_string(order.size()));
  }
  std::vector<Fold> folds;
  for (const auto& g : order) {
    Fold f;
    f.group = g;
    for (std::size_t i = 0; i < row_groups.size(); ++i) (row_groups[i] == g ? f.test : f.train).push_back(i);
    folds.push_back(std::move(f));
  }
  return folds;
}

std::vector<Fold> logo_folds(const DatasetManifest& manifest) {
  std::vector<std::string> groups;
  for (const auto& e : manifest.entries) groups.push_back(e.group);
  return logo_folds(groups);
}

Split random_split(const std::vector<int>& labels, const std::vector<std::string>& groups, double train_fraction,
                   std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(Errc::invalid_argument, "train fraction must be in (0, 1)");
  }
  if (labels.size() != groups.size()) throw Error(Errc::length_mismatch, "labels and groups differ in length");
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < labels.size(); ++i) strata[{groups[i], labels[i]}].push_back(i);
  Split split;
  std::uint64_t stratum_index = 0;
  for (auto& [key, members] : strata) {
    const std::size_t n = members.size();
    if (n < 2) {
      throw Error(Errc::empty_stratum, "stratum (group " + key.first + ", label " + std::to_string(key.second) +
                                           ") has fewer than 2 samples");
    }
    RngStream rng(derive_seed(seed, kTagSplit), stratum_index++);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(members[i], members[rng.below(i + 1)]);
    const auto wanted = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    const std::size_t n_train = std::clamp<std::size_t>(wanted, 1, n - 1);
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Split random_split(const DatasetManifest& manifest, double train_fraction, std::uint64_t seed) {
  std::vector<int> labels;
  std::vector<std::string> groups;
  for (const auto& e : manifest.entries) {
    labels.push_back(e.label);
    groups.push_back(e.group);
  }
  return random_split(labels, groups, train_fraction, seed);
}

std::vector<GroupResult> score_groups(const ForestModel& model, const FeatureTable& table,
                                      const std::vector<std::size_t>& test, const std::vector<std::size_t>& columns) {
  std::vector<GroupResult> out;
  std::vector<double> x;
  for (const auto i : test) {
    const FeatureRow& row = table.rows.at(i);
    auto it = std::find_if(out.begin(), out.end(), [&](const GroupResult& g) { return g.group == row.group; });
    if (it == out.end()) {
      out.push_back(GroupResult{row.group});
      it = out.end() - 1;
    }
    if (columns.empty()) {
      x = row.values;
    } else {
      x.clear();
      for (const auto c : columns) x.push_back(row.values.at(c));
    }
    const Prediction p = model.predict_values(x);
    ++it->total;
    ++(row.label == kNaturalLabel ? it->natural : it->gan);
    if (p.label == row.label) ++it->correct;
  }
  for (auto& g : out) g.accuracy = static_cast<double>(g.correct) / static_cast<double>(g.total);
  return out;
}

double mean_accuracy(const std::vector<GroupResult>& groups) {
  if (groups.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& g : groups) acc += g.accuracy;
  return acc / static_cast<double>(groups.size());
}

EvalReport evaluate_logo(const FeatureTable& table, const ForestParams& params, std::uint64_t seed, int jobs,
                         const std::vector<std::size_t>& columns, const FeatureConfig* sub_config) {
  EvalReport report = logo_across(table, table, params, seed, jobs, columns);
  if (sub_config) report.config = *sub_config;
  return report;
}

EvalReport evaluate_logo(const DatasetManifest& manifest, const FeatureConfig& cfg, const ForestParams& params,
                         std::uint64_t seed, const ExtractOptions& options) {
  const FeatureTable table = extract_table(manifest, cfg, options);
  return evaluate_logo(table, params, seed, options.jobs);
}

EvalReport evaluate_split(const FeatureTable& table, double train_fraction, const ForestParams& params,
                          std::uint64_t seed, int jobs) {
  const auto usable = valid_rows(table);
  std::vector<int> labels;
  std::vector<std::string> groups;
  for (const auto i : usable) {
    labels.push_back(table.rows[i].label);
    groups.push_back(table.rows[i].group);
  }
  const Split split = random_split(labels, groups, train_fraction, seed);
  std::vector<std::size_t> train, test;
  for (const auto i : split.train) train.push_back(usable[i]);
  for (const auto i : split.test) test.push_back(usable[i]);
  const ForestModel model = fit_on(table, train, {}, params, derive_seed(seed, kTagFold), jobs);
  EvalReport report;
  report.scenario = "split";
  report.config = table.config;
  report.params = params;
  report.seed = seed;
  report.per_group = score_groups(model, table, test);
  report.average = mean_accuracy(report.per_group);
  char meta[64];
  std::snprintf(meta, sizeof meta, "train_fraction=%.17g", train_fraction);
  report.metadata = meta;
  return report;
}

SweepResult sweep(const FeatureTable& maximal_table, const ForestParams& params, std::uint64_t seed, int jobs) {
  auto configs = enumerate_configs();
  for (auto& c : configs) c.alpha = maximal_table.config.alpha;
  std::vector<std::vector<std::size_t>> positions(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) positions[i] = slice_positions(maximal_table.config, configs[i]);

  SweepResult result;
  result.entries.resize(configs.size());
  parallel_for(configs.size(), jobs, [&](std::size_t i) {
    SweepEntry& e = result.entries[i];
    e.config_id = i;
    e.config = configs[i];
    e.report = evaluate_logo(maximal_table, params, seed, 1, positions[i], &configs[i]);
  });

  for (std::size_t i = 1; i < result.entries.size(); ++i) {
    const auto& cand = result.entries[i];
    const auto& best = result.entries[result.best];
    if (cand.report.average > best.report.average ||
        (cand.report.average == best.report.average && cand.config.dimensionality() < best.config.dimensionality())) {
      result.best = i;
    }
  }

  using SizeFn = std::size_t (*)(const FeatureConfig&);
  const std::pair<const char*, SizeFn> params_by_name[] = {
      {"bases", [](const FeatureConfig& c) { return c.bases.size(); }},
      {"freqs", [](const FeatureConfig& c) { return c.freqs.size(); }},
      {"qfs", [](const FeatureConfig& c) { return c.qfs.size(); }},
  };
  for (const auto& [fixed_name, fixed_size] : params_by_name) {
    for (const auto& [varied_name, varied_size] : params_by_name) {
      if (fixed_name == varied_name) continue;
      std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::size_t>> cells;
      for (const auto& e : result.entries) {
        auto& cell = cells[{fixed_size(e.config), varied_size(e.config)}];
        cell.first += e.report.average;
        ++cell.second;
      }
      for (const auto& [key, cell] : cells) {
        result.marginals.push_back(
            {fixed_name, key.first, varied_name, key.second, cell.first / static_cast<double>(cell.second), cell.second});
      }
    }
  }
  return result;
}

SweepResult sweep(const DatasetManifest& manifest, const ForestParams& params, std::uint64_t seed,
                  const ExtractOptions& options, double alpha) {
  FeatureConfig maximal = FeatureConfig::maximal();
  maximal.alpha = alpha;
  const FeatureTable table = extract_table(manifest, maximal, options);
  return sweep(table, params, seed, options.jobs);
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = "config_id,bases,freqs,qfs,dim,avg_accuracy\n";
  for (const auto& e : result.entries) {
    out += std::to_string(e.config_id) + "," + join_ints(e.config.bases, ' ') + "," + join_ints(e.config.freqs, ' ') +
           "," + join_ints(e.config.qfs, ' ') + "," + std::to_string(e.config.dimensionality()) + "," +
           format_double(e.report.average) + "\n";
  }
  return out;
}

std::string marginals_csv(const SweepResult& result) {
  std::string out = "fixed_param,fixed_size,varied_param,varied_size,mean_accuracy,configs\n";
  for (const auto& m : result.marginals) {
    out += m.fixed_param + "," + std::to_string(m.fixed_size) + "," + m.varied_param + "," +
           std::to_string(m.varied_size) + "," + format_double(m.mean_accuracy) + "," + std::to_string(m.configs) + "\n";
  }
  return out;
}

const char* scenario_name(JpegScenario scenario) {
  switch (scenario) {
    case JpegScenario::train_clean_test_compressed: return "train_clean_test_compressed";
    case JpegScenario::train_compressed: return "train_compressed";
    case JpegScenario::per_qf: return "per_qf";
    case JpegScenario::per_qf_per_group: return "per_qf_per_group";
  }
  return "unknown";
}

JpegScenario parse_scenario(const std::string& name) {
  for (const auto s : {JpegScenario::train_clean_test_compressed, JpegScenario::train_compressed, JpegScenario::per_qf,
                       JpegScenario::per_qf_per_group}) {
    if (name == scenario_name(s)) return s;
  }
  throw Error(Errc::invalid_argument, "unknown JPEG scenario '" + name + "'");
}

std::filesystem::path recompressed_path(const ManifestEntry& entry, const std::filesystem::path& manifest_root, int qf,
                                        const std::filesystem::path& cache_root) {
  const std::string name = entry.resolved.stem().string() + ".q" + std::to_string(qf) + ".jpg";
  if (cache_root.empty()) return entry.resolved.parent_path() / name;
  auto rel = entry.resolved.lexically_relative(manifest_root);
  if (rel.empty() || *rel.begin() == "..") rel = entry.resolved.relative_path();
  return cache_root / "recompressed" / rel.parent_path() / name;
}

int random_qf(const QfPolicy& policy, std::uint64_t seed, std::size_t index) {
  if (policy.random_min < 1 || policy.random_max > 100 || policy.random_min > policy.random_max) {
    throw Error(Errc::out_of_range, "random QF range must satisfy 1 <= min <= max <= 100");
  }
  RngStream rng(derive_seed(seed, kTagQf), index);
  return policy.random_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(policy.random_max - policy.random_min + 1)));
}

DatasetManifest recompress_manifest(const DatasetManifest& manifest, const std::vector<int>& qf_per_entry,
                                    ChromaSubsampling subsampling, const std::filesystem::path& cache_root, int jobs) {
  if (qf_per_entry.size() != manifest.entries.size()) throw Error(Errc::length_mismatch, "one QF per entry required");
  DatasetManifest out = manifest;
  parallel_for(manifest.entries.size(), jobs, [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    const auto dst = recompressed_path(e, manifest.root, qf_per_entry[i], cache_root);
    if (!std::filesystem::exists(dst)) recompress_jpeg(e.resolved, qf_per_entry[i], dst, subsampling);
    out.entries[i].resolved = dst;
    out.entries[i].path = std::filesystem::path(e.path).replace_filename(dst.filename()).generic_string();
  });
  return out;
}

std::vector<EvalReport> jpeg_scenario(const DatasetManifest& manifest, JpegScenario scenario, const QfPolicy& policy,
                                      const FeatureConfig& cfg, const ForestParams& params, std::uint64_t seed,
                                      const ExtractOptions& options) {
  cfg.validate();
  const std::string tag = std::string("jpeg/") + scenario_name(scenario);
  const std::string encoder =
      "encoder=" + jpeg_encoder_identity() + "; subsampling=" + subsampling_name(policy.subsampling);
  std::vector<EvalReport> reports;

  auto finish = [&](EvalReport r, int qf, const std::string& extra) {
    r.scenario = tag;
    r.qf = qf;
    r.config = cfg;
    r.params = params;
    r.seed = seed;
    r.metadata = encoder + extra;
    reports.push_back(std::move(r));
  };

  if (scenario == JpegScenario::train_clean_test_compressed || scenario == JpegScenario::train_compressed) {
    std::vector<int> qfs(manifest.entries.size());
    for (std::size_t i = 0; i < qfs.size(); ++i) qfs[i] = random_qf(policy, seed, i);
    const auto compressed = recompress_manifest(manifest, qfs, policy.subsampling, options.cache_dir, options.jobs);
    const FeatureTable test_table = extract_table(compressed, cfg, options);
    const std::string range =
        "; random_qf=" + std::to_string(policy.random_min) + ".." + std::to_string(policy.random_max);
    if (scenario == JpegScenario::train_clean_test_compressed) {
      const FeatureTable clean = extract_table(manifest, cfg, options);
      finish(logo_across(clean, test_table, params, seed, options.jobs, {}), 0, range + "; train=clean; test=recompressed");
    } else {
      finish(logo_across(test_table, test_table, params, seed, options.jobs, {}), 0,
             range + "; train=recompressed; test=recompressed");
    }
    return reports;
  }

  for (const int qf : policy.fixed_qfs) {
    const std::vector<int> qfs(manifest.entries.size(), qf);
    const auto compressed = recompress_manifest(manifest, qfs, policy.subsampling, options.cache_dir, options.jobs);
    const FeatureTable table = extract_table(compressed, cfg, options);
    if (scenario == JpegScenario::per_qf) {
      finish(logo_across(table, table, params, seed, options.jobs, {}), qf, "");
      continue;
    }
    // One model per group, trained and tested on a stratified split of that group only.
    EvalReport report;
    const auto usable = valid_rows(table);
    std::vector<std::string> order;
    for (const auto i : usable) {
      if (std::find(order.begin(), order.end(), table.rows[i].group) == order.end()) order.push_back(table.rows[i].group);
    }
    for (std::size_t g = 0; g < order.size(); ++g) {
      std::vector<std::size_t> members;
      std::vector<int> labels;
      std::vector<std::string> groups;
      for (const auto i : usable) {
        if (table.rows[i].group != order[g]) continue;
        members.push_back(i);
        labels.push_back(table.rows[i].label);
        groups.push_back(order[g]);
      }
      const std::uint64_t group_seed = derive_seed(seed, kTagGroup + g);
      const Split split = random_split(labels, groups, policy.split_fraction, group_seed);
      std::vector<std::size_t> train, test;
      for (const auto i : split.train) train.push_back(members[i]);
      for (const auto i : split.test) test.push_back(members[i]);
      const ForestModel model = fit_on(table, train, {}, params, derive_seed(group_seed, kTagFold), options.jobs);
      const auto scored = score_groups(model, table, test);
      report.per_group.insert(report.per_group.end(), scored.begin(), scored.end());
    }
    report.average = mean_accuracy(report.per_group);
    char extra[64];
    std::snprintf(extra, sizeof extra, "; train_fraction=%.17g", policy.split_fraction);
    finish(std::move(report), qf, extra);
  }
  return reports;
}

std::string report_to_json(const EvalReport& report) {
  json groups = json::array();
  for (const auto& g : report.per_group) {
    groups.push_back(json{{"group", g.group},
                          {"accuracy", g.accuracy},
                          {"total", g.total},
                          {"correct", g.correct},
                          {"natural", g.natural},
                          {"gan", g.gan}});
  }
  json j{{"scenario", report.scenario},
         {"qf", report.qf},
         {"config", config_json(report.config)},
         {"hyperparams",
          {{"tree_count", report.params.tree_count},
           {"min_samples_split", report.params.min_samples_split},
           {"bootstrap", report.params.bootstrap},
           {"max_features", "sqrt"},
           {"criterion", "gini"}}},
         {"seed", std::to_string(report.seed)},
         {"per_group", std::move(groups)},
         {"average", report.average},
         {"metadata", report.metadata}};
  return j.dump(1);
}

std::string reports_to_text(const std::vector<EvalReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    std::size_t width = 7;
    for (const auto& g : r.per_group) width = std::max(width, g.group.size());
    char line[512];
    out += "scenario: " + r.scenario + (r.qf ? "  qf: " + std::to_string(r.qf) : std::string()) +
           "  dim: " + std::to_string(r.config.dimensionality()) + "  seed: " + std::to_string(r.seed) + "\n";
    out += "config: " + r.config.canonical() + "\n";
    std::snprintf(line, sizeof line, "%-4s  %-*s  %12s  %7s  %7s\n", "QF", static_cast<int>(width), "Dataset",
                  "Accuracy(%)", "Correct", "Total");
    out += line;
    const std::string qf = r.qf ? std::to_string(r.qf) : "-";
    for (const auto& g : r.per_group) {
      std::snprintf(line, sizeof line, "%-4s  %-*s  %12.2f  %7zu  %7zu\n", qf.c_str(), static_cast<int>(width),
                    g.group.c_str(), 100.0 * g.accuracy, g.correct, g.total);
      out += line;
    }
    std::snprintf(line, sizeof line, "%-4s  %-*s  %12.2f\n", qf.c_str(), static_cast<int>(width), "avg",
                  100.0 * r.average);
    out += line;
    if (!r.metadata.empty()) out += "metadata: " + r.metadata + "\n";
    out += "\n";
  }
  return out;
}

}  // namespace bgd

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bgd/features.hpp"
#include "bgd/forest.hpp"
#include "bgd/imageio.hpp"

namespace bgd {

struct ManifestEntry {
  std::string path;                 // as written in the manifest
  std::filesystem::path resolved;   // root / path
  int label = 0;
  std::string group;
};

/// CSV `path,label,group`; paths are relative to the manifest's directory.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  /// Group names in order of first appearance.
  std::vector<std::string> groups() const;
};

DatasetManifest load_manifest(const std::filesystem::path& csv_path, bool check_exists = true);

/// One image's features. `ok == false` rows carry the failure in `error` and no values.
struct FeatureRow {
  std::string path;
  int label = 0;
  std::string group;
  std::vector<double> values;
  std::size_t degenerate = 0;
  bool ok = true;
  std::string error;
};

struct FeatureTable {
  FeatureConfig config;
  std::vector<FeatureRow> rows;

  std::vector<LabeledSample> samples(const std::vector<std::size_t>& indices) const;
  std::vector<LabeledSample> samples(const std::vector<std::size_t>& indices, const std::vector<std::size_t>& columns) const;
};

struct ExtractOptions {
  int jobs = 1;
  /// Abort on the first failing image; otherwise failures are recorded per row.
  bool strict = true;
  /// Feature cache directory; empty disables the cache.
  std::filesystem::path cache_dir;
  /// Fail with MissingCache instead of extracting uncached images.
  bool cache_only = false;
  /// Called after each image, from the worker thread: (done, total, path).
  std::function<void(std::size_t, std::size_t, const std::string&)> progress;
};

/// Extracts features for a single image file.
FeatureVector extract_image(const std::filesystem::path& path, const FeatureConfig& cfg);

/// Row order follows manifest order.
FeatureTable extract_table(const DatasetManifest& manifest, const FeatureConfig& cfg, const ExtractOptions& options = {});

/// Feature CSV: optional `#` provenance lines, header `image_path,label,group,d_...`, 17 significant digits.
/// Failed rows are skipped.
std::string feature_csv(const FeatureTable& table, const std::vector<std::string>& comment_lines = {});
void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path,
                       const std::vector<std::string>& comment_lines = {});
FeatureTable read_feature_csv(const std::filesystem::path& path);
FeatureTable parse_feature_csv(const std::string& text);

struct GroupResult {
  std::string group;
  double accuracy = 0.0;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t natural = 0;
  std::size_t gan = 0;

  friend bool operator==(const GroupResult&, const GroupResult&) = default;
};

struct EvalReport {
  std::string scenario;  // "logo", "split", "jpeg/<scenario>"
  int qf = 0;            // recompression QF for per-QF scenarios, 0 otherwise
  FeatureConfig config;
  ForestParams params;
  std::uint64_t seed = 0;
  std::vector<GroupResult> per_group;
  double average = 0.0;  // unweighted mean of per-group accuracies
  std::string metadata;  // free-form, e.g. the JPEG encoder and subsampling

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct Fold {
  std::string group;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// One fold per group (first-appearance order); throws Error{too_few_groups}.
std::vector<Fold> logo_folds(const std::vector<std::string>& row_groups);
std::vector<Fold> logo_folds(const DatasetManifest& manifest);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified by (group, label); each stratum puts round(fraction * size), clamped to [1, size - 1], in train.
/// Throws Error{empty_stratum} when a stratum has fewer than two members.
Split random_split(const std::vector<int>& labels, const std::vector<std::string>& groups, double train_fraction,
                   std::uint64_t seed);
Split random_split(const DatasetManifest& manifest, double train_fraction, std::uint64_t seed);

/// Per-group accuracy of `model` over `test` rows (using `columns` of each row when non-empty).
std::vector<GroupResult> score_groups(const ForestModel& model, const FeatureTable& table,
                                      const std::vector<std::size_t>& test, const std::vector<std::size_t>& columns = {});
double mean_accuracy(const std::vector<GroupResult>& groups);

/// LOGO over a feature table; `columns` selects a sub-config when non-empty.
EvalReport evaluate_logo(const FeatureTable& table, const ForestParams& params, std::uint64_t seed, int jobs = 1,
                         const std::vector<std::size_t>& columns = {}, const FeatureConfig* sub_config = nullptr);
EvalReport evaluate_logo(const DatasetManifest& manifest, const FeatureConfig& cfg, const ForestParams& params,
                         std::uint64_t seed, const ExtractOptions& options = {});

/// Train on a stratified random split, report per-group accuracy on the held-out part.
EvalReport evaluate_split(const FeatureTable& table, double train_fraction, const ForestParams& params,
                          std::uint64_t seed, int jobs = 1);

struct SweepEntry {
  std::size_t config_id = 0;
  FeatureConfig config;
  EvalReport report;
};

/// Mean accuracy over configs with |fixed| = fixed_size and |varied| = varied_size.
struct MarginalRow {
  std::string fixed_param;
  std::size_t fixed_size = 0;
  std::string varied_param;
  std::size_t varied_size = 0;
  double mean_accuracy = 0.0;
  std::size_t configs = 0;
};

struct SweepResult {
  std::vector<SweepEntry> entries;  // enumerate_configs() order
  std::size_t best = 0;             // index into entries
  std::vector<MarginalRow> marginals;
};

/// Runs LOGO for all 675 configs by slicing a table extracted at the maximal config.
SweepResult sweep(const FeatureTable& maximal_table, const ForestParams& params, std::uint64_t seed, int jobs = 1);
SweepResult sweep(const DatasetManifest& manifest, const ForestParams& params, std::uint64_t seed,
                  const ExtractOptions& options = {}, double alpha = kDefaultAlpha);

/// `config_id,bases,freqs,qfs,dim,avg_accuracy`; set members are space-separated.
std::string sweep_csv(const SweepResult& result);
std::string marginals_csv(const SweepResult& result);

enum class JpegScenario { train_clean_test_compressed, train_compressed, per_qf, per_qf_per_group };

const char* scenario_name(JpegScenario scenario);
JpegScenario parse_scenario(const std::string& name);

struct QfPolicy {
  int random_min = 85;  // inclusive range for the random-QF scenarios
  int random_max = 100;
  std::vector<int> fixed_qfs{100, 95, 90};
  double split_fraction = 0.7;  // per_qf_per_group train fraction
  ChromaSubsampling subsampling = ChromaSubsampling::s420;
};

/// img.png -> img.q95.jpg, beside the original or mirrored under cache_root/recompressed.
std::filesystem::path recompressed_path(const ManifestEntry& entry, const std::filesystem::path& manifest_root, int qf,
                                        const std::filesystem::path& cache_root = {});

/// QF drawn for manifest entry `index` in the random-QF scenarios.
int random_qf(const QfPolicy& policy, std::uint64_t seed, std::size_t index);

/// Materializes recompressed derivatives (reusing existing files) and returns a manifest over them.
DatasetManifest recompress_manifest(const DatasetManifest& manifest, const std::vector<int>& qf_per_entry,
                                    ChromaSubsampling subsampling, const std::filesystem::path& cache_root, int jobs);

std::vector<EvalReport> jpeg_scenario(const DatasetManifest& manifest, JpegScenario scenario, const QfPolicy& policy,
                                      const FeatureConfig& cfg, const ForestParams& params, std::uint64_t seed,
                                      const ExtractOptions& options = {});

std::string report_to_json(const EvalReport& report);
/// Aligned text table; one block per report.
std::string reports_to_text(const std::vector<EvalReport>& reports);

}  // namespace bgd

#include "bgd/bgd.h"

#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bgd/error.hpp"
#include "bgd/eval.hpp"
#include "bgd/features.hpp"
#include "bgd/forest.hpp"
#include "bgd/imageio.hpp"
#include "bgd/synth.hpp"

#ifndef BGD_VERSION_STRING
#define BGD_VERSION_STRING "0.0.0"
#endif

struct bgd_config {
  bgd::FeatureConfig cfg;
  std::string fingerprint;
  std::string canonical;
  std::vector<std::string> names;

  explicit bgd_config(bgd::FeatureConfig c)
      : cfg(std::move(c)), fingerprint(cfg.fingerprint()), canonical(cfg.canonical()), names(bgd::feature_names(cfg)) {}
};

struct bgd_manifest {
  bgd::DatasetManifest manifest;
};

struct bgd_table {
  bgd::FeatureTable table;
  std::string fingerprint;
};

struct bgd_model {
  bgd::ForestModel model;
};

struct bgd_report {
  std::vector<bgd::EvalReport> reports;
  std::string json;
  std::string text;
  std::optional<std::string> sweep_csv;
  std::optional<std::string> marginals_csv;
};

namespace {

thread_local std::string g_last_error;

bgd_status to_status(bgd::Errc code) {
  using bgd::Errc;
  switch (code) {
    case Errc::io: return BGD_ERR_IO;
    case Errc::decode: return BGD_ERR_DECODE;
    case Errc::encode: return BGD_ERR_ENCODE;
    case Errc::too_small: return BGD_ERR_TOO_SMALL;
    case Errc::invalid_argument: return BGD_ERR_INVALID_ARGUMENT;
    case Errc::out_of_range: return BGD_ERR_OUT_OF_RANGE;
    case Errc::zero_value: return BGD_ERR_ZERO_VALUE;
    case Errc::fit_diverged: return BGD_ERR_FIT_DIVERGED;
    case Errc::length_mismatch: return BGD_ERR_LENGTH_MISMATCH;
    case Errc::alpha_one: return BGD_ERR_ALPHA_ONE;
    case Errc::non_finite: return BGD_ERR_NON_FINITE;
    case Errc::empty_node: return BGD_ERR_EMPTY_NODE;
    case Errc::single_class: return BGD_ERR_SINGLE_CLASS;
    case Errc::dimension_mismatch: return BGD_ERR_DIMENSION_MISMATCH;
    case Errc::fingerprint_mismatch: return BGD_ERR_FINGERPRINT_MISMATCH;
    case Errc::too_few_groups: return BGD_ERR_TOO_FEW_GROUPS;
    case Errc::empty_stratum: return BGD_ERR_EMPTY_STRATUM;
    case Errc::missing_cache: return BGD_ERR_MISSING_CACHE;
    case Errc::parse: return BGD_ERR_PARSE;
  }
  return BGD_ERR_INTERNAL;
}

bgd_status fail(bgd_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn, mapping exceptions to status codes.
template <typename Fn>
bgd_status guarded(Fn&& fn) {
  try {
    fn();
    return BGD_OK;
  } catch (const bgd::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(BGD_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(BGD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(BGD_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(BGD_ERR_INTERNAL, "unknown error");
  }
}

#define BGD_REQUIRE(cond)                                                   \
  do {                                                                      \
    if (!(cond)) return fail(BGD_ERR_INVALID_ARGUMENT, "null argument: " #cond); \
  } while (0)

bgd::ForestParams to_params(const bgd_forest_params* p) {
  bgd::ForestParams out;
  if (p) {
    out.tree_count = p->tree_count;
    out.min_samples_split = p->min_samples_split;
    out.bootstrap = p->bootstrap != 0;
  }
  return out;
}

bgd::ExtractOptions to_options(const bgd_extract_options* o) {
  bgd::ExtractOptions out;
  if (!o) return out;
  out.jobs = o->jobs;
  out.strict = o->strict != 0;
  out.cache_only = o->cache_only != 0;
  if (o->cache_dir) out.cache_dir = o->cache_dir;
  if (o->progress) {
    const auto fn = o->progress;
    void* user = o->progress_user;
    out.progress = [fn, user](std::size_t done, std::size_t total, const std::string& path) {
      fn(done, total, path.c_str(), user);
    };
  }
  return out;
}

std::vector<int> to_vector(const int* data, std::size_t n) {
  if (n > 0 && !data) throw bgd::Error(bgd::Errc::invalid_argument, "null array with nonzero length");
  return n ? std::vector<int>(data, data + n) : std::vector<int>{};
}

bgd_report* make_report(std::vector<bgd::EvalReport> reports, const bgd::SweepResult* sweep = nullptr) {
  auto r = std::make_unique<bgd_report>();
  nlohmann::json j;
  j["reports"] = nlohmann::json::array();
  for (const auto& rep : reports) j["reports"].push_back(nlohmann::json::parse(bgd::report_to_json(rep)));
  if (sweep) {
    j["best_config_id"] = sweep->entries[sweep->best].config_id;
    r->sweep_csv = bgd::sweep_csv(*sweep);
    r->marginals_csv = bgd::marginals_csv(*sweep);
    r->text = "best of " + std::to_string(sweep->entries.size()) + " configurations:\n" +
              bgd::reports_to_text({sweep->entries[sweep->best].report});
  } else {
    r->text = bgd::reports_to_text(reports);
  }
  r->json = j.dump(1);
  r->reports = std::move(reports);
  return r.release();
}

}  // namespace

extern "C" {

const char* bgd_version(void) { return BGD_VERSION_STRING; }

const char* bgd_last_error(void) { return g_last_error.c_str(); }

const char* bgd_status_name(bgd_status status) {
  switch (status) {
    case BGD_OK: return "OK";
    case BGD_ERR_IO: return "IoError";
    case BGD_ERR_DECODE: return "DecodeError";
    case BGD_ERR_ENCODE: return "EncodeError";
    case BGD_ERR_TOO_SMALL: return "TooSmall";
    case BGD_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case BGD_ERR_OUT_OF_RANGE: return "RangeError";
    case BGD_ERR_ZERO_VALUE: return "ZeroValue";
    case BGD_ERR_FIT_DIVERGED: return "FitDiverged";
    case BGD_ERR_LENGTH_MISMATCH: return "LengthMismatch";
    case BGD_ERR_ALPHA_ONE: return "AlphaOne";
    case BGD_ERR_NON_FINITE: return "NonFinite";
    case BGD_ERR_EMPTY_NODE: return "EmptyNode";
    case BGD_ERR_SINGLE_CLASS: return "SingleClass";
    case BGD_ERR_DIMENSION_MISMATCH: return "DimensionMismatch";
    case BGD_ERR_FINGERPRINT_MISMATCH: return "FingerprintMismatch";
    case BGD_ERR_TOO_FEW_GROUPS: return "TooFewGroups";
    case BGD_ERR_EMPTY_STRATUM: return "EmptyStratum";
    case BGD_ERR_MISSING_CACHE: return "MissingCache";
    case BGD_ERR_PARSE: return "ParseError";
    case BGD_ERR_INTERNAL: return "InternalError";
  }
  return "Unknown";
}

const char* bgd_jpeg_encoder(void) {
  static const std::string identity = bgd::jpeg_encoder_identity();
  return identity.c_str();
}

void bgd_forest_params_default(bgd_forest_params* params) {
  if (!params) return;
  const bgd::ForestParams d;
  params->tree_count = d.tree_count;
  params->min_samples_split = d.min_samples_split;
  params->bootstrap = d.bootstrap ? 1 : 0;
}

void bgd_extract_options_default(bgd_extract_options* options) {
  if (!options) return;
  *options = bgd_extract_options{1, 1, nullptr, 0, nullptr, nullptr};
}

bgd_status bgd_config_create(const int* bases, size_t n_bases, const int* freqs, size_t n_freqs, const int* qfs,
                             size_t n_qfs, double alpha, bgd_config** out) {
  BGD_REQUIRE(out);
  return guarded([&] {
    bgd::FeatureConfig cfg{to_vector(bases, n_bases), to_vector(freqs, n_freqs), to_vector(qfs, n_qfs), alpha};
    cfg.validate();
    *out = new bgd_config(std::move(cfg));
  });
}

bgd_status bgd_config_parse(const char* canonical, bgd_config** out) {
  BGD_REQUIRE(canonical && out);
  return guarded([&] { *out = new bgd_config(bgd::FeatureConfig::from_canonical(canonical)); });
}

bgd_status bgd_config_maximal(double alpha, bgd_config** out) {
  BGD_REQUIRE(out);
  return guarded([&] {
    auto cfg = bgd::FeatureConfig::maximal();
    cfg.alpha = alpha;
    cfg.validate();
    *out = new bgd_config(std::move(cfg));
  });
}

void bgd_config_free(bgd_config* cfg) { delete cfg; }

size_t bgd_config_dimensionality(const bgd_config* cfg) { return cfg ? cfg->cfg.dimensionality() : 0; }

const char* bgd_config_fingerprint(const bgd_config* cfg) { return cfg ? cfg->fingerprint.c_str() : nullptr; }

const char* bgd_config_canonical(const bgd_config* cfg) { return cfg ? cfg->canonical.c_str() : nullptr; }

const char* bgd_config_feature_name(const bgd_config* cfg, size_t i) {
  return cfg && i < cfg->names.size() ? cfg->names[i].c_str() : nullptr;
}

size_t bgd_sweep_config_count(void) {
  static const std::size_t count = bgd::enumerate_configs().size();
  return count;
}

bgd_status bgd_sweep_config(size_t index, bgd_config** out) {
  BGD_REQUIRE(out);
  return guarded([&] {
    const auto configs = bgd::enumerate_configs();
    if (index >= configs.size()) throw bgd::Error(bgd::Errc::out_of_range, "sweep config index out of range");
    *out = new bgd_config(configs[index]);
  });
}

bgd_status bgd_extract_image(const char* path, const bgd_config* cfg, double* out, size_t cap, size_t* n_written) {
  BGD_REQUIRE(path && cfg && n_written);
  return guarded([&] {
    const auto fv = bgd::extract_image(path, cfg->cfg);
    *n_written = fv.values.size();
    if (cap < fv.values.size() || !out) {
      throw bgd::Error(bgd::Errc::length_mismatch,
                       "output buffer holds " + std::to_string(cap) + " values, need " + std::to_string(fv.values.size()));
    }
    std::copy(fv.values.begin(), fv.values.end(), out);
  });
}

bgd_status bgd_recompress_jpeg(const char* src, int qf, const char* dst, int subsampling_444) {
  BGD_REQUIRE(src && dst);
  return guarded([&] {
    bgd::recompress_jpeg(src, qf, dst, subsampling_444 ? bgd::ChromaSubsampling::s444 : bgd::ChromaSubsampling::s420);
  });
}

bgd_status bgd_manifest_load(const char* csv_path, bgd_manifest** out) {
  BGD_REQUIRE(csv_path && out);
  return guarded([&] { *out = new bgd_manifest{bgd::load_manifest(csv_path)}; });
}

void bgd_manifest_free(bgd_manifest* manifest) { delete manifest; }

size_t bgd_manifest_size(const bgd_manifest* manifest) { return manifest ? manifest->manifest.entries.size() : 0; }

size_t bgd_manifest_group_count(const bgd_manifest* manifest) {
  return manifest ? manifest->manifest.groups().size() : 0;
}

bgd_status bgd_manifest_entry(const bgd_manifest* manifest, size_t i, const char** path, int* label,
                              const char** group) {
  BGD_REQUIRE(manifest);
  if (i >= manifest->manifest.entries.size()) return fail(BGD_ERR_OUT_OF_RANGE, "manifest index out of range");
  const auto& e = manifest->manifest.entries[i];
  if (path) *path = e.path.c_str();
  if (label) *label = e.label;
  if (group) *group = e.group.c_str();
  return BGD_OK;
}

bgd_status bgd_table_extract(const bgd_manifest* manifest, const bgd_config* cfg, const bgd_extract_options* options,
                             bgd_table** out) {
  BGD_REQUIRE(manifest && cfg && out);
  return guarded([&] {
    auto table = bgd::extract_table(manifest->manifest, cfg->cfg, to_options(options));
    *out = new bgd_table{std::move(table), cfg->fingerprint};
  });
}

bgd_status bgd_table_read_csv(const char* path, bgd_table** out) {
  BGD_REQUIRE(path && out);
  return guarded([&] {
    auto table = bgd::read_feature_csv(path);
    auto fp = table.config.fingerprint();
    *out = new bgd_table{std::move(table), std::move(fp)};
  });
}

bgd_status bgd_table_write_csv(const bgd_table* table, const char* path, const char* comment_lines) {
  BGD_REQUIRE(table && path);
  return guarded([&] {
    std::vector<std::string> lines;
    if (comment_lines) {
      std::istringstream in(comment_lines);
      for (std::string line; std::getline(in, line);) lines.push_back(line);
    }
    bgd::write_feature_csv(table->table, path, lines);
  });
}

void bgd_table_free(bgd_table* table) { delete table; }

size_t bgd_table_rows(const bgd_table* table) { return table ? table->table.rows.size() : 0; }

size_t bgd_table_dimensionality(const bgd_table* table) { return table ? table->table.config.dimensionality() : 0; }

const char* bgd_table_fingerprint(const bgd_table* table) { return table ? table->fingerprint.c_str() : nullptr; }

bgd_status bgd_table_row(const bgd_table* table, size_t i, const char** path, int* label, int* ok,
                         const char** error) {
  BGD_REQUIRE(table);
  if (i >= table->table.rows.size()) return fail(BGD_ERR_OUT_OF_RANGE, "table row out of range");
  const auto& row = table->table.rows[i];
  if (path) *path = row.path.c_str();
  if (label) *label = row.label;
  if (ok) *ok = row.ok ? 1 : 0;
  if (error) *error = row.error.c_str();
  return BGD_OK;
}

const double* bgd_table_row_values(const bgd_table* table, size_t i) {
  if (!table || i >= table->table.rows.size() || !table->table.rows[i].ok) return nullptr;
  return table->table.rows[i].values.data();
}

size_t bgd_table_row_degenerate(const bgd_table* table, size_t i) {
  return table && i < table->table.rows.size() ? table->table.rows[i].degenerate : 0;
}

bgd_status bgd_model_train(const bgd_table* table, const bgd_forest_params* params, uint64_t seed, int jobs,
                           bgd_model** out) {
  BGD_REQUIRE(table && out);
  return guarded([&] {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < table->table.rows.size(); ++i) {
      if (table->table.rows[i].ok) rows.push_back(i);
    }
    auto model = bgd::train_forest(table->table.samples(rows), to_params(params), seed, table->fingerprint, jobs);
    model.feature_config = table->table.config;
    model.has_feature_config = true;
    *out = new bgd_model{std::move(model)};
  });
}

bgd_status bgd_model_load(const char* path, bgd_model** out) {
  BGD_REQUIRE(path && out);
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bgd::Error(bgd::Errc::io, std::string("cannot open ") + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    *out = new bgd_model{bgd::model_from_json(ss.str())};
  });
}

bgd_status bgd_model_save(const bgd_model* model, const char* path, const char* provenance_json) {
  BGD_REQUIRE(model && path);
  return guarded([&] {
    const std::string text = bgd::model_to_json(model->model, provenance_json ? provenance_json : "");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw bgd::Error(bgd::Errc::io, std::string("cannot write ") + path);
    out << text;
    if (!out) throw bgd::Error(bgd::Errc::io, std::string("write failed: ") + path);
  });
}

void bgd_model_free(bgd_model* model) { delete model; }

double bgd_model_oob_accuracy(const bgd_model* model) { return model ? model->model.oob_accuracy : 0.0; }

const char* bgd_model_fingerprint(const bgd_model* model) {
  return model ? model->model.config_fingerprint.c_str() : nullptr;
}

size_t bgd_model_dimensionality(const bgd_model* model) { return model ? model->model.dimensionality : 0; }

bgd_status bgd_model_predict(const bgd_model* model, const double* values, size_t n, const char* fingerprint,
                             int* label, double* score) {
  BGD_REQUIRE(model && (values || n == 0) && fingerprint && label && score);
  return guarded([&] {
    bgd::FeatureVector fv;
    fv.values.assign(values, values + n);
    fv.config_fingerprint = fingerprint;
    const auto p = model->model.predict(fv);
    *label = p.label;
    *score = p.score;
  });
}

bgd_status bgd_model_predict_image(const bgd_model* model, const char* path, int* label, double* score) {
  BGD_REQUIRE(model && path && label && score);
  return guarded([&] {
    if (!model->model.has_feature_config) {
      throw bgd::Error(bgd::Errc::invalid_argument, "model does not record its feature config");
    }
    const auto fv = bgd::extract_image(path, model->model.feature_config);
    const auto p = model->model.predict(fv);
    *label = p.label;
    *score = p.score;
  });
}

bgd_status bgd_eval_logo(const bgd_manifest* manifest, const bgd_config* cfg, const bgd_forest_params* params,
                         uint64_t seed, const bgd_extract_options* options, bgd_report** out) {
  BGD_REQUIRE(manifest && cfg && out);
  return guarded([&] {
    auto report = bgd::evaluate_logo(manifest->manifest, cfg->cfg, to_params(params), seed, to_options(options));
    *out = make_report({std::move(report)});
  });
}

bgd_status bgd_eval_split(const bgd_manifest* manifest, const bgd_config* cfg, double train_fraction,
                          const bgd_forest_params* params, uint64_t seed, const bgd_extract_options* options,
                          bgd_report** out) {
  BGD_REQUIRE(manifest && cfg && out);
  return guarded([&] {
    const auto opts = to_options(options);
    const auto table = bgd::extract_table(manifest->manifest, cfg->cfg, opts);
    *out = make_report({bgd::evaluate_split(table, train_fraction, to_params(params), seed, opts.jobs)});
  });
}

bgd_status bgd_eval_sweep(const bgd_manifest* manifest, double alpha, const bgd_forest_params* params, uint64_t seed,
                          const bgd_extract_options* options, bgd_report** out) {
  BGD_REQUIRE(manifest && out);
  return guarded([&] {
    const auto result = bgd::sweep(manifest->manifest, to_params(params), seed, to_options(options), alpha);
    std::vector<bgd::EvalReport> reports;
    reports.reserve(result.entries.size());
    for (const auto& e : result.entries) reports.push_back(e.report);
    *out = make_report(std::move(reports), &result);
  });
}

bgd_status bgd_eval_jpeg(const bgd_manifest* manifest, const char* scenario, const int* qfs, size_t n_qfs,
                         const bgd_config* cfg, const bgd_forest_params* params, uint64_t seed,
                         const bgd_extract_options* options, bgd_report** out) {
  BGD_REQUIRE(manifest && scenario && cfg && out);
  return guarded([&] {
    bgd::QfPolicy policy;
    if (n_qfs > 0) policy.fixed_qfs = to_vector(qfs, n_qfs);
    for (const int qf : policy.fixed_qfs) {
      if (qf < 1 || qf > 100) throw bgd::Error(bgd::Errc::out_of_range, "quality factor must be in [1, 100]");
    }
    auto reports = bgd::jpeg_scenario(manifest->manifest, bgd::parse_scenario(scenario), policy, cfg->cfg,
                                      to_params(params), seed, to_options(options));
    *out = make_report(std::move(reports));
  });
}

void bgd_report_free(bgd_report* report) { delete report; }

const char* bgd_report_json(const bgd_report* report) { return report ? report->json.c_str() : nullptr; }

const char* bgd_report_text(const bgd_report* report) { return report ? report->text.c_str() : nullptr; }

size_t bgd_report_count(const bgd_report* report) { return report ? report->reports.size() : 0; }

double bgd_report_average(const bgd_report* report, size_t i) {
  return report && i < report->reports.size() ? report->reports[i].average : 0.0;
}

const char* bgd_report_sweep_csv(const bgd_report* report) {
  return report && report->sweep_csv ? report->sweep_csv->c_str() : nullptr;
}

const char* bgd_report_marginals_csv(const bgd_report* report) {
  return report && report->marginals_csv ? report->marginals_csv->c_str() : nullptr;
}

bgd_status bgd_synth_corpus(const char* dir, int groups, int images_per_group, int size, uint64_t seed) {
  BGD_REQUIRE(dir);
  return guarded([&] {
    bgd::SyntheticCorpusSpec spec;
    spec.groups = groups;
    spec.images_per_group = images_per_group;
    spec.size = size;
    spec.seed = seed;
    bgd::write_synthetic_corpus(dir, spec);
  });
}

}  // extern "C"

/*
 * C interface to the Benford-feature GAN image detector.
 *
 * All objects are opaque handles owned by the caller and released with the matching
 * *_free function. Every fallible call returns a bgd_status; on failure a description
 * is available from bgd_last_error() on the calling thread until the next failing call.
 * Strings returned by accessors stay valid for the lifetime of the owning handle.
 */
#ifndef BGD_BGD_H
#define BGD_BGD_H

#include <stddef.h>
#include <stdint.h>

#if defined(BGD_BUILDING_LIBRARY)
#define BGD_API __attribute__((visibility("default")))
#else
#define BGD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bgd_status {
  BGD_OK = 0,
  BGD_ERR_IO = 1,
  BGD_ERR_DECODE = 2,
  BGD_ERR_ENCODE = 3,
  BGD_ERR_TOO_SMALL = 4,
  BGD_ERR_INVALID_ARGUMENT = 5,
  BGD_ERR_OUT_OF_RANGE = 6,
  BGD_ERR_ZERO_VALUE = 7,
  BGD_ERR_FIT_DIVERGED = 8,
  BGD_ERR_LENGTH_MISMATCH = 9,
  BGD_ERR_ALPHA_ONE = 10,
  BGD_ERR_NON_FINITE = 11,
  BGD_ERR_EMPTY_NODE = 12,
  BGD_ERR_SINGLE_CLASS = 13,
  BGD_ERR_DIMENSION_MISMATCH = 14,
  BGD_ERR_FINGERPRINT_MISMATCH = 15,
  BGD_ERR_TOO_FEW_GROUPS = 16,
  BGD_ERR_EMPTY_STRATUM = 17,
  BGD_ERR_MISSING_CACHE = 18,
  BGD_ERR_PARSE = 19,
  BGD_ERR_INTERNAL = 100
} bgd_status;

typedef struct bgd_config bgd_config;
typedef struct bgd_manifest bgd_manifest;
typedef struct bgd_table bgd_table;
typedef struct bgd_model bgd_model;
typedef struct bgd_report bgd_report;

typedef struct bgd_forest_params {
  int tree_count;        /* default 100 */
  int min_samples_split; /* default 2 */
  int bootstrap;         /* default 1 */
} bgd_forest_params;

/* done, total, path of the image just finished; may be called from worker threads. */
typedef void (*bgd_progress_fn)(size_t done, size_t total, const char* path, void* user);

typedef struct bgd_extract_options {
  int jobs;              /* <= 0: all cores */
  int strict;            /* abort on first failing image */
  const char* cache_dir; /* NULL or "": no feature cache */
  int cache_only;        /* fail with BGD_ERR_MISSING_CACHE instead of extracting */
  bgd_progress_fn progress;
  void* progress_user;
} bgd_extract_options;

BGD_API const char* bgd_version(void);
BGD_API const char* bgd_last_error(void);
BGD_API const char* bgd_status_name(bgd_status status);
BGD_API const char* bgd_jpeg_encoder(void);

BGD_API void bgd_forest_params_default(bgd_forest_params* params);
BGD_API void bgd_extract_options_default(bgd_extract_options* options);

/* ---- feature configuration ---- */

BGD_API bgd_status bgd_config_create(const int* bases, size_t n_bases, const int* freqs, size_t n_freqs,
                                     const int* qfs, size_t n_qfs, double alpha, bgd_config** out);
/* Parses the canonical form "bases=10,20;freqs=1,2;qfs=95,100;alpha=2". */
BGD_API bgd_status bgd_config_parse(const char* canonical, bgd_config** out);
BGD_API bgd_status bgd_config_maximal(double alpha, bgd_config** out);
BGD_API void bgd_config_free(bgd_config* cfg);
BGD_API size_t bgd_config_dimensionality(const bgd_config* cfg);
BGD_API const char* bgd_config_fingerprint(const bgd_config* cfg);
BGD_API const char* bgd_config_canonical(const bgd_config* cfg);
/* Name of feature column i ("d_{qf}_{n}_{b}_{js|renyi|tsallis}"), NULL when out of range. */
BGD_API const char* bgd_config_feature_name(const bgd_config* cfg, size_t i);

/* Number of sweep configurations (675) and the i-th one. */
BGD_API size_t bgd_sweep_config_count(void);
BGD_API bgd_status bgd_sweep_config(size_t index, bgd_config** out);

/* ---- single images ---- */

/* Writes dimensionality values to out (capacity cap); *n_written receives the count. */
BGD_API bgd_status bgd_extract_image(const char* path, const bgd_config* cfg, double* out, size_t cap,
                                     size_t* n_written);
/* Baseline JPEG at IJG quality qf (1..100), 4:2:0 (subsampling_444 = 0) or 4:4:4. */
BGD_API bgd_status bgd_recompress_jpeg(const char* src, int qf, const char* dst, int subsampling_444);

/* ---- manifests and feature tables ---- */

BGD_API bgd_status bgd_manifest_load(const char* csv_path, bgd_manifest** out);
BGD_API void bgd_manifest_free(bgd_manifest* manifest);
BGD_API size_t bgd_manifest_size(const bgd_manifest* manifest);
BGD_API size_t bgd_manifest_group_count(const bgd_manifest* manifest);
BGD_API bgd_status bgd_manifest_entry(const bgd_manifest* manifest, size_t i, const char** path, int* label,
                                      const char** group);

BGD_API bgd_status bgd_table_extract(const bgd_manifest* manifest, const bgd_config* cfg,
                                     const bgd_extract_options* options, bgd_table** out);
BGD_API bgd_status bgd_table_read_csv(const char* path, bgd_table** out);
/* comment_lines: '\n'-separated provenance lines written as "# ..." above the header; may be NULL. */
BGD_API bgd_status bgd_table_write_csv(const bgd_table* table, const char* path, const char* comment_lines);
BGD_API void bgd_table_free(bgd_table* table);
BGD_API size_t bgd_table_rows(const bgd_table* table);
BGD_API size_t bgd_table_dimensionality(const bgd_table* table);
BGD_API const char* bgd_table_fingerprint(const bgd_table* table);
/* ok = 0 marks a row whose extraction failed; error then describes why. */
BGD_API bgd_status bgd_table_row(const bgd_table* table, size_t i, const char** path, int* label, int* ok,
                                 const char** error);
BGD_API const double* bgd_table_row_values(const bgd_table* table, size_t i);
BGD_API size_t bgd_table_row_degenerate(const bgd_table* table, size_t i);

/* ---- forest models ---- */

BGD_API bgd_status bgd_model_train(const bgd_table* table, const bgd_forest_params* params, uint64_t seed, int jobs,
                                   bgd_model** out);
BGD_API bgd_status bgd_model_load(const char* path, bgd_model** out);
/* provenance_json: a JSON object embedded under "provenance"; may be NULL. */
BGD_API bgd_status bgd_model_save(const bgd_model* model, const char* path, const char* provenance_json);
BGD_API void bgd_model_free(bgd_model* model);
BGD_API double bgd_model_oob_accuracy(const bgd_model* model);
BGD_API const char* bgd_model_fingerprint(const bgd_model* model);
BGD_API size_t bgd_model_dimensionality(const bgd_model* model);
/* Fails with BGD_ERR_FINGERPRINT_MISMATCH when fingerprint differs from the model's. */
BGD_API bgd_status bgd_model_predict(const bgd_model* model, const double* values, size_t n, const char* fingerprint,
                                     int* label, double* score);
/* Extracts with the model's own feature config, then predicts. */
BGD_API bgd_status bgd_model_predict_image(const bgd_model* model, const char* path, int* label, double* score);

/* ---- evaluation ---- */

BGD_API bgd_status bgd_eval_logo(const bgd_manifest* manifest, const bgd_config* cfg, const bgd_forest_params* params,
                                 uint64_t seed, const bgd_extract_options* options, bgd_report** out);
BGD_API bgd_status bgd_eval_split(const bgd_manifest* manifest, const bgd_config* cfg, double train_fraction,
                                  const bgd_forest_params* params, uint64_t seed, const bgd_extract_options* options,
                                  bgd_report** out);
/* Extracts at the maximal config and evaluates all sweep configurations. */
BGD_API bgd_status bgd_eval_sweep(const bgd_manifest* manifest, double alpha, const bgd_forest_params* params,
                                  uint64_t seed, const bgd_extract_options* options, bgd_report** out);
/* scenario: train_clean_test_compressed | train_compressed | per_qf | per_qf_per_group.
   qfs (may be NULL) lists the fixed QFs for the per-QF scenarios; default 100, 95, 90. */
BGD_API bgd_status bgd_eval_jpeg(const bgd_manifest* manifest, const char* scenario, const int* qfs, size_t n_qfs,
                                 const bgd_config* cfg, const bgd_forest_params* params, uint64_t seed,
                                 const bgd_extract_options* options, bgd_report** out);
BGD_API void bgd_report_free(bgd_report* report);
/* JSON object {"reports": [...]}; sweeps add "best_config_id". */
BGD_API const char* bgd_report_json(const bgd_report* report);
BGD_API const char* bgd_report_text(const bgd_report* report);
BGD_API size_t bgd_report_count(const bgd_report* report);
BGD_API double bgd_report_average(const bgd_report* report, size_t i);
/* Sweep only (otherwise NULL): the per-config accuracy CSV and the fixed-parameter marginals CSV. */
BGD_API const char* bgd_report_sweep_csv(const bgd_report* report);
BGD_API const char* bgd_report_marginals_csv(const bgd_report* report);

/* ---- synthetic corpus ---- */

/* Writes a labeled corpus of AR(1) (label 0) and FIR-filtered noise (label 1) PNGs plus manifest.csv. */
BGD_API bgd_status bgd_synth_corpus(const char* dir, int groups, int images_per_group, int size, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif /* BGD_BGD_H */

/* C interface to the fairaudit engine.
 *
 * Every function returns an fa_status. On failure the message of the most
 * recent error on the calling thread is available from fa_last_error().
 * Strings handed out through `char**` parameters are owned by the caller and
 * released with fa_string_free(). JSON is used for structured inputs and
 * results. */
#ifndef FAIRAUDIT_H
#define FAIRAUDIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(FAIRAUDIT_BUILDING)
#define FA_API __attribute__((visibility("default")))
#else
#define FA_API
#endif

typedef enum fa_status {
  FA_OK = 0,
  FA_ERR_INVALID_ARGUMENT = 1,
  FA_ERR_IO = 2,
  FA_ERR_PARSE = 3,
  FA_ERR_MISSING_COLUMN = 4,
  FA_ERR_DUPLICATE_KEY = 5,
  FA_ERR_EMPTY_JOIN = 6,
  FA_ERR_ZERO_VARIANCE = 7,
  FA_ERR_EMPTY_SIDE = 8,
  FA_ERR_DEGENERATE_RANGE = 9,
  FA_ERR_TOO_FEW_SAMPLES = 10,
  FA_ERR_NON_FINITE_FEATURE = 11,
  FA_ERR_DIMENSION_MISMATCH = 12,
  FA_ERR_LENGTH_MISMATCH = 13,
  FA_ERR_EMPTY_INPUT = 14,
  FA_ERR_CONSTANT_TARGET = 15,
  FA_ERR_DEGENERATE_FEATURE = 16,
  FA_ERR_EMPTY_GROUP = 17,
  FA_ERR_SINGLETON_GROUP = 18,
  FA_ERR_MISMATCHED_PROVENANCE = 19,
  FA_ERR_INVALID_REQUEST = 20,
  FA_ERR_ZERO_BASELINE = 21,
  FA_ERR_EMPTY_CELL = 22,
  FA_ERR_INVALID_CONFIG = 23,
  FA_ERR_INTERNAL = 24,
  /* run_experiment finished but at least one cell failed */
  FA_PARTIAL_FAILURE = 100
} fa_status;

typedef struct fa_dataset fa_dataset;
typedef struct fa_model fa_model;

FA_API const char* fa_version(void);
FA_API const char* fa_status_name(fa_status status);
/* Message of the last failure on this thread; "" if none. */
FA_API const char* fa_last_error(void);
FA_API void fa_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* Loads and joins the topic CSVs, then encodes every row. Sensitive-group
 * thresholds are taken over all rows at this point. */
FA_API fa_status fa_dataset_load(const char* schema_path, const char* const* data_paths, size_t n_paths,
                                 fa_dataset** out);
/* split_json: {"mode":"temporal","train_years":[..],"test_years":[..]} or
 * {"mode":"random","test_fraction":0.2,"seed":7}. The encoder is refitted on
 * the training rows. */
FA_API fa_status fa_dataset_split(const fa_dataset* data, const char* split_json, fa_dataset** train,
                                  fa_dataset** test);
FA_API fa_status fa_dataset_num_samples(const fa_dataset* data, size_t* out);
FA_API fa_status fa_dataset_num_features(const fa_dataset* data, size_t* out);
/* Feature names, sensitive features by class, thresholds, join statistics. */
FA_API fa_status fa_dataset_info(const fa_dataset* data, char** json_out);
/* Encoded CSV. Mitigated datasets also carry __origin, __source, __weight. */
FA_API fa_status fa_dataset_write_csv(const fa_dataset* data, const char* path);
FA_API void fa_dataset_free(fa_dataset* data);

/* ---- models ------------------------------------------------------------ */

/* model_json: {"kind":"random_forest","hyperparams":{...},"seed":1} or a bare
 * kind name. Weights attached by fa_mitigate (reweight) are used. */
FA_API fa_status fa_model_train(const fa_dataset* train, const char* model_json, fa_model** out);
/* Writes one prediction per sample into `out` (capacity n). */
FA_API fa_status fa_model_predict(const fa_model* model, const fa_dataset* data, double* out, size_t n);
/* {"n":..,"mae":..,"r2":..} */
FA_API fa_status fa_model_evaluate(const fa_model* model, const fa_dataset* data, char** json_out);
FA_API fa_status fa_model_save(const fa_model* model, const char* path);
FA_API fa_status fa_model_load(const char* path, fa_model** out);
FA_API void fa_model_free(fa_model* model);

/* ---- analyses ---------------------------------------------------------- */

/* Single-feature dMAE audit. n_features = 0 audits every sensitive feature. */
FA_API fa_status fa_audit(const fa_model* model, const fa_dataset* test, const char* const* features,
                          size_t n_features, char** json_out);
/* Retrains model_json with and without the sensitive inputs. */
FA_API fa_status fa_audit_ablation(const char* model_json, const fa_dataset* train, const fa_dataset* test,
                                   const char* const* features, size_t n_features, char** json_out);
/* spec_json: {"method":"oversample|mixup|perturb|reweight","feature":"..",
 * "alpha":0.2,"sigma":0.01,"seed":0}. */
FA_API fa_status fa_mitigate(const fa_dataset* train, const char* spec_json, fa_dataset** out);
/* Two-way audit. Empty race/religion lists take the sensitive features of
 * that class. options_json may be NULL or
 * {"weighting":"uniform|sample_count","min_subgroup":3,
 *  "fair_threshold":x,"multiple":2.0}. The result holds the report, the
 * single-feature audit and the blind-spot screen. */
FA_API fa_status fa_intersect(const fa_model* model, const fa_dataset* test, const char* const* race, size_t n_race,
                              const char* const* religion, size_t n_religion, const char* options_json,
                              char** json_out);
/* Year-cohort shift. bandwidth <= 0 selects the median heuristic. When
 * projection_csv is not NULL the PCA coordinates of all rows are written there. */
FA_API fa_status fa_drift(const fa_dataset* data, const int* cohort_a, size_t n_a, const int* cohort_b, size_t n_b,
                          double bandwidth, const char* projection_csv, char** json_out);

/* ---- experiments ------------------------------------------------------- */

/* Runs a config file. output_dir overrides the config when not NULL; jobs = 0
 * keeps the config value. Returns FA_PARTIAL_FAILURE when some cells failed. */
FA_API fa_status fa_run_experiment(const char* config_path, const char* output_dir, int jobs, char** json_out);
/* Writes a synthetic fixture (CSV tables + schema.json) into directory. */
FA_API fa_status fa_synth(const char* config_json, const char* directory, char** json_out);
/* Effective iff (baseline - mitigated) / baseline > 0.25. A zero baseline
 * sets *effective = 0 and returns FA_ERR_ZERO_BASELINE. */
FA_API fa_status fa_effectiveness_mark(double baseline_mean, double mitigated_mean, int* effective,
                                       double* improvement);

#ifdef __cplusplus
}
#endif

#endif /* FAIRAUDIT_H */

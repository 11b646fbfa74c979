/* C interface to the xferlag transfer-rate modelling library.
 *
 * Every fallible call returns an xl_status; on failure xl_last_error() gives
 * a message for the calling thread. Objects are opaque and owned by the
 * caller once returned. Strings handed out through char** parameters are
 * NUL-terminated and released with xl_string_free. */
#ifndef XFERLAG_XFERLAG_H
#define XFERLAG_XFERLAG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define XL_API __declspec(dllexport)
#else
#define XL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum xl_status {
  XL_OK = 0,
  XL_ERR_INVALID_ARGUMENT = 1,
  XL_ERR_SCHEMA = 2,       /* bad or missing CSV header column */
  XL_ERR_ROW = 3,          /* malformed data row */
  XL_ERR_PARSE = 4,        /* bad file name, JSON or other text */
  XL_ERR_PRECONDITION = 5, /* e.g. unsorted input */
  XL_ERR_IO = 6,
  XL_ERR_INTERNAL = 7
} xl_status;

typedef struct xl_events xl_events;
typedef struct xl_features xl_features;
typedef struct xl_model xl_model;

XL_API const char* xl_version(void);
XL_API const char* xl_last_error(void);
XL_API const char* xl_status_name(xl_status status);
XL_API void xl_string_free(char* text);

/* Event logs */
XL_API xl_status xl_events_load(const char* path, xl_events** out);
XL_API xl_status xl_events_parse(const char* csv, size_t length, xl_events** out);
XL_API xl_status xl_events_save(const xl_events* events, const char* path);
XL_API xl_status xl_events_to_csv(const xl_events* events, char** out_csv);
XL_API size_t xl_events_count(const xl_events* events);
XL_API void xl_events_free(xl_events* events);
/* Drops oversize and zero-valued records. report_json may be NULL. */
XL_API xl_status xl_events_clean(const xl_events* events, xl_events** out, char** report_json);
/* Stable start-time sort, in place. */
XL_API xl_status xl_events_sort(xl_events* events);
/* stage is "DSS_TO_FFB" or "FFB_TO_ANA"; ids are renumbered. */
XL_API xl_status xl_events_filter_stage(const xl_events* events, const char* stage,
                                        xl_events** out);

/* Synthetic workload. config_json may be NULL or "{}" for defaults; unknown
 * keys are ignored. meta_json (config echo plus counts) and trace_csv (hidden
 * per-event states) may be NULL. */
XL_API xl_status xl_synth_generate(const char* config_json, xl_events** out, char** meta_json,
                                   char** trace_csv);

/* Feature matrices. options_json keys:
 *   groups              "A,B,C1,C2,D1,D2,D3,E" subset, required
 *   utc_offset_seconds  integer, default 0
 *   vocab_fraction      share of leading rows the one-hot levels are fitted on, default 1
 *   vocabulary_meta     feature metadata JSON whose vocabulary is reused instead */
XL_API xl_status xl_features_assemble(const xl_events* events, const char* options_json,
                                      xl_features** out);
XL_API xl_status xl_features_save(const xl_features* features, const char* csv_path,
                                  const char* meta_path);
XL_API xl_status xl_features_load(const char* csv_path, const char* meta_path,
                                  xl_features** out);
XL_API xl_status xl_features_meta_json(const xl_features* features, char** out_json);
XL_API size_t xl_features_rows(const xl_features* features);
XL_API size_t xl_features_cols(const xl_features* features);
XL_API void xl_features_free(xl_features* features);

/* Models. family is "gbt" or "rf". params_json holds hyperparameters (a CV
 * result with best_params is accepted too); NULL means defaults. When
 * holdout_json is non-NULL ({"split","train_subset","test_subset","seed"}) the
 * model is fitted on the training side of that split only. */
XL_API xl_status xl_model_fit(const xl_features* features, const char* family,
                              const char* params_json, const char* holdout_json, xl_model** out);
XL_API xl_status xl_model_save(const xl_model* model, const char* path);
XL_API xl_status xl_model_load(const char* path, xl_model** out);
XL_API xl_status xl_model_to_json(const xl_model* model, char** out_json);
/* Writes xl_features_rows(features) predictions, clamped at zero. */
XL_API xl_status xl_model_predict(const xl_model* model, const xl_features* features,
                                  double* out, size_t capacity);
/* [{"feature", "share"}...] sorted by descending share. */
XL_API xl_status xl_model_importances_json(const xl_model* model, char** out_json);
XL_API void xl_model_free(xl_model* model);

/* Scores the test side of a holdout split. pairs_csv (event_id,actual,predicted)
 * may be NULL. */
XL_API xl_status xl_holdout_eval(const xl_model* model, const xl_features* features,
                                 const char* holdout_json, char** summary_json,
                                 char** pairs_csv);

/* Nested time-ordered cross-validation with random search. config_json keys:
 * family, num_params, k, train_width, test_width, train_size, test_size, seed,
 * use_subsets, and an optional "search_space" object. */
XL_API xl_status xl_cv_run(const xl_features* features, const char* config_json,
                           char** result_json);

/* Run report. inputs_json names artifact files, all optional:
 * {"cleaning", "features_meta", "cv", "model", "eval", "top_n", "include_timing"}. */
XL_API xl_status xl_report_build(const char* inputs_json, char** report_json, char** table_text);

#ifdef __cplusplus
}
#endif

#endif /* XFERLAG_XFERLAG_H */

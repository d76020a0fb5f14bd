#ifndef FAIRMARS_H
#define FAIRMARS_H

/* C interface to the fairmars fitting engine: fairness-aware multivariate
 * adaptive regression splines with penalized knot selection, GCV pruning and
 * subgroup-weighted coefficient estimation.
 *
 * All handles are opaque. Functions returning fm_status set a thread-local
 * error message retrievable with fm_last_error(). Strings returned through
 * char** out parameters are heap-allocated; release them with
 * fm_string_free(). Arrays returned through double** use fm_doubles_free().
 */

#include <stdint.h>

#ifndef FM_API
#if defined(_WIN32)
#define FM_API
#else
#define FM_API __attribute__((visibility("default")))
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct fm_dataset_t fm_dataset_t;
typedef struct fm_folds_t fm_folds_t;
typedef struct fm_config_t fm_config_t;
typedef struct fm_model_t fm_model_t;

typedef enum fm_status {
    FM_OK = 0,
    FM_ERROR = 1,       /* data, parse or runtime failure */
    FM_CONFIG_ERROR = 2 /* unusable options or arguments */
} fm_status;

FM_API const char* fm_version(void);
FM_API const char* fm_last_error(void);
FM_API void fm_string_free(char* s);
FM_API void fm_doubles_free(double* p);

/* -------- dataset -------- */

/* Loads a comma-delimited CSV with a header row. feature_cols is a comma
 * separated list of source columns, or NULL for every column except the
 * response. include_sensitive nonzero also exposes the sensitive column as a
 * predictor. */
FM_API fm_status fm_dataset_load_csv(const char* path, const char* response_col, const char* sensitive_col,
                              const char* feature_cols, int include_sensitive, fm_dataset_t** out);
FM_API void fm_dataset_free(fm_dataset_t* ds);
FM_API int fm_dataset_rows(const fm_dataset_t* ds);
FM_API int fm_dataset_features(const fm_dataset_t* ds);
FM_API int fm_dataset_groups(const fm_dataset_t* ds);

/* -------- fold plans -------- */

FM_API fm_status fm_folds_create(const fm_dataset_t* ds, int k, uint64_t seed, fm_folds_t** out);
FM_API fm_status fm_folds_to_json(const fm_folds_t* folds, char** out_json);
FM_API void fm_folds_free(fm_folds_t* folds);

/* -------- fit configuration -------- */

FM_API fm_config_t* fm_config_create(void);
FM_API void fm_config_free(fm_config_t* cfg);
FM_API void fm_config_set_lambda(fm_config_t* cfg, double lambda);
FM_API void fm_config_set_max_terms(fm_config_t* cfg, int max_terms);
FM_API void fm_config_set_max_degree(fm_config_t* cfg, int max_degree);
FM_API void fm_config_set_fair_knot(fm_config_t* cfg, int enabled);
FM_API void fm_config_set_fair_coef(fm_config_t* cfg, int enabled);
FM_API void fm_config_set_gcv_d(fm_config_t* cfg, double d);
FM_API void fm_config_set_backward_lambda(fm_config_t* cfg, double lambda);
FM_API void fm_config_set_strict_paper_mode(fm_config_t* cfg, int enabled);
FM_API void fm_config_set_min_group_size(fm_config_t* cfg, int size);
FM_API void fm_config_set_minspan(fm_config_t* cfg, int minspan);
FM_API void fm_config_set_endspan(fm_config_t* cfg, int endspan);
FM_API void fm_config_set_jobs(fm_config_t* cfg, int jobs);
FM_API void fm_config_set_seed(fm_config_t* cfg, uint64_t seed);

/* -------- fitting and models -------- */

FM_API fm_status fm_fit(const fm_dataset_t* ds, const fm_config_t* cfg, fm_model_t** out);

/* Like fm_fit but also returns a JSON fit report with the per-iteration
 * forward log and the pruning trace. */
FM_API fm_status fm_fit_with_report(const fm_dataset_t* ds, const fm_config_t* cfg, fm_model_t** out,
                             char** out_report_json);

FM_API fm_status fm_model_save(const fm_model_t* model, const char* path);
FM_API fm_status fm_model_load(const char* path, fm_model_t** out);
FM_API void fm_model_free(fm_model_t* model);
FM_API int fm_model_num_bases(const fm_model_t* model);
FM_API int fm_model_num_features(const fm_model_t* model);
FM_API double fm_model_response_mean(const fm_model_t* model);

/* row must hold fm_model_num_features() encoded feature values. */
FM_API fm_status fm_model_predict(const fm_model_t* model, const double* row, int len, double* out);

/* Re-encodes a raw CSV with the model's training encoding and predicts every
 * row. *out_preds receives a heap array of *out_n predictions. */
FM_API fm_status fm_model_predict_csv(const fm_model_t* model, const char* csv_path, double** out_preds,
                               int* out_n);

/* Rule table: one line per basis, "coef  basis". include_pruned nonzero
 * appends the eliminated bases marked "pruned". */
FM_API fm_status fm_model_export_rules(const fm_model_t* model, int include_pruned, char** out_text);
FM_API fm_status fm_model_to_json(const fm_model_t* model, char** out_json);

/* -------- evaluation -------- */

/* variants: comma list among mars,fairknot,faircoef,fairknot+faircoef
 * (NULL = all four). lambda_grid (grid_len values) applies to the fair
 * variants; NULL selects {0.2, 0.4, 0.6, 0.8}. format is json, csv or text. */
FM_API fm_status fm_cross_validate(const fm_dataset_t* ds, const fm_config_t* cfg, const fm_folds_t* folds,
                            const char* variants, const double* lambda_grid, int grid_len,
                            const char* format, int include_timings, char** out_report);

/* One fit per lambda on a single fold; lambdas must be ascending and start
 * at 0. */
FM_API fm_status fm_lambda_sweep(const fm_dataset_t* ds, const fm_config_t* cfg, const fm_folds_t* folds,
                          int fold_id, const double* lambdas, int count, const char* format,
                          char** out_report);

/* Test metrics (MSE, R2, subgroup disparity) of a model on a dataset. */
FM_API fm_status fm_evaluate(const fm_model_t* model, const fm_dataset_t* ds, char** out_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FAIRMARS_H */

#include "fairmars.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fairmars/errors.hpp"
#include "fairmars/evaluation.hpp"
#include "fairmars/model.hpp"

using namespace fairmars;

struct fm_dataset_t {
    Dataset ds;
};
struct fm_folds_t {
    FoldPlan plan;
};
struct fm_config_t {
    FitConfig cfg;
};
struct fm_model_t {
    FairMarsModel model;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
fm_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return FM_OK;
    } catch (const config_error& e) {
        g_last_error = e.what();
        return FM_CONFIG_ERROR;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FM_ERROR;
    }
}

std::vector<std::string> split_list(const char* list) {
    std::vector<std::string> out;
    if (!list) return out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t a = item.find_first_not_of(" \t");
        size_t b = item.find_last_not_of(" \t");
        if (a == std::string::npos) continue;
        out.push_back(item.substr(a, b - a + 1));
    }
    return out;
}

std::string render_eval(const std::vector<EvalReport>& reports,
                        const std::vector<std::string>& group_names, const std::string& format,
                        bool timings) {
    if (format == "json") return reports_to_json(reports, group_names, timings);
    if (format == "csv") return reports_to_csv(reports, group_names);
    if (format == "text") return reports_to_text(reports, group_names);
    throw config_error("unknown format: " + format);
}

std::string render_sweep(const std::vector<SweepRow>& rows, const std::vector<std::string>& group_names,
                         const std::string& format) {
    if (format == "json") return sweep_to_json(rows, group_names);
    if (format == "csv") return sweep_to_csv(rows, group_names);
    if (format == "text") return sweep_to_text(rows, group_names);
    throw config_error("unknown format: " + format);
}

} // namespace

extern "C" {

const char* fm_version(void) { return "1.0.0"; }

const char* fm_last_error(void) { return g_last_error.c_str(); }

void fm_string_free(char* s) { std::free(s); }
void fm_doubles_free(double* p) { std::free(p); }

fm_status fm_dataset_load_csv(const char* path, const char* response_col, const char* sensitive_col,
                              const char* feature_cols, int include_sensitive, fm_dataset_t** out) {
    return guarded([&] {
        if (!path || !response_col || !sensitive_col || !out)
            throw config_error("fm_dataset_load_csv: null argument");
        LoadOptions opt;
        opt.response_col = response_col;
        opt.sensitive_col = sensitive_col;
        opt.feature_cols = split_list(feature_cols);
        opt.include_sensitive = include_sensitive != 0;
        *out = new fm_dataset_t{load_csv(path, opt)};
    });
}

void fm_dataset_free(fm_dataset_t* ds) { delete ds; }
int fm_dataset_rows(const fm_dataset_t* ds) { return ds->ds.num_rows(); }
int fm_dataset_features(const fm_dataset_t* ds) { return ds->ds.num_features(); }
int fm_dataset_groups(const fm_dataset_t* ds) { return ds->ds.num_groups(); }

fm_status fm_folds_create(const fm_dataset_t* ds, int k, uint64_t seed, fm_folds_t** out) {
    return guarded([&] {
        if (!ds || !out) throw config_error("fm_folds_create: null argument");
        *out = new fm_folds_t{make_folds(ds->ds, k, seed)};
    });
}

fm_status fm_folds_to_json(const fm_folds_t* folds, char** out_json) {
    return guarded([&] {
        if (!folds || !out_json) throw config_error("fm_folds_to_json: null argument");
        *out_json = dup_string(folds->plan.to_json());
    });
}

void fm_folds_free(fm_folds_t* folds) { delete folds; }

fm_config_t* fm_config_create(void) { return new fm_config_t{}; }
void fm_config_free(fm_config_t* cfg) { delete cfg; }
void fm_config_set_lambda(fm_config_t* cfg, double lambda) { cfg->cfg.lambda = lambda; }
void fm_config_set_max_terms(fm_config_t* cfg, int max_terms) { cfg->cfg.max_terms = max_terms; }
void fm_config_set_max_degree(fm_config_t* cfg, int max_degree) { cfg->cfg.max_degree = max_degree; }
void fm_config_set_fair_knot(fm_config_t* cfg, int enabled) { cfg->cfg.use_fair_knot = enabled != 0; }
void fm_config_set_fair_coef(fm_config_t* cfg, int enabled) { cfg->cfg.use_fair_coef = enabled != 0; }
void fm_config_set_gcv_d(fm_config_t* cfg, double d) { cfg->cfg.gcv_d = d; }
void fm_config_set_backward_lambda(fm_config_t* cfg, double lambda) { cfg->cfg.backward_lambda = lambda; }
void fm_config_set_strict_paper_mode(fm_config_t* cfg, int enabled) {
    cfg->cfg.strict_paper_mode = enabled != 0;
}
void fm_config_set_min_group_size(fm_config_t* cfg, int size) { cfg->cfg.min_group_size = size; }
void fm_config_set_minspan(fm_config_t* cfg, int minspan) { cfg->cfg.minspan = minspan; }
void fm_config_set_endspan(fm_config_t* cfg, int endspan) { cfg->cfg.endspan = endspan; }
void fm_config_set_jobs(fm_config_t* cfg, int jobs) { cfg->cfg.jobs = jobs; }
void fm_config_set_seed(fm_config_t* cfg, uint64_t seed) { cfg->cfg.seed = seed; }

fm_status fm_fit(const fm_dataset_t* ds, const fm_config_t* cfg, fm_model_t** out) {
    return guarded([&] {
        if (!ds || !cfg || !out) throw config_error("fm_fit: null argument");
        *out = new fm_model_t{fit(ds->ds, cfg->cfg)};
    });
}

fm_status fm_fit_with_report(const fm_dataset_t* ds, const fm_config_t* cfg, fm_model_t** out,
                             char** out_report_json) {
    return guarded([&] {
        if (!ds || !cfg || !out) throw config_error("fm_fit_with_report: null argument");
        FitResult result = fit_with_report(ds->ds, cfg->cfg);
        if (out_report_json) {
            nlohmann::json j;
            j["model"] = nlohmann::json::parse(result.model.to_json());
            j["forward_log_jsonl"] = fit_log_to_jsonl(result.log);
            j["prune_trace"] = nlohmann::json::parse(result.trace.to_json());
            *out_report_json = dup_string(j.dump(2));
        }
        *out = new fm_model_t{std::move(result.model)};
    });
}

fm_status fm_model_save(const fm_model_t* model, const char* path) {
    return guarded([&] {
        if (!model || !path) throw config_error("fm_model_save: null argument");
        model->model.save(path);
    });
}

fm_status fm_model_load(const char* path, fm_model_t** out) {
    return guarded([&] {
        if (!path || !out) throw config_error("fm_model_load: null argument");
        *out = new fm_model_t{FairMarsModel::load(path)};
    });
}

void fm_model_free(fm_model_t* model) { delete model; }
int fm_model_num_bases(const fm_model_t* model) { return static_cast<int>(model->model.bases().size()); }
int fm_model_num_features(const fm_model_t* model) {
    return static_cast<int>(model->model.column_names().size());
}
double fm_model_response_mean(const fm_model_t* model) { return model->model.response_mean(); }

fm_status fm_model_predict(const fm_model_t* model, const double* row, int len, double* out) {
    return guarded([&] {
        if (!model || !row || !out) throw config_error("fm_model_predict: null argument");
        *out = model->model.predict({row, static_cast<size_t>(len)});
    });
}

fm_status fm_model_predict_csv(const fm_model_t* model, const char* csv_path, double** out_preds,
                               int* out_n) {
    return guarded([&] {
        if (!model || !csv_path || !out_preds || !out_n)
            throw config_error("fm_model_predict_csv: null argument");
        int n = 0;
        std::vector<double> cols = encode_rows(csv_path, model->model.encoding(), &n);
        std::vector<double> preds = model->model.predict_block(cols.data(), n);
        auto* buf = static_cast<double*>(std::malloc(preds.size() * sizeof(double)));
        std::memcpy(buf, preds.data(), preds.size() * sizeof(double));
        *out_preds = buf;
        *out_n = n;
    });
}

fm_status fm_model_export_rules(const fm_model_t* model, int include_pruned, char** out_text) {
    return guarded([&] {
        if (!model || !out_text) throw config_error("fm_model_export_rules: null argument");
        *out_text = dup_string(model->model.export_rules(include_pruned != 0));
    });
}

fm_status fm_model_to_json(const fm_model_t* model, char** out_json) {
    return guarded([&] {
        if (!model || !out_json) throw config_error("fm_model_to_json: null argument");
        *out_json = dup_string(model->model.to_json());
    });
}

fm_status fm_cross_validate(const fm_dataset_t* ds, const fm_config_t* cfg, const fm_folds_t* folds,
                            const char* variants, const double* lambda_grid, int grid_len,
                            const char* format, int include_timings, char** out_report) {
    return guarded([&] {
        if (!ds || !cfg || !folds || !out_report) throw config_error("fm_cross_validate: null argument");
        std::vector<std::string> vars = variants ? split_list(variants) : kAllVariants;
        std::vector<double> grid = lambda_grid
                                       ? std::vector<double>(lambda_grid, lambda_grid + grid_len)
                                       : kDefaultLambdaGrid;
        auto reports = cross_validate(ds->ds, cfg->cfg, folds->plan, vars, grid);
        *out_report = dup_string(render_eval(reports, ds->ds.group_names(),
                                             format ? format : "json", include_timings != 0));
    });
}

fm_status fm_lambda_sweep(const fm_dataset_t* ds, const fm_config_t* cfg, const fm_folds_t* folds,
                          int fold_id, const double* lambdas, int count, const char* format,
                          char** out_report) {
    return guarded([&] {
        if (!ds || !cfg || !folds || !lambdas || !out_report)
            throw config_error("fm_lambda_sweep: null argument");
        std::vector<double> values(lambdas, lambdas + count);
        auto rows = lambda_sweep(ds->ds, cfg->cfg, values, folds->plan, fold_id);
        *out_report = dup_string(render_sweep(rows, ds->ds.group_names(), format ? format : "json"));
    });
}

fm_status fm_evaluate(const fm_model_t* model, const fm_dataset_t* ds, char** out_json) {
    return guarded([&] {
        if (!model || !ds || !out_json) throw config_error("fm_evaluate: null argument");
        std::vector<double> preds = model->model.predict_rows(ds->ds);
        Metrics m = compute_metrics(ds->ds.raw_response(), preds, ds->ds.groups(), ds->ds.num_groups());
        nlohmann::json j;
        j["mse"] = m.mse;
        j["r2"] = std::isnan(m.r2) ? nlohmann::json(nullptr) : nlohmann::json(m.r2);
        j["disparity"] = nlohmann::json::parse(m.disparity.to_json(ds->ds.group_names()));
        *out_json = dup_string(j.dump(2));
    });
}

} // extern "C"

// fairmars command line: train, evaluate and export fairness-aware MARS
// regression models through the C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairmars.h"

namespace {

struct Options {
    std::string data;
    std::string response_col;
    std::string sensitive_col;
    std::string feature_cols; // comma list
    std::string lambda_list = "0";
    int max_terms = 21;
    int max_degree = 1;
    bool fairknot = true;
    bool faircoef = false;
    double gcv_d = -1.0;
    double backward_lambda = -1.0;
    int folds = 10;
    uint64_t fold_seed = 42;
    int fold_id = 0;
    bool include_sensitive = true;
    int min_group_size = 1;
    bool strict_paper_mode = false;
    int minspan = 0;
    int endspan = 0;
    int jobs = 0;
    uint64_t seed = 0;
    std::string model_out;
    std::string model_in;
    std::string report_out;
    std::string format = "text";
    std::string variants;
    bool timings = false;
    bool include_pruned = false;
};

int fail(fm_status status) {
    std::cerr << "error: " << fm_last_error() << "\n";
    return status == FM_CONFIG_ERROR ? 2 : 1;
}

int fail_config(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return 2;
}

// Outputs go through a temp file and rename so failures never leave partial
// artifacts behind.
bool write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return true;
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) return false;
        out << content;
        if (!out) return false;
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    return !ec;
}

std::vector<double> parse_lambdas(const std::string& list, bool allow_list, std::string* err) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            double v = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            *err = "invalid lambda value: " + item;
            return {};
        }
    }
    if (out.empty()) {
        *err = "no lambda values given";
        return {};
    }
    if (!allow_list && out.size() > 1) {
        *err = "this subcommand accepts a single lambda (a comma list is only valid in sweep)";
        return {};
    }
    for (double v : out) {
        if (v < 0.0) {
            *err = "lambda must be non-negative";
            return {};
        }
    }
    return out;
}

using dataset_ptr = std::unique_ptr<fm_dataset_t, decltype(&fm_dataset_free)>;
using folds_ptr = std::unique_ptr<fm_folds_t, decltype(&fm_folds_free)>;
using config_ptr = std::unique_ptr<fm_config_t, decltype(&fm_config_free)>;
using model_ptr = std::unique_ptr<fm_model_t, decltype(&fm_model_free)>;

dataset_ptr load_dataset(const Options& opt, fm_status* status) {
    fm_dataset_t* raw = nullptr;
    *status = fm_dataset_load_csv(opt.data.c_str(), opt.response_col.c_str(), opt.sensitive_col.c_str(),
                                  opt.feature_cols.empty() ? nullptr : opt.feature_cols.c_str(),
                                  opt.include_sensitive ? 1 : 0, &raw);
    return dataset_ptr(raw, &fm_dataset_free);
}

config_ptr make_config(const Options& opt, double lambda) {
    config_ptr cfg(fm_config_create(), &fm_config_free);
    fm_config_set_lambda(cfg.get(), lambda);
    fm_config_set_max_terms(cfg.get(), opt.max_terms);
    fm_config_set_max_degree(cfg.get(), opt.max_degree);
    fm_config_set_fair_knot(cfg.get(), opt.fairknot ? 1 : 0);
    fm_config_set_fair_coef(cfg.get(), opt.faircoef ? 1 : 0);
    fm_config_set_gcv_d(cfg.get(), opt.gcv_d);
    fm_config_set_backward_lambda(cfg.get(), opt.backward_lambda);
    fm_config_set_strict_paper_mode(cfg.get(), opt.strict_paper_mode ? 1 : 0);
    fm_config_set_min_group_size(cfg.get(), opt.min_group_size);
    fm_config_set_minspan(cfg.get(), opt.minspan);
    fm_config_set_endspan(cfg.get(), opt.endspan);
    fm_config_set_jobs(cfg.get(), opt.jobs);
    fm_config_set_seed(cfg.get(), opt.seed);
    return cfg;
}

int run_fit(const Options& opt) {
    std::string err;
    auto lambdas = parse_lambdas(opt.lambda_list, false, &err);
    if (lambdas.empty()) return fail_config(err);

    fm_status status;
    auto ds = load_dataset(opt, &status);
    if (status != FM_OK) return fail(status);
    auto cfg = make_config(opt, lambdas[0]);

    fm_model_t* raw_model = nullptr;
    char* report = nullptr;
    status = opt.report_out.empty() ? fm_fit(ds.get(), cfg.get(), &raw_model)
                                    : fm_fit_with_report(ds.get(), cfg.get(), &raw_model, &report);
    if (status != FM_OK) return fail(status);
    model_ptr model(raw_model, &fm_model_free);

    status = fm_model_save(model.get(), opt.model_out.c_str());
    if (status != FM_OK) {
        fm_string_free(report);
        return fail(status);
    }
    if (report) {
        const bool ok = write_output(opt.report_out, std::string(report) + "\n");
        fm_string_free(report);
        if (!ok) return fail_config("cannot write report: " + opt.report_out);
    }
    std::cout << "model written to " << opt.model_out << "\n";
    return 0;
}

int run_predict(const Options& opt) {
    fm_model_t* raw_model = nullptr;
    fm_status status = fm_model_load(opt.model_in.c_str(), &raw_model);
    if (status != FM_OK) return fail(status);
    model_ptr model(raw_model, &fm_model_free);

    double* preds = nullptr;
    int n = 0;
    status = fm_model_predict_csv(model.get(), opt.data.c_str(), &preds, &n);
    if (status != FM_OK) return fail(status);

    std::ostringstream out;
    if (opt.format == "json") {
        out << "[";
        for (int i = 0; i < n; ++i) out << (i ? "," : "") << preds[i];
        out << "]\n";
    } else {
        out << "prediction\n";
        for (int i = 0; i < n; ++i) out << preds[i] << "\n";
    }
    fm_doubles_free(preds);
    if (!write_output(opt.report_out, out.str()))
        return fail_config("cannot write output: " + opt.report_out);
    return 0;
}

int run_cv(const Options& opt) {
    std::string err;
    std::vector<double> grid;
    if (opt.lambda_list != "0") {
        grid = parse_lambdas(opt.lambda_list, false, &err);
        if (grid.empty()) return fail_config(err);
    }

    fm_status status;
    auto ds = load_dataset(opt, &status);
    if (status != FM_OK) return fail(status);
    auto cfg = make_config(opt, 0.0);

    fm_folds_t* raw_folds = nullptr;
    status = fm_folds_create(ds.get(), opt.folds, opt.fold_seed, &raw_folds);
    if (status != FM_OK) return fail(status);
    folds_ptr folds(raw_folds, &fm_folds_free);

    char* report = nullptr;
    status = fm_cross_validate(ds.get(), cfg.get(), folds.get(),
                               opt.variants.empty() ? nullptr : opt.variants.c_str(),
                               grid.empty() ? nullptr : grid.data(), static_cast<int>(grid.size()),
                               opt.format.c_str(), opt.timings ? 1 : 0, &report);
    if (status != FM_OK) return fail(status);
    const bool ok = write_output(opt.report_out, report);
    fm_string_free(report);
    if (!ok) return fail_config("cannot write report: " + opt.report_out);
    return 0;
}

int run_sweep(const Options& opt) {
    std::string err;
    auto lambdas = parse_lambdas(opt.lambda_list, true, &err);
    if (lambdas.empty()) return fail_config(err);

    fm_status status;
    auto ds = load_dataset(opt, &status);
    if (status != FM_OK) return fail(status);
    auto cfg = make_config(opt, 0.0);

    fm_folds_t* raw_folds = nullptr;
    status = fm_folds_create(ds.get(), opt.folds, opt.fold_seed, &raw_folds);
    if (status != FM_OK) return fail(status);
    folds_ptr folds(raw_folds, &fm_folds_free);

    char* report = nullptr;
    status = fm_lambda_sweep(ds.get(), cfg.get(), folds.get(), opt.fold_id, lambdas.data(),
                             static_cast<int>(lambdas.size()), opt.format.c_str(), &report);
    if (status != FM_OK) return fail(status);
    const bool ok = write_output(opt.report_out, report);
    fm_string_free(report);
    if (!ok) return fail_config("cannot write report: " + opt.report_out);
    return 0;
}

int run_export_rules(const Options& opt) {
    fm_model_t* raw_model = nullptr;
    fm_status status = fm_model_load(opt.model_in.c_str(), &raw_model);
    if (status != FM_OK) return fail(status);
    model_ptr model(raw_model, &fm_model_free);

    char* text = nullptr;
    status = fm_model_export_rules(model.get(), opt.include_pruned ? 1 : 0, &text);
    if (status != FM_OK) return fail(status);
    const bool ok = write_output(opt.report_out, text);
    fm_string_free(text);
    if (!ok) return fail_config("cannot write output: " + opt.report_out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairmars: fairness-aware multivariate adaptive regression splines"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a TOML/INI config file");

    Options opt;

    auto add_data_flags = [&](CLI::App* cmd, bool need_cols) {
        cmd->add_option("--data", opt.data, "input CSV file")->required();
        auto* r = cmd->add_option("--response-col", opt.response_col, "response column name");
        auto* s = cmd->add_option("--sensitive-col", opt.sensitive_col, "sensitive attribute column");
        if (need_cols) {
            r->required();
            s->required();
        }
        cmd->add_option("--feature-cols", opt.feature_cols,
                        "comma list of feature columns (default: all except response)");
        cmd->add_flag("--include-sensitive,!--no-include-sensitive", opt.include_sensitive,
                      "use the sensitive column as a predictor too (default on)");
    };
    auto add_fit_flags = [&](CLI::App* cmd) {
        cmd->add_option("--lambda", opt.lambda_list, "fairness weight (sweep accepts a comma list)");
        cmd->add_option("--max-terms", opt.max_terms, "forward-pass basis cap (default 21)");
        cmd->add_option("--max-degree", opt.max_degree, "maximum interaction order (default 1)");
        cmd->add_flag("--fairknot,!--no-fairknot", opt.fairknot,
                      "penalize knot selection with lambda * disparity (default on)");
        cmd->add_flag("--faircoef", opt.faircoef, "re-estimate final coefficients by weighted LS");
        cmd->add_option("--gcv-d", opt.gcv_d, "GCV cost per knot (default: 2 additive, else 3)");
        cmd->add_option("--backward-lambda", opt.backward_lambda,
                        "override lambda for the backward pass");
        cmd->add_option("--min-group-size", opt.min_group_size, "informational floor for group sizes");
        cmd->add_flag("--strict-paper-mode", opt.strict_paper_mode,
                      "disable the early-stop improvement threshold");
        cmd->add_option("--minspan", opt.minspan, "minimum observations between knots (0 = all)");
        cmd->add_option("--endspan", opt.endspan, "observations excluded at support ends (0 = all)");
        cmd->add_option("--jobs", opt.jobs, "sweep worker threads (0 = auto)");
        cmd->add_option("--seed", opt.seed, "seed echoed into the model file");
    };
    auto add_report_flags = [&](CLI::App* cmd) {
        cmd->add_option("--report-out", opt.report_out, "output file (default: stdout)");
        cmd->add_option("--format", opt.format, "json, csv or text")
            ->check(CLI::IsMember({"json", "csv", "text"}));
    };

    auto* fit_cmd = app.add_subcommand("fit", "train a model and write it as JSON");
    add_data_flags(fit_cmd, true);
    add_fit_flags(fit_cmd);
    fit_cmd->add_option("--model-out", opt.model_out, "output model file")->required();
    fit_cmd->add_option("--report-out", opt.report_out, "also write a fit report (forward log, pruning)");

    auto* predict_cmd = app.add_subcommand("predict", "score a CSV with a saved model");
    predict_cmd->add_option("--data", opt.data, "input CSV file")->required();
    predict_cmd->add_option("--model-in", opt.model_in, "model file")->required();
    add_report_flags(predict_cmd);

    auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation across model variants");
    add_data_flags(cv_cmd, true);
    add_fit_flags(cv_cmd);
    cv_cmd->add_option("--folds", opt.folds, "fold count (default 10)");
    cv_cmd->add_option("--fold-seed", opt.fold_seed, "fold shuffle seed (default 42)");
    cv_cmd->add_option("--variants", opt.variants,
                       "comma list of mars,fairknot,faircoef,fairknot+faircoef (default all)");
    cv_cmd->add_flag("--timings", opt.timings, "include per-fold wall-clock in reports");
    add_report_flags(cv_cmd);

    auto* sweep_cmd = app.add_subcommand("sweep", "single-fold lambda sweep");
    add_data_flags(sweep_cmd, true);
    add_fit_flags(sweep_cmd);
    sweep_cmd->add_option("--folds", opt.folds, "fold count (default 10)");
    sweep_cmd->add_option("--fold-seed", opt.fold_seed, "fold shuffle seed (default 42)");
    sweep_cmd->add_option("--fold-id", opt.fold_id, "which fold to hold out (default 0)");
    add_report_flags(sweep_cmd);

    auto* rules_cmd = app.add_subcommand("export-rules", "print the fitted rule table");
    rules_cmd->add_option("--model-in", opt.model_in, "model file")->required();
    rules_cmd->add_flag("--include-pruned", opt.include_pruned, "append pruned bases");
    rules_cmd->add_option("--report-out", opt.report_out, "output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (fit_cmd->parsed()) return run_fit(opt);
    if (predict_cmd->parsed()) return run_predict(opt);
    if (cv_cmd->parsed()) return run_cv(opt);
    if (sweep_cmd->parsed()) return run_sweep(opt);
    if (rules_cmd->parsed()) return run_export_rules(opt);
    return fail_config("no subcommand given");
}

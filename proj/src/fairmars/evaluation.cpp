#include "fairmars/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fairmars/errors.hpp"

namespace fairmars {

const std::vector<std::string> kAllVariants = {"mars", "fairknot", "faircoef", "fairknot+faircoef"};
const std::vector<double> kDefaultLambdaGrid = {0.2, 0.4, 0.6, 0.8};

Metrics compute_metrics(std::span<const double> y_true, std::span<const double> y_pred,
                        std::span<const int> groups, int num_groups) {
    if (y_true.size() != y_pred.size()) throw data_error("metrics: length mismatch");
    const size_t n = y_true.size();
    if (n == 0) throw data_error("metrics: empty input");

    double sse = 0.0, mean = 0.0;
    std::vector<double> resid(n);
    for (size_t i = 0; i < n; ++i) {
        resid[i] = y_true[i] - y_pred[i];
        sse += resid[i] * resid[i];
        mean += y_true[i];
    }
    mean /= static_cast<double>(n);
    double sst = 0.0;
    for (size_t i = 0; i < n; ++i) sst += (y_true[i] - mean) * (y_true[i] - mean);

    Metrics m;
    m.mse = sse / static_cast<double>(n);
    m.r2 = sst > 0.0 ? 1.0 - sse / sst : std::numeric_limits<double>::quiet_NaN();
    m.disparity = disparity(resid, groups, num_groups);
    return m;
}

namespace {

FitConfig variant_config(const FitConfig& base, const std::string& variant, double lambda) {
    FitConfig cfg = base;
    if (variant == "mars") {
        cfg.lambda = 0.0;
        cfg.use_fair_knot = false;
        cfg.use_fair_coef = false;
    } else if (variant == "fairknot") {
        cfg.lambda = lambda;
        cfg.use_fair_knot = true;
        cfg.use_fair_coef = false;
    } else if (variant == "faircoef") {
        cfg.lambda = 0.0;
        cfg.use_fair_knot = false;
        cfg.use_fair_coef = true;
    } else if (variant == "fairknot+faircoef") {
        cfg.lambda = lambda;
        cfg.use_fair_knot = true;
        cfg.use_fair_coef = true;
    } else {
        throw config_error("unknown variant: " + variant);
    }
    return cfg;
}

EvalReport run_variant(const Dataset& ds, const FitConfig& cfg, const FoldPlan& folds,
                       const std::string& variant, double lambda) {
    EvalReport rep;
    rep.variant = variant;
    rep.lambda = (variant == "fairknot" || variant == "fairknot+faircoef") ? lambda : 0.0;
    const FitConfig vcfg = variant_config(cfg, variant, lambda);

    const int num_groups = ds.num_groups();
    std::vector<double> diff_sum(static_cast<size_t>(num_groups), 0.0);
    std::vector<int> diff_count(static_cast<size_t>(num_groups), 0);
    double mse_sum = 0.0, r2_sum = 0.0, disp_sum = 0.0;
    int r2_count = 0;

    for (int f = 0; f < folds.k; ++f) {
        const auto t0 = std::chrono::steady_clock::now();
        auto train_rows = folds.train_rows(f);
        auto test_rows = folds.test_rows(f);
        Dataset train = ds.subset(train_rows);
        Dataset test = ds.subset(test_rows);

        FairMarsModel model = fit(train, vcfg);
        std::vector<double> preds = model.predict_rows(test);
        Metrics m = compute_metrics(test.raw_response(), preds, test.groups(), num_groups);

        FoldMetrics fm;
        fm.fold = f;
        fm.mse = m.mse;
        fm.r2 = m.r2;
        fm.disparity = m.disparity;
        fm.test_rows = test.num_rows();
        fm.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

        mse_sum += fm.mse;
        if (!std::isnan(fm.r2)) {
            r2_sum += fm.r2;
            ++r2_count;
        }
        disp_sum += fm.disparity.disparity;
        rep.missing_group_warnings += fm.disparity.empty_group_warnings;
        for (int g = 0; g < num_groups; ++g) {
            const auto gi = static_cast<size_t>(g);
            if (fm.disparity.group_sizes[gi] > 0 && !std::isnan(fm.disparity.complement_mse[gi])) {
                diff_sum[gi] += std::abs(fm.disparity.group_mse[gi] - fm.disparity.complement_mse[gi]);
                diff_count[gi]++;
            }
        }
        rep.folds.push_back(std::move(fm));
    }

    const double kf = static_cast<double>(folds.k);
    rep.aggregate_mse = mse_sum / kf;
    rep.aggregate_r2 = r2_count > 0 ? r2_sum / r2_count : std::numeric_limits<double>::quiet_NaN();
    rep.aggregate_disparity = disp_sum / kf;
    rep.group_abs_diff.assign(static_cast<size_t>(num_groups),
                              std::numeric_limits<double>::quiet_NaN());
    for (int g = 0; g < num_groups; ++g)
        if (diff_count[static_cast<size_t>(g)] > 0)
            rep.group_abs_diff[static_cast<size_t>(g)] =
                diff_sum[static_cast<size_t>(g)] / diff_count[static_cast<size_t>(g)];
    return rep;
}

} // namespace

std::vector<EvalReport> cross_validate(const Dataset& ds, const FitConfig& cfg, const FoldPlan& folds,
                                       const std::vector<std::string>& variants,
                                       const std::vector<double>& lambda_grid) {
    if (static_cast<int>(folds.assignments.size()) != ds.num_rows())
        throw config_error("fold plan does not match the dataset");
    std::vector<EvalReport> out;
    for (const auto& variant : variants) {
        if (variant == "mars" || variant == "faircoef") {
            out.push_back(run_variant(ds, cfg, folds, variant, 0.0));
        } else {
            for (double lambda : lambda_grid) out.push_back(run_variant(ds, cfg, folds, variant, lambda));
        }
    }
    return out;
}

int select_min_disparity(const std::vector<EvalReport>& reports, const std::string& variant) {
    int best = -1;
    for (size_t i = 0; i < reports.size(); ++i) {
        if (reports[i].variant != variant) continue;
        if (best < 0 || reports[i].aggregate_disparity <
                            reports[static_cast<size_t>(best)].aggregate_disparity)
            best = static_cast<int>(i);
    }
    return best;
}

std::vector<SweepRow> lambda_sweep(const Dataset& ds, const FitConfig& cfg,
                                   const std::vector<double>& lambdas, const FoldPlan& folds,
                                   int fold_id) {
    if (lambdas.empty() || lambdas.front() != 0.0)
        throw config_error("lambda sweep requires an ascending list starting at 0");
    for (size_t i = 1; i < lambdas.size(); ++i)
        if (lambdas[i] <= lambdas[i - 1]) throw config_error("lambda sweep values must be ascending");
    if (fold_id < 0 || fold_id >= folds.k) throw config_error("fold id outside the fold plan");

    auto train_rows = folds.train_rows(fold_id);
    auto test_rows = folds.test_rows(fold_id);
    Dataset train = ds.subset(train_rows);
    Dataset test = ds.subset(test_rows);

    std::vector<SweepRow> rows;
    for (double lambda : lambdas) {
        FitConfig vcfg = cfg;
        vcfg.lambda = lambda;
        vcfg.use_fair_knot = true;
        FairMarsModel model = fit(train, vcfg);
        std::vector<double> preds = model.predict_rows(test);
        Metrics m = compute_metrics(test.raw_response(), preds, test.groups(), ds.num_groups());
        SweepRow row;
        row.lambda = lambda;
        row.mse = m.mse;
        row.r2 = m.r2;
        row.disparity = m.disparity;
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

nlohmann::json nan_safe(double v) {
    if (std::isnan(v) || std::isinf(v)) return nullptr;
    return v;
}

nlohmann::json disparity_json(const DisparityReport& d, const std::vector<std::string>& group_names) {
    nlohmann::json j;
    j["disparity"] = nan_safe(d.disparity);
    for (size_t g = 0; g < d.group_mse.size(); ++g) {
        if (d.group_sizes[g] == 0) continue;
        const std::string& name = g < group_names.size() ? group_names[g] : ("group" + std::to_string(g));
        j["group_mse"][name] = nan_safe(d.group_mse[g]);
        j["group_abs_diff"][name] =
            std::isnan(d.complement_mse[g])
                ? nlohmann::json(nullptr)
                : nlohmann::json(std::abs(d.group_mse[g] - d.complement_mse[g]));
        j["group_sizes"][name] = d.group_sizes[g];
    }
    if (d.empty_group_warnings > 0) j["empty_group_warnings"] = d.empty_group_warnings;
    return j;
}

} // namespace

std::string reports_to_json(const std::vector<EvalReport>& reports,
                            const std::vector<std::string>& group_names, bool include_timings) {
    nlohmann::json j;
    j["reports"] = nlohmann::json::array();
    for (const auto& rep : reports) {
        nlohmann::json jr;
        jr["variant"] = rep.variant;
        jr["lambda"] = rep.lambda;
        jr["aggregate"]["mse"] = nan_safe(rep.aggregate_mse);
        jr["aggregate"]["r2"] = nan_safe(rep.aggregate_r2);
        jr["aggregate"]["disparity"] = nan_safe(rep.aggregate_disparity);
        for (size_t g = 0; g < rep.group_abs_diff.size(); ++g) {
            const std::string& name =
                g < group_names.size() ? group_names[g] : ("group" + std::to_string(g));
            jr["aggregate"]["group_abs_diff"][name] = nan_safe(rep.group_abs_diff[g]);
        }
        if (rep.missing_group_warnings > 0)
            jr["missing_group_warnings"] = rep.missing_group_warnings;
        jr["folds"] = nlohmann::json::array();
        for (const auto& fm : rep.folds) {
            nlohmann::json jf;
            jf["fold"] = fm.fold;
            jf["mse"] = nan_safe(fm.mse);
            jf["r2"] = nan_safe(fm.r2);
            jf["test_rows"] = fm.test_rows;
            jf["disparity"] = disparity_json(fm.disparity, group_names);
            if (include_timings) jf["wall_ms"] = fm.wall_ms;
            jr["folds"].push_back(std::move(jf));
        }
        j["reports"].push_back(std::move(jr));
    }
    for (const auto& variant : {"fairknot", "fairknot+faircoef"}) {
        const int idx = select_min_disparity(reports, variant);
        if (idx >= 0) j["selected"][variant] = reports[static_cast<size_t>(idx)].lambda;
    }
    return j.dump(2);
}

std::string reports_to_csv(const std::vector<EvalReport>& reports,
                           const std::vector<std::string>& group_names) {
    std::ostringstream out;
    out << "variant,lambda,fold,mse,r2,disparity";
    for (const auto& g : group_names) out << ",abs_diff_" << g;
    out << "\n";
    char buf[64];
    auto num = [&](double v) -> std::string {
        if (std::isnan(v)) return "";
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return buf;
    };
    for (const auto& rep : reports) {
        for (const auto& fm : rep.folds) {
            out << rep.variant << "," << num(rep.lambda) << "," << fm.fold << "," << num(fm.mse) << ","
                << num(fm.r2) << "," << num(fm.disparity.disparity);
            for (size_t g = 0; g < group_names.size(); ++g) {
                out << ",";
                if (g < fm.disparity.group_mse.size() && fm.disparity.group_sizes[g] > 0 &&
                    !std::isnan(fm.disparity.complement_mse[g]))
                    out << num(std::abs(fm.disparity.group_mse[g] - fm.disparity.complement_mse[g]));
            }
            out << "\n";
        }
        out << rep.variant << "," << num(rep.lambda) << ",aggregate," << num(rep.aggregate_mse) << ","
            << num(rep.aggregate_r2) << "," << num(rep.aggregate_disparity);
        for (size_t g = 0; g < group_names.size(); ++g) {
            out << ",";
            if (g < rep.group_abs_diff.size() && !std::isnan(rep.group_abs_diff[g]))
                out << num(rep.group_abs_diff[g]);
        }
        out << "\n";
    }
    return out.str();
}

std::string reports_to_text(const std::vector<EvalReport>& reports,
                            const std::vector<std::string>& group_names) {
    std::ostringstream out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-20s %8s %10s %10s %12s\n", "variant", "lambda", "MSE", "R2",
                  "disparity");
    out << buf;
    for (const auto& rep : reports) {
        std::snprintf(buf, sizeof(buf), "%-20s %8.3g %10.4g %10.4g %12.4g\n", rep.variant.c_str(),
                      rep.lambda, rep.aggregate_mse, rep.aggregate_r2, rep.aggregate_disparity);
        out << buf;
        for (size_t g = 0; g < group_names.size(); ++g) {
            if (g >= rep.group_abs_diff.size() || std::isnan(rep.group_abs_diff[g])) continue;
            std::snprintf(buf, sizeof(buf), "  %-28s %10.4g\n", group_names[g].c_str(),
                          rep.group_abs_diff[g]);
            out << buf;
        }
    }
    for (const auto& variant : {"fairknot", "fairknot+faircoef"}) {
        const int idx = select_min_disparity(reports, variant);
        if (idx >= 0) {
            std::snprintf(buf, sizeof(buf), "best lambda (%s, min disparity): %g\n", variant,
                          reports[static_cast<size_t>(idx)].lambda);
            out << buf;
        }
    }
    return out.str();
}

std::string sweep_to_json(const std::vector<SweepRow>& rows, const std::vector<std::string>& group_names) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json jr;
        jr["lambda"] = row.lambda;
        jr["mse"] = nan_safe(row.mse);
        jr["r2"] = nan_safe(row.r2);
        jr["disparity"] = disparity_json(row.disparity, group_names);
        j.push_back(std::move(jr));
    }
    return j.dump(2);
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows, const std::vector<std::string>& group_names) {
    std::ostringstream out;
    out << "lambda,mse,r2,disparity";
    for (const auto& g : group_names) out << ",abs_diff_" << g;
    out << "\n";
    char buf[64];
    auto num = [&](double v) -> std::string {
        if (std::isnan(v)) return "";
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return buf;
    };
    for (const auto& row : rows) {
        out << num(row.lambda) << "," << num(row.mse) << "," << num(row.r2) << ","
            << num(row.disparity.disparity);
        for (size_t g = 0; g < group_names.size(); ++g) {
            out << ",";
            if (g < row.disparity.group_mse.size() && row.disparity.group_sizes[g] > 0 &&
                !std::isnan(row.disparity.complement_mse[g]))
                out << num(std::abs(row.disparity.group_mse[g] - row.disparity.complement_mse[g]));
        }
        out << "\n";
    }
    return out.str();
}

std::string sweep_to_text(const std::vector<SweepRow>& rows, const std::vector<std::string>& group_names) {
    std::ostringstream out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%8s %10s %10s %12s\n", "lambda", "MSE", "R2", "disparity");
    out << buf;
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%8.3g %10.4g %10.4g %12.4g\n", row.lambda, row.mse, row.r2,
                      row.disparity.disparity);
        out << buf;
        for (size_t g = 0; g < group_names.size(); ++g) {
            if (g >= row.disparity.group_mse.size() || row.disparity.group_sizes[g] == 0 ||
                std::isnan(row.disparity.complement_mse[g]))
                continue;
            std::snprintf(buf, sizeof(buf), "  %-28s %10.4g\n", group_names[g].c_str(),
                          std::abs(row.disparity.group_mse[g] - row.disparity.complement_mse[g]));
            out << buf;
        }
    }
    return out.str();
}

} // namespace fairmars

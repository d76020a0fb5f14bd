#ifndef FAIRMARS_EVALUATION_HPP
#define FAIRMARS_EVALUATION_HPP

#include <string>
#include <vector>

#include "fairmars/dataset.hpp"
#include "fairmars/fairness.hpp"
#include "fairmars/model.hpp"

namespace fairmars {

struct Metrics {
    double mse = 0.0;
    double r2 = 0.0; // NaN when the evaluation response has zero variance
    DisparityReport disparity;
};

Metrics compute_metrics(std::span<const double> y_true, std::span<const double> y_pred,
                        std::span<const int> groups, int num_groups);

struct FoldMetrics {
    int fold = 0;
    double mse = 0.0;
    double r2 = 0.0;
    DisparityReport disparity;
    double wall_ms = 0.0;
    int test_rows = 0;
};

/// Per-fold and aggregate test metrics for one (variant, lambda) pair.
/// Aggregates are plain means over folds; per-group aggregates average only
/// over folds where the group appears.
struct EvalReport {
    std::string variant; // mars | fairknot | faircoef | fairknot+faircoef
    double lambda = 0.0;
    std::vector<FoldMetrics> folds;
    double aggregate_mse = 0.0;
    double aggregate_r2 = 0.0;
    double aggregate_disparity = 0.0;
    std::vector<double> group_abs_diff; // per group id, mean |RSS_g - RSS_complement|
    int missing_group_warnings = 0;
};

extern const std::vector<std::string> kAllVariants;
extern const std::vector<double> kDefaultLambdaGrid;

/// Runs the requested variants over a shared fold plan. Fair variants are
/// fitted once per grid lambda and reported separately.
std::vector<EvalReport> cross_validate(const Dataset& ds, const FitConfig& cfg, const FoldPlan& folds,
                                       const std::vector<std::string>& variants,
                                       const std::vector<double>& lambda_grid);

/// For each fair variant family, the index of the report with the smallest
/// aggregate disparity (the selection rule for "best lambda").
int select_min_disparity(const std::vector<EvalReport>& reports, const std::string& variant);

struct SweepRow {
    double lambda = 0.0;
    double mse = 0.0;
    double r2 = 0.0;
    DisparityReport disparity;
};

/// One model per lambda on a single shared train/test fold split. Lambdas
/// must be ascending with the first equal to zero, so the first row is the
/// plain baseline by construction.
std::vector<SweepRow> lambda_sweep(const Dataset& ds, const FitConfig& cfg,
                                   const std::vector<double>& lambdas, const FoldPlan& folds,
                                   int fold_id);

std::string reports_to_json(const std::vector<EvalReport>& reports,
                            const std::vector<std::string>& group_names, bool include_timings);
std::string reports_to_csv(const std::vector<EvalReport>& reports,
                           const std::vector<std::string>& group_names);
std::string reports_to_text(const std::vector<EvalReport>& reports,
                            const std::vector<std::string>& group_names);

std::string sweep_to_json(const std::vector<SweepRow>& rows, const std::vector<std::string>& group_names);
std::string sweep_to_csv(const std::vector<SweepRow>& rows, const std::vector<std::string>& group_names);
std::string sweep_to_text(const std::vector<SweepRow>& rows, const std::vector<std::string>& group_names);

} // namespace fairmars

#endif

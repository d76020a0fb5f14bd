#ifndef FAIRMARS_MODEL_HPP
#define FAIRMARS_MODEL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairmars/backward.hpp"
#include "fairmars/basis.hpp"
#include "fairmars/dataset.hpp"
#include "fairmars/forward.hpp"

namespace fairmars {

class FairMarsModel;
struct FitResult;
FitResult fit_with_report(const Dataset& ds, const FitConfig& cfg);

/// The fitted artifact: surviving bases (intercept first), their raw-column
/// coefficients, the response mean added back at prediction time, and enough
/// encoding metadata to score raw CSV rows. Immutable after fit.
class FairMarsModel {
public:
    static constexpr int kSchemaVersion = 1;

    FairMarsModel() = default;

    const std::vector<BasisFunction>& bases() const { return bases_; }
    const std::vector<double>& coefficients() const { return coefficients_; }
    const std::vector<BasisFunction>& pruned_bases() const { return pruned_bases_; }
    double response_mean() const { return response_mean_; }
    const std::vector<std::string>& column_names() const { return column_names_; }
    const std::vector<std::string>& group_names() const { return group_names_; }
    const std::vector<EncodedColumn>& encoding() const { return encoding_; }
    const FitConfig& config() const { return config_; }
    double training_lof() const { return training_lof_; }
    double training_disparity() const { return training_disparity_; }
    double selected_gcv() const { return selected_gcv_; }
    double ridge_used() const { return ridge_used_; }
    uint64_t dataset_hash() const { return dataset_hash_; }
    uint64_t fit_log_digest() const { return fit_log_digest_; }

    double predict(std::span<const double> x_row) const;

    /// Predictions for every row of an encoded column-major feature block.
    std::vector<double> predict_block(const double* columns, int n) const;
    std::vector<double> predict_rows(const Dataset& ds) const;

    /// One line per basis: coefficient (2 decimals), readable basis string;
    /// optionally followed by the pruned path entries marked "pruned".
    std::string export_rules(bool include_pruned = false) const;

    std::string to_json() const;
    static FairMarsModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static FairMarsModel load(const std::string& path);

    /// Order-insensitive digest of the basis structure (ignores coefficients);
    /// used to check that faircoef only re-estimates coefficients.
    uint64_t structure_hash() const;

    friend struct FitResult;
    friend FitResult fit_with_report(const Dataset& ds, const FitConfig& cfg);

private:
    std::vector<BasisFunction> bases_;
    std::vector<double> coefficients_;
    std::vector<BasisFunction> pruned_bases_;
    double response_mean_ = 0.0;
    std::vector<std::string> column_names_;
    std::vector<std::string> group_names_;
    std::vector<EncodedColumn> encoding_;
    std::string sensitive_column_;
    FitConfig config_;
    double training_lof_ = 0.0;
    double training_disparity_ = 0.0;
    double selected_gcv_ = 0.0;
    double ridge_used_ = 0.0;
    uint64_t dataset_hash_ = 0;
    uint64_t fit_log_digest_ = 0;
};

/// Weighted least squares on a fixed basis structure with subgroup-inverse
/// weights; returns raw-column coefficients aligned with `bases`.
std::vector<double> fit_faircoef(const std::vector<BasisFunction>& bases, const Dataset& ds);

struct FitResult {
    FairMarsModel model;
    std::vector<IterationRecord> log;
    PruneTrace trace;
};

/// Forward pass, GCV-pruned backward pass, final (optionally fairness-
/// weighted) coefficient estimation.
FairMarsModel fit(const Dataset& ds, const FitConfig& cfg);

} // namespace fairmars

#endif

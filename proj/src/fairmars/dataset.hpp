#ifndef FAIRMARS_DATASET_HPP
#define FAIRMARS_DATASET_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fairmars {

/// How one encoded feature column was derived from the source CSV. Needed to
/// re-encode rows at prediction time exactly as at training time.
struct EncodedColumn {
    std::string name;     // encoded column name, e.g. "Mjob_teacher"
    std::string source;   // source CSV column
    bool one_hot = false; // true => indicator for `category`, else numeric passthrough
    std::string category;
};

struct LoadOptions {
    std::string response_col;
    std::string sensitive_col;
    std::vector<std::string> feature_cols; // empty => all columns except the response
    bool include_sensitive = true;         // sensitive column also usable as a predictor
};

/// Immutable tabular training data: encoded feature matrix (column-major),
/// centered response, and per-row subgroup ids over the sensitive attribute.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<double> features_col_major, int n, int d,
            std::vector<double> raw_response, std::vector<int> groups,
            std::vector<std::string> column_names, std::vector<std::string> group_names,
            std::string sensitive_column, std::vector<EncodedColumn> encoding = {});

    int num_rows() const { return n_; }
    int num_features() const { return d_; }
    int num_groups() const { return static_cast<int>(group_names_.size()); }

    std::span<const double> column(int j) const {
        return {features_.data() + static_cast<size_t>(j) * static_cast<size_t>(n_),
                static_cast<size_t>(n_)};
    }
    double value(int i, int j) const {
        return features_[static_cast<size_t>(j) * static_cast<size_t>(n_) + static_cast<size_t>(i)];
    }
    std::vector<double> row(int i) const;

    /// Response with the training mean removed.
    std::span<const double> response() const { return response_; }
    std::span<const double> raw_response() const { return raw_response_; }
    double response_mean() const { return response_mean_; }

    std::span<const int> groups() const { return groups_; }
    const std::vector<std::string>& column_names() const { return column_names_; }
    const std::vector<std::string>& group_names() const { return group_names_; }
    const std::string& sensitive_column() const { return sensitive_column_; }
    const std::vector<EncodedColumn>& encoding() const { return encoding_; }

    /// Row-subset view used by cross-validation; the response is re-centered
    /// on the subset. Column and group metadata are shared unchanged.
    Dataset subset(std::span<const int> rows) const;

    uint64_t content_hash() const;

private:
    int n_ = 0, d_ = 0;
    std::vector<double> features_; // column-major n_ x d_
    std::vector<double> raw_response_;
    std::vector<double> response_; // centered
    double response_mean_ = 0.0;
    std::vector<int> groups_;
    std::vector<std::string> column_names_;
    std::vector<std::string> group_names_;
    std::string sensitive_column_;
    std::vector<EncodedColumn> encoding_;
};

/// Loads a comma-delimited CSV with a header row. Categorical feature columns
/// are one-hot encoded in first-appearance order; the sensitive column is
/// mapped to contiguous group ids the same way. Rows with missing values in
/// any used column are rejected.
Dataset load_csv(const std::string& path, const LoadOptions& options);

/// Re-encodes rows of a CSV against a previously learned encoding; used by
/// the CLI predict path. Unknown categories encode as all-zero indicators.
std::vector<double> encode_rows(const std::string& path, const std::vector<EncodedColumn>& encoding,
                                int* out_rows);

struct FoldPlan {
    int k = 0;
    uint64_t seed = 0;
    std::vector<int> assignments; // length n, values in [0, k)

    std::vector<int> test_rows(int fold) const;
    std::vector<int> train_rows(int fold) const;
    std::string to_json() const;
    static FoldPlan from_json(const std::string& text);
};

/// Deterministic shuffled k-fold assignment; fold sizes differ by at most one
/// and the result depends only on (n, k, seed).
FoldPlan make_folds(const Dataset& ds, int k, uint64_t seed);

} // namespace fairmars

#endif

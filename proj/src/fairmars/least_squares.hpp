#ifndef FAIRMARS_LEAST_SQUARES_HPP
#define FAIRMARS_LEAST_SQUARES_HPP

#include <span>
#include <vector>

namespace fairmars {

/// Positive per-observation weights rescaled so their mean is exactly one,
/// keeping the weighted lack-of-fit on the same scale as the unweighted one.
struct WeightVector {
    std::vector<double> weights;
};

WeightVector normalize_weights(std::vector<double> raw);

/// Normal equations V beta = c over a design matrix whose non-constant
/// columns are centered by their (weighted) means. Constant columns are kept
/// raw so an intercept stays solvable. With a centered response the centered
/// c-vector coincides with the raw one, so the descending-knot update below
/// feeds it directly.
class NormalSystem {
public:
    NormalSystem() = default;

    /// columns: col-major n x m. weights may be null (unweighted).
    static NormalSystem build(const double* columns, int n, int m, std::span<const double> y,
                              const WeightVector* weights);

    /// System over a subset of this system's columns, assembled from the
    /// cached gram/c entries (no pass over the data).
    NormalSystem subset(std::span<const int> cols) const;

    /// Coefficients in centered coordinates. On a factorization failure the
    /// solve retries once with ridge 1e-8 * trace(V)/m on the diagonal and
    /// records the jitter; a second failure raises rank_error naming the
    /// offending column.
    std::vector<double> solve();

    /// Algorithm line "LOF = sum y^2 - sum beta_i c_i"; equals the (weighted)
    /// residual sum of squares when beta solves the system exactly.
    double lof(std::span<const double> beta) const;

    int size() const { return m_; }
    int rows() const { return n_; }
    double ridge() const { return ridge_; }
    double sum_yy() const { return sum_yy_; }
    std::span<const double> gram() const { return gram_; }
    std::span<const double> cvec() const { return cvec_; }
    std::span<const double> col_means() const { return col_means_; }
    bool column_centered(int j) const { return centered_[static_cast<size_t>(j)] != 0; }

    /// Translates centered-coordinate coefficients into coefficients for the
    /// raw columns; the mean corrections fold into the constant column at
    /// `intercept_col`.
    std::vector<double> raw_coefficients(std::span<const double> beta, int intercept_col) const;

private:
    int n_ = 0, m_ = 0;
    std::vector<double> gram_;      // m x m col-major
    std::vector<double> cvec_;      // m
    std::vector<double> col_means_; // m, zero for uncentered columns
    std::vector<char> centered_;
    std::vector<double> factor_; // cached lower Cholesky of gram + ridge*I
    double ridge_ = 0.0;
    double sum_yy_ = 0.0;
};

/// Residuals y - X_centered * beta for centered-coordinate coefficients.
void residuals_from_centered(const double* columns, int n, int m, std::span<const double> col_means,
                             std::span<const double> y, std::span<const double> beta, double* out);

// Dense Cholesky pieces shared with the forward pass's bordered updates.
// Returns -1 on success, else the first failing pivot column.
int cholesky_factor_lower(int m, double* a);
void solve_lower(int m, const double* lower, double* x);
void solve_upper_from_lower(int m, const double* lower, double* x);

/// Incremental c-vector entry for a candidate hinge column parent*(x - k)_+,
/// swept over knots in descending order:
///   c(k) = c(u) + sum_{k<=x<u} y*B*(x-k) + (u-k) * sum_{x>=u} y*B.
/// Rows must be given sorted by descending x. Summation order is fixed, so
/// results are bit-for-bit reproducible.
class FastCUpdate {
public:
    FastCUpdate(std::span<const int> rows_by_x_desc, std::span<const double> x,
                std::span<const double> parent, std::span<const double> y);

    /// Moves the sweep from the current knot to k (must be strictly smaller)
    /// and returns c(k).
    double advance(double k);

    double value() const { return q_; }

private:
    std::span<const int> order_;
    std::span<const double> x_, parent_, y_;
    size_t pos_ = 0;
    double q_ = 0.0;
    double s_ = 0.0; // sum of y*B over rows with x >= current knot
    double u_ = 0.0;
    bool started_ = false;
};

} // namespace fairmars

#endif

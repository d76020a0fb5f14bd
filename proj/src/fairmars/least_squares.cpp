#include "fairmars/least_squares.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "fairmars/errors.hpp"

namespace fairmars {

WeightVector normalize_weights(std::vector<double> raw) {
    if (raw.empty()) throw data_error("empty weight vector");
    double sum = 0.0;
    for (double w : raw) {
        if (!(w > 0.0)) throw data_error("weights must be strictly positive");
        sum += w;
    }
    const double mean = sum / static_cast<double>(raw.size());
    for (double& w : raw) w /= mean;
    return WeightVector{std::move(raw)};
}

NormalSystem NormalSystem::build(const double* columns, int n, int m, std::span<const double> y,
                                 const WeightVector* weights) {
    if (m < 1 || n < 1) throw data_error("normal system needs n >= 1, m >= 1");
    NormalSystem sys;
    sys.n_ = n;
    sys.m_ = m;
    sys.gram_.assign(static_cast<size_t>(m) * static_cast<size_t>(m), 0.0);
    sys.cvec_.assign(static_cast<size_t>(m), 0.0);
    sys.col_means_.assign(static_cast<size_t>(m), 0.0);
    sys.centered_.assign(static_cast<size_t>(m), 0);

    const double* w = weights ? weights->weights.data() : nullptr;
    double wsum = 0.0;
    if (w) {
        for (int q = 0; q < n; ++q) wsum += w[q];
    } else {
        wsum = static_cast<double>(n);
    }

    // Weighted column means; constant columns stay uncentered.
    for (int j = 0; j < m; ++j) {
        const double* col = columns + static_cast<size_t>(j) * static_cast<size_t>(n);
        double lo = col[0], hi = col[0], s = 0.0;
        for (int q = 0; q < n; ++q) {
            lo = std::min(lo, col[q]);
            hi = std::max(hi, col[q]);
            s += (w ? w[q] : 1.0) * col[q];
        }
        if (hi > lo) {
            sys.col_means_[static_cast<size_t>(j)] = s / wsum;
            sys.centered_[static_cast<size_t>(j)] = 1;
        }
    }

    for (int j = 0; j < m; ++j) {
        const double* cj = columns + static_cast<size_t>(j) * static_cast<size_t>(n);
        const double mj = sys.col_means_[static_cast<size_t>(j)];
        for (int i = 0; i <= j; ++i) {
            const double* ci = columns + static_cast<size_t>(i) * static_cast<size_t>(n);
            const double mi = sys.col_means_[static_cast<size_t>(i)];
            double acc = 0.0;
            for (int q = 0; q < n; ++q)
                acc += (w ? w[q] : 1.0) * (ci[q] - mi) * (cj[q] - mj);
            sys.gram_[static_cast<size_t>(j) * static_cast<size_t>(m) + static_cast<size_t>(i)] = acc;
            sys.gram_[static_cast<size_t>(i) * static_cast<size_t>(m) + static_cast<size_t>(j)] = acc;
        }
        double cacc = 0.0;
        for (int q = 0; q < n; ++q) cacc += (w ? w[q] : 1.0) * y[static_cast<size_t>(q)] * (cj[q] - mj);
        sys.cvec_[static_cast<size_t>(j)] = cacc;
    }

    double syy = 0.0;
    for (int q = 0; q < n; ++q)
        syy += (w ? w[q] : 1.0) * y[static_cast<size_t>(q)] * y[static_cast<size_t>(q)];
    sys.sum_yy_ = syy;
    return sys;
}

NormalSystem NormalSystem::subset(std::span<const int> cols) const {
    NormalSystem sys;
    sys.n_ = n_;
    sys.m_ = static_cast<int>(cols.size());
    sys.sum_yy_ = sum_yy_;
    const int m = sys.m_;
    sys.gram_.resize(static_cast<size_t>(m) * static_cast<size_t>(m));
    sys.cvec_.resize(static_cast<size_t>(m));
    sys.col_means_.resize(static_cast<size_t>(m));
    sys.centered_.resize(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        const int cj = cols[static_cast<size_t>(j)];
        sys.cvec_[static_cast<size_t>(j)] = cvec_[static_cast<size_t>(cj)];
        sys.col_means_[static_cast<size_t>(j)] = col_means_[static_cast<size_t>(cj)];
        sys.centered_[static_cast<size_t>(j)] = centered_[static_cast<size_t>(cj)];
        for (int i = 0; i < m; ++i) {
            const int ci = cols[static_cast<size_t>(i)];
            sys.gram_[static_cast<size_t>(j) * static_cast<size_t>(m) + static_cast<size_t>(i)] =
                gram_[static_cast<size_t>(cj) * static_cast<size_t>(m_) + static_cast<size_t>(ci)];
        }
    }
    return sys;
}

int cholesky_factor_lower(int m, double* a) {
    for (int j = 0; j < m; ++j) {
        const double orig = a[static_cast<size_t>(j) * static_cast<size_t>(m) + static_cast<size_t>(j)];
        double d = orig;
        for (int k = 0; k < j; ++k) {
            const double l = a[static_cast<size_t>(k) * static_cast<size_t>(m) + static_cast<size_t>(j)];
            d -= l * l;
        }
        if (!(d > 1e-12 * std::abs(orig)) || !std::isfinite(d)) return j;
        const double root = std::sqrt(d);
        a[static_cast<size_t>(j) * static_cast<size_t>(m) + static_cast<size_t>(j)] = root;
        for (int i = j + 1; i < m; ++i) {
            double s = a[static_cast<size_t>(j) * static_cast<size_t>(m) + static_cast<size_t>(i)];
            for (int k = 0; k < j; ++k)
                s -= a[static_cast<size_t>(k) * static_cast<size_t>(m) + static_cast<size_t>(i)] *
                     a[static_cast<size_t>(k) * static_cast<size_t>(m) + static_cast<size_t>(j)];
            a[static_cast<size_t>(j) * static_cast<size_t>(m) + static_cast<size_t>(i)] = s / root;
        }
    }
    return -1;
}

void solve_lower(int m, const double* lower, double* x) {
    for (int i = 0; i < m; ++i) {
        double s = x[i];
        for (int k = 0; k < i; ++k)
            s -= lower[static_cast<size_t>(k) * static_cast<size_t>(m) + static_cast<size_t>(i)] * x[k];
        x[i] = s / lower[static_cast<size_t>(i) * static_cast<size_t>(m) + static_cast<size_t>(i)];
    }
}

void solve_upper_from_lower(int m, const double* lower, double* x) {
    for (int i = m - 1; i >= 0; --i) {
        double s = x[i];
        for (int k = i + 1; k < m; ++k)
            s -= lower[static_cast<size_t>(i) * static_cast<size_t>(m) + static_cast<size_t>(k)] * x[k];
        x[i] = s / lower[static_cast<size_t>(i) * static_cast<size_t>(m) + static_cast<size_t>(i)];
    }
}

std::vector<double> NormalSystem::solve() {
    factor_ = gram_;
    ridge_ = 0.0;
    int bad = cholesky_factor_lower(m_, factor_.data());
    if (bad >= 0) {
        double trace = 0.0;
        for (int j = 0; j < m_; ++j)
            trace += gram_[static_cast<size_t>(j) * static_cast<size_t>(m_) + static_cast<size_t>(j)];
        ridge_ = 1e-8 * trace / static_cast<double>(m_);
        factor_ = gram_;
        for (int j = 0; j < m_; ++j)
            factor_[static_cast<size_t>(j) * static_cast<size_t>(m_) + static_cast<size_t>(j)] += ridge_;
        bad = cholesky_factor_lower(m_, factor_.data());
        if (bad >= 0)
            throw rank_error("normal system singular after ridge retry at column " + std::to_string(bad),
                             bad);
    }
    std::vector<double> beta(cvec_.begin(), cvec_.end());
    solve_lower(m_, factor_.data(), beta.data());
    solve_upper_from_lower(m_, factor_.data(), beta.data());
    return beta;
}

double NormalSystem::lof(std::span<const double> beta) const {
    double s = sum_yy_;
    for (int i = 0; i < m_; ++i) s -= beta[static_cast<size_t>(i)] * cvec_[static_cast<size_t>(i)];
    return s;
}

std::vector<double> NormalSystem::raw_coefficients(std::span<const double> beta, int intercept_col) const {
    std::vector<double> coef(beta.begin(), beta.end());
    double shift = 0.0;
    for (int j = 0; j < m_; ++j) shift += beta[static_cast<size_t>(j)] * col_means_[static_cast<size_t>(j)];
    coef[static_cast<size_t>(intercept_col)] -= shift;
    return coef;
}

void residuals_from_centered(const double* columns, int n, int m, std::span<const double> col_means,
                             std::span<const double> y, std::span<const double> beta, double* out) {
    for (int q = 0; q < n; ++q) out[q] = y[static_cast<size_t>(q)];
    for (int j = 0; j < m; ++j) {
        const double* col = columns + static_cast<size_t>(j) * static_cast<size_t>(n);
        const double b = beta[static_cast<size_t>(j)];
        if (b == 0.0) continue;
        const double mj = col_means[static_cast<size_t>(j)];
        for (int q = 0; q < n; ++q) out[q] -= b * (col[q] - mj);
    }
}

FastCUpdate::FastCUpdate(std::span<const int> rows_by_x_desc, std::span<const double> x,
                         std::span<const double> parent, std::span<const double> y)
    : order_(rows_by_x_desc), x_(x), parent_(parent), y_(y) {}

double FastCUpdate::advance(double k) {
    if (started_ && k > u_)
        throw std::invalid_argument("FastCUpdate: knots must be swept in descending order");
    if (started_ && k == u_) return q_; // zero-width step, both corrections vanish
    // C2 uses the running sum over rows with x >= previous knot, then rows in
    // [k, u) join both the correction C1 and the running sum.
    double c2 = started_ ? (u_ - k) * s_ : 0.0;
    double c1 = 0.0;
    while (pos_ < order_.size()) {
        const int r = order_[pos_];
        const double xv = x_[static_cast<size_t>(r)];
        if (xv < k) break;
        const double yb = y_[static_cast<size_t>(r)] * parent_[static_cast<size_t>(r)];
        c1 += yb * (xv - k);
        s_ += yb;
        ++pos_;
    }
    q_ += c1 + c2;
    u_ = k;
    started_ = true;
    return q_;
}

} // namespace fairmars

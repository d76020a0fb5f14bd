#include "fairmars/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fairmars/errors.hpp"

namespace fairmars {

void FitConfig::validate(const Dataset& ds) const {
    if (max_terms < 3) throw config_error("max_terms must be at least 3");
    if (max_degree < 1) throw config_error("max_degree must be at least 1");
    if (lambda < 0.0) throw config_error("lambda must be non-negative");
    if (backward_lambda >= 0.0 && backward_lambda < 0.0) throw config_error("invalid backward lambda");
    if (min_group_size < 0) throw config_error("min_group_size must be non-negative");
    if (minspan < 0 || endspan < 0) throw config_error("minspan/endspan must be non-negative");
    if (jobs < 0) throw config_error("jobs must be non-negative");
    if (ds.num_rows() < 2 * max_degree + 2)
        throw config_error("dataset too small: need at least " + std::to_string(2 * max_degree + 2) +
                           " rows");
}

bool trial_less(const TrialResult& a, const TrialResult& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    if (a.variable != b.variable) return a.variable < b.variable;
    if (a.knot != b.knot) return a.knot < b.knot;
    return a.parent_id < b.parent_id;
}

TrialResult best_candidate(std::span<const TrialResult> trials) {
    TrialResult best;
    for (const auto& t : trials) {
        if (!t.valid) continue;
        if (!best.valid || trial_less(t, best)) best = t;
    }
    return best;
}

namespace {

// Support rows (parent > 0) sorted by descending x, row index ascending
// within ties, plus the deduplicated knot list with observation ranks.
struct SupportOrder {
    std::vector<int> order;
    std::vector<double> knots;
    std::vector<size_t> rank; // support observations strictly above each knot
};

SupportOrder support_order(std::span<const double> x, const double* parent_col, int n, int minspan,
                           int endspan) {
    SupportOrder s;
    s.order.reserve(static_cast<size_t>(n));
    for (int q = 0; q < n; ++q)
        if (parent_col[q] > 0.0) s.order.push_back(q);
    std::stable_sort(s.order.begin(), s.order.end(),
                     [&](int a, int b) { return x[static_cast<size_t>(a)] > x[static_cast<size_t>(b)]; });
    for (size_t i = 0; i < s.order.size(); ++i) {
        const double val = x[static_cast<size_t>(s.order[i])];
        if (s.knots.empty() || val < s.knots.back()) {
            s.knots.push_back(val);
            s.rank.push_back(i);
        }
    }
    const size_t total = s.order.size();
    if (endspan > 0 || minspan > 0) {
        std::vector<double> kept;
        std::vector<size_t> kept_rank;
        size_t last_kept = 0;
        bool have_last = false;
        for (size_t i = 0; i < s.knots.size(); ++i) {
            const size_t above = s.rank[i];
            // observations at or below the knot
            const size_t below = (i + 1 < s.rank.size()) ? total - s.rank[i + 1] : 0;
            if (endspan > 0 && i > 0 && (above < static_cast<size_t>(endspan) ||
                                         below < static_cast<size_t>(endspan)))
                continue; // keep the top knot: it carries the linear-entry trial
            if (minspan > 0 && have_last && s.rank[i] - last_kept < static_cast<size_t>(minspan))
                continue;
            kept.push_back(s.knots[i]);
            kept_rank.push_back(s.rank[i]);
            last_kept = s.rank[i];
            have_last = true;
        }
        s.knots = std::move(kept);
        s.rank = std::move(kept_rank);
    }
    return s;
}

// Incremental sums for R weighted responses over the active set of a
// descending knot sweep. Response j accumulates
//   Q_j(k) = sum_{x_q > k} f_j(q) * parent(q) * (x_q - k)
// via the same two-term correction as FastCUpdate.
class MultiSweep {
public:
    MultiSweep(const SupportOrder& s, std::span<const double> x, int responses)
        : s_(s), x_(x), nresp_(responses) {
        q_.assign(static_cast<size_t>(responses), 0.0);
        run_.assign(static_cast<size_t>(responses), 0.0);
        prod_.resize(s.order.size() * static_cast<size_t>(responses));
    }

    // Row-major per support row: product f_j(q)*parent(q).
    double* row_products(size_t support_index) { return prod_.data() + support_index * static_cast<size_t>(nresp_); }

    void advance(double k) {
        const double width = started_ ? (u_ - k) : 0.0;
        for (int j = 0; j < nresp_; ++j) q_[static_cast<size_t>(j)] += width * run_[static_cast<size_t>(j)];
        while (pos_ < s_.order.size()) {
            const int r = s_.order[pos_];
            const double xv = x_[static_cast<size_t>(r)];
            if (xv < k) break;
            const double* p = prod_.data() + pos_ * static_cast<size_t>(nresp_);
            const double dx = xv - k;
            for (int j = 0; j < nresp_; ++j) {
                q_[static_cast<size_t>(j)] += p[j] * dx;
                run_[static_cast<size_t>(j)] += p[j];
            }
            ++pos_;
        }
        u_ = k;
        started_ = true;
    }

    double value(int j) const { return q_[static_cast<size_t>(j)]; }

private:
    const SupportOrder& s_;
    std::span<const double> x_;
    int nresp_;
    std::vector<double> q_, run_, prod_;
    size_t pos_ = 0;
    double u_ = 0.0;
    bool started_ = false;
};

struct SweepResult {
    TrialResult best;
    int skipped = 0;
};

// Quadratic active-set sums for the hinge column's squared norm, kept on
// x shifted by the support mean to avoid cancellation at large offsets.
struct QuadSums {
    double shift = 0.0;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0;
};

struct FitContext {
    const Dataset& ds;
    const FitConfig& cfg;
    double sum_y;   // sum of the centered response (only fp noise away from 0)
    double sum_yy;  // reference scale for thresholds
};

// Scores every eligible knot of one (parent, variable) pair against the
// current state; returns the pair's best candidate.
SweepResult sweep_pair(const ForwardState& state, const FitContext& ctx, int parent_id, int v) {
    SweepResult out;
    const Dataset& ds = ctx.ds;
    const int n = ds.num_rows();
    const int m = state.num_bases();
    const double* parent_col = state.design.data() + static_cast<size_t>(parent_id) * static_cast<size_t>(n);
    auto x = ds.column(v);
    auto y = ds.response();

    SupportOrder s = support_order(x, parent_col, n, ctx.cfg.minspan, ctx.cfg.endspan);
    if (s.order.empty() || s.knots.empty()) return out;

    // Linear trial column parent * x_v (zero off support).
    std::vector<double> z_lin(static_cast<size_t>(n), 0.0);
    for (int q = 0; q < n; ++q) z_lin[static_cast<size_t>(q)] = parent_col[q] * x[static_cast<size_t>(q)];

    // Extended base system: committed columns plus z_lin.
    const int mb = m + 1;
    std::vector<double> gram(static_cast<size_t>(mb) * static_cast<size_t>(mb), 0.0);
    std::vector<double> cvec(static_cast<size_t>(mb), 0.0);
    std::vector<double> means(static_cast<size_t>(mb), 0.0);
    std::vector<char> centered(static_cast<size_t>(mb), 0);
    auto base_gram = state.sys.gram();
    auto base_means = state.sys.col_means();
    auto base_c = state.sys.cvec();
    for (int j = 0; j < m; ++j) {
        means[static_cast<size_t>(j)] = base_means[static_cast<size_t>(j)];
        centered[static_cast<size_t>(j)] = state.sys.column_centered(j) ? 1 : 0;
        cvec[static_cast<size_t>(j)] = base_c[static_cast<size_t>(j)];
        for (int i = 0; i < m; ++i)
            gram[static_cast<size_t>(j) * static_cast<size_t>(mb) + static_cast<size_t>(i)] =
                base_gram[static_cast<size_t>(j) * static_cast<size_t>(m) + static_cast<size_t>(i)];
    }
    {
        double lo = z_lin[0], hi = z_lin[0], sum = 0.0;
        for (int q = 0; q < n; ++q) {
            lo = std::min(lo, z_lin[static_cast<size_t>(q)]);
            hi = std::max(hi, z_lin[static_cast<size_t>(q)]);
            sum += z_lin[static_cast<size_t>(q)];
        }
        const bool cen = hi > lo;
        const double mlin = cen ? sum / n : 0.0;
        means[static_cast<size_t>(m)] = mlin;
        centered[static_cast<size_t>(m)] = cen ? 1 : 0;
        for (int j = 0; j < m; ++j) {
            const double* cj = state.design.data() + static_cast<size_t>(j) * static_cast<size_t>(n);
            const double mj = means[static_cast<size_t>(j)];
            double acc = 0.0;
            for (int q = 0; q < n; ++q)
                acc += (z_lin[static_cast<size_t>(q)] - mlin) * (cj[q] - mj);
            gram[static_cast<size_t>(m) * static_cast<size_t>(mb) + static_cast<size_t>(j)] = acc;
            gram[static_cast<size_t>(j) * static_cast<size_t>(mb) + static_cast<size_t>(m)] = acc;
        }
        double dd = 0.0, cc = 0.0;
        for (int q = 0; q < n; ++q) {
            const double zc = z_lin[static_cast<size_t>(q)] - mlin;
            dd += zc * zc;
            cc += y[static_cast<size_t>(q)] * zc;
        }
        gram[static_cast<size_t>(m) * static_cast<size_t>(mb) + static_cast<size_t>(m)] = dd;
        cvec[static_cast<size_t>(m)] = cc;
    }

    // Factor once; the sweep borders this factor per knot. A ridge here only
    // happens when the committed design already carries an exact collinearity
    // (e.g. a zero twin column).
    double base_ridge = 0.0;
    std::vector<double> factor = gram;
    if (cholesky_factor_lower(mb, factor.data()) >= 0) {
        double trace = 0.0;
        for (int j = 0; j < mb; ++j)
            trace += gram[static_cast<size_t>(j) * static_cast<size_t>(mb) + static_cast<size_t>(j)];
        base_ridge = 1e-8 * trace / mb;
        factor = gram;
        for (int j = 0; j < mb; ++j)
            factor[static_cast<size_t>(j) * static_cast<size_t>(mb) + static_cast<size_t>(j)] += base_ridge;
        if (cholesky_factor_lower(mb, factor.data()) >= 0) {
            out.skipped += static_cast<int>(s.knots.size());
            return out;
        }
    }
    std::vector<double> zvec = cvec;
    solve_lower(mb, factor.data(), zvec.data());
    double zz = 0.0;
    for (double zi : zvec) zz += zi * zi;
    std::vector<double> beta_base_only = zvec;
    solve_upper_from_lower(mb, factor.data(), beta_base_only.data());
    const double lof_base = state.sys.sum_yy() - zz;

    // Raw column sums, needed for gram entries against uncentered columns.
    std::vector<double> col_sums(static_cast<size_t>(mb), 0.0);
    for (int j = 0; j < mb; ++j) {
        const double* cj = (j < m) ? state.design.data() + static_cast<size_t>(j) * static_cast<size_t>(n)
                                   : z_lin.data();
        double acc = 0.0;
        for (int q = 0; q < n; ++q) acc += cj[q];
        col_sums[static_cast<size_t>(j)] = acc;
    }

    // Sweep responses: [0] constant one (raw hinge sum), [1] response y,
    // [2..m+1] committed columns, [m+2] z_lin.
    const int nresp = mb + 2;
    MultiSweep sweep(s, x, nresp);
    QuadSums quad;
    {
        double xsum = 0.0;
        for (int r : s.order) xsum += x[static_cast<size_t>(r)];
        quad.shift = xsum / static_cast<double>(s.order.size());
    }
    for (size_t i = 0; i < s.order.size(); ++i) {
        const int r = s.order[i];
        const double b = parent_col[r];
        double* p = sweep.row_products(i);
        p[0] = b;
        p[1] = y[static_cast<size_t>(r)] * b;
        for (int j = 0; j < m; ++j)
            p[2 + j] = state.design[static_cast<size_t>(j) * static_cast<size_t>(n) + static_cast<size_t>(r)] * b;
        p[2 + m] = z_lin[static_cast<size_t>(r)] * b;
    }

    const double lambda = ctx.cfg.lambda;
    const bool fair = ctx.cfg.use_fair_knot && lambda > 0.0;
    auto groups = ds.groups();

    std::vector<double> vrow(static_cast<size_t>(mb), 0.0);
    std::vector<double> lvec(static_cast<size_t>(mb), 0.0);
    std::vector<double> beta(static_cast<size_t>(mb) + 1, 0.0);
    std::vector<double> resid(static_cast<size_t>(n), 0.0);

    size_t quad_pos = 0;
    for (double k : s.knots) {
        sweep.advance(k);
        // grow the quadratic active set to rows with x >= k
        while (quad_pos < s.order.size()) {
            const int r = s.order[quad_pos];
            const double xv = x[static_cast<size_t>(r)];
            if (xv < k) break;
            const double b = parent_col[r];
            const double xs = xv - quad.shift;
            quad.a0 += b * b;
            quad.a1 += b * b * xs;
            quad.a2 += b * b * xs * xs;
            ++quad_pos;
        }

        const double q1 = sweep.value(0); // raw sum of the hinge column
        const double zbar = q1 / n;
        const double ks = k - quad.shift;
        const double diag_raw = quad.a2 - 2.0 * ks * quad.a1 + ks * ks * quad.a0;
        const double diag_c = diag_raw - q1 * q1 / n;
        for (int j = 0; j < mb; ++j) {
            const double qj = sweep.value(2 + j);
            vrow[static_cast<size_t>(j)] =
                centered[static_cast<size_t>(j)] ? qj - means[static_cast<size_t>(j)] * q1
                                                 : qj - zbar * col_sums[static_cast<size_t>(j)];
        }
        const double ch = sweep.value(1) - zbar * ctx.sum_y;

        // Bordered Cholesky step against the cached base factor.
        std::copy(vrow.begin(), vrow.end(), lvec.begin());
        solve_lower(mb, factor.data(), lvec.data());
        double ll = 0.0, lz = 0.0;
        for (int j = 0; j < mb; ++j) {
            ll += lvec[static_cast<size_t>(j)] * lvec[static_cast<size_t>(j)];
            lz += lvec[static_cast<size_t>(j)] * zvec[static_cast<size_t>(j)];
        }
        const double d = diag_c - ll;
        const bool degenerate = !(d > 1e-12 * std::abs(diag_c)) || !std::isfinite(d);

        double lof_k;
        double beta_h = 0.0;
        if (degenerate) {
            // Hinge adds nothing the base (with its linear term) does not
            // already span; score the base solution with beta_h = 0.
            lof_k = lof_base;
            std::copy(beta_base_only.begin(), beta_base_only.end(), beta.begin());
        } else {
            const double root = std::sqrt(d);
            const double zh = (ch - lz) / root;
            lof_k = lof_base - zh * zh; // sum_yy - (|z|^2 + zh^2)
            beta_h = zh / root;
            for (int j = 0; j < mb; ++j)
                beta[static_cast<size_t>(j)] = zvec[static_cast<size_t>(j)] - lvec[static_cast<size_t>(j)] * beta_h;
            solve_upper_from_lower(mb, factor.data(), beta.data());
        }
        beta[static_cast<size_t>(mb)] = beta_h;

        double disp = 0.0;
        if (fair) {
            // residuals of the trial model over all rows
            double offset = 0.0;
            for (int j = 0; j < mb; ++j) offset += beta[static_cast<size_t>(j)] * means[static_cast<size_t>(j)];
            offset += beta_h * zbar;
            for (int q = 0; q < n; ++q) resid[static_cast<size_t>(q)] = y[static_cast<size_t>(q)] + offset;
            for (int j = 0; j < mb; ++j) {
                const double bj = beta[static_cast<size_t>(j)];
                if (bj == 0.0) continue;
                const double* cj = (j < m)
                                       ? state.design.data() + static_cast<size_t>(j) * static_cast<size_t>(n)
                                       : z_lin.data();
                for (int q = 0; q < n; ++q) resid[static_cast<size_t>(q)] -= bj * cj[q];
            }
            if (beta_h != 0.0) {
                for (size_t i = 0; i < quad_pos; ++i) {
                    const int r = s.order[i];
                    resid[static_cast<size_t>(r)] -=
                        beta_h * parent_col[r] * (x[static_cast<size_t>(r)] - k);
                }
            }
            disp = disparity(resid, groups, ds.num_groups()).disparity;
        }

        TrialResult t;
        t.valid = true;
        t.parent_id = parent_id;
        t.variable = v;
        t.knot = k;
        t.lof = lof_k;
        t.disparity = disp;
        t.objective = fair ? lof_k + lambda * disp : lof_k;
        t.ridge = base_ridge;
        if (!out.best.valid || trial_less(t, out.best)) out.best = std::move(t);
    }
    return out;
}

ForwardState make_state(const Dataset& ds, std::vector<BasisFunction> bases, const FitConfig& cfg) {
    ForwardState st;
    st.bases = std::move(bases);
    const int n = ds.num_rows();
    const int m = st.num_bases();
    st.design.resize(static_cast<size_t>(n) * static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        auto col = design_column(ds, st.bases[static_cast<size_t>(j)]);
        std::copy(col.begin(), col.end(), st.design.begin() + static_cast<size_t>(j) * static_cast<size_t>(n));
    }
    st.sys = NormalSystem::build(st.design.data(), n, m, ds.response(), nullptr);
    st.coefficients = st.sys.solve();
    st.residuals.resize(static_cast<size_t>(n));
    residuals_from_centered(st.design.data(), n, m, st.sys.col_means(), ds.response(), st.coefficients,
                            st.residuals.data());
    // The c-vector identity only equals the residual sum of squares for an
    // exact solve; under a ridge retry the direct form stays consistent.
    if (st.sys.ridge() > 0.0) {
        double rss = 0.0;
        for (double r : st.residuals) rss += r * r;
        st.lof = rss;
    } else {
        st.lof = st.sys.lof(st.coefficients);
    }
    st.disparity = disparity(st.residuals, ds.groups(), ds.num_groups()).disparity;
    st.objective = (cfg.use_fair_knot && cfg.lambda > 0.0) ? st.lof + cfg.lambda * st.disparity : st.lof;
    return st;
}

} // namespace

std::vector<double> eligible_knots(const Dataset& ds, const BasisFunction& parent, int v, int minspan,
                                   int endspan) {
    if (parent.uses_variable(v))
        throw std::invalid_argument("eligible_knots: variable already used by the parent basis");
    auto col = design_column(ds, parent);
    SupportOrder s = support_order(ds.column(v), col.data(), ds.num_rows(), minspan, endspan);
    return s.knots;
}

TrialResult score_knot(const ForwardState& state, const Dataset& ds, int parent_id, int v, double k,
                       const FitConfig& cfg) {
    const int n = ds.num_rows();
    const int m = state.num_bases();
    const auto& parent = state.bases[static_cast<size_t>(parent_id)];
    if (parent.uses_variable(v)) throw std::invalid_argument("score_knot: variable already in parent");
    auto x = ds.column(v);

    std::vector<double> cols(state.design.begin(), state.design.end());
    cols.resize(static_cast<size_t>(n) * static_cast<size_t>(m + 2));
    double* z_lin = cols.data() + static_cast<size_t>(m) * static_cast<size_t>(n);
    double* z_h = cols.data() + static_cast<size_t>(m + 1) * static_cast<size_t>(n);
    const double* parent_col = state.design.data() + static_cast<size_t>(parent_id) * static_cast<size_t>(n);
    for (int q = 0; q < n; ++q) {
        z_lin[q] = parent_col[q] * x[static_cast<size_t>(q)];
        const double h = x[static_cast<size_t>(q)] - k;
        z_h[q] = parent_col[q] * (h > 0.0 ? h : 0.0);
    }

    TrialResult t;
    t.parent_id = parent_id;
    t.variable = v;
    t.knot = k;
    try {
        NormalSystem sys = NormalSystem::build(cols.data(), n, m + 2, ds.response(), nullptr);
        t.coefficients = sys.solve();
        t.lof = sys.lof(t.coefficients);
        t.ridge = sys.ridge();
        std::vector<double> resid(static_cast<size_t>(n));
        residuals_from_centered(cols.data(), n, m + 2, sys.col_means(), ds.response(), t.coefficients,
                                resid.data());
        t.disparity = disparity(resid, ds.groups(), ds.num_groups()).disparity;
        t.objective = (cfg.use_fair_knot && cfg.lambda > 0.0) ? t.lof + cfg.lambda * t.disparity : t.lof;
        t.valid = true;
    } catch (const rank_error&) {
        t.valid = false;
    }
    return t;
}

ForwardState run_forward(const Dataset& ds, const FitConfig& cfg) {
    cfg.validate(ds);
    const int n = ds.num_rows();
    auto y = ds.response();

    ForwardState state = make_state(ds, {BasisFunction{{}, 0}}, cfg);
    FitContext ctx{ds, cfg, 0.0, state.sys.sum_yy()};
    for (int q = 0; q < n; ++q) ctx.sum_y += y[static_cast<size_t>(q)];
    const double threshold = 1e-12 * ctx.sum_yy;

    int jobs = cfg.jobs;
    if (jobs == 0) jobs = static_cast<int>(std::min(8u, std::max(1u, std::thread::hardware_concurrency())));

    while (state.num_bases() < cfg.max_terms) {
        // candidate (parent, variable) pairs
        std::vector<std::pair<int, int>> tasks;
        for (int p = 0; p < state.num_bases(); ++p) {
            if (state.bases[static_cast<size_t>(p)].degree() >= cfg.max_degree) continue;
            for (int v = 0; v < ds.num_features(); ++v) {
                if (state.bases[static_cast<size_t>(p)].uses_variable(v)) continue;
                tasks.emplace_back(p, v);
            }
        }
        if (tasks.empty()) break;

        std::vector<SweepResult> results(tasks.size());
        if (jobs <= 1 || tasks.size() <= 1) {
            for (size_t i = 0; i < tasks.size(); ++i)
                results[i] = sweep_pair(state, ctx, tasks[i].first, tasks[i].second);
        } else {
            const int workers = static_cast<int>(std::min<size_t>(static_cast<size_t>(jobs), tasks.size()));
            std::vector<std::thread> pool;
            pool.reserve(static_cast<size_t>(workers));
            for (int t = 0; t < workers; ++t) {
                pool.emplace_back([&, t]() {
                    for (size_t i = static_cast<size_t>(t); i < tasks.size(); i += static_cast<size_t>(workers))
                        results[i] = sweep_pair(state, ctx, tasks[i].first, tasks[i].second);
                });
            }
            for (auto& th : pool) th.join();
        }

        TrialResult best;
        for (auto& r : results) {
            state.skipped_candidates += r.skipped;
            if (!r.best.valid) continue;
            if (!best.valid || trial_less(r.best, best)) best = r.best;
        }
        if (!best.valid) break;

        // Commit the mirrored pair and refit everything from scratch.
        const auto& parent = state.bases[static_cast<size_t>(best.parent_id)];
        std::vector<BasisFunction> bases = state.bases;
        BasisFunction plus{parent.terms, state.num_bases()};
        plus.terms.push_back({best.variable, best.knot, HingeDirection::plus, false});
        BasisFunction minus{parent.terms, state.num_bases() + 1};
        minus.terms.push_back({best.variable, best.knot, HingeDirection::minus, false});
        bases.push_back(std::move(plus));
        bases.push_back(std::move(minus));

        ForwardState next = make_state(ds, std::move(bases), cfg);
        next.log = state.log;
        next.skipped_candidates = state.skipped_candidates;

        const double improvement = state.objective - next.objective;
        if (!cfg.strict_paper_mode && improvement <= threshold) break;

        IterationRecord rec;
        rec.M = next.num_bases();
        rec.parent = best.parent_id;
        rec.v = best.variable;
        rec.k = best.knot;
        rec.lof = next.lof;
        rec.disparity = next.disparity;
        rec.objective = next.objective;
        rec.ridge_used = next.sys.ridge();
        next.log.push_back(rec);
        state = std::move(next);
    }
    return state;
}

std::string fit_log_to_jsonl(const std::vector<IterationRecord>& log) {
    std::ostringstream out;
    for (const auto& rec : log) {
        nlohmann::json j;
        j["M"] = rec.M;
        j["parent"] = rec.parent;
        j["v"] = rec.v;
        j["k"] = rec.k;
        j["lof"] = rec.lof;
        j["disparity"] = rec.disparity;
        j["objective"] = rec.objective;
        j["ridge_used"] = rec.ridge_used;
        out << j.dump() << "\n";
    }
    return out.str();
}

} // namespace fairmars

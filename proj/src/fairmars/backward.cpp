#include "fairmars/backward.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "fairmars/errors.hpp"

namespace fairmars {

double gcv(double lof_value, int n, int M, double d, double lambda, double disparity_value) {
    const double cost = static_cast<double>(M) + d * (static_cast<double>(M) - 1.0) / 2.0;
    if (cost >= static_cast<double>(n)) return std::numeric_limits<double>::infinity();
    const double numerator = (lof_value + lambda * disparity_value * static_cast<double>(n)) /
                             static_cast<double>(n);
    const double denom = 1.0 - cost / static_cast<double>(n);
    return numerator / (denom * denom);
}

namespace {

struct SubsetFit {
    double lof = 0.0;
    double disparity = 0.0;
    std::vector<double> beta;
};

SubsetFit fit_subset(const ForwardState& state, const Dataset& ds, const std::vector<int>& active) {
    const int n = ds.num_rows();
    NormalSystem sys = state.sys.subset(active);
    SubsetFit fit;
    fit.beta = sys.solve();

    std::vector<double> resid(static_cast<size_t>(n));
    auto y = ds.response();
    for (int q = 0; q < n; ++q) resid[static_cast<size_t>(q)] = y[static_cast<size_t>(q)];
    for (size_t j = 0; j < active.size(); ++j) {
        const double b = fit.beta[j];
        if (b == 0.0) continue;
        const double* col =
            state.design.data() + static_cast<size_t>(active[j]) * static_cast<size_t>(n);
        const double mj = sys.col_means()[j];
        for (int q = 0; q < n; ++q) resid[static_cast<size_t>(q)] -= b * (col[q] - mj);
    }
    // residual-based so ridge-stabilized refits stay comparable across steps
    double rss = 0.0;
    for (double r : resid) rss += r * r;
    fit.lof = sys.ridge() > 0.0 ? rss : sys.lof(fit.beta);
    fit.disparity = disparity(resid, ds.groups(), ds.num_groups()).disparity;
    return fit;
}

} // namespace

PruneTrace run_backward(const ForwardState& state, const Dataset& ds, const FitConfig& cfg) {
    if (state.num_bases() < 1) throw config_error("run_backward: forward state has no bases");
    const int n = ds.num_rows();
    const double d = cfg.effective_gcv_d();
    const double lambda = (cfg.use_fair_knot && cfg.effective_backward_lambda() > 0.0)
                              ? cfg.effective_backward_lambda()
                              : 0.0;

    PruneTrace trace;
    std::vector<int> active(static_cast<size_t>(state.num_bases()));
    for (int i = 0; i < state.num_bases(); ++i) active[static_cast<size_t>(i)] = i;

    {
        PruneSnapshot snap;
        snap.removed_basis_id = -1;
        snap.lof = state.lof;
        snap.disparity = state.disparity;
        snap.gcv = gcv(state.lof, n, state.num_bases(), d, lambda, state.disparity);
        snap.active = active;
        trace.snapshots.push_back(std::move(snap));
    }

    while (active.size() > 1) {
        double best_obj = std::numeric_limits<double>::infinity();
        int best_pos = -1;
        SubsetFit best_fit;
        for (size_t pos = 0; pos < active.size(); ++pos) {
            if (state.bases[static_cast<size_t>(active[pos])].is_intercept()) continue;
            std::vector<int> trial = active;
            trial.erase(trial.begin() + static_cast<long>(pos));
            SubsetFit fit;
            try {
                fit = fit_subset(state, ds, trial);
            } catch (const rank_error&) {
                continue;
            }
            const double obj = fit.lof + lambda * fit.disparity;
            // scanning position order means ties already resolve to the
            // lowest basis id
            if (obj < best_obj) {
                best_obj = obj;
                best_pos = static_cast<int>(pos);
                best_fit = std::move(fit);
            }
        }
        if (best_pos < 0) break;

        PruneSnapshot snap;
        snap.removed_basis_id = active[static_cast<size_t>(best_pos)];
        active.erase(active.begin() + best_pos);
        snap.lof = best_fit.lof;
        snap.disparity = best_fit.disparity;
        snap.gcv = gcv(best_fit.lof, n, static_cast<int>(active.size()), d, lambda, best_fit.disparity);
        snap.active = active;
        trace.snapshots.push_back(std::move(snap));
    }

    trace.best_index = 0;
    for (size_t i = 1; i < trace.snapshots.size(); ++i)
        if (trace.snapshots[i].gcv <= trace.snapshots[static_cast<size_t>(trace.best_index)].gcv)
            trace.best_index = static_cast<int>(i); // ties prefer the smaller model
    return trace;
}

std::string PruneTrace::to_json() const {
    nlohmann::json j;
    j["best_index"] = best_index;
    j["snapshots"] = nlohmann::json::array();
    for (const auto& s : snapshots) {
        nlohmann::json js;
        js["removed_basis_id"] = s.removed_basis_id;
        js["gcv"] = std::isfinite(s.gcv) ? nlohmann::json(s.gcv) : nlohmann::json();
        js["lof"] = s.lof;
        js["disparity"] = s.disparity;
        js["active"] = s.active;
        j["snapshots"].push_back(std::move(js));
    }
    return j.dump();
}

} // namespace fairmars

#ifndef FAIRMARS_FORWARD_HPP
#define FAIRMARS_FORWARD_HPP

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fairmars/basis.hpp"
#include "fairmars/dataset.hpp"
#include "fairmars/fairness.hpp"
#include "fairmars/least_squares.hpp"

namespace fairmars {

struct FitConfig {
    int max_terms = 21; // basis-count cap; default 10 hinge pairs + intercept
    int max_degree = 1;
    double lambda = 0.0;
    bool use_fair_knot = true;  // penalize the knot search with lambda * disparity
    bool use_fair_coef = false; // re-estimate final coefficients by weighted LS
    int min_group_size = 1;
    bool strict_paper_mode = false; // disable the early-stop improvement threshold
    double gcv_d = -1.0;            // <0: 2 when max_degree==1, else 3
    double backward_lambda = -1.0;  // <0: reuse lambda in the backward pass
    int minspan = 0;                // 0 = every eligible knot
    int endspan = 0;
    int jobs = 1; // worker threads for the candidate sweep; 0 = hardware
    uint64_t seed = 0;

    void validate(const Dataset& ds) const;
    double effective_gcv_d() const { return gcv_d >= 0.0 ? gcv_d : (max_degree == 1 ? 2.0 : 3.0); }
    double effective_backward_lambda() const { return backward_lambda >= 0.0 ? backward_lambda : lambda; }
};

/// Outcome of scoring one (parent, variable, knot) candidate.
struct TrialResult {
    bool valid = false;
    int parent_id = -1;
    int variable = -1;
    double knot = 0.0;
    double objective = std::numeric_limits<double>::infinity();
    double lof = std::numeric_limits<double>::infinity();
    double disparity = 0.0;
    double ridge = 0.0;
    std::vector<double> coefficients; // trial coefficients, centered coordinates
};

struct IterationRecord {
    int M = 0; // basis count after the commit
    int parent = 0;
    int v = 0;
    double k = 0.0;
    double lof = 0.0;
    double disparity = 0.0;
    double objective = 0.0;
    double ridge_used = 0.0;
};

/// Search state: committed bases, their design columns, the solved normal
/// system and the residual-derived fairness figures.
struct ForwardState {
    std::vector<BasisFunction> bases; // [0] = intercept
    std::vector<double> design;       // col-major n x bases.size()
    NormalSystem sys;
    std::vector<double> coefficients; // centered coordinates
    std::vector<double> residuals;
    double lof = 0.0;
    double disparity = 0.0;
    double objective = 0.0;
    std::vector<IterationRecord> log;
    int skipped_candidates = 0;

    int num_bases() const { return static_cast<int>(bases.size()); }
};

/// Unique values of x_v over rows where the parent basis is strictly
/// positive, descending. minspan/endspan optionally thin the list by
/// observation counts.
std::vector<double> eligible_knots(const Dataset& ds, const BasisFunction& parent, int v,
                                   int minspan = 0, int endspan = 0);

/// Scores one candidate by direct construction of the Eq-style trial model
/// (committed columns + parent*x_v + parent*(x_v-k)_+). The knot sweep inside
/// run_forward is the fast path for this.
TrialResult score_knot(const ForwardState& state, const Dataset& ds, int parent_id, int v, double k,
                       const FitConfig& cfg);

/// Minimum objective with the deterministic tie policy: objective, then
/// variable index, then knot value, then parent id.
TrialResult best_candidate(std::span<const TrialResult> trials);
bool trial_less(const TrialResult& a, const TrialResult& b);

ForwardState run_forward(const Dataset& ds, const FitConfig& cfg);

std::string fit_log_to_jsonl(const std::vector<IterationRecord>& log);

} // namespace fairmars

#endif

#ifndef FAIRMARS_BACKWARD_HPP
#define FAIRMARS_BACKWARD_HPP

#include <string>
#include <vector>

#include "fairmars/forward.hpp"

namespace fairmars {

/// Generalized cross-validation with effective parameter count
/// C(M) = M + d*(M-1)/2 and the fairness penalty folded into the numerator:
///   [(lof + lambda*disparity*n)/n] / (1 - C(M)/n)^2
/// Returns +inf when C(M) >= n (model rejected).
double gcv(double lof_value, int n, int M, double d, double lambda, double disparity_value);

struct PruneSnapshot {
    int removed_basis_id = -1; // -1 for the initial full model
    double gcv = 0.0;
    double lof = 0.0;
    double disparity = 0.0;
    std::vector<int> active; // surviving basis ids, intercept first
};

/// Deletion path from the full forward model down to the intercept, one basis
/// per step; the final model is the minimum-GCV snapshot.
struct PruneTrace {
    std::vector<PruneSnapshot> snapshots;
    int best_index = 0;

    std::string to_json() const;
};

/// Greedy fairness-aware elimination: at each step drop the non-intercept
/// basis whose removal least increases lof + lambda*disparity (ties: lowest
/// basis id). Mirror twins are removable individually.
PruneTrace run_backward(const ForwardState& state, const Dataset& ds, const FitConfig& cfg);

} // namespace fairmars

#endif

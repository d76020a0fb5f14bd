#ifndef FAIRMARS_FAIRNESS_HPP
#define FAIRMARS_FAIRNESS_HPP

#include <span>
#include <string>
#include <vector>

#include "fairmars/least_squares.hpp"

namespace fairmars {

/// Per-subgroup mean squared residuals and the averaged absolute difference
/// between each group and its complement:
///   disparity = (1/|S|) * sum_j | RSS_j - RSS_{S \ j} |
/// where RSS_j is the mean squared residual within group j. Groups with no
/// rows in the residual set are excluded from the average and counted.
struct DisparityReport {
    std::vector<double> group_mse;      // indexed by group id; NaN when empty
    std::vector<double> complement_mse; // mean squared residual outside the group
    std::vector<int> group_sizes;
    double disparity = 0.0;
    int empty_group_warnings = 0;

    std::string to_json(const std::vector<std::string>& group_names) const;
};

DisparityReport disparity(std::span<const double> residuals, std::span<const int> groups,
                          int num_groups);

/// lof + lambda * disparity.
double penalized_objective(double lof_value, const DisparityReport& report, double lambda);

/// Observation weights w_i = 1/sigma_i with sigma_i the sample proportion of
/// row i's subgroup, rescaled to mean one.
WeightVector subgroup_weights(std::span<const int> groups, int num_groups);

} // namespace fairmars

#endif

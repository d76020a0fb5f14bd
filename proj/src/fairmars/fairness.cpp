#include "fairmars/fairness.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "fairmars/errors.hpp"

namespace fairmars {

DisparityReport disparity(std::span<const double> residuals, std::span<const int> groups,
                          int num_groups) {
    const size_t n = residuals.size();
    DisparityReport rep;
    rep.group_mse.assign(static_cast<size_t>(num_groups), std::numeric_limits<double>::quiet_NaN());
    rep.complement_mse.assign(static_cast<size_t>(num_groups), std::numeric_limits<double>::quiet_NaN());
    rep.group_sizes.assign(static_cast<size_t>(num_groups), 0);

    std::vector<double> sums(static_cast<size_t>(num_groups), 0.0);
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r2 = residuals[i] * residuals[i];
        sums[static_cast<size_t>(groups[i])] += r2;
        rep.group_sizes[static_cast<size_t>(groups[i])]++;
        total += r2;
    }

    double acc = 0.0;
    int present = 0;
    for (int g = 0; g < num_groups; ++g) {
        const int ng = rep.group_sizes[static_cast<size_t>(g)];
        const auto nc = static_cast<int>(n) - ng;
        if (ng == 0) {
            rep.empty_group_warnings++;
            continue;
        }
        const double mg = sums[static_cast<size_t>(g)] / ng;
        rep.group_mse[static_cast<size_t>(g)] = mg;
        if (nc > 0) {
            const double mc = (total - sums[static_cast<size_t>(g)]) / nc;
            rep.complement_mse[static_cast<size_t>(g)] = mc;
            acc += std::abs(mg - mc);
        }
        // A group covering every row has an empty complement and contributes
        // zero to the average.
        ++present;
    }
    rep.disparity = present > 0 ? acc / present : 0.0;
    return rep;
}

double penalized_objective(double lof_value, const DisparityReport& report, double lambda) {
    if (lambda < 0.0) throw config_error("lambda must be non-negative");
    return lof_value + lambda * report.disparity;
}

WeightVector subgroup_weights(std::span<const int> groups, int num_groups) {
    const auto n = static_cast<double>(groups.size());
    if (groups.empty()) throw data_error("subgroup_weights: no rows");
    std::vector<int> sizes(static_cast<size_t>(num_groups), 0);
    for (int g : groups) sizes[static_cast<size_t>(g)]++;
    std::vector<double> raw(groups.size());
    for (size_t i = 0; i < groups.size(); ++i) {
        const double sigma = sizes[static_cast<size_t>(groups[i])] / n;
        raw[i] = 1.0 / sigma;
    }
    return normalize_weights(std::move(raw));
}

std::string DisparityReport::to_json(const std::vector<std::string>& group_names) const {
    nlohmann::json j;
    auto name_of = [&](size_t g) {
        return g < group_names.size() ? group_names[g] : ("group" + std::to_string(g));
    };
    for (size_t g = 0; g < group_mse.size(); ++g) {
        if (group_sizes[g] == 0) continue;
        j["group_mse"][name_of(g)] = group_mse[g];
        if (!std::isnan(complement_mse[g])) j["complement_mse"][name_of(g)] = complement_mse[g];
        j["group_sizes"][name_of(g)] = group_sizes[g];
    }
    j["disparity"] = disparity;
    if (empty_group_warnings > 0) j["empty_group_warnings"] = empty_group_warnings;
    return j.dump();
}

} // namespace fairmars

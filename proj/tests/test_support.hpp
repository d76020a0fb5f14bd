#ifndef FAIRMARS_TEST_SUPPORT_HPP
#define FAIRMARS_TEST_SUPPORT_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "fairmars/dataset.hpp"

namespace testsup {

// Dataset from per-feature columns; group names g0..g{k-1} unless given.
inline fairmars::Dataset make_dataset(const std::vector<std::vector<double>>& cols,
                                      std::vector<double> y, std::vector<int> groups, int num_groups,
                                      std::vector<std::string> col_names = {}) {
    const int n = static_cast<int>(y.size());
    const int d = static_cast<int>(cols.size());
    std::vector<double> feats(static_cast<size_t>(n) * static_cast<size_t>(d));
    for (int j = 0; j < d; ++j)
        std::copy(cols[static_cast<size_t>(j)].begin(), cols[static_cast<size_t>(j)].end(),
                  feats.begin() + static_cast<size_t>(j) * static_cast<size_t>(n));
    if (col_names.empty())
        for (int j = 0; j < d; ++j) col_names.push_back("x" + std::to_string(j));
    std::vector<std::string> group_names;
    for (int g = 0; g < num_groups; ++g) group_names.push_back("g" + std::to_string(g));
    return fairmars::Dataset(std::move(feats), n, d, std::move(y), std::move(groups),
                             std::move(col_names), std::move(group_names), "group");
}

inline fairmars::Dataset random_dataset(std::mt19937_64& rng, int n, int d, int num_groups = 2) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> cols(static_cast<size_t>(d), std::vector<double>(static_cast<size_t>(n)));
    for (auto& col : cols)
        for (auto& v : col) v = gauss(rng);
    std::vector<double> y(static_cast<size_t>(n));
    for (auto& v : y) v = gauss(rng);
    std::vector<int> groups(static_cast<size_t>(n));
    for (size_t i = 0; i < groups.size(); ++i)
        groups[i] = static_cast<int>(i % static_cast<size_t>(num_groups));
    return make_dataset(cols, std::move(y), std::move(groups), num_groups);
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("fairmars_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

} // namespace testsup

#endif

#include "fairmars/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "fairmars/errors.hpp"

namespace fairmars {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool is_missing_token(const std::string& cell) {
    return cell.empty() || cell == "?" || cell == "NA" || cell == "N/A";
}

bool parse_double(const std::string& cell, double* out) {
    if (cell.empty()) return false;
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (end != begin + cell.size() || errno == ERANGE) return false;
    *out = v;
    return true;
}

// Minimal RFC-4180 field splitting: commas, optional double quotes, ""
// escaping inside quoted fields. Newlines inside quotes are not supported.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

std::vector<std::vector<std::string>> read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
            static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
            line = line.substr(3);
        first = false;
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    if (rows.empty()) throw data_error("empty file: " + path);
    return rows;
}

uint64_t fnv1a(uint64_t h, const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

Dataset::Dataset(std::vector<double> features_col_major, int n, int d,
                 std::vector<double> raw_response, std::vector<int> groups,
                 std::vector<std::string> column_names, std::vector<std::string> group_names,
                 std::string sensitive_column, std::vector<EncodedColumn> encoding)
    : n_(n),
      d_(d),
      features_(std::move(features_col_major)),
      raw_response_(std::move(raw_response)),
      groups_(std::move(groups)),
      column_names_(std::move(column_names)),
      group_names_(std::move(group_names)),
      sensitive_column_(std::move(sensitive_column)),
      encoding_(std::move(encoding)) {
    if (features_.size() != static_cast<size_t>(n_) * static_cast<size_t>(d_))
        throw data_error("feature matrix size does not match n x d");
    if (raw_response_.size() != static_cast<size_t>(n_)) throw data_error("response length mismatch");
    if (groups_.size() != static_cast<size_t>(n_)) throw data_error("groups length mismatch");
    double sum = 0.0;
    for (double y : raw_response_) sum += y;
    response_mean_ = n_ > 0 ? sum / n_ : 0.0;
    response_.resize(raw_response_.size());
    for (size_t i = 0; i < raw_response_.size(); ++i) response_[i] = raw_response_[i] - response_mean_;
}

std::vector<double> Dataset::row(int i) const {
    std::vector<double> out(static_cast<size_t>(d_));
    for (int j = 0; j < d_; ++j) out[static_cast<size_t>(j)] = value(i, j);
    return out;
}

Dataset Dataset::subset(std::span<const int> rows) const {
    const int m = static_cast<int>(rows.size());
    std::vector<double> feats(static_cast<size_t>(m) * static_cast<size_t>(d_));
    for (int j = 0; j < d_; ++j) {
        auto col = column(j);
        for (int i = 0; i < m; ++i)
            feats[static_cast<size_t>(j) * static_cast<size_t>(m) + static_cast<size_t>(i)] =
                col[static_cast<size_t>(rows[static_cast<size_t>(i)])];
    }
    std::vector<double> y(static_cast<size_t>(m));
    std::vector<int> g(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        y[static_cast<size_t>(i)] = raw_response_[static_cast<size_t>(rows[static_cast<size_t>(i)])];
        g[static_cast<size_t>(i)] = groups_[static_cast<size_t>(rows[static_cast<size_t>(i)])];
    }
    return Dataset(std::move(feats), m, d_, std::move(y), std::move(g), column_names_, group_names_,
                   sensitive_column_, encoding_);
}

uint64_t Dataset::content_hash() const {
    uint64_t h = 1469598103934665603ULL;
    h = fnv1a(h, features_.data(), features_.size() * sizeof(double));
    h = fnv1a(h, raw_response_.data(), raw_response_.size() * sizeof(double));
    h = fnv1a(h, groups_.data(), groups_.size() * sizeof(int));
    for (const auto& name : column_names_) h = fnv1a(h, name.data(), name.size());
    for (const auto& name : group_names_) h = fnv1a(h, name.data(), name.size());
    return h;
}

Dataset load_csv(const std::string& path, const LoadOptions& options) {
    auto table = read_table(path);
    const auto& header = table[0];
    if (table.size() < 2) throw data_error("no data rows in " + path);
    const int n = static_cast<int>(table.size()) - 1;

    std::unordered_map<std::string, int> col_index;
    for (size_t j = 0; j < header.size(); ++j) {
        if (col_index.count(header[j])) throw config_error("duplicate column name: " + header[j]);
        col_index[header[j]] = static_cast<int>(j);
    }
    auto require_col = [&](const std::string& name) {
        auto it = col_index.find(name);
        if (it == col_index.end()) throw config_error("column not found: " + name);
        return it->second;
    };

    const int response_idx = require_col(options.response_col);
    const int sensitive_idx = require_col(options.sensitive_col);
    if (options.response_col == options.sensitive_col)
        throw config_error("response and sensitive column must differ");

    // Assemble the source feature column list.
    std::vector<int> feature_idx;
    if (options.feature_cols.empty()) {
        for (size_t j = 0; j < header.size(); ++j) {
            if (static_cast<int>(j) == response_idx) continue;
            if (static_cast<int>(j) == sensitive_idx && !options.include_sensitive) continue;
            feature_idx.push_back(static_cast<int>(j));
        }
    } else {
        for (const auto& name : options.feature_cols) {
            int idx = require_col(name);
            if (idx == response_idx) throw config_error("response column listed as feature: " + name);
            if (idx == sensitive_idx && !options.include_sensitive)
                throw config_error("sensitive column listed as feature while excluded: " + name);
            if (std::find(feature_idx.begin(), feature_idx.end(), idx) != feature_idx.end())
                throw config_error("feature column listed twice: " + name);
            feature_idx.push_back(idx);
        }
        if (options.include_sensitive &&
            std::find(feature_idx.begin(), feature_idx.end(), sensitive_idx) == feature_idx.end())
            feature_idx.push_back(sensitive_idx);
    }
    if (feature_idx.empty()) throw config_error("no feature columns selected");

    auto cell_at = [&](int row, int col) -> const std::string& {
        const auto& r = table[static_cast<size_t>(row) + 1];
        if (static_cast<size_t>(col) >= r.size())
            throw parse_error("row " + std::to_string(row + 1) + " has too few fields");
        return r[static_cast<size_t>(col)];
    };

    // Missing-value scan over every used column; fail loudly with the row.
    std::vector<int> used = feature_idx;
    used.push_back(response_idx);
    used.push_back(sensitive_idx);
    for (int i = 0; i < n; ++i) {
        for (int c : used) {
            if (is_missing_token(cell_at(i, c)))
                throw data_error("missing value in column '" + header[static_cast<size_t>(c)] +
                                 "' at data row " + std::to_string(i + 1));
        }
    }

    // Response must be numeric and finite.
    std::vector<double> raw_y(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double v;
        if (!parse_double(cell_at(i, response_idx), &v))
            throw parse_error("non-numeric response '" + cell_at(i, response_idx) + "' at data row " +
                              std::to_string(i + 1));
        if (!std::isfinite(v))
            throw data_error("non-finite response at data row " + std::to_string(i + 1));
        raw_y[static_cast<size_t>(i)] = v;
    }

    // Subgroup ids from the sensitive column, first-appearance order.
    std::vector<std::string> group_names;
    std::unordered_map<std::string, int> group_of;
    std::vector<int> groups(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::string& cell = cell_at(i, sensitive_idx);
        auto it = group_of.find(cell);
        if (it == group_of.end()) {
            it = group_of.emplace(cell, static_cast<int>(group_names.size())).first;
            group_names.push_back(cell);
        }
        groups[static_cast<size_t>(i)] = it->second;
    }

    // Per-source-column type detection, then encoding.
    std::vector<EncodedColumn> encoding;
    std::vector<std::string> column_names;
    std::vector<std::vector<double>> columns;
    for (int c : feature_idx) {
        bool numeric = true;
        for (int i = 0; i < n && numeric; ++i) {
            double v;
            numeric = parse_double(cell_at(i, c), &v);
        }
        const std::string& src = header[static_cast<size_t>(c)];
        if (numeric) {
            std::vector<double> col(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                double v;
                parse_double(cell_at(i, c), &v);
                if (!std::isfinite(v))
                    throw data_error("non-finite value in column '" + src + "' at data row " +
                                     std::to_string(i + 1));
                col[static_cast<size_t>(i)] = v;
            }
            columns.push_back(std::move(col));
            column_names.push_back(src);
            encoding.push_back({src, src, false, ""});
        } else {
            std::vector<std::string> cats;
            std::unordered_map<std::string, int> cat_of;
            std::vector<int> codes(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                const std::string& cell = cell_at(i, c);
                auto it = cat_of.find(cell);
                if (it == cat_of.end()) {
                    it = cat_of.emplace(cell, static_cast<int>(cats.size())).first;
                    cats.push_back(cell);
                }
                codes[static_cast<size_t>(i)] = it->second;
            }
            for (size_t k = 0; k < cats.size(); ++k) {
                std::vector<double> col(static_cast<size_t>(n), 0.0);
                for (int i = 0; i < n; ++i)
                    if (codes[static_cast<size_t>(i)] == static_cast<int>(k)) col[static_cast<size_t>(i)] = 1.0;
                columns.push_back(std::move(col));
                column_names.push_back(src + "_" + cats[k]);
                encoding.push_back({src + "_" + cats[k], src, true, cats[k]});
            }
        }
    }

    const int d = static_cast<int>(columns.size());
    std::vector<double> feats(static_cast<size_t>(n) * static_cast<size_t>(d));
    for (int j = 0; j < d; ++j)
        std::copy(columns[static_cast<size_t>(j)].begin(), columns[static_cast<size_t>(j)].end(),
                  feats.begin() + static_cast<size_t>(j) * static_cast<size_t>(n));

    return Dataset(std::move(feats), n, d, std::move(raw_y), std::move(groups), std::move(column_names),
                   std::move(group_names), options.sensitive_col, std::move(encoding));
}

std::vector<double> encode_rows(const std::string& path, const std::vector<EncodedColumn>& encoding,
                                int* out_rows) {
    auto table = read_table(path);
    const auto& header = table[0];
    if (table.size() < 2) throw data_error("no data rows in " + path);
    const int n = static_cast<int>(table.size()) - 1;

    std::unordered_map<std::string, int> col_index;
    for (size_t j = 0; j < header.size(); ++j) col_index[header[j]] = static_cast<int>(j);

    const int d = static_cast<int>(encoding.size());
    std::vector<double> feats(static_cast<size_t>(n) * static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) {
        const auto& enc = encoding[static_cast<size_t>(j)];
        auto it = col_index.find(enc.source);
        if (it == col_index.end()) throw config_error("column not found: " + enc.source);
        for (int i = 0; i < n; ++i) {
            const auto& r = table[static_cast<size_t>(i) + 1];
            if (static_cast<size_t>(it->second) >= r.size())
                throw parse_error("row " + std::to_string(i + 1) + " has too few fields");
            const std::string& cell = r[static_cast<size_t>(it->second)];
            double v;
            if (enc.one_hot) {
                v = (cell == enc.category) ? 1.0 : 0.0;
            } else {
                if (is_missing_token(cell))
                    throw data_error("missing value in column '" + enc.source + "' at data row " +
                                     std::to_string(i + 1));
                if (!parse_double(cell, &v) || !std::isfinite(v))
                    throw parse_error("non-numeric value '" + cell + "' in column '" + enc.source +
                                      "' at data row " + std::to_string(i + 1));
            }
            feats[static_cast<size_t>(j) * static_cast<size_t>(n) + static_cast<size_t>(i)] = v;
        }
    }
    *out_rows = n;
    return feats;
}

std::vector<int> FoldPlan::test_rows(int fold) const {
    std::vector<int> out;
    for (size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> FoldPlan::train_rows(int fold) const {
    std::vector<int> out;
    for (size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(static_cast<int>(i));
    return out;
}

std::string FoldPlan::to_json() const {
    nlohmann::json j;
    j["k"] = k;
    j["seed"] = seed;
    j["assignments"] = assignments;
    return j.dump();
}

FoldPlan FoldPlan::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    FoldPlan plan;
    plan.k = j.at("k").get<int>();
    plan.seed = j.at("seed").get<uint64_t>();
    plan.assignments = j.at("assignments").get<std::vector<int>>();
    return plan;
}

FoldPlan make_folds(const Dataset& ds, int k, uint64_t seed) {
    const int n = ds.num_rows();
    if (k < 2 || k > n)
        throw config_error("fold count k=" + std::to_string(k) + " outside [2, n=" + std::to_string(n) + "]");

    // Fisher-Yates with explicit modulo draws: the sequence depends only on
    // (n, k, seed), independent of the standard library's shuffle details.
    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng() % static_cast<uint64_t>(i + 1));
        std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
    }

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(static_cast<size_t>(n), 0);
    for (int pos = 0; pos < n; ++pos) plan.assignments[static_cast<size_t>(perm[static_cast<size_t>(pos)])] = pos % k;
    return plan;
}

} // namespace fairmars

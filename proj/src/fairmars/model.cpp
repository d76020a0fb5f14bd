#include "fairmars/model.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fairmars/errors.hpp"
#include "fairmars/fairness.hpp"

namespace fairmars {

namespace {

uint64_t fnv1a_str(uint64_t h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

nlohmann::json basis_to_json(const BasisFunction& b) {
    nlohmann::json jb;
    jb["id"] = b.id;
    jb["terms"] = nlohmann::json::array();
    for (const auto& t : b.terms) {
        nlohmann::json jt;
        jt["variable"] = t.variable;
        jt["knot"] = t.knot;
        jt["direction"] = (t.direction == HingeDirection::plus) ? "plus" : "minus";
        if (t.linear) jt["linear"] = true;
        jb["terms"].push_back(std::move(jt));
    }
    return jb;
}

BasisFunction basis_from_json(const nlohmann::json& jb) {
    BasisFunction b;
    b.id = jb.at("id").get<int>();
    for (const auto& jt : jb.at("terms")) {
        HingeTerm t;
        t.variable = jt.at("variable").get<int>();
        t.knot = jt.at("knot").get<double>();
        const std::string dir = jt.at("direction").get<std::string>();
        if (dir == "plus")
            t.direction = HingeDirection::plus;
        else if (dir == "minus")
            t.direction = HingeDirection::minus;
        else
            throw model_io_error("unknown hinge direction: " + dir);
        t.linear = jt.value("linear", false);
        b.terms.push_back(std::move(t));
    }
    return b;
}

} // namespace

double FairMarsModel::predict(std::span<const double> x_row) const {
    if (x_row.size() != column_names_.size())
        throw data_error("predict: row has " + std::to_string(x_row.size()) + " features, model expects " +
                         std::to_string(column_names_.size()));
    double acc = response_mean_;
    for (size_t i = 0; i < bases_.size(); ++i) acc += coefficients_[i] * eval_basis(x_row, bases_[i]);
    return acc;
}

std::vector<double> FairMarsModel::predict_block(const double* columns, int n) const {
    std::vector<double> out(static_cast<size_t>(n), response_mean_);
    std::vector<double> col(static_cast<size_t>(n));
    for (size_t i = 0; i < bases_.size(); ++i) {
        const double coef = coefficients_[i];
        if (coef == 0.0 && !bases_[i].is_intercept()) continue;
        std::fill(col.begin(), col.end(), 1.0);
        for (const auto& t : bases_[i].terms) {
            const double* x = columns + static_cast<size_t>(t.variable) * static_cast<size_t>(n);
            for (int q = 0; q < n; ++q) col[static_cast<size_t>(q)] *= eval_hinge(x[q], t);
        }
        for (int q = 0; q < n; ++q) out[static_cast<size_t>(q)] += coef * col[static_cast<size_t>(q)];
    }
    return out;
}

std::vector<double> FairMarsModel::predict_rows(const Dataset& ds) const {
    if (ds.num_features() != static_cast<int>(column_names_.size()))
        throw data_error("predict: dataset feature count does not match the model");
    return predict_block(ds.column(0).data(), ds.num_rows());
}

std::string FairMarsModel::export_rules(bool include_pruned) const {
    std::string out;
    char buf[64];
    for (size_t i = 0; i < bases_.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.2f", coefficients_[i]);
        out += buf;
        out += "  ";
        out += render_basis(bases_[i], column_names_);
        out += "\n";
    }
    if (include_pruned) {
        for (const auto& b : pruned_bases_) {
            out += "pruned  ";
            out += render_basis(b, column_names_);
            out += "\n";
        }
    }
    return out;
}

std::string FairMarsModel::to_json() const {
    nlohmann::json j;
    j["format"] = "fairmars-model";
    j["version"] = kSchemaVersion;
    j["response_mean"] = response_mean_;
    j["column_names"] = column_names_;
    j["group_names"] = group_names_;
    j["sensitive_column"] = sensitive_column_;
    j["encoding"] = nlohmann::json::array();
    for (const auto& e : encoding_) {
        nlohmann::json je;
        je["name"] = e.name;
        je["source"] = e.source;
        je["one_hot"] = e.one_hot;
        if (e.one_hot) je["category"] = e.category;
        j["encoding"].push_back(std::move(je));
    }
    j["bases"] = nlohmann::json::array();
    for (const auto& b : bases_) j["bases"].push_back(basis_to_json(b));
    j["coefficients"] = coefficients_;
    j["pruned_bases"] = nlohmann::json::array();
    for (const auto& b : pruned_bases_) j["pruned_bases"].push_back(basis_to_json(b));

    nlohmann::json jc;
    jc["lambda"] = config_.lambda;
    jc["max_terms"] = config_.max_terms;
    jc["max_degree"] = config_.max_degree;
    jc["use_fair_knot"] = config_.use_fair_knot;
    jc["use_fair_coef"] = config_.use_fair_coef;
    jc["gcv_d"] = config_.effective_gcv_d();
    jc["backward_lambda"] = config_.effective_backward_lambda();
    jc["min_group_size"] = config_.min_group_size;
    jc["strict_paper_mode"] = config_.strict_paper_mode;
    jc["minspan"] = config_.minspan;
    jc["endspan"] = config_.endspan;
    jc["seed"] = config_.seed;
    j["config"] = std::move(jc);

    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(dataset_hash_));
    j["provenance"]["dataset_hash"] = hex;
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fit_log_digest_));
    j["provenance"]["fit_log_digest"] = hex;

    j["fit"]["training_lof"] = training_lof_;
    j["fit"]["training_disparity"] = training_disparity_;
    j["fit"]["gcv"] = selected_gcv_;
    j["fit"]["ridge"] = ridge_used_;
    return j.dump(2);
}

FairMarsModel FairMarsModel::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw model_io_error(std::string("corrupted model file: ") + e.what());
    }
    try {
        if (j.value("format", "") != "fairmars-model")
            throw model_io_error("not a fairmars model file");
        const int version = j.value("version", -1);
        if (version != kSchemaVersion)
            throw model_io_error("model schema version " + std::to_string(version) +
                                 " unsupported; this build reads version " +
                                 std::to_string(kSchemaVersion));
        FairMarsModel m;
        m.response_mean_ = j.at("response_mean").get<double>();
        m.column_names_ = j.at("column_names").get<std::vector<std::string>>();
        m.group_names_ = j.at("group_names").get<std::vector<std::string>>();
        m.sensitive_column_ = j.value("sensitive_column", "");
        for (const auto& je : j.at("encoding")) {
            EncodedColumn e;
            e.name = je.at("name").get<std::string>();
            e.source = je.at("source").get<std::string>();
            e.one_hot = je.at("one_hot").get<bool>();
            e.category = je.value("category", "");
            m.encoding_.push_back(std::move(e));
        }
        for (const auto& jb : j.at("bases")) m.bases_.push_back(basis_from_json(jb));
        m.coefficients_ = j.at("coefficients").get<std::vector<double>>();
        for (const auto& jb : j.at("pruned_bases")) m.pruned_bases_.push_back(basis_from_json(jb));
        if (m.coefficients_.size() != m.bases_.size())
            throw model_io_error("coefficient count does not match basis count");

        const auto& jc = j.at("config");
        m.config_.lambda = jc.at("lambda").get<double>();
        m.config_.max_terms = jc.at("max_terms").get<int>();
        m.config_.max_degree = jc.at("max_degree").get<int>();
        m.config_.use_fair_knot = jc.at("use_fair_knot").get<bool>();
        m.config_.use_fair_coef = jc.at("use_fair_coef").get<bool>();
        m.config_.gcv_d = jc.at("gcv_d").get<double>();
        m.config_.backward_lambda = jc.at("backward_lambda").get<double>();
        m.config_.min_group_size = jc.at("min_group_size").get<int>();
        m.config_.strict_paper_mode = jc.at("strict_paper_mode").get<bool>();
        m.config_.minspan = jc.at("minspan").get<int>();
        m.config_.endspan = jc.at("endspan").get<int>();
        m.config_.seed = jc.at("seed").get<uint64_t>();

        m.dataset_hash_ = std::stoull(j.at("provenance").at("dataset_hash").get<std::string>(), nullptr, 16);
        m.fit_log_digest_ =
            std::stoull(j.at("provenance").at("fit_log_digest").get<std::string>(), nullptr, 16);
        m.training_lof_ = j.at("fit").at("training_lof").get<double>();
        m.training_disparity_ = j.at("fit").at("training_disparity").get<double>();
        m.selected_gcv_ = j.at("fit").at("gcv").get<double>();
        m.ridge_used_ = j.at("fit").at("ridge").get<double>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw model_io_error(std::string("corrupted model file: ") + e.what());
    }
}

void FairMarsModel::save(const std::string& path) const {
    // write-then-rename so failed writes never leave a partial file
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw config_error("cannot write file: " + path);
        out << to_json() << "\n";
        if (!out) throw data_error("write failed: " + path);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw data_error("rename failed for " + path + ": " + ec.message());
}

FairMarsModel FairMarsModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open model file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

uint64_t FairMarsModel::structure_hash() const {
    uint64_t h = 1469598103934665603ULL;
    for (const auto& b : bases_) h = fnv1a_str(h, render_basis(b, column_names_) + ";");
    return h;
}

std::vector<double> fit_faircoef(const std::vector<BasisFunction>& bases, const Dataset& ds) {
    const int n = ds.num_rows();
    const int m = static_cast<int>(bases.size());
    std::vector<double> cols(static_cast<size_t>(n) * static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        auto col = design_column(ds, bases[static_cast<size_t>(j)]);
        std::copy(col.begin(), col.end(), cols.begin() + static_cast<size_t>(j) * static_cast<size_t>(n));
    }
    WeightVector w = subgroup_weights(ds.groups(), ds.num_groups());
    NormalSystem sys = NormalSystem::build(cols.data(), n, m, ds.response(), &w);
    std::vector<double> beta = sys.solve();
    return sys.raw_coefficients(beta, 0);
}

FitResult fit_with_report(const Dataset& ds, const FitConfig& cfg) {
    ForwardState state = run_forward(ds, cfg);
    PruneTrace trace = run_backward(state, ds, cfg);
    const auto& chosen = trace.snapshots[static_cast<size_t>(trace.best_index)];

    FitResult result;
    FairMarsModel& m = result.model;
    m.response_mean_ = ds.response_mean();
    m.column_names_ = ds.column_names();
    m.group_names_ = ds.group_names();
    m.sensitive_column_ = ds.sensitive_column();
    m.encoding_ = ds.encoding();
    m.config_ = cfg;
    m.dataset_hash_ = ds.content_hash();

    for (int id : chosen.active) m.bases_.push_back(state.bases[static_cast<size_t>(id)]);
    for (const auto& b : state.bases) {
        bool kept = false;
        for (int id : chosen.active) kept = kept || (id == b.id);
        if (!kept) m.pruned_bases_.push_back(b);
    }

    // Final coefficient estimation on the surviving structure.
    NormalSystem sys = state.sys.subset(chosen.active);
    std::vector<double> beta = sys.solve();
    m.ridge_used_ = sys.ridge();
    m.training_lof_ = sys.lof(beta);
    if (sys.ridge() > 0.0) {
        const int n = ds.num_rows();
        std::vector<double> resid(static_cast<size_t>(n), 0.0);
        auto y = ds.response();
        for (int q = 0; q < n; ++q) resid[static_cast<size_t>(q)] = y[static_cast<size_t>(q)];
        for (size_t j = 0; j < chosen.active.size(); ++j) {
            const double* col = state.design.data() +
                                static_cast<size_t>(chosen.active[j]) * static_cast<size_t>(n);
            const double mj = sys.col_means()[j];
            for (int q = 0; q < n; ++q) resid[static_cast<size_t>(q)] -= beta[j] * (col[q] - mj);
        }
        double rss = 0.0;
        for (double r : resid) rss += r * r;
        m.training_lof_ = rss;
    }
    m.coefficients_ = sys.raw_coefficients(beta, 0);
    m.training_disparity_ = chosen.disparity;
    m.selected_gcv_ = chosen.gcv;
    if (cfg.use_fair_coef) m.coefficients_ = fit_faircoef(m.bases_, ds);

    result.log = state.log;
    result.trace = std::move(trace);
    const std::string log_text = fit_log_to_jsonl(result.log);
    m.fit_log_digest_ = fnv1a_str(1469598103934665603ULL, log_text);
    return result;
}

FairMarsModel fit(const Dataset& ds, const FitConfig& cfg) {
    return fit_with_report(ds, cfg).model;
}

} // namespace fairmars

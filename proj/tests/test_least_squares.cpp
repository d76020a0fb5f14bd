#include <doctest.h>

#include <cmath>
#include <random>

#include "fairmars/errors.hpp"
#include "fairmars/least_squares.hpp"
#include "oracles.hpp"

using namespace fairmars;

namespace {

// col-major random design with a leading intercept column
std::vector<double> random_design(std::mt19937_64& rng, int n, int m, bool intercept = true) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> cols(static_cast<size_t>(n) * static_cast<size_t>(m));
    for (int j = 0; j < m; ++j)
        for (int q = 0; q < n; ++q)
            cols[static_cast<size_t>(j) * static_cast<size_t>(n) + static_cast<size_t>(q)] =
                (intercept && j == 0) ? 1.0 : gauss(rng);
    return cols;
}

std::vector<double> random_response(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> y(static_cast<size_t>(n));
    double mean = 0.0;
    for (auto& v : y) {
        v = gauss(rng);
        mean += v;
    }
    mean /= static_cast<double>(n);
    for (auto& v : y) v -= mean; // the engine always works on centered responses
    return y;
}

} // namespace

TEST_SUITE("least_squares") {

TEST_CASE("intercept-only system has zero c and lof = sum of squares") {
    std::mt19937_64 rng(1);
    const int n = 17;
    std::vector<double> ones(n, 1.0);
    auto y = random_response(rng, n);
    NormalSystem sys = NormalSystem::build(ones.data(), n, 1, y, nullptr);
    CHECK(std::abs(sys.cvec()[0]) < 1e-10);
    auto beta = sys.solve();
    CHECK(std::abs(beta[0]) < 1e-12);
    double syy = 0.0;
    for (double v : y) syy += v * v;
    CHECK(sys.lof(beta) == doctest::Approx(syy).epsilon(1e-12));
}

TEST_CASE("orthonormal mean-zero columns give an identity gram") {
    const int n = 4;
    std::vector<double> cols{0.5, -0.5, 0.5, -0.5, 0.5, 0.5, -0.5, -0.5};
    std::vector<double> y(n);
    for (int q = 0; q < n; ++q) y[static_cast<size_t>(q)] = 1.0 * cols[static_cast<size_t>(q)] +
                                                            2.0 * cols[static_cast<size_t>(4 + q)];
    NormalSystem sys = NormalSystem::build(cols.data(), n, 2, y, nullptr);
    CHECK(sys.gram()[0] == doctest::Approx(1.0));
    CHECK(sys.gram()[3] == doctest::Approx(1.0));
    CHECK(std::abs(sys.gram()[1]) < 1e-15);
    auto beta = sys.solve();
    CHECK(beta[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(beta[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("gram and c match dense products on the documented centering") {
    std::mt19937_64 rng(2);
    const int n = 10, m = 3;
    auto cols = random_design(rng, n, m);
    auto y = random_response(rng, n);
    NormalSystem sys = NormalSystem::build(cols.data(), n, m, y, nullptr);

    // oracle: center non-constant columns by their means, dense X~' X~ and X~' y
    std::vector<double> centered = cols;
    for (int j = 1; j < m; ++j) {
        double mean = 0.0;
        for (int q = 0; q < n; ++q) mean += cols[static_cast<size_t>(j) * n + static_cast<size_t>(q)];
        mean /= n;
        for (int q = 0; q < n; ++q) centered[static_cast<size_t>(j) * n + static_cast<size_t>(q)] -= mean;
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int q = 0; q < n; ++q)
                acc += centered[static_cast<size_t>(i) * n + static_cast<size_t>(q)] *
                       centered[static_cast<size_t>(j) * n + static_cast<size_t>(q)];
            CHECK(oracle::rel_err(sys.gram()[static_cast<size_t>(j) * m + static_cast<size_t>(i)], acc) <
                  1e-12);
        }
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int q = 0; q < n; ++q)
            acc += centered[static_cast<size_t>(i) * n + static_cast<size_t>(q)] * y[static_cast<size_t>(q)];
        CHECK(oracle::rel_err(sys.cvec()[static_cast<size_t>(i)], acc) < 1e-12);
    }
}

TEST_CASE("solve matches an independent dense solver on random systems") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 25; ++rep) {
        const int n = 20, m = 5;
        auto cols = random_design(rng, n, m);
        auto y = random_response(rng, n);
        NormalSystem sys = NormalSystem::build(cols.data(), n, m, y, nullptr);
        auto beta = sys.solve();
        CHECK(sys.ridge() == 0.0);
        auto raw = sys.raw_coefficients(beta, 0);

        auto oracle_beta = oracle::lsq_fit(cols, n, m, y);
        for (int j = 0; j < m; ++j)
            CHECK(oracle::rel_err(raw[static_cast<size_t>(j)], oracle_beta[static_cast<size_t>(j)], 1.0) <
                  1e-9);
    }
}

TEST_CASE("duplicated column triggers the ridge fallback") {
    std::mt19937_64 rng(4);
    const int n = 12;
    auto cols = random_design(rng, n, 2);
    cols.insert(cols.end(), cols.begin() + n, cols.begin() + 2 * n); // duplicate column 1
    auto y = random_response(rng, n);
    NormalSystem sys = NormalSystem::build(cols.data(), n, 3, y, nullptr);
    auto beta = sys.solve();
    CHECK(sys.ridge() > 0.0);
    CHECK(beta.size() == 3);
}

TEST_CASE("lof equals the directly recomputed residual sum of squares") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 25; ++rep) {
        const int n = 30, m = 4;
        auto cols = random_design(rng, n, m);
        auto y = random_response(rng, n);
        NormalSystem sys = NormalSystem::build(cols.data(), n, m, y, nullptr);
        auto beta = sys.solve();

        std::vector<double> resid(static_cast<size_t>(n));
        residuals_from_centered(cols.data(), n, m, sys.col_means(), y, beta, resid.data());
        double rss = 0.0;
        for (double r : resid) rss += r * r;
        CHECK(oracle::rel_err(sys.lof(beta), rss, sys.sum_yy()) < 1e-8);
    }
}

TEST_CASE("perfect fit drives lof to zero") {
    std::mt19937_64 rng(6);
    const int n = 9, m = 3;
    auto cols = random_design(rng, n, m);
    // y inside the column span (and centered by the intercept direction)
    std::vector<double> y(static_cast<size_t>(n), 0.0);
    for (int q = 0; q < n; ++q)
        y[static_cast<size_t>(q)] = 2.0 * cols[static_cast<size_t>(n) + static_cast<size_t>(q)] -
                                    cols[static_cast<size_t>(2) * n + static_cast<size_t>(q)];
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    for (auto& v : y) v -= mean;
    NormalSystem sys = NormalSystem::build(cols.data(), n, m, y, nullptr);
    auto beta = sys.solve();
    CHECK(std::abs(sys.lof(beta)) <= 1e-8 * std::max(1.0, sys.sum_yy()));
}

TEST_CASE("residuals are orthogonal to every centered column") {
    std::mt19937_64 rng(7);
    const int n = 40, m = 5;
    auto cols = random_design(rng, n, m);
    auto y = random_response(rng, n);
    NormalSystem sys = NormalSystem::build(cols.data(), n, m, y, nullptr);
    auto beta = sys.solve();
    std::vector<double> resid(static_cast<size_t>(n));
    residuals_from_centered(cols.data(), n, m, sys.col_means(), y, beta, resid.data());
    for (int j = 0; j < m; ++j) {
        double dot = 0.0;
        for (int q = 0; q < n; ++q)
            dot += resid[static_cast<size_t>(q)] *
                   (cols[static_cast<size_t>(j) * n + static_cast<size_t>(q)] -
                    sys.col_means()[static_cast<size_t>(j)]);
        CHECK(std::abs(dot) < 1e-8 * std::max(1.0, sys.sum_yy()));
    }
}

TEST_CASE("lof is non-increasing when a column is appended") {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 25, m = 4;
        auto cols = random_design(rng, n, m + 1);
        auto y = random_response(rng, n);
        NormalSystem small = NormalSystem::build(cols.data(), n, m, y, nullptr);
        NormalSystem big = NormalSystem::build(cols.data(), n, m + 1, y, nullptr);
        const double lof_small = small.lof(small.solve());
        const double lof_big = big.lof(big.solve());
        CHECK(lof_big <= lof_small + 1e-9 * std::max(1.0, small.sum_yy()));
    }
}

TEST_CASE("weighted solve with unit weights equals the unweighted solve") {
    std::mt19937_64 rng(9);
    const int n = 18, m = 4;
    auto cols = random_design(rng, n, m);
    auto y = random_response(rng, n);
    WeightVector w{std::vector<double>(static_cast<size_t>(n), 1.0)};
    NormalSystem a = NormalSystem::build(cols.data(), n, m, y, nullptr);
    NormalSystem b = NormalSystem::build(cols.data(), n, m, y, &w);
    auto ba = a.solve();
    auto bb = b.solve();
    for (int j = 0; j < m; ++j)
        CHECK(std::abs(ba[static_cast<size_t>(j)] - bb[static_cast<size_t>(j)]) < 1e-12);
}

TEST_CASE("weighted solve matches the weighted dense oracle") {
    std::mt19937_64 rng(10);
    const int n = 22, m = 4;
    auto cols = random_design(rng, n, m);
    auto y = random_response(rng, n);
    std::vector<double> raw_w(static_cast<size_t>(n));
    std::uniform_real_distribution<double> unif(0.5, 3.0);
    for (auto& v : raw_w) v = unif(rng);
    WeightVector w = normalize_weights(raw_w);

    NormalSystem sys = NormalSystem::build(cols.data(), n, m, y, &w);
    auto beta = sys.solve();
    auto raw = sys.raw_coefficients(beta, 0);
    auto oracle_beta = oracle::lsq_fit(cols, n, m, y, w.weights.data());
    for (int j = 0; j < m; ++j)
        CHECK(oracle::rel_err(raw[static_cast<size_t>(j)], oracle_beta[static_cast<size_t>(j)], 1.0) <
              1e-8);
}

TEST_CASE("normalize_weights keeps mean one and rejects non-positive input") {
    WeightVector w = normalize_weights({1.0, 3.0});
    CHECK(w.weights[0] + w.weights[1] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(normalize_weights({1.0, 0.0}), data_error);
    CHECK_THROWS_AS(normalize_weights({1.0, -2.0}), data_error);
}

TEST_CASE("fast c update: empty steps leave the value unchanged") {
    std::vector<double> x{1.0, 2.0, 3.0};
    std::vector<double> parent{1.0, 1.0, 1.0};
    std::vector<double> y{0.5, -1.0, 0.5};
    std::vector<int> order{2, 1, 0};

    FastCUpdate sweep(order, x, parent, y);
    const double at5 = sweep.advance(5.0); // above every point
    CHECK(at5 == 0.0);
    const double at4 = sweep.advance(4.0); // still above every point
    CHECK(at4 == 0.0);
    const double again = sweep.advance(4.0); // zero-width step
    CHECK(again == at4);
    CHECK_THROWS_AS(sweep.advance(4.5), std::invalid_argument);
}

TEST_CASE("fast c update matches the direct formula at every knot") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 30;
        std::vector<double> x(static_cast<size_t>(n)), parent(static_cast<size_t>(n));
        auto y = random_response(rng, n);
        for (int q = 0; q < n; ++q) {
            x[static_cast<size_t>(q)] = unif(rng);
            parent[static_cast<size_t>(q)] = std::max(0.0, unif(rng)); // nonnegative parent column
        }
        std::vector<int> order(static_cast<size_t>(n));
        for (int q = 0; q < n; ++q) order[static_cast<size_t>(q)] = q;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return x[static_cast<size_t>(a)] > x[static_cast<size_t>(b)];
        });
        std::vector<double> knots;
        for (int r : order)
            if (knots.empty() || x[static_cast<size_t>(r)] < knots.back())
                knots.push_back(x[static_cast<size_t>(r)]);

        FastCUpdate sweep(order, x, parent, y);
        double scale = 0.0;
        for (int q = 0; q < n; ++q) scale += std::abs(y[static_cast<size_t>(q)] * parent[static_cast<size_t>(q)]);
        for (double k : knots) {
            const double fast = sweep.advance(k);
            const double direct = oracle::direct_c_entry(x, parent, y, k);
            CHECK(oracle::rel_err(fast, direct, scale) < 1e-8);
        }
    }
}

TEST_CASE("raw coefficients reproduce the centered fitted values") {
    std::mt19937_64 rng(12);
    const int n = 15, m = 4;
    auto cols = random_design(rng, n, m);
    auto y = random_response(rng, n);
    NormalSystem sys = NormalSystem::build(cols.data(), n, m, y, nullptr);
    auto beta = sys.solve();
    auto raw = sys.raw_coefficients(beta, 0);

    std::vector<double> centered_fit(static_cast<size_t>(n), 0.0);
    residuals_from_centered(cols.data(), n, m, sys.col_means(), y, beta, centered_fit.data());
    // centered_fit now holds residuals; fitted = y - resid
    for (int q = 0; q < n; ++q) {
        double raw_fit = 0.0;
        for (int j = 0; j < m; ++j)
            raw_fit += raw[static_cast<size_t>(j)] * cols[static_cast<size_t>(j) * n + static_cast<size_t>(q)];
        const double cen_fit = y[static_cast<size_t>(q)] - centered_fit[static_cast<size_t>(q)];
        CHECK(oracle::rel_err(raw_fit, cen_fit, 1.0) < 1e-10);
    }
}

} // TEST_SUITE

#include <doctest.h>

#include <cmath>
#include <random>

#include "fairmars/basis.hpp"
#include "fairmars/dataset.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace fairmars;

TEST_SUITE("basis") {

TEST_CASE("eval_hinge basics") {
    CHECK(eval_hinge(5.0, {0, 3.0, HingeDirection::plus, false}) == 2.0);
    CHECK(eval_hinge(2.0, {0, 3.0, HingeDirection::plus, false}) == 0.0);
    CHECK(eval_hinge(3.0, {0, 3.0, HingeDirection::minus, false}) == 0.0);
    CHECK(eval_hinge(1.0, {0, 3.0, HingeDirection::minus, false}) == 2.0);
    CHECK(eval_hinge(-7.5, {0, 3.0, HingeDirection::plus, true}) == -7.5); // linear passthrough
}

TEST_CASE("hinge identities over random samples") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-10.0, 10.0);
    for (int i = 0; i < 2000; ++i) {
        const double x = unif(rng), k = unif(rng);
        const double plus = eval_hinge(x, {0, k, HingeDirection::plus, false});
        const double minus = eval_hinge(x, {0, k, HingeDirection::minus, false});
        CHECK(plus >= 0.0);
        CHECK(minus >= 0.0);
        CHECK(plus - minus == doctest::Approx(x - k).epsilon(1e-12));
        CHECK(plus + minus == doctest::Approx(std::abs(x - k)).epsilon(1e-12));
    }
}

TEST_CASE("hinge_difference_identity piecewise cases") {
    CHECK(hinge_difference_identity(1.0, 2.0, 5.0) == 0.0);
    CHECK(hinge_difference_identity(3.0, 2.0, 5.0) == 1.0);
    CHECK(hinge_difference_identity(7.0, 2.0, 5.0) == 3.0);
    CHECK_THROWS_AS(hinge_difference_identity(1.0, 5.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(hinge_difference_identity(1.0, 2.0, 2.0), std::invalid_argument);
}

TEST_CASE("identity equals hinge difference for random triples") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    for (int i = 0; i < 5000; ++i) {
        double k = unif(rng), u = unif(rng);
        if (k == u) continue;
        if (k > u) std::swap(k, u);
        const double x = unif(rng);
        const double lhs = hinge_difference_identity(x, k, u);
        const double rhs = eval_hinge(x, {0, k, HingeDirection::plus, false}) -
                           eval_hinge(x, {0, u, HingeDirection::plus, false});
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("eval_basis products") {
    BasisFunction intercept{{}, 0};
    std::vector<double> row{4.0, 1.0};
    CHECK(eval_basis(row, intercept) == 1.0);

    BasisFunction b{{{0, 2.0, HingeDirection::plus, false}, {1, 3.0, HingeDirection::minus, false}}, 1};
    CHECK(eval_basis(row, b) == 4.0); // (4-2) * (3-1)

    BasisFunction at_knot{{{0, 2.0, HingeDirection::plus, false}}, 2};
    std::vector<double> row2{2.0, 9.0};
    CHECK(eval_basis(row2, at_knot) == 0.0);
}

TEST_CASE("single-term basis is continuous at the knot") {
    BasisFunction b{{{0, 0.5, HingeDirection::plus, false}}, 0};
    for (double eps : {1e-4, 1e-8, 1e-12}) {
        std::vector<double> lo{0.5 - eps}, hi{0.5 + eps}, at{0.5};
        CHECK(eval_basis(at, b) == 0.0);
        CHECK(std::abs(eval_basis(lo, b)) <= 2 * eps);
        CHECK(std::abs(eval_basis(hi, b)) <= 2 * eps);
    }
}

TEST_CASE("design_column matches row-by-row evaluation") {
    std::mt19937_64 rng(3);
    auto ds = testsup::random_dataset(rng, 23, 4);
    BasisFunction b{{{1, 0.2, HingeDirection::plus, false}, {3, -0.4, HingeDirection::minus, false}}, 5};
    auto col = design_column(ds, b);
    for (int i = 0; i < ds.num_rows(); ++i) {
        auto row = ds.row(i);
        CHECK(col[static_cast<size_t>(i)] == eval_basis(row, b));
    }
}

TEST_CASE("design_column edge columns") {
    std::vector<std::vector<double>> cols{{1.0, 2.0, 3.0, 4.0, 5.0}};
    auto ds = testsup::make_dataset(cols, {0, 0, 0, 0, 0}, {0, 0, 0, 1, 1}, 2);

    auto ones = design_column(ds, BasisFunction{{}, 0});
    for (double v : ones) CHECK(v == 1.0);

    // knot at the column maximum: no point exceeds it
    auto zero = design_column(ds, BasisFunction{{{0, 5.0, HingeDirection::plus, false}}, 1});
    for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("rendering matches the table notation") {
    std::vector<std::string> names{"StdMath", "Age"};
    CHECK(render_basis(BasisFunction{{}, 0}, names) == "Intercept");
    CHECK(render_basis(BasisFunction{{{0, 49.86, HingeDirection::plus, false}}, 1}, names) ==
          "h(StdMath-49.86)");
    CHECK(render_basis(BasisFunction{{{0, 49.86, HingeDirection::minus, false}}, 2}, names) ==
          "h(49.86-StdMath)");
    CHECK(render_basis(BasisFunction{{{0, 93.0, HingeDirection::plus, false},
                                      {1, 18.0, HingeDirection::minus, false}},
                                     3},
                       names) == "h(StdMath-93)*h(18-Age)");
    CHECK(render_term({1, 0.0, HingeDirection::plus, true}, names) == "Age"); // linear term
}

} // TEST_SUITE

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "ssb/dynamics.hpp"
#include "ssb/estimation.hpp"

using namespace ssb;
using Catch::Approx;

TEST_CASE("moving average", "[estimation]") {
    std::vector<double> constant(20, 0.007);
    CHECK(moving_average(constant, 5, 19) == Approx(0.007).epsilon(1e-15));

    std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(moving_average(v, 2, 3) == 3.5);
    CHECK(moving_average(v, 4, 3) == 2.5);

    CHECK_THROWS_AS(moving_average(v, 5, 3), InsufficientHistoryError);
    CHECK_THROWS_AS(moving_average(v, 2, 0), InsufficientHistoryError);
    CHECK_THROWS_AS(moving_average(v, 2, 7), InsufficientHistoryError);
}

TEST_CASE("lambda estimator degenerate series values", "[estimation]") {
    auto constant = ReturnSeries::from_values(std::vector<double>(30, 0.004));
    auto f = estimate_lambda(constant, MaWindow{10}, EstimatorKind::CurrentDenominator, 29);
    CHECK(f.value == 0.0); // ratio is exactly 1
    CHECK(f.target_period == 30);
    CHECK(estimate_lambda(constant, MaWindow{10}, EstimatorKind::LaggedDenominator, 29).value ==
          0.0);

    std::vector<double> alt;
    for (int i = 0; i < 30; ++i) alt.push_back(i % 2 == 0 ? 0.012 : -0.012);
    auto alternating = ReturnSeries::from_values(alt);
    CHECK(estimate_lambda(alternating, MaWindow{10}, EstimatorKind::CurrentDenominator, 29).value ==
          2.0); // ratio is exactly -1
    CHECK(estimate_lambda(alternating, MaWindow{10}, EstimatorKind::LaggedDenominator, 29).value ==
          2.0);
    CHECK(estimate_lambda(alternating, MaWindow{10}, EstimatorKind::CovarianceBased, 29).value ==
          2.0);
    CHECK(estimate_lambda(alternating, MaWindow{7}, EstimatorKind::CovarianceBased, 29).value ==
          2.0); // odd windows too: the current sub-window is still the exact negation

    auto zeros = ReturnSeries::from_values(std::vector<double>(30, 0.0));
    CHECK_THROWS_AS(estimate_lambda(zeros, MaWindow{10}, EstimatorKind::CurrentDenominator, 29),
                    DegenerateWindowError);
    CHECK_THROWS_AS(estimate_lambda(zeros, MaWindow{10}, EstimatorKind::CovarianceBased, 29),
                    DegenerateWindowError);
}

TEST_CASE("lambda estimator history requirements", "[estimation]") {
    auto s = ReturnSeries::from_values({0.01, 0.02, 0.03, 0.04, 0.05});
    CHECK_THROWS_AS(estimate_lambda(s, MaWindow{5}, EstimatorKind::CurrentDenominator, 4),
                    InsufficientHistoryError); // needs k+1 = 6 returns
    CHECK_NOTHROW(estimate_lambda(s, MaWindow{4}, EstimatorKind::CurrentDenominator, 4));
    CHECK_THROWS_AS(estimate_lambda(s, MaWindow{2}, EstimatorKind::CurrentDenominator, 9),
                    InsufficientHistoryError);
    CHECK_THROWS_AS(estimate_lambda(s, MaWindow{1}, EstimatorKind::CurrentDenominator, 4),
                    ConfigError);
}

TEST_CASE("lambda estimator recovers AR(1) speed", "[estimation][oracle]") {
    auto series = gen_ar1(0.6, 0.02, 100000, 20240601);
    std::size_t last = series.size() - 1;
    for (auto kind : {EstimatorKind::CurrentDenominator, EstimatorKind::LaggedDenominator,
                      EstimatorKind::CovarianceBased}) {
        auto f = estimate_lambda(series, MaWindow{5000}, kind, last);
        CHECK(f.value == Approx(0.4).margin(0.03));
    }
}

TEST_CASE("lambda series shape and equivariance", "[estimation]") {
    auto series = gen_ar1(0.3, 0.02, 500, 5);
    auto fs = lambda_series(series, MaWindow{20}, EstimatorKind::CurrentDenominator);
    CHECK(fs.size() == series.size() - 20);
    CHECK(fs.front().target_period == series.periods[20] + 1);

    // Exactly one forecast when the series is as short as allowed.
    auto minimal = ReturnSeries::from_values({0.01, -0.02, 0.005});
    CHECK(lambda_series(minimal, MaWindow{2}, EstimatorKind::CurrentDenominator).size() == 1);
    auto too_short = ReturnSeries::from_values({0.01, -0.02});
    CHECK_THROWS_AS(lambda_series(too_short, MaWindow{2}, EstimatorKind::CurrentDenominator),
                    InsufficientHistoryError);

    // Shifting the series by one period shifts every forecast by one period.
    ReturnSeries shifted;
    for (std::size_t i = 0; i < series.size(); ++i)
        shifted.push_back(series.periods[i] + 1, series.values[i]);
    auto fs_shifted = lambda_series(shifted, MaWindow{20}, EstimatorKind::CurrentDenominator);
    REQUIRE(fs_shifted.size() == fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) {
        CHECK(fs_shifted[i].target_period == fs[i].target_period + 1);
        CHECK(fs_shifted[i].value == fs[i].value);
    }
}

TEST_CASE("lambda series mean tracks the AR(1) target", "[estimation][oracle]") {
    auto series = gen_ar1(0.3, 0.02, 100000, 77);
    auto fs = lambda_series(series, MaWindow{100}, EstimatorKind::CurrentDenominator);
    double mean = 0.0;
    for (const auto& f : fs) mean += f.value;
    mean /= static_cast<double>(fs.size());
    CHECK(mean == Approx(0.7).margin(0.05));
}

TEST_CASE("forecasts use only past data", "[estimation][property]") {
    auto series = gen_ar1(0.5, 0.02, 400, 3);
    const std::size_t i = 250;
    auto before = estimate_lambda(series, MaWindow{30}, EstimatorKind::CovarianceBased, i);

    ReturnSeries tampered = series;
    for (std::size_t j = i + 1; j < tampered.size(); ++j) tampered.values[j] += 10.0;
    auto after = estimate_lambda(tampered, MaWindow{30}, EstimatorKind::CovarianceBased, i);
    CHECK(before.value == after.value); // bit-identical
    CHECK(before.target_period == after.target_period);
}

TEST_CASE("estimator scale invariance", "[estimation][property]") {
    auto series = gen_ar1(0.4, 0.015, 300, 8);
    for (auto kind : {EstimatorKind::CurrentDenominator, EstimatorKind::LaggedDenominator,
                      EstimatorKind::CovarianceBased}) {
        auto base = estimate_lambda(series, MaWindow{25}, kind, 299).value;

        ReturnSeries pow2 = series;
        for (auto& v : pow2.values) v *= 4.0; // exact in binary floating point
        CHECK(estimate_lambda(pow2, MaWindow{25}, kind, 299).value == base);

        ReturnSeries other = series;
        for (auto& v : other.values) v *= -3.7;
        CHECK(estimate_lambda(other, MaWindow{25}, kind, 299).value ==
              Approx(base).margin(1e-12));
    }
}

TEST_CASE("covariance estimator range", "[estimation]") {
    // Stationary windows (matched sub-window variances) stay within [0, 2]...
    auto series = gen_ar1(0.7, 0.02, 5000, 17);
    auto fs = lambda_series(series, MaWindow{200}, EstimatorKind::CovarianceBased);
    for (const auto& f : fs) {
        CHECK(f.value >= -0.5);
        CHECK(f.value <= 2.5);
    }
    // ...but the slope form is NOT bounded for wildly non-stationary windows,
    // because it divides by the current sub-window's variance only.
    auto spike = ReturnSeries::from_values({100.0, 1.0, 0.01});
    CHECK(estimate_lambda(spike, MaWindow{2}, EstimatorKind::CovarianceBased, 2).value ==
          Approx(-99.0).margin(1e-9));
}

TEST_CASE("rho forecast", "[estimation]") {
    auto constant = ReturnSeries::from_values(std::vector<double>(10, 0.003));
    CHECK(estimate_rho(constant, MaWindow{5}, RhoMode::WindowMean, 9) ==
          Approx(0.003).epsilon(1e-15));

    auto s = ReturnSeries::from_values({0.002, -0.004, 0.01});
    CHECK(estimate_rho(s, MaWindow{2}, RhoMode::PreviousReturn, 2) == 0.01);

    auto two = ReturnSeries::from_values({0.01, 0.03});
    CHECK(estimate_rho(two, MaWindow{2}, RhoMode::WindowMean, 1) == Approx(0.02).epsilon(1e-15));

    CHECK_THROWS_AS(estimate_rho(two, MaWindow{3}, RhoMode::WindowMean, 1),
                    InsufficientHistoryError);
}

TEST_CASE("forecast CSV serialization", "[estimation]") {
    auto series = ReturnSeries::from_values({0.01, -0.01, 0.01, -0.01});
    auto fs = lambda_series(series, MaWindow{2}, EstimatorKind::CurrentDenominator);
    std::ostringstream os;
    write_forecasts_csv(os, fs);
    CHECK(os.str() == "period,lambda_hat,k,kind\n3,2,2,current\n4,2,2,current\n");
}

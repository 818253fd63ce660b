#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ssb/dynamics.hpp"
#include "support/integrate.hpp"

using namespace ssb;
using Catch::Approx;

TEST_CASE("phase classification", "[dynamics]") {
    CHECK(classify_phase({0.5, 1.0, 0.1, 0.0}) == PhaseLabel::LongLivingArbitrage);
    CHECK(classify_phase({1.0, 1.0, 0.1, 0.0}) == PhaseLabel::ShortLivingArbitrage); // boundary
    CHECK(classify_phase({2.0, 1.0, 0.1, 0.0}) == PhaseLabel::ShortLivingArbitrage);

    CHECK_THROWS_AS(classify_phase({-1.0, 1.0, 1.0, 0.0}), DomainError);
    CHECK_THROWS_AS(classify_phase({1.0, 0.0, 1.0, 0.0}), DomainError);
    CHECK_THROWS_AS(classify_phase({1.0, 1.0, -0.1, 0.0}), DomainError);
}

TEST_CASE("spontaneous return", "[dynamics]") {
    CHECK(*spontaneous_return({0.75, 1.0, 1.0, 0.0}) == Approx(0.5).margin(1e-15));
    CHECK_FALSE(spontaneous_return({1.0, 1.0, 1.0, 0.0}).has_value()); // symmetric phase
    CHECK_FALSE(spontaneous_return({1.5, 1.0, 1.0, 0.0}).has_value());
    CHECK(*spontaneous_return({0.5, 1.0, 0.02, 0.0}) ==
          Approx(0.014142135623730952).epsilon(1e-14));
}

TEST_CASE("fixed points, closed form (rho = 0)", "[dynamics]") {
    auto broken = fixed_points({0.75, 1.0, 1.0, 0.0});
    REQUIRE(broken.size() == 3);
    CHECK(broken[0] == Approx(-0.5).margin(1e-15));
    CHECK(broken[1] == 0.0);
    CHECK(broken[2] == Approx(0.5).margin(1e-15));

    auto symmetric = fixed_points({2.0, 1.0, 1.0, 0.0});
    REQUIRE(symmetric.size() == 1);
    CHECK(symmetric[0] == 0.0);
}

TEST_CASE("fixed points, cubic scan (rho != 0)", "[dynamics]") {
    // Frozen oracle values: roots of 0.001 + 0.25 r - r^3 from an
    // independent polynomial root finder.
    auto roots = fixed_points({0.75, 1.0, 1.0, 0.001});
    REQUIRE(roots.size() == 3);
    CHECK(roots[0] == Approx(-0.49798787029503333).margin(1e-9));
    CHECK(roots[1] == Approx(-0.004000256049164586).margin(1e-9));
    CHECK(roots[2] == Approx(0.501988126344198).margin(1e-9));
    for (double r : roots) CHECK(std::abs(drift({0.75, 1.0, 1.0, 0.001}, r)) < 1e-12);

    // Strong positive field: only the positive root survives.
    auto one = fixed_points({0.75, 1.0, 1.0, 0.5});
    REQUIRE(one.size() == 1);
    CHECK(one[0] > 0.0);
}

TEST_CASE("drift evaluation", "[dynamics]") {
    CHECK(drift({1.0, 1.0, 1.0, 0.0}, 0.0) == 0.0);
    CHECK(drift({0.5, 1.0, 0.1, 0.0}, 0.02) == Approx(0.0092).epsilon(1e-13));
    CHECK(std::abs(drift({0.75, 1.0, 1.0, 0.0}, 0.5)) < 1e-15); // r_v equilibrium
    CHECK_THROWS_AS(drift({1.0, 1.0, 1.0, 0.0}, std::nan("")), DomainError);
}

TEST_CASE("exact solution basics", "[dynamics]") {
    SsbParams broken{0.75, 1.0, 1.0, 0.0};
    CHECK(exact_solution(broken, 0.03, 0.0) == 0.03);   // identity at t=0
    CHECK(exact_solution(broken, 0.5, 17.0) == 0.5);    // starts on r_v, stays
    CHECK(exact_solution(broken, -0.5, 17.0) == -0.5);
    CHECK(exact_solution(broken, 0.0, 123.0) == 0.0);

    // Frozen oracle value (independent closed-form evaluation): approaches
    // r_v = 0.5 from r0 = 0.1 after t = 40.
    double r40 = exact_solution(broken, 0.1, 40.0);
    CHECK(r40 == Approx(0.49999998763307874).margin(1e-12));
    CHECK(std::abs(r40 - 0.5) < 1e-4);

    CHECK_THROWS_AS(exact_solution(broken, 0.1, -1.0), DomainError);
    CHECK_THROWS_AS(exact_solution({0.75, 1.0, 1.0, 0.01}, 0.1, 1.0), DomainError);
}

TEST_CASE("exact solution handles starts outside the equilibrium", "[dynamics]") {
    SsbParams broken{0.75, 1.0, 1.0, 0.0};
    double prev = 0.9; // |r0| > r_v decays monotonically onto r_v
    for (double t : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
        double r = exact_solution(broken, 0.9, t);
        CHECK(std::isfinite(r));
        CHECK(r > 0.5);
        CHECK(r < prev);
        prev = r;
    }
    CHECK(exact_solution(broken, 0.9, 100.0) == Approx(0.5).margin(1e-9));

    // No-arbitrage phase with a large start: long horizons stay finite (the
    // naive textbook expression would overflow) and decay to 0.
    SsbParams symmetric{1.5, 1.0, 1.0, 0.0};
    double far = exact_solution(symmetric, 5.0, 1e3 / 0.5);
    CHECK(std::isfinite(far));
    CHECK(std::abs(far) < 1e-6);
}

TEST_CASE("exact solution matches RK4 integration", "[dynamics][oracle]") {
    // Compact version of the acceptance grid: one ratio per phase regime.
    for (double ratio : {0.25, 1.0, 1.5}) {
        SsbParams p{ratio, 1.0, 0.5, 0.0};
        double rv = ratio < 1.0 ? std::sqrt(1.0 - ratio) * p.r_c : 0.0;
        double r0 = ratio < 1.0 ? 0.1 * rv : 0.1 * p.r_c;
        double r_numeric = r0;
        double t = 0.0;
        for (double target : {0.5, 1.0, 2.0, 5.0, 10.0}) {
            r_numeric = ssb_test::rk4_integrate(p, r_numeric, target - t);
            t = target;
            double r_closed = exact_solution(p, r0, target);
            CHECK(r_closed == Approx(r_numeric).epsilon(1e-7).margin(1e-12));
        }
    }
}

TEST_CASE("psi transition field", "[dynamics]") {
    SsbParams p{0.75, 1.0, 1.0, 0.0};
    auto psi = psi_solutions(p, std::log(2.0) / 0.25); // e^{-(lc-l)t} = 1/2
    CHECK(psi.trivial == 0.0);
    CHECK(psi.plus_branch_nontrivial == Approx(-2.0).epsilon(1e-14));
    CHECK(psi.minus_branch_nontrivial == Approx(2.0).epsilon(1e-14));

    auto late = psi_solutions(p, 1e6); // tends to -+ 2 r_v
    CHECK(late.plus_branch_nontrivial == Approx(-1.0).margin(1e-12));
    CHECK(late.minus_branch_nontrivial == Approx(1.0).margin(1e-12));

    CHECK_THROWS_AS(psi_solutions({1.5, 1.0, 1.0, 0.0}, 1.0), DomainError);
    CHECK_THROWS_AS(psi_solutions(p, 0.0), DomainError);
}

TEST_CASE("discrete map step", "[dynamics]") {
    CHECK(discrete_step({1.0, 1.0, 1.0, 0.0}, 0.0, 0.0) == 0.0);
    CHECK(discrete_step({0.5, 1.0, 0.1, 0.0}, 0.02, 0.0) == Approx(0.0292).epsilon(1e-13));
    CHECK(discrete_step({0.75, 1.0, 1.0, 0.0}, 0.5, 0.0) == 0.5); // r_v is a map fixed point
    // rho and eps enter additively.
    CHECK(discrete_step({1.0, 1.0, 1.0, 0.002}, 0.0, 0.003) == Approx(0.005).epsilon(1e-14));
}

TEST_CASE("path simulation", "[dynamics]") {
    SsbParams broken{0.75, 1.0, 1.0, 0.0};

    auto zero = simulate_path(broken, {0.0, 50, 0.0, 1});
    REQUIRE(zero.size() == 51);
    for (double v : zero.values) CHECK(v == 0.0);

    auto converge = simulate_path(broken, {0.1, 200, 0.0, 1});
    CHECK(std::abs(converge.values.back() - 0.5) < 1e-6);

    auto a = simulate_path(broken, {0.1, 500, 0.01, 42});
    auto b = simulate_path(broken, {0.1, 500, 0.01, 42});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values[i] == b.values[i]);

    // The cubic map diverges for parameters far outside the small-return
    // regime; the guard reports instead of overflowing.
    CHECK_THROWS_AS(simulate_path({5.0, 1.0, 0.001, 0.0}, {0.01, 100, 0.0, 1}), DomainError);

    CHECK_THROWS_AS(simulate_path(broken, {0.1, 0, 0.0, 1}), DomainError);
    CHECK_THROWS_AS(simulate_path(broken, {0.1, 10, -0.1, 1}), DomainError);
}

TEST_CASE("AR(1) generator", "[dynamics]") {
    CHECK_THROWS_AS(gen_ar1(1.0, 0.1, 100, 1), DomainError);
    CHECK_THROWS_AS(gen_ar1(-1.2, 0.1, 100, 1), DomainError);
    CHECK_THROWS_AS(gen_ar1(0.5, 0.1, 1, 1), DomainError);

    auto flat = gen_ar1(0.6, 0.0, 100, 7);
    for (double v : flat.values) CHECK(v == 0.0);

    auto a = gen_ar1(0.3, 0.02, 1000, 9);
    auto b = gen_ar1(0.3, 0.02, 1000, 9);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values[i] == b.values[i]);

    auto lag1_corr = [](const ReturnSeries& s) {
        double mean = 0.0;
        for (double v : s.values) mean += v;
        mean /= static_cast<double>(s.size());
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            double d = s.values[i] - mean;
            den += d * d;
            if (i > 0) num += d * (s.values[i - 1] - mean);
        }
        return num / den;
    };

    const std::int64_t n = 100000;
    CHECK(lag1_corr(gen_ar1(0.6, 0.01, n, 11)) == Approx(0.6).margin(0.01));
    CHECK(std::abs(lag1_corr(gen_ar1(0.0, 0.01, n, 13))) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("fixed-point consistency on random parameters", "[dynamics][property]") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        SsbParams p;
        p.lambda = 0.01 + 4.99 * u(rng);
        p.lambda_c = 0.01 + 4.99 * u(rng);
        p.r_c = 0.001 + 1.999 * u(rng);
        p.rho = 0.0;
        auto fps = fixed_points(p);
        bool long_living = classify_phase(p) == PhaseLabel::LongLivingArbitrage;
        CHECK(fps.size() == (long_living ? 3u : 1u));
        for (double fp : fps) {
            CHECK(std::abs(drift(p, fp)) < 1e-12);
            CHECK(std::abs(discrete_step(p, fp, 0.0) - fp) < 1e-12);
        }
    }
}

TEST_CASE("parity antisymmetry", "[dynamics][property]") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        SsbParams p{0.01 + 4.99 * u(rng), 0.01 + 4.99 * u(rng), 0.001 + 1.999 * u(rng), 0.0};
        double r = (u(rng) - 0.5) * 2.0 * p.r_c;
        CHECK(drift(p, -r) == -drift(p, r));
        double t = 10.0 * u(rng);
        CHECK(exact_solution(p, -r, t) == -exact_solution(p, r, t));
    }
}

TEST_CASE("asymptotic limits", "[dynamics][property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        double lambda_c = 0.2 + 2.0 * u(rng);
        double r_c = 0.01 + 1.99 * u(rng);

        SsbParams below{lambda_c * (0.1 + 0.8 * u(rng)), lambda_c, r_c, 0.0};
        double rv = *spontaneous_return(below);
        double horizon = 1e3 / std::abs(below.l1());
        double sign = u(rng) < 0.5 ? -1.0 : 1.0;
        CHECK(std::abs(exact_solution(below, sign * 0.5 * rv, horizon) - sign * rv) < 1e-6);

        SsbParams above{lambda_c * (1.1 + 2.0 * u(rng)), lambda_c, r_c, 0.0};
        CHECK(std::abs(exact_solution(above, 0.5 * r_c, 1e3 / std::abs(above.l1()))) < 1e-6);
    }
}

TEST_CASE("weak field selects the matching branch", "[dynamics][property]") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        double lambda_c = 0.2 + 2.0 * u(rng);
        double lambda = lambda_c * (0.1 + 0.8 * u(rng));
        double r_c = 0.01 + 1.99 * u(rng);
        double rv = std::sqrt(1.0 - lambda / lambda_c) * r_c;
        double mag = 0.099 * (lambda_c - lambda) * rv * u(rng);
        if (mag == 0.0) continue;
        for (double rho : {mag, -mag}) {
            auto fps = fixed_points({lambda, lambda_c, r_c, rho});
            REQUIRE(!fps.empty());
            double largest = fps.front();
            for (double fp : fps)
                if (std::abs(fp) > std::abs(largest)) largest = fp;
            CHECK(largest * rho > 0.0); // same sign as the field
        }
    }
}

#pragma once

// Builders for synthetic weekly markets used across the strategy and
// acceptance tests. Each market has two trading days per week (Monday and
// Friday) with the Monday close equal to the previous Friday close, so a
// ticker's weekly (first close -> last close) returns compound exactly to
// its total price move. Output is CSV text so tests exercise the real
// loaders.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ssb/marketdata.hpp"
#include "ssb/series.hpp"

namespace ssb_test {

// Weeks are generated starting at Monday 2000-01-03.
inline ssb::Day market_start_monday() { return ssb::parse_date("2000-01-03"); }
inline std::int64_t market_start_week() { return ssb::week_index(market_start_monday()); }

struct MarketCsv {
    std::string prices;
    std::string membership;
    std::string riskfree;
};

// weekly_returns[t][w] is ticker t's week-w return; a ticker with fewer than
// n_weeks entries simply stops trading (and exits the index) after its last
// generated week.
inline MarketCsv build_market(const std::vector<std::string>& tickers,
                              const std::vector<std::vector<double>>& weekly_returns,
                              const std::string& benchmark,
                              const std::vector<double>& benchmark_returns,
                              double annual_rf = 0.0) {
    const ssb::Day start = market_start_monday();
    std::ostringstream prices;
    prices << "date,ticker,close\n";
    std::ostringstream membership;
    membership << "ticker,enter_date,exit_date\n";

    auto emit_ticker = [&](const std::string& name, const std::vector<double>& rets) {
        double close = 100.0;
        for (std::size_t w = 0; w < rets.size(); ++w) {
            ssb::Day monday = start + 7 * static_cast<ssb::Day>(w);
            prices << ssb::format_date(monday) << ',' << name << ','
                   << ssb::detail::format_double(close) << '\n';
            close *= 1.0 + rets[w];
            prices << ssb::format_date(monday + 4) << ',' << name << ','
                   << ssb::detail::format_double(close) << '\n';
        }
    };

    for (std::size_t t = 0; t < tickers.size(); ++t) emit_ticker(tickers[t], weekly_returns[t]);
    emit_ticker(benchmark, benchmark_returns);

    // Membership: each ticker enters at the start; a ticker that stops
    // trading exits the Monday after its last traded week. The benchmark is
    // intentionally not a member.
    std::size_t max_weeks = benchmark_returns.size();
    for (const auto& r : weekly_returns) max_weeks = std::max(max_weeks, r.size());
    for (std::size_t t = 0; t < tickers.size(); ++t) {
        membership << tickers[t] << ',' << ssb::format_date(start) << ',';
        if (weekly_returns[t].size() < max_weeks) {
            ssb::Day exit_day = start + 7 * static_cast<ssb::Day>(weekly_returns[t].size());
            membership << ssb::format_date(exit_day);
        }
        membership << '\n';
    }

    std::ostringstream riskfree;
    riskfree << "date,annual_rate\n";
    riskfree << ssb::format_date(start) << ',' << ssb::detail::format_double(annual_rf) << '\n';

    return MarketCsv{prices.str(), membership.str(), riskfree.str()};
}

// Random i.i.d. Gaussian weekly returns for n_tickers over n_weeks, plus an
// independent benchmark.
inline MarketCsv random_market(int n_tickers, int n_weeks, std::uint64_t seed,
                               double mean = 0.001, double vol = 0.03,
                               double annual_rf = 0.02) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::string> tickers;
    std::vector<std::vector<double>> rets(static_cast<std::size_t>(n_tickers));
    for (int t = 0; t < n_tickers; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "T%03d", t);
        tickers.emplace_back(buf);
        auto& r = rets[static_cast<std::size_t>(t)];
        r.reserve(static_cast<std::size_t>(n_weeks));
        for (int w = 0; w < n_weeks; ++w) {
            double x = mean + vol * gauss(rng);
            r.push_back(std::max(x, -0.9));
        }
    }
    std::vector<double> bench;
    bench.reserve(static_cast<std::size_t>(n_weeks));
    for (int w = 0; w < n_weeks; ++w) bench.push_back(0.0005 + 0.02 * gauss(rng));
    return build_market(tickers, rets, "BENCH", bench, annual_rf);
}

struct LoadedMarket {
    ssb::PriceTable prices;
    ssb::MembershipCalendar membership;
    ssb::RiskFreeSeries riskfree;
};

inline LoadedMarket load(const MarketCsv& csv) {
    LoadedMarket m;
    std::istringstream p(csv.prices), mem(csv.membership), rf(csv.riskfree);
    m.prices = ssb::load_prices(p);
    m.membership = ssb::load_membership(mem);
    m.riskfree = ssb::load_risk_free(rf);
    return m;
}

} // namespace ssb_test

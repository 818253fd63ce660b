#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ssb/errors.hpp"
#include "ssb/series.hpp"

namespace ssb {

// ---------------------------------------------------------------------------
// Calendar helpers. Dates are days since 1970-01-01; weeks are Monday-Sunday,
// numbered from Monday 1970-01-05 (day 4) so that week_index * 7 + 4 is each
// week's Monday.
// ---------------------------------------------------------------------------

using Day = std::int64_t;

inline Day parse_date(const std::string& s) {
    int y = 0, m = 0, d = 0;
    char dash1 = 0, dash2 = 0, tail = 0;
    int got = std::sscanf(s.c_str(), "%4d%c%2d%c%2d%c", &y, &dash1, &m, &dash2, &d, &tail);
    if (got != 5 || dash1 != '-' || dash2 != '-' || s.size() != 10)
        throw DataError("bad date '" + s + "' (expected YYYY-MM-DD)");
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw DataError("invalid calendar date '" + s + "'");
    return std::chrono::sys_days(ymd).time_since_epoch().count();
}

inline std::string format_date(Day day) {
    std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

inline std::int64_t week_index(Day day) {
    Day shifted = day - 4; // Monday 1970-01-05 opens week 0
    return shifted >= 0 ? shifted / 7 : (shifted - 6) / 7;
}

inline Day week_monday(std::int64_t week) { return 4 + 7 * week; }
inline Day week_sunday(std::int64_t week) { return week_monday(week) + 6; }

// ---------------------------------------------------------------------------
// PriceTable: per-ticker sorted (date, close) rows plus the union trading
// calendar. Prices must be positive; duplicate (date, ticker) pairs are
// rejected at load.
// ---------------------------------------------------------------------------

struct PriceTable {
    std::map<std::string, std::vector<std::pair<Day, double>>> by_ticker;
    std::vector<Day> trading_days; // sorted union of all dates

    bool has_ticker(const std::string& t) const { return by_ticker.count(t) != 0; }

    std::optional<double> close_on(const std::string& ticker, Day day) const {
        auto it = by_ticker.find(ticker);
        if (it == by_ticker.end()) return std::nullopt;
        const auto& rows = it->second;
        auto pos = std::lower_bound(rows.begin(), rows.end(), day,
                                    [](const auto& row, Day d) { return row.first < d; });
        if (pos == rows.end() || pos->first != day) return std::nullopt;
        return pos->second;
    }

    // Earliest (date, close) of `ticker` in [lo, hi], if any.
    std::optional<std::pair<Day, double>> first_close_in(const std::string& ticker, Day lo,
                                                         Day hi) const {
        auto it = by_ticker.find(ticker);
        if (it == by_ticker.end()) return std::nullopt;
        const auto& rows = it->second;
        auto pos = std::lower_bound(rows.begin(), rows.end(), lo,
                                    [](const auto& row, Day d) { return row.first < d; });
        if (pos == rows.end() || pos->first > hi) return std::nullopt;
        return *pos;
    }

    // Latest (date, close) of `ticker` in [lo, hi], if any.
    std::optional<std::pair<Day, double>> last_close_in(const std::string& ticker, Day lo,
                                                        Day hi) const {
        auto it = by_ticker.find(ticker);
        if (it == by_ticker.end()) return std::nullopt;
        const auto& rows = it->second;
        auto pos = std::upper_bound(rows.begin(), rows.end(), hi,
                                    [](Day d, const auto& row) { return d < row.first; });
        if (pos == rows.begin()) return std::nullopt;
        --pos;
        if (pos->first < lo) return std::nullopt;
        return *pos;
    }

    bool has_price_on_or_before(const std::string& ticker, Day day) const {
        auto it = by_ticker.find(ticker);
        if (it == by_ticker.end()) return false;
        const auto& rows = it->second;
        return !rows.empty() && rows.front().first <= day;
    }

    // First/last day of the union trading calendar within week w, if the
    // calendar touches that week at all.
    std::optional<Day> first_trading_day_of_week(std::int64_t week) const {
        Day lo = week_monday(week);
        auto pos = std::lower_bound(trading_days.begin(), trading_days.end(), lo);
        if (pos == trading_days.end() || *pos > week_sunday(week)) return std::nullopt;
        return *pos;
    }

    std::optional<Day> last_trading_day_of_week(std::int64_t week) const {
        Day hi = week_sunday(week);
        auto pos = std::upper_bound(trading_days.begin(), trading_days.end(), hi);
        if (pos == trading_days.begin()) return std::nullopt;
        --pos;
        if (*pos < week_monday(week)) return std::nullopt;
        return *pos;
    }

    std::int64_t first_week() const {
        if (trading_days.empty()) throw DataError("price table is empty");
        return week_index(trading_days.front());
    }

    std::int64_t last_week() const {
        if (trading_days.empty()) throw DataError("price table is empty");
        return week_index(trading_days.back());
    }
};

inline PriceTable load_prices(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("empty prices file");
    if (detail::strip_cr(line) != "date,ticker,close")
        throw DataError("line 1: expected header 'date,ticker,close', got '" +
                        detail::strip_cr(line) + "'");
    PriceTable table;
    std::map<std::string, std::set<Day>> seen;
    std::set<Day> days;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw DataError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
        Day day;
        try {
            day = parse_date(fields[0]);
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        const std::string& ticker = fields[1];
        if (ticker.empty())
            throw DataError("line " + std::to_string(line_no) + ": empty ticker");
        double close = detail::parse_double(fields[2], "close", line_no);
        if (!(close > 0.0))
            throw DataError("line " + std::to_string(line_no) + ": non-positive price " +
                            fields[2] + " for " + ticker);
        if (!seen[ticker].insert(day).second)
            throw DataError("line " + std::to_string(line_no) + ": duplicate (date,ticker) (" +
                            fields[0] + "," + ticker + ")");
        table.by_ticker[ticker].emplace_back(day, close);
        days.insert(day);
    }
    for (auto& [ticker, rows] : table.by_ticker)
        std::sort(rows.begin(), rows.end());
    table.trading_days.assign(days.begin(), days.end());
    return table;
}

inline PriceTable load_prices(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open '" + path + "'");
    return load_prices(is);
}

inline void write_prices_csv(std::ostream& os, const PriceTable& table) {
    os << "date,ticker,close\n";
    for (const auto& [ticker, rows] : table.by_ticker)
        for (const auto& [day, close] : rows)
            os << format_date(day) << ',' << ticker << ',' << detail::format_double(close) << '\n';
}

// ---------------------------------------------------------------------------
// MembershipCalendar: half-open [enter, exit) index-membership intervals per
// ticker; exit may be open-ended. Intervals per ticker must be disjoint.
// ---------------------------------------------------------------------------

struct MembershipInterval {
    Day enter;
    std::optional<Day> exit; // absent = still a member
};

struct MembershipCalendar {
    std::map<std::string, std::vector<MembershipInterval>> by_ticker;

    bool contains(const std::string& ticker, Day day) const {
        auto it = by_ticker.find(ticker);
        if (it == by_ticker.end()) return false;
        for (const auto& iv : it->second)
            if (day >= iv.enter && (!iv.exit || day < *iv.exit)) return true;
        return false;
    }
};

inline MembershipCalendar load_membership(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("empty membership file");
    if (detail::strip_cr(line) != "ticker,enter_date,exit_date")
        throw DataError("line 1: expected header 'ticker,enter_date,exit_date', got '" +
                        detail::strip_cr(line) + "'");
    MembershipCalendar cal;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw DataError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
        if (fields[0].empty())
            throw DataError("line " + std::to_string(line_no) + ": empty ticker");
        MembershipInterval iv;
        try {
            iv.enter = parse_date(fields[1]);
            if (!fields[2].empty()) iv.exit = parse_date(fields[2]);
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (iv.exit && *iv.exit <= iv.enter)
            throw DataError("line " + std::to_string(line_no) + ": exit_date must be after enter_date");
        cal.by_ticker[fields[0]].push_back(iv);
    }
    for (auto& [ticker, ivs] : cal.by_ticker) {
        std::sort(ivs.begin(), ivs.end(),
                  [](const MembershipInterval& a, const MembershipInterval& b) {
                      return a.enter < b.enter;
                  });
        for (std::size_t i = 1; i < ivs.size(); ++i)
            if (!ivs[i - 1].exit || *ivs[i - 1].exit > ivs[i].enter)
                throw DataError("overlapping membership intervals for ticker '" + ticker + "'");
    }
    return cal;
}

inline MembershipCalendar load_membership(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open '" + path + "'");
    return load_membership(is);
}

// ---------------------------------------------------------------------------
// RiskFreeSeries: dated annualized rates, converted to per-week rates via
// rf_week = (1 + annual)^(1/52) - 1 using the latest quote on or before the
// week's last calendar day.
// ---------------------------------------------------------------------------

struct RiskFreeSeries {
    std::vector<std::pair<Day, double>> rows; // sorted by date, annualized decimal

    double annual_rate_on_or_before(Day day) const {
        auto pos = std::upper_bound(rows.begin(), rows.end(), day,
                                    [](Day d, const auto& row) { return d < row.first; });
        if (pos == rows.begin())
            throw DataError("no risk-free quote on or before " + format_date(day));
        return std::prev(pos)->second;
    }

    double weekly_rate(std::int64_t week) const {
        double annual = annual_rate_on_or_before(week_sunday(week));
        return std::pow(1.0 + annual, 1.0 / 52.0) - 1.0;
    }
};

inline RiskFreeSeries load_risk_free(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("empty risk-free file");
    if (detail::strip_cr(line) != "date,annual_rate")
        throw DataError("line 1: expected header 'date,annual_rate', got '" +
                        detail::strip_cr(line) + "'");
    RiskFreeSeries rf;
    std::set<Day> seen;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw DataError("line " + std::to_string(line_no) + ": expected 2 fields, got " +
                            std::to_string(fields.size()));
        Day day;
        try {
            day = parse_date(fields[0]);
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        double rate = detail::parse_double(fields[1], "annual_rate", line_no);
        if (rate <= -1.0)
            throw DataError("line " + std::to_string(line_no) + ": annual_rate must be > -1");
        if (!seen.insert(day).second)
            throw DataError("line " + std::to_string(line_no) + ": duplicate date " + fields[0]);
        rf.rows.emplace_back(day, rate);
    }
    std::sort(rf.rows.begin(), rf.rows.end());
    return rf;
}

inline RiskFreeSeries load_risk_free(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open '" + path + "'");
    return load_risk_free(is);
}

// ---------------------------------------------------------------------------
// Point-in-time universe and weekly resampling.
// ---------------------------------------------------------------------------

// Tickers that are index members on `day` and have at least one price row
// dated on or before `day` (untracked tickers never enter the universe).
// Never consults data dated after `day`.
inline std::vector<std::string> universe_at(const MembershipCalendar& membership,
                                            const PriceTable& prices, Day day) {
    std::vector<std::string> out;
    for (const auto& [ticker, ivs] : membership.by_ticker) {
        (void)ivs;
        if (membership.contains(ticker, day) && prices.has_price_on_or_before(ticker, day))
            out.push_back(ticker);
    }
    return out; // std::map iteration is already sorted
}

// Weekly simple returns per ticker: close on the week's last union trading
// day over close on its first union trading day, minus one. Weeks where the
// ticker lacks either close are absent from its series (missing, not zero).
inline std::map<std::string, ReturnSeries> weekly_returns(const PriceTable& prices,
                                                          const std::vector<std::string>& tickers,
                                                          std::int64_t week_first,
                                                          std::int64_t week_last) {
    if (week_last < week_first)
        throw ConfigError("weekly_returns: week_last must be >= week_first");
    std::map<std::string, ReturnSeries> out;
    for (const auto& ticker : tickers) out[ticker]; // ensure a (possibly empty) series per ticker
    for (std::int64_t w = week_first; w <= week_last; ++w) {
        auto first_day = prices.first_trading_day_of_week(w);
        auto last_day = prices.last_trading_day_of_week(w);
        if (!first_day || !last_day) continue;
        for (const auto& ticker : tickers) {
            auto open_px = prices.close_on(ticker, *first_day);
            auto close_px = prices.close_on(ticker, *last_day);
            if (!open_px || !close_px) continue;
            out[ticker].push_back(w, *close_px / *open_px - 1.0);
        }
    }
    return out;
}

// Subtracts the per-week risk-free rate from a weekly return series (period
// indices are week indices).
inline ReturnSeries excess_returns(const ReturnSeries& series, const RiskFreeSeries& rf) {
    ReturnSeries out;
    for (std::size_t i = 0; i < series.size(); ++i) {
        double rate;
        try {
            rate = rf.weekly_rate(series.periods[i]);
        } catch (const DataError&) {
            throw DataError("risk-free rate missing for week " + std::to_string(series.periods[i]));
        }
        out.push_back(series.periods[i], series.values[i] - rate);
    }
    return out;
}

} // namespace ssb

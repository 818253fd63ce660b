#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ssb/errors.hpp"
#include "ssb/estimation.hpp"
#include "ssb/marketdata.hpp"
#include "ssb/series.hpp"

namespace ssb {

// ---------------------------------------------------------------------------
// Portfolio construction.
// ---------------------------------------------------------------------------

enum class Direction { Momentum, Contrarian };

inline const char* to_string(Direction d) {
    return d == Direction::Momentum ? "momentum" : "contrarian";
}

inline Direction direction_from_string(const std::string& s) {
    if (s == "momentum") return Direction::Momentum;
    if (s == "contrarian") return Direction::Contrarian;
    throw ConfigError("unknown direction '" + s + "' (expected momentum|contrarian)");
}

// J/K strategy shape: rank on the past J weeks, hold K weeks, split the
// universe into n_groups performance groups.
struct StrategySpec {
    int lookback_j = 1;
    int holding_k = 1;
    int n_groups = 10;
    Direction direction = Direction::Contrarian;
};

inline void validate(const StrategySpec& s) {
    if (s.lookback_j < 1) throw ConfigError("lookback J must be >= 1");
    if (s.holding_k < 1) throw ConfigError("holding K must be >= 1");
    if (s.n_groups < 2) throw ConfigError("n_groups must be >= 2");
}

// Zero-cost long/short weights for one period: weights sum to 0 with unit
// gross per side (sum of |w| = 2), equal within each side.
struct PortfolioWeights {
    std::int64_t period;
    std::vector<std::pair<std::string, double>> weights; // sorted by ticker
};

// Sorts tickers by lookback return ascending (ties broken by ticker) and
// splits them into n_groups nearly equal groups: group 0 holds the worst
// performers, the last group the best. Group sizes differ by at most one,
// assigned by the balanced boundaries floor(g*n/n_groups).
inline std::vector<std::vector<std::string>> rank_universe(
    std::vector<std::pair<std::string, double>> lookback, int n_groups) {
    if (n_groups < 2) throw ConfigError("rank_universe: n_groups must be >= 2");
    const std::size_t n = lookback.size();
    if (n < static_cast<std::size_t>(n_groups))
        throw DataError("rank_universe: need at least " + std::to_string(n_groups) +
                        " tickers, have " + std::to_string(n));
    std::sort(lookback.begin(), lookback.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return a.first < b.first;
    });
    std::vector<std::vector<std::string>> groups(static_cast<std::size_t>(n_groups));
    for (int g = 0; g < n_groups; ++g) {
        std::size_t lo = n * static_cast<std::size_t>(g) / static_cast<std::size_t>(n_groups);
        std::size_t hi = n * static_cast<std::size_t>(g + 1) / static_cast<std::size_t>(n_groups);
        for (std::size_t idx = lo; idx < hi; ++idx)
            groups[static_cast<std::size_t>(g)].push_back(lookback[idx].first);
    }
    return groups;
}

// Momentum buys the best group and shorts the worst; contrarian is the exact
// negation. Equal weights within each side.
inline PortfolioWeights build_portfolio(const std::vector<std::vector<std::string>>& groups,
                                        Direction direction, std::int64_t period) {
    if (groups.size() < 2) throw ConfigError("build_portfolio: need at least 2 groups");
    const auto& losers = groups.front();
    const auto& winners = groups.back();
    if (losers.empty() || winners.empty())
        throw DataError("build_portfolio: empty extreme group");
    double w_win = 1.0 / static_cast<double>(winners.size());
    double w_lose = 1.0 / static_cast<double>(losers.size());
    if (direction == Direction::Contrarian) {
        w_win = -w_win;
        w_lose = -w_lose;
    }
    PortfolioWeights pw;
    pw.period = period;
    for (const auto& t : winners) pw.weights.emplace_back(t, w_win);
    for (const auto& t : losers) pw.weights.emplace_back(t, -w_lose);
    std::sort(pw.weights.begin(), pw.weights.end());
    return pw;
}

// Realized portfolio return sum(w * r) over the weighted tickers.
inline double holding_return(const PortfolioWeights& pw,
                             const std::map<std::string, double>& realized) {
    double total = 0.0;
    for (const auto& [ticker, w] : pw.weights) {
        auto it = realized.find(ticker);
        if (it == realized.end())
            throw DataError("holding_return: no realized return for '" + ticker + "'");
        total += w * it->second;
    }
    return total;
}

// ---------------------------------------------------------------------------
// The regime gate: trade only when the strategy's own forecasted speed of
// adjustment is below the benchmark's.
// ---------------------------------------------------------------------------

enum class WeakFieldMode { Off, WindowMean, PreviousReturn };

inline const char* to_string(WeakFieldMode m) {
    switch (m) {
        case WeakFieldMode::Off: return "off";
        case WeakFieldMode::WindowMean: return "window_mean";
        case WeakFieldMode::PreviousReturn: return "previous_return";
    }
    return "?";
}

inline WeakFieldMode weak_field_from_string(const std::string& s) {
    if (s == "off") return WeakFieldMode::Off;
    if (s == "window_mean") return WeakFieldMode::WindowMean;
    if (s == "previous_return") return WeakFieldMode::PreviousReturn;
    throw ConfigError("unknown weak-field mode '" + s +
                      "' (expected off|window_mean|previous_return)");
}

struct GateConfig {
    int k = 10;
    EstimatorKind kind = EstimatorKind::CurrentDenominator;
    WeakFieldMode weak_field = WeakFieldMode::Off;
};

inline void validate(const GateConfig& g) { validate(MaWindow{g.k}); }

enum class WeekStatus { Executed, SkippedGate, SkippedWarmup, SkippedEstimator };

inline const char* to_string(WeekStatus s) {
    switch (s) {
        case WeekStatus::Executed: return "executed";
        case WeekStatus::SkippedGate: return "skipped_gate";
        case WeekStatus::SkippedWarmup: return "skipped_warmup";
        case WeekStatus::SkippedEstimator: return "skipped_estimator";
    }
    return "?";
}

struct GateDecision {
    std::int64_t period = 0;
    WeekStatus status = WeekStatus::SkippedWarmup;
    std::optional<double> lambda_strategy;
    std::optional<double> lambda_benchmark;
    std::optional<double> rho_hat;
    bool flipped = false;
};

struct GateResult {
    ReturnSeries gated;                 // same periods as the strategy input
    std::vector<GateDecision> decisions;
    std::optional<std::int64_t> first_decidable_period; // end of estimator warmup
};

// Masks a strategy return series week by week. For each period, both the
// strategy's and the benchmark's speeds of adjustment are forecast from
// strictly earlier entries of their own series (window k, the configured
// estimator); the week executes only when lambda_strategy < lambda_benchmark.
// Executed weeks keep the strategy return (negated when the weak-field
// forecast is negative); skipped weeks book exactly 0, warmup weeks too.
inline GateResult apply_gate(const ReturnSeries& strategy, const ReturnSeries& benchmark,
                             const GateConfig& cfg) {
    validate(cfg);
    const std::size_t k = static_cast<std::size_t>(cfg.k);
    GateResult res;
    res.decisions.reserve(strategy.size());
    for (std::size_t t = 0; t < strategy.size(); ++t) {
        const std::int64_t w = strategy.periods[t];
        GateDecision d;
        d.period = w;
        double value = 0.0;
        const std::size_t nb = benchmark.count_before(w);
        if (t < k + 1 || nb < k + 1) {
            d.status = WeekStatus::SkippedWarmup;
        } else {
            if (!res.first_decidable_period) res.first_decidable_period = w;
            try {
                d.lambda_strategy =
                    estimate_lambda(strategy, MaWindow{cfg.k}, cfg.kind, t - 1).value;
                d.lambda_benchmark =
                    estimate_lambda(benchmark, MaWindow{cfg.k}, cfg.kind, nb - 1).value;
                if (*d.lambda_strategy < *d.lambda_benchmark) {
                    d.status = WeekStatus::Executed;
                    value = strategy.values[t];
                    if (cfg.weak_field != WeakFieldMode::Off) {
                        RhoMode mode = cfg.weak_field == WeakFieldMode::WindowMean
                                           ? RhoMode::WindowMean
                                           : RhoMode::PreviousReturn;
                        d.rho_hat = estimate_rho(strategy, MaWindow{cfg.k}, mode, t - 1);
                        if (*d.rho_hat < 0.0) {
                            d.flipped = true;
                            value = -value;
                        }
                    }
                } else {
                    d.status = WeekStatus::SkippedGate;
                }
            } catch (const DegenerateWindowError&) {
                d.status = WeekStatus::SkippedEstimator;
                value = 0.0;
            }
        }
        res.gated.push_back(w, value);
        res.decisions.push_back(d);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Backtests.
// ---------------------------------------------------------------------------

// All return series are weekly excess returns sharing one period index set.
// winner/loser are the equal-weight extreme baskets, long_short the signed
// combination per the configured direction (zero-cost, so already excess).
struct BacktestReport {
    StrategySpec spec;
    std::string benchmark_ticker;
    ReturnSeries winner;
    ReturnSeries loser;
    ReturnSeries long_short;
    ReturnSeries benchmark;
    std::optional<GateConfig> gate;
    std::optional<ReturnSeries> gated;
    std::vector<GateDecision> decisions;                       // gated runs only
    std::vector<std::pair<std::int64_t, std::string>> skipped; // infeasible weeks + reason
    std::vector<PortfolioWeights> cohorts; // formation weights per holding-start week
};

namespace detail {

// Realized holding return of one ticker over week w under the delisting
// rule: enter at the week's first union trading day (or the ticker's first
// close that week if it was halted then), exit at its last close within the
// week; a ticker with no prices at all that week sits in cash (0).
inline double realized_week_return(const PriceTable& prices, const std::string& ticker,
                                   std::int64_t week, Day union_first_day) {
    Day lo = week_monday(week), hi = week_sunday(week);
    auto exit_row = prices.last_close_in(ticker, lo, hi);
    if (!exit_row) return 0.0;
    auto entry_px = prices.close_on(ticker, union_first_day);
    if (!entry_px) {
        auto entry_row = prices.first_close_in(ticker, lo, hi);
        entry_px = entry_row->second; // nonempty: exit_row exists
    }
    return exit_row->second / *entry_px - 1.0;
}

struct Cohort {
    PortfolioWeights weights;          // signed, per configured direction
    std::vector<std::string> winners;  // best lookback group
    std::vector<std::string> losers;   // worst lookback group
};

inline double basket_mean(const std::vector<std::string>& basket,
                          const std::map<std::string, double>& realized) {
    double sum = 0.0;
    for (const auto& t : basket) sum += realized.at(t);
    return sum / static_cast<double>(basket.size());
}

} // namespace detail

// Runs the ungated J/K strategy over every feasible week. For each holding
// week w: the universe is taken at the last trading day of week w-1
// (point-in-time, benchmark excluded), ranked on the return from each
// ticker's first close in week w-J to its last close in week w-1, grouped,
// and the extreme groups held through week w. For K > 1 the K overlapping
// cohorts active in week w are averaged equally, each at its formation
// weights. Weeks without a decidable universe or benchmark data are skipped
// and logged, never zero-filled.
inline BacktestReport run_naive_backtest(const PriceTable& prices,
                                         const MembershipCalendar& membership,
                                         const RiskFreeSeries& rf, const StrategySpec& spec,
                                         const std::string& benchmark_ticker) {
    validate(spec);
    if (!prices.has_ticker(benchmark_ticker))
        throw DataError("benchmark ticker '" + benchmark_ticker + "' not in price table");

    BacktestReport report;
    report.spec = spec;
    report.benchmark_ticker = benchmark_ticker;

    const std::int64_t w_begin = prices.first_week() + spec.lookback_j;
    const std::int64_t w_end = prices.last_week();
    const int K = spec.holding_k;

    // Cohort formed for holding start at week s, keyed by s.
    std::map<std::int64_t, detail::Cohort> cohorts;
    auto try_form = [&](std::int64_t s) -> const detail::Cohort* {
        auto it = cohorts.find(s);
        if (it != cohorts.end()) return &it->second;
        if (s < w_begin) return nullptr;
        auto decision_day = prices.last_trading_day_of_week(s - 1);
        if (!decision_day) return nullptr;
        std::vector<std::pair<std::string, double>> lookback;
        for (const auto& ticker : universe_at(membership, prices, *decision_day)) {
            if (ticker == benchmark_ticker) continue;
            auto entry = prices.first_close_in(ticker, week_monday(s - spec.lookback_j),
                                               week_sunday(s - spec.lookback_j));
            auto exit = prices.last_close_in(ticker, week_monday(s - 1), week_sunday(s - 1));
            if (!entry || !exit) continue;
            lookback.emplace_back(ticker, exit->second / entry->second - 1.0);
        }
        if (lookback.size() < static_cast<std::size_t>(spec.n_groups)) return nullptr;
        auto groups = rank_universe(std::move(lookback), spec.n_groups);
        detail::Cohort c;
        c.losers = groups.front();
        c.winners = groups.back();
        c.weights = build_portfolio(groups, spec.direction, s);
        return &cohorts.emplace(s, std::move(c)).first->second;
    };

    for (std::int64_t w = w_begin; w <= w_end; ++w) {
        auto union_first = prices.first_trading_day_of_week(w);
        if (!union_first) {
            report.skipped.emplace_back(w, "no trading days in week");
            continue;
        }
        std::vector<const detail::Cohort*> active;
        bool all_formed = true;
        for (std::int64_t s = w - K + 1; s <= w; ++s) {
            const detail::Cohort* c = try_form(s);
            if (!c) {
                all_formed = false;
                break;
            }
            active.push_back(c);
        }
        if (!all_formed) {
            report.skipped.emplace_back(w, "cohort not formable (universe or history short)");
            continue;
        }
        auto bench_entry = prices.close_on(benchmark_ticker, *union_first);
        auto bench_exit =
            prices.last_close_in(benchmark_ticker, week_monday(w), week_sunday(w));
        if (!bench_entry || !bench_exit) {
            report.skipped.emplace_back(w, "benchmark price missing");
            continue;
        }
        double rf_w;
        try {
            rf_w = rf.weekly_rate(w);
        } catch (const DataError&) {
            report.skipped.emplace_back(w, "risk-free rate missing");
            continue;
        }

        double winner_sum = 0.0, loser_sum = 0.0, ls_sum = 0.0;
        for (const detail::Cohort* c : active) {
            std::map<std::string, double> realized;
            for (const auto& [ticker, weight] : c->weights.weights) {
                (void)weight;
                realized[ticker] = detail::realized_week_return(prices, ticker, w, *union_first);
            }
            winner_sum += detail::basket_mean(c->winners, realized);
            loser_sum += detail::basket_mean(c->losers, realized);
            ls_sum += holding_return(c->weights, realized);
        }
        const double inv_k = 1.0 / static_cast<double>(K);
        report.winner.push_back(w, winner_sum * inv_k - rf_w);
        report.loser.push_back(w, loser_sum * inv_k - rf_w);
        report.long_short.push_back(w, ls_sum * inv_k);
        report.benchmark.push_back(w, bench_exit->second / *bench_entry - 1.0 - rf_w);
    }
    report.cohorts.reserve(cohorts.size());
    for (const auto& [s, c] : cohorts) {
        (void)s;
        report.cohorts.push_back(c.weights);
    }
    return report;
}

// Runs the naive backtest, then masks its long-short series with the regime
// gate: both speeds of adjustment are forecast from past data only, and the
// strategy trades only in weeks where its own forecast is below the
// benchmark's.
inline BacktestReport run_ssb_backtest(const PriceTable& prices,
                                       const MembershipCalendar& membership,
                                       const RiskFreeSeries& rf, const StrategySpec& spec,
                                       const std::string& benchmark_ticker,
                                       const GateConfig& gate) {
    BacktestReport report = run_naive_backtest(prices, membership, rf, spec, benchmark_ticker);
    GateResult res = apply_gate(report.long_short, report.benchmark, gate);
    report.gate = gate;
    report.gated = std::move(res.gated);
    report.decisions = std::move(res.decisions);
    return report;
}

// ---------------------------------------------------------------------------
// MA-window sweep.
// ---------------------------------------------------------------------------

// One row per window k plus a k=0 naive baseline row. Gated and naive
// statistics are computed over the same evaluation sample: per-k it starts
// where that window's warmup ends; in common-sample mode all rows share the
// largest window's start so columns are comparable across k.
struct SweepRow {
    int k = 0; // 0 marks the naive baseline row
    std::size_t n_eval = 0;
    std::size_t n_executed = 0;
    double gated_mean = 0.0;
    double gated_std = 0.0;
    std::optional<double> gated_sharpe;
    double gated_winning_pct = 0.0;
    double naive_mean = 0.0;
    double naive_std = 0.0;
    std::optional<double> naive_sharpe;
    double naive_winning_pct = 0.0;
};

struct SweepTable {
    std::vector<SweepRow> rows; // baseline first, then ascending k
    std::vector<std::pair<int, std::string>> failures; // k values with no evaluable sample
    bool common_sample = false;
};

namespace detail {

struct SampleStats {
    std::size_t n = 0;
    double mean = 0.0, std = 0.0, winning = 0.0;
    std::optional<double> sharpe;
};

inline SampleStats sample_stats(const std::vector<double>& v) {
    SampleStats s;
    s.n = v.size();
    if (v.empty()) return s;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    std::size_t wins = 0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
        if (x > 0.0) ++wins;
    }
    s.mean = mean;
    s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    s.winning = static_cast<double>(wins) / static_cast<double>(v.size());
    if (s.std > 0.0) s.sharpe = s.mean / s.std;
    return s;
}

} // namespace detail

// Sweeps the gate's MA window over [k_min, k_max] on one naive backtest.
inline SweepTable sweep_ma_windows(const BacktestReport& naive, EstimatorKind kind, int k_min,
                                   int k_max, bool common_sample,
                                   WeakFieldMode weak_field = WeakFieldMode::Off) {
    if (k_min < 2) throw ConfigError("sweep: k_min must be >= 2");
    if (k_max < k_min) throw ConfigError("sweep: k_max must be >= k_min");
    const ReturnSeries& ls = naive.long_short;
    const ReturnSeries& bench = naive.benchmark;

    SweepTable table;
    table.common_sample = common_sample;

    struct PerK {
        int k;
        GateResult res;
        std::size_t eval_start_pos;
    };
    std::vector<PerK> runs;
    std::size_t common_start = 0;
    for (int k = k_min; k <= k_max; ++k) {
        GateResult res = apply_gate(ls, bench, GateConfig{k, kind, weak_field});
        std::size_t start = ls.size(); // no decidable period
        for (std::size_t t = 0; t < res.decisions.size(); ++t) {
            if (res.decisions[t].status != WeekStatus::SkippedWarmup) {
                start = t;
                break;
            }
        }
        if (start == ls.size()) {
            table.failures.emplace_back(k, "window longer than available history");
            continue;
        }
        common_start = std::max(common_start, start);
        runs.push_back(PerK{k, std::move(res), start});
    }

    auto slice = [](const ReturnSeries& s, std::size_t from) {
        return std::vector<double>(s.values.begin() + static_cast<std::ptrdiff_t>(from),
                                   s.values.end());
    };

    // Baseline row: the ungated strategy (full sample, or the shared one).
    std::size_t base_start = common_sample ? common_start : 0;
    if (base_start < ls.size()) {
        auto stats = detail::sample_stats(slice(ls, base_start));
        SweepRow row;
        row.k = 0;
        row.n_eval = stats.n;
        row.n_executed = stats.n;
        row.gated_mean = row.naive_mean = stats.mean;
        row.gated_std = row.naive_std = stats.std;
        row.gated_sharpe = row.naive_sharpe = stats.sharpe;
        row.gated_winning_pct = row.naive_winning_pct = stats.winning;
        table.rows.push_back(row);
    }

    for (const auto& run : runs) {
        std::size_t start = common_sample ? common_start : run.eval_start_pos;
        if (start >= ls.size()) {
            table.failures.emplace_back(run.k, "no evaluable weeks in common sample");
            continue;
        }
        auto g = detail::sample_stats(slice(run.res.gated, start));
        auto nv = detail::sample_stats(slice(ls, start));
        SweepRow row;
        row.k = run.k;
        row.n_eval = g.n;
        row.n_executed = 0;
        for (std::size_t t = start; t < run.res.decisions.size(); ++t)
            if (run.res.decisions[t].status == WeekStatus::Executed) ++row.n_executed;
        row.gated_mean = g.mean;
        row.gated_std = g.std;
        row.gated_sharpe = g.sharpe;
        row.gated_winning_pct = g.winning;
        row.naive_mean = nv.mean;
        row.naive_std = nv.std;
        row.naive_sharpe = nv.sharpe;
        row.naive_winning_pct = nv.winning;
        table.rows.push_back(row);
    }
    return table;
}

// ---------------------------------------------------------------------------
// CSV writers for report artifacts.
// ---------------------------------------------------------------------------

inline void write_decisions_csv(std::ostream& os, const std::vector<GateDecision>& ds) {
    os << "period,status,lambda_strategy,lambda_benchmark,rho_hat,flipped\n";
    auto opt = [](const std::optional<double>& v) {
        return v ? detail::format_double(*v) : std::string();
    };
    for (const auto& d : ds)
        os << d.period << ',' << to_string(d.status) << ',' << opt(d.lambda_strategy) << ','
           << opt(d.lambda_benchmark) << ',' << opt(d.rho_hat) << ',' << (d.flipped ? 1 : 0)
           << '\n';
}

inline void write_sweep_csv(std::ostream& os, const SweepTable& table) {
    os << "k,n_eval,n_executed,gated_mean,gated_std,gated_sharpe,gated_winning_pct,"
          "naive_mean,naive_std,naive_sharpe,naive_winning_pct\n";
    auto opt = [](const std::optional<double>& v) {
        return v ? detail::format_double(*v) : std::string();
    };
    for (const auto& r : table.rows)
        os << r.k << ',' << r.n_eval << ',' << r.n_executed << ','
           << detail::format_double(r.gated_mean) << ',' << detail::format_double(r.gated_std)
           << ',' << opt(r.gated_sharpe) << ',' << detail::format_double(r.gated_winning_pct)
           << ',' << detail::format_double(r.naive_mean) << ','
           << detail::format_double(r.naive_std) << ',' << opt(r.naive_sharpe) << ','
           << detail::format_double(r.naive_winning_pct) << '\n';
}

} // namespace ssb

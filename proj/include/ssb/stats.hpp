#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssb/errors.hpp"
#include "ssb/series.hpp"

namespace ssb {

// Per-period performance summary. std uses the n-1 denominator; skewness and
// kurtosis are the standardized third/fourth central moments with 1/n
// normalization (kurtosis raw, Gaussian -> 3); t_stat tests mean == 0;
// sharpe = mean/std, unannualized. Ratio fields are absent on zero-variance
// input rather than NaN.
struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;
    std::optional<double> skewness;
    std::optional<double> kurtosis;
    std::optional<double> t_stat;
    std::optional<double> sharpe;
    double winning_pct = 0.0;
};

inline SummaryStats summary_stats(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 2)
        throw InsufficientHistoryError("summary_stats: need at least 2 observations, have " +
                                       std::to_string(n));
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    std::size_t wins = 0;
    for (double x : v) {
        double d = x - mean;
        double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        if (x > 0.0) ++wins;
    }
    double var_sample = m2 / static_cast<double>(n - 1);
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);

    SummaryStats s;
    s.n = n;
    s.mean = mean;
    s.std = std::sqrt(var_sample);
    s.winning_pct = static_cast<double>(wins) / static_cast<double>(n);
    if (m2 > 0.0) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.kurtosis = m4 / (m2 * m2);
    }
    if (s.std > 0.0) {
        s.t_stat = mean / (s.std / std::sqrt(static_cast<double>(n)));
        s.sharpe = mean / s.std;
    }
    return s;
}

inline SummaryStats summary_stats(const ReturnSeries& series) {
    return summary_stats(series.values);
}

enum class CumulativeMode { Sum, Compound };

inline CumulativeMode cumulative_mode_from_string(const std::string& s) {
    if (s == "sum") return CumulativeMode::Sum;
    if (s == "compound") return CumulativeMode::Compound;
    throw ConfigError("unknown cumulative mode '" + s + "' (expected sum|compound)");
}

// Running total (Sum) or running product minus one (Compound), keeping the
// input's period indices.
inline ReturnSeries cumulative_returns(const ReturnSeries& series, CumulativeMode mode) {
    if (series.empty()) throw DataError("cumulative_returns: empty series");
    ReturnSeries out;
    double acc = (mode == CumulativeMode::Sum) ? 0.0 : 1.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (mode == CumulativeMode::Sum) {
            acc += series.values[i];
            out.push_back(series.periods[i], acc);
        } else {
            acc *= 1.0 + series.values[i];
            out.push_back(series.periods[i], acc - 1.0);
        }
    }
    return out;
}

inline nlohmann::json to_json(const SummaryStats& s) {
    nlohmann::json j;
    j["n"] = s.n;
    j["mean"] = s.mean;
    j["std"] = s.std;
    j["skewness"] = s.skewness ? nlohmann::json(*s.skewness) : nlohmann::json(nullptr);
    j["kurtosis"] = s.kurtosis ? nlohmann::json(*s.kurtosis) : nlohmann::json(nullptr);
    j["t_stat"] = s.t_stat ? nlohmann::json(*s.t_stat) : nlohmann::json(nullptr);
    j["sharpe"] = s.sharpe ? nlohmann::json(*s.sharpe) : nlohmann::json(nullptr);
    j["winning_pct"] = s.winning_pct;
    return j;
}

} // namespace ssb

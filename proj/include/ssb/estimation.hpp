#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ssb/errors.hpp"
#include "ssb/series.hpp"

namespace ssb {

// Moving-average window length, counted in averaged products: an estimate
// with window k consumes k+1 raw returns (k lag-1 products).
struct MaWindow {
    int k = 2;
};

inline void validate(const MaWindow& w) {
    if (w.k < 2) throw ConfigError("MA window k must be >= 2");
}

// Three flavors of the speed-of-adjustment estimator
//   lambda_hat = 1 - <r_i r_{i-1}>_k / D:
//   CurrentDenominator : D = <r_i^2>_k        (the headline form)
//   LaggedDenominator  : D = <r_{i-1}^2>_k
//   CovarianceBased    : 1 - Cov_k(r_i, r_{i-1}) / Var_k(r_i), each aligned
//                        sub-window demeaned by its own sample mean
enum class EstimatorKind { CurrentDenominator, LaggedDenominator, CovarianceBased };

inline const char* to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::CurrentDenominator: return "current";
        case EstimatorKind::LaggedDenominator: return "lagged";
        case EstimatorKind::CovarianceBased: return "covariance";
    }
    return "?";
}

inline EstimatorKind estimator_kind_from_string(const std::string& s) {
    if (s == "current") return EstimatorKind::CurrentDenominator;
    if (s == "lagged") return EstimatorKind::LaggedDenominator;
    if (s == "covariance") return EstimatorKind::CovarianceBased;
    throw ConfigError("unknown estimator kind '" + s + "' (expected current|lagged|covariance)");
}

// One-step-ahead forecast of the speed of adjustment: computed from returns
// up to and including position i, applying to the following period.
struct LambdaForecast {
    std::int64_t target_period; // period the forecast applies to (next one)
    double value;
    int k;
    EstimatorKind kind;
};

// Mean of the k values ending at position i: (1/k) sum_{j=0..k-1} v[i-j].
inline double moving_average(const std::vector<double>& values, int k, std::size_t i) {
    if (k < 1) throw ConfigError("moving_average: k must be >= 1");
    if (i >= values.size())
        throw InsufficientHistoryError("moving_average: index " + std::to_string(i) +
                                       " out of range (size " + std::to_string(values.size()) + ")");
    if (i + 1 < static_cast<std::size_t>(k))
        throw InsufficientHistoryError("moving_average: need " + std::to_string(k) +
                                       " values, have " + std::to_string(i + 1));
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += values[i - static_cast<std::size_t>(j)];
    return sum / k;
}

// Speed-of-adjustment forecast from the k most recent lag-1 products ending
// at position i (0-based into the series). Uses only entries at positions
// <= i; the forecast targets the period after series.periods[i].
inline LambdaForecast estimate_lambda(const ReturnSeries& series, MaWindow w,
                                      EstimatorKind kind, std::size_t i) {
    validate(w);
    const auto& v = series.values;
    const std::size_t k = static_cast<std::size_t>(w.k);
    if (i >= v.size())
        throw InsufficientHistoryError("estimate_lambda: index out of range");
    if (i < k)
        throw InsufficientHistoryError("estimate_lambda: need " + std::to_string(k + 1) +
                                       " returns, have " + std::to_string(i + 1));
    double value;
    if (kind == EstimatorKind::CovarianceBased) {
        double mean_cur = 0.0, mean_lag = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            mean_cur += v[i - j];
            mean_lag += v[i - j - 1];
        }
        mean_cur /= static_cast<double>(k);
        mean_lag /= static_cast<double>(k);
        double cov = 0.0, var = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            double dc = v[i - j] - mean_cur;
            double dl = v[i - j - 1] - mean_lag;
            cov += dc * dl;
            var += dc * dc;
        }
        if (var == 0.0)
            throw DegenerateWindowError("estimate_lambda: zero-variance window at position " +
                                        std::to_string(i));
        value = 1.0 - cov / var;
    } else {
        double prod = 0.0, den = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            prod += v[i - j] * v[i - j - 1];
            den += (kind == EstimatorKind::CurrentDenominator)
                       ? v[i - j] * v[i - j]
                       : v[i - j - 1] * v[i - j - 1];
        }
        if (den == 0.0)
            throw DegenerateWindowError("estimate_lambda: all-zero window at position " +
                                        std::to_string(i));
        value = 1.0 - prod / den;
    }
    return LambdaForecast{series.periods[i] + 1, value, w.k, kind};
}

// One forecast per feasible position (the first k+1 returns seed the first
// estimate and receive none themselves).
inline std::vector<LambdaForecast> lambda_series(const ReturnSeries& series, MaWindow w,
                                                 EstimatorKind kind) {
    validate(w);
    const std::size_t k = static_cast<std::size_t>(w.k);
    if (series.size() < k + 1)
        throw InsufficientHistoryError("lambda_series: need at least " + std::to_string(k + 1) +
                                       " returns, have " + std::to_string(series.size()));
    std::vector<LambdaForecast> out;
    out.reserve(series.size() - k);
    for (std::size_t i = k; i < series.size(); ++i)
        out.push_back(estimate_lambda(series, w, kind, i));
    return out;
}

// Forecast of the weak-field constant from past data: the window mean or
// simply the latest return.
enum class RhoMode { WindowMean, PreviousReturn };

inline const char* to_string(RhoMode m) {
    return m == RhoMode::WindowMean ? "window_mean" : "previous_return";
}

inline double estimate_rho(const ReturnSeries& series, MaWindow w, RhoMode mode, std::size_t i) {
    if (i >= series.size())
        throw InsufficientHistoryError("estimate_rho: index out of range");
    if (mode == RhoMode::PreviousReturn) return series.values[i];
    validate(w);
    return moving_average(series.values, w.k, i);
}

inline void write_forecasts_csv(std::ostream& os, const std::vector<LambdaForecast>& fs) {
    os << "period,lambda_hat,k,kind\n";
    for (const auto& f : fs)
        os << f.target_period << ',' << detail::format_double(f.value) << ',' << f.k << ','
           << to_string(f.kind) << '\n';
}

} // namespace ssb

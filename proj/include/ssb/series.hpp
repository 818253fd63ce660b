#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ssb/errors.hpp"

namespace ssb {

namespace detail {

// Shortest round-trippable decimal representation of a double. %.17g is
// exact for IEEE binary64; trying shorter widths first keeps files readable.
inline std::string format_double(double x) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, const std::string& what, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
}

inline std::int64_t parse_int(const std::string& s, const std::string& what, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
}

} // namespace detail

// Time-indexed sequence of per-period returns: strictly increasing integer
// period indices (gaps allowed), finite values. The common currency between
// the dynamics, estimation, stats and strategy layers.
struct ReturnSeries {
    std::vector<std::int64_t> periods;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }

    void push_back(std::int64_t period, double value) {
        if (!periods.empty() && period <= periods.back())
            throw DataError("period indices must be strictly increasing (got " +
                            std::to_string(period) + " after " + std::to_string(periods.back()) + ")");
        if (!std::isfinite(value))
            throw DataError("non-finite return value at period " + std::to_string(period));
        periods.push_back(period);
        values.push_back(value);
    }

    static ReturnSeries from_values(const std::vector<double>& vals, std::int64_t start_period = 0) {
        ReturnSeries s;
        s.periods.reserve(vals.size());
        s.values.reserve(vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i)
            s.push_back(start_period + static_cast<std::int64_t>(i), vals[i]);
        return s;
    }

    // Number of entries with period index strictly before `period`.
    std::size_t count_before(std::int64_t period) const {
        std::size_t lo = 0, hi = periods.size();
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (periods[mid] < period) lo = mid + 1; else hi = mid;
        }
        return lo;
    }
};

inline void write_series_csv(std::ostream& os, const ReturnSeries& s) {
    os << "period,value\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        os << s.periods[i] << ',' << detail::format_double(s.values[i]) << '\n';
}

inline void write_series_csv(const std::string& path, const ReturnSeries& s) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open '" + path + "' for writing");
    write_series_csv(os, s);
}

inline ReturnSeries read_series_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("empty return-series file");
    if (detail::strip_cr(line) != "period,value")
        throw DataError("line 1: expected header 'period,value', got '" + detail::strip_cr(line) + "'");
    ReturnSeries s;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw DataError("line " + std::to_string(line_no) + ": expected 2 fields, got " +
                            std::to_string(fields.size()));
        std::int64_t p = detail::parse_int(fields[0], "period", line_no);
        double v = detail::parse_double(fields[1], "value", line_no);
        try {
            s.push_back(p, v);
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return s;
}

inline ReturnSeries read_series_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open '" + path + "'");
    return read_series_csv(is);
}

} // namespace ssb

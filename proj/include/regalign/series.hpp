#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "regalign/error.hpp"

namespace regalign {

enum class Dedupe { reject, average };

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

class TimeSeries {
public:
    TimeSeries(std::vector<double> times, std::vector<double> values)
        : times_(std::move(times)), values_(std::move(values)) {
        validate();
    }

    static TimeSeries from_records(std::vector<std::pair<double, double>> points,
                                   Dedupe policy = Dedupe::average) {
        if (points.empty()) raise(ErrorCode::empty_input, "no records");
        for (auto& [t, v] : points)
            if (!std::isfinite(t) || !std::isfinite(v))
                raise(ErrorCode::non_finite_value, "record contains a non-finite entry");
        std::stable_sort(points.begin(), points.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });

        std::vector<double> times, values;
        times.reserve(points.size());
        values.reserve(points.size());
        std::size_t i = 0;
        while (i < points.size()) {
            std::size_t j = i + 1;
            while (j < points.size() && points[j].first == points[i].first) ++j;
            if (j - i > 1 && policy == Dedupe::reject)
                raise(ErrorCode::duplicate_time,
                      "duplicate time " + std::to_string(points[i].first));
            double sum = 0.0;
            for (std::size_t k = i; k < j; ++k) sum += points[k].second;
            times.push_back(points[i].first);
            values.push_back(sum / static_cast<double>(j - i));
            i = j;
        }
        return TimeSeries(std::move(times), std::move(values));
    }

    std::vector<std::pair<double, double>> to_records() const {
        std::vector<std::pair<double, double>> out(size());
        for (std::size_t i = 0; i < size(); ++i) out[i] = {times_[i], values_[i]};
        return out;
    }

    std::size_t size() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }
    double t_min() const { return times_.front(); }
    double t_max() const { return times_.back(); }
    double v_min() const { return v_min_; }
    double v_max() const { return v_max_; }
    Interval time_range() const { return {t_min(), t_max()}; }
    double time_span() const { return t_max() - t_min(); }
    double value_span() const { return v_max_ - v_min_; }

    double interp(double t) const {
        if (t < t_min() || t > t_max())
            raise(ErrorCode::out_of_range, "interpolation time " + std::to_string(t) +
                                               " outside [" + std::to_string(t_min()) + ", " +
                                               std::to_string(t_max()) + "]");
        auto it = std::lower_bound(times_.begin(), times_.end(), t);
        std::size_t k = static_cast<std::size_t>(it - times_.begin());
        if (k < times_.size() && times_[k] == t) return values_[k];
        double t0 = times_[k - 1], t1 = times_[k];
        double w = (t - t0) / (t1 - t0);
        return values_[k - 1] + w * (values_[k] - values_[k - 1]);
    }

    double value_sd() const {
        double mean = std::accumulate(values_.begin(), values_.end(), 0.0) /
                      static_cast<double>(size());
        double ss = 0.0;
        for (double v : values_) ss += (v - mean) * (v - mean);
        return std::sqrt(ss / static_cast<double>(size() - 1));
    }

private:
    void validate() {
        if (times_.size() != values_.size())
            raise(ErrorCode::invalid_config, "times/values length mismatch");
        if (times_.size() < 2) raise(ErrorCode::empty_input, "series needs at least 2 points");
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (!std::isfinite(times_[i]) || !std::isfinite(values_[i]))
                raise(ErrorCode::non_finite_value, "non-finite entry at index " + std::to_string(i));
            if (i > 0 && times_[i] <= times_[i - 1])
                raise(ErrorCode::duplicate_time,
                      "times not strictly increasing at index " + std::to_string(i));
        }
        auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
        v_min_ = *lo;
        v_max_ = *hi;
    }

    std::vector<double> times_;
    std::vector<double> values_;
    double v_min_ = 0.0;
    double v_max_ = 0.0;
};

inline Interval common_time_range(const TimeSeries& a, const TimeSeries& b) {
    Interval r{std::max(a.t_min(), b.t_min()), std::min(a.t_max(), b.t_max())};
    if (r.lo > r.hi)
        raise(ErrorCode::no_overlap, "time ranges [" + std::to_string(a.t_min()) + ", " +
                                         std::to_string(a.t_max()) + "] and [" +
                                         std::to_string(b.t_min()) + ", " +
                                         std::to_string(b.t_max()) + "] are disjoint");
    return r;
}

// Two numeric columns "time,value"; one optional header line; blank lines skipped.
inline TimeSeries load_csv(const std::string& path, Dedupe policy = Dedupe::average) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io_error, "cannot open " + path);
    std::vector<std::pair<double, double>> points;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t start = line.find_first_not_of(" \t\r\n");
        if (start == std::string::npos) continue;
        const char* s = line.c_str() + start;
        char* end = nullptr;
        double t = std::strtod(s, &end);
        bool ok = end != s;
        if (ok) {
            while (*end == ' ' || *end == '\t') ++end;
            ok = *end == ',';
        }
        double v = 0.0;
        if (ok) {
            const char* vs = end + 1;
            char* vend = nullptr;
            v = std::strtod(vs, &vend);
            ok = vend != vs;
            if (ok) {
                while (*vend == ' ' || *vend == '\t' || *vend == '\r') ++vend;
                ok = *vend == '\0';
            }
        }
        if (!ok) {
            if (lineno == 1 && points.empty()) continue;  // header
            raise(ErrorCode::parse_error, path + ":" + std::to_string(lineno) +
                                              ": cannot parse '" + line + "'");
        }
        points.emplace_back(t, v);
    }
    if (points.empty()) raise(ErrorCode::empty_input, path + " has no data rows");
    return TimeSeries::from_records(std::move(points), policy);
}

inline void save_csv(const TimeSeries& ts, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::io_error, "cannot write " + path);
    out << "time,value\n";
    char buf[64];
    for (std::size_t i = 0; i < ts.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", ts.times()[i], ts.values()[i]);
        out << buf;
    }
}

}  // namespace regalign

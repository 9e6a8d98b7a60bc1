#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "regalign/error.hpp"
#include "regalign/series.hpp"
#include "regalign/warp.hpp"

namespace regalign {

enum class LandmarkKind { peak, valley };

inline std::string landmark_kind_name(LandmarkKind k) {
    return k == LandmarkKind::peak ? "peak" : "valley";
}

struct Landmark {
    double time = 0.0;
    double value = 0.0;
    LandmarkKind kind = LandmarkKind::peak;
    double prominence = 0.0;
    std::size_t index = 0;  // position in the source series
};

namespace detail {

// Topographic prominence: climb down from the extremum on each side until a
// strictly higher point (or the series edge); the prominence is the drop to
// the higher of the two side minima. Plateaus are represented by their left edge.
inline void detect_peaks(const std::vector<double>& v, LandmarkKind kind, double threshold,
                         const TimeSeries& ts, std::vector<Landmark>& out) {
    std::size_t n = v.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (v[i] <= v[i - 1]) {
            ++i;
            continue;
        }
        std::size_t r = i;
        while (r + 1 < n && v[r + 1] == v[i]) ++r;
        if (r + 1 >= n || v[r + 1] > v[i]) {
            i = r + 1;
            continue;
        }
        double left_min = v[i];
        for (std::size_t j = i; j-- > 0;) {
            if (v[j] > v[i]) break;
            left_min = std::min(left_min, v[j]);
        }
        double right_min = v[i];
        for (std::size_t j = r + 1; j < n; ++j) {
            if (v[j] > v[i]) break;
            right_min = std::min(right_min, v[j]);
        }
        double prom = v[i] - std::max(left_min, right_min);
        if (prom >= threshold && prom > 0.0)
            out.push_back({ts.times()[i], ts.values()[i], kind, prom, i});
        i = r + 1;
    }
}

}  // namespace detail

inline std::vector<Landmark> detect(const TimeSeries& ts, double prominence_frac = 0.05) {
    if (!(prominence_frac > 0.0) || prominence_frac > 1.0)
        raise(ErrorCode::invalid_config, "prominence fraction must be in (0, 1]");
    double threshold = prominence_frac * ts.value_span();
    std::vector<Landmark> out;
    detail::detect_peaks(ts.values(), LandmarkKind::peak, threshold, ts, out);
    std::vector<double> neg(ts.values().size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -ts.values()[i];
    detail::detect_peaks(neg, LandmarkKind::valley, threshold, ts, out);
    std::sort(out.begin(), out.end(),
              [](const Landmark& a, const Landmark& b) { return a.time < b.time; });
    return out;
}

struct MatchParams {
    double sigma_t = 1.0;
    double sigma_v = 1.0;
    // score times are taken relative to these origins so a global offset
    // between the series does not drown the shape signal
    double t0_from2 = 0.0;
    double t0_from1 = 0.0;

    void validate() const {
        if (!(sigma_t > 0.0) || !(sigma_v > 0.0))
            raise(ErrorCode::invalid_config, "match sigmas must be positive");
    }
};

struct LandmarkMatch {
    std::vector<std::pair<double, double>> pairs;  // (s in data2, t in data1)
    double score = 0.0;
};

inline double match_score(const Landmark& l2, const Landmark& l1, const MatchParams& p) {
    double dv = std::abs(l1.value - l2.value) / p.sigma_v;
    double dt = std::abs((l1.time - p.t0_from1) - (l2.time - p.t0_from2)) / p.sigma_t;
    return std::exp(-dv - dt);
}

// Maximum-score order-preserving matching; skipping a landmark costs nothing,
// cross-kind pairs are forbidden. Deterministic tie-break: match > skip-from2
// > skip-from1 when scores are equal.
inline LandmarkMatch match(std::span<const Landmark> from2, std::span<const Landmark> from1,
                           const MatchParams& params) {
    params.validate();
    std::size_t m = from2.size(), n = from1.size();
    std::vector<double> M((m + 1) * (n + 1), 0.0);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return M[i * (n + 1) + j]; };
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            double best = std::max(at(i - 1, j), at(i, j - 1));
            if (from2[i - 1].kind == from1[j - 1].kind) {
                double s = at(i - 1, j - 1) + match_score(from2[i - 1], from1[j - 1], params);
                best = std::max(best, s);
            }
            at(i, j) = best;
        }
    }
    LandmarkMatch out;
    out.score = at(m, n);
    std::size_t i = m, j = n;
    while (i > 0 && j > 0) {
        if (from2[i - 1].kind == from1[j - 1].kind &&
            at(i, j) == at(i - 1, j - 1) + match_score(from2[i - 1], from1[j - 1], params)) {
            out.pairs.emplace_back(from2[i - 1].time, from1[j - 1].time);
            --i;
            --j;
        } else if (at(i, j) == at(i - 1, j)) {
            --i;
        } else {
            --j;
        }
    }
    std::reverse(out.pairs.begin(), out.pairs.end());
    return out;
}

// Sigma rule mirrors the bandwidth percentages: a tenth of the reference
// series' time span and of the combined value span.
inline LandmarkMatch match_series(const TimeSeries& data2, const TimeSeries& data1,
                                  double prominence_frac = 0.05) {
    auto l2 = detect(data2, prominence_frac);
    auto l1 = detect(data1, prominence_frac);
    if (l2.empty() || l1.empty()) return {};
    MatchParams p;
    p.sigma_t = data1.time_span() / 10.0;
    p.sigma_v = (std::max(data1.v_max(), data2.v_max()) -
                 std::min(data1.v_min(), data2.v_min())) /
                10.0;
    p.t0_from2 = data2.t_min();
    p.t0_from1 = data1.t_min();
    return match(l2, l1, p);
}

inline LinearSplineWarp initial_warp(const LandmarkMatch& m, double c, double d,
                                     std::size_t knot_count,
                                     double margin = default_monotone_margin) {
    if (m.pairs.empty()) return LinearSplineWarp::identity(c, d, knot_count, margin);
    std::vector<std::pair<double, double>> samples = m.pairs;
    if (m.pairs.size() < 2) {
        std::vector<double> shifts;
        shifts.reserve(m.pairs.size());
        for (auto [s, t] : m.pairs) shifts.push_back(t - s);
        std::sort(shifts.begin(), shifts.end());
        double median = shifts[shifts.size() / 2];
        if (shifts.size() % 2 == 0)
            median = 0.5 * (shifts[shifts.size() / 2 - 1] + shifts[shifts.size() / 2]);
        samples.emplace_back(c, c + median);
        samples.emplace_back(d, d + median);
    }
    return LinearSplineWarp::fit_monotone(c, d, knot_count, samples, margin);
}

}  // namespace regalign

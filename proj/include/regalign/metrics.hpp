#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "regalign/error.hpp"
#include "regalign/numeric.hpp"
#include "regalign/series.hpp"

namespace regalign {

inline double simpson(std::span<const double> values, double spacing) {
    if (values.size() < 3 || values.size() % 2 == 0)
        raise(ErrorCode::even_point_count,
              "composite rule needs an odd number of points (>= 3), got " +
                  std::to_string(values.size()));
    if (!(spacing > 0.0)) raise(ErrorCode::invalid_config, "spacing must be positive");
    Compensated acc;
    acc.add(values.front());
    acc.add(values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i)
        acc.add((i % 2 == 1 ? 4.0 : 2.0) * values[i]);
    return acc.value() * spacing / 3.0;
}

inline double simpson(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size())
        raise(ErrorCode::invalid_config, "times/values length mismatch");
    if (times.size() < 3 || times.size() % 2 == 0)
        raise(ErrorCode::even_point_count,
              "composite rule needs an odd number of points (>= 3), got " +
                  std::to_string(times.size()));
    double h = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(h > 0.0)) raise(ErrorCode::invalid_config, "grid must be increasing");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (std::abs(times[i] - times[i - 1] - h) > 1e-6 * h)
            raise(ErrorCode::non_uniform_grid,
                  "grid spacing deviates at index " + std::to_string(i));
    return simpson(values, h);
}

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

// Mean over runs of integral((estimate - g0)^2) / integral(g0^2), both by the
// composite rule on the shared grid.
inline double normalized_imse(const std::vector<std::vector<double>>& estimates,
                              std::span<const double> g0, double spacing) {
    if (estimates.empty()) raise(ErrorCode::empty_input, "need at least one run");
    std::vector<double> sq(g0.size());
    for (std::size_t i = 0; i < g0.size(); ++i) sq[i] = g0[i] * g0[i];
    double norm = simpson(sq, spacing);
    if (norm == 0.0) raise(ErrorCode::zero_norm, "true warp has zero squared norm");
    Compensated acc;
    for (const auto& est : estimates) {
        if (est.size() != g0.size())
            raise(ErrorCode::invalid_config, "estimate grid length mismatch");
        for (std::size_t i = 0; i < g0.size(); ++i) {
            double d = est[i] - g0[i];
            sq[i] = d * d;
        }
        acc.add(simpson(sq, spacing) / norm);
    }
    return acc.value() / static_cast<double>(estimates.size());
}

// Mean squared gap between the two linearly interpolated curves on a uniform
// grid over the common time range.
inline double mean_squared_distance(const TimeSeries& a, const TimeSeries& b,
                                    std::size_t grid_size = 1000) {
    if (grid_size < 2) raise(ErrorCode::invalid_config, "grid size must be >= 2");
    Interval r = common_time_range(a, b);
    Compensated acc;
    for (std::size_t k = 0; k < grid_size; ++k) {
        double t = r.lo + (r.hi - r.lo) * static_cast<double>(k) /
                              static_cast<double>(grid_size - 1);
        double d = a.interp(t) - b.interp(t);
        acc.add(d * d);
    }
    return acc.value() / static_cast<double>(grid_size);
}

struct StudySummary {
    std::vector<double> grid;
    std::vector<double> bias;
    std::vector<double> sd;   // sample convention (S-1)
    std::vector<double> mse;  // population mean of squared errors
    double normalized_imse = 0.0;
    std::size_t runs = 0;
    std::size_t failures = 0;
};

inline StudySummary summarize_runs(std::vector<double> grid,
                                   const std::vector<std::vector<double>>& estimates,
                                   std::span<const double> g0) {
    if (estimates.empty()) raise(ErrorCode::empty_input, "need at least one successful run");
    std::size_t G = grid.size();
    auto S = static_cast<double>(estimates.size());
    StudySummary out;
    out.runs = estimates.size();
    out.grid = std::move(grid);
    out.bias.resize(G);
    out.sd.resize(G);
    out.mse.resize(G);
    for (std::size_t i = 0; i < G; ++i) {
        Compensated mean_acc;
        for (const auto& est : estimates) mean_acc.add(est[i]);
        double mean = mean_acc.value() / S;
        Compensated var_acc, mse_acc;
        for (const auto& est : estimates) {
            double dm = est[i] - mean;
            var_acc.add(dm * dm);
            double de = est[i] - g0[i];
            mse_acc.add(de * de);
        }
        out.bias[i] = mean - g0[i];
        out.sd[i] = estimates.size() > 1 ? std::sqrt(var_acc.value() / (S - 1.0)) : 0.0;
        out.mse[i] = mse_acc.value() / S;
    }
    double spacing = (out.grid.back() - out.grid.front()) / static_cast<double>(G - 1);
    out.normalized_imse = normalized_imse(estimates, g0, spacing);
    return out;
}

}  // namespace regalign

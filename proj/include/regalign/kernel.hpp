#pragma once

#include <cmath>
#include <string>

#include "regalign/error.hpp"
#include "regalign/series.hpp"

namespace regalign {

enum class Kernel { gaussian, epanechnikov, triangular, uniform, biweight };

inline constexpr double inv_sqrt_2pi = 0.3989422804014327;

inline double kernel_eval(Kernel k, double u) {
    switch (k) {
        case Kernel::gaussian:
            return inv_sqrt_2pi * std::exp(-0.5 * u * u);
        case Kernel::epanechnikov:
            return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
        case Kernel::triangular:
            return std::abs(u) <= 1.0 ? 1.0 - std::abs(u) : 0.0;
        case Kernel::uniform:
            return std::abs(u) <= 1.0 ? 0.5 : 0.0;
        case Kernel::biweight: {
            if (std::abs(u) > 1.0) return 0.0;
            double w = 1.0 - u * u;
            return (15.0 / 16.0) * w * w;
        }
    }
    return 0.0;
}

inline bool kernel_differentiable(Kernel k) {
    return k == Kernel::gaussian || k == Kernel::epanechnikov || k == Kernel::biweight;
}

inline bool kernel_compact_support(Kernel k) { return k != Kernel::gaussian; }

inline double kernel_deriv(Kernel k, double u) {
    switch (k) {
        case Kernel::gaussian:
            return -u * inv_sqrt_2pi * std::exp(-0.5 * u * u);
        case Kernel::epanechnikov:
            return std::abs(u) < 1.0 ? -1.5 * u : 0.0;
        case Kernel::biweight:
            return std::abs(u) < 1.0 ? -3.75 * u * (1.0 - u * u) : 0.0;
        case Kernel::triangular:
        case Kernel::uniform:
            raise(ErrorCode::non_differentiable_kernel,
                  "kernel has no derivative usable for gradients");
    }
    return 0.0;
}

inline double scaled_eval(Kernel k, double h, double u) {
    if (!(h > 0.0) || !std::isfinite(h))
        raise(ErrorCode::non_positive_bandwidth, "bandwidth must be positive");
    return kernel_eval(k, u / h) / h;
}

inline Kernel kernel_from_name(const std::string& name) {
    if (name == "gaussian") return Kernel::gaussian;
    if (name == "epanechnikov") return Kernel::epanechnikov;
    if (name == "triangular") return Kernel::triangular;
    if (name == "uniform") return Kernel::uniform;
    if (name == "biweight") return Kernel::biweight;
    raise(ErrorCode::invalid_config, "unknown kernel '" + name + "'");
}

inline std::string kernel_name(Kernel k) {
    switch (k) {
        case Kernel::gaussian: return "gaussian";
        case Kernel::epanechnikov: return "epanechnikov";
        case Kernel::triangular: return "triangular";
        case Kernel::uniform: return "uniform";
        case Kernel::biweight: return "biweight";
    }
    return "?";
}

struct Bandwidths {
    double h1 = 0.0;
    double h2 = 0.0;

    void validate() const {
        if (!(h1 > 0.0) || !std::isfinite(h1) || !(h2 > 0.0) || !std::isfinite(h2))
            raise(ErrorCode::non_positive_bandwidth, "bandwidths must be positive and finite");
    }
};

// h1: 5% of the reference (first) series' time span; h2: 10% of the combined value span.
inline Bandwidths default_bandwidths(const TimeSeries& data1, const TimeSeries& data2) {
    double tspan = data1.time_span();
    double vlo = std::min(data1.v_min(), data2.v_min());
    double vhi = std::max(data1.v_max(), data2.v_max());
    if (tspan <= 0.0) raise(ErrorCode::degenerate_range, "reference series has zero time span");
    if (vhi - vlo <= 0.0) raise(ErrorCode::degenerate_range, "combined value range is zero");
    return {0.05 * tspan, 0.10 * (vhi - vlo)};
}

}  // namespace regalign

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "regalign/error.hpp"

namespace regalign {

inline constexpr double default_monotone_margin = 1e-3;

// Continuous piecewise-linear g on equidistant knots over [c,d], with strictly
// increasing knot values: every increment is at least margin * spacing.
class LinearSplineWarp {
public:
    LinearSplineWarp(double c, double d, std::vector<double> knot_values,
                     double margin = default_monotone_margin)
        : c_(c), d_(d), values_(std::move(knot_values)), margin_(margin) {
        if (!(d_ > c_) || !std::isfinite(c_) || !std::isfinite(d_))
            raise(ErrorCode::invalid_config, "warp domain must be a finite interval");
        if (values_.size() < 2) raise(ErrorCode::invalid_config, "warp needs at least 2 knots");
        if (!(margin_ > 0.0)) raise(ErrorCode::invalid_config, "monotone margin must be positive");
        for (double v : values_)
            if (!std::isfinite(v)) raise(ErrorCode::non_finite_value, "non-finite knot value");
        double floor = increment_floor();
        double scale = std::max({std::abs(values_.front()), std::abs(values_.back()), d_ - c_});
        double slack = 1e-9 * floor + 64.0 * std::numeric_limits<double>::epsilon() * scale;
        for (std::size_t k = 1; k < values_.size(); ++k)
            if (values_[k] - values_[k - 1] < floor - slack)
                raise(ErrorCode::invalid_config,
                      "knot values violate the strict-monotonicity margin at index " +
                          std::to_string(k));
    }

    static LinearSplineWarp identity(double c, double d, std::size_t knot_count,
                                     double margin = default_monotone_margin) {
        std::vector<double> v(knot_count);
        for (std::size_t k = 0; k < knot_count; ++k)
            v[k] = c + (d - c) * static_cast<double>(k) / static_cast<double>(knot_count - 1);
        return LinearSplineWarp(c, d, std::move(v), margin);
    }

    // Raise violating increments to the margin floor, then shift back to the
    // input mean. Always yields a valid member of the class.
    static LinearSplineWarp repaired(double c, double d, std::vector<double> knot_values,
                                     double margin = default_monotone_margin) {
        if (knot_values.size() < 2) raise(ErrorCode::invalid_config, "warp needs at least 2 knots");
        double mean_in = std::accumulate(knot_values.begin(), knot_values.end(), 0.0) /
                         static_cast<double>(knot_values.size());
        double floor = margin * (d - c) / static_cast<double>(knot_values.size() - 1);
        for (std::size_t k = 1; k < knot_values.size(); ++k)
            knot_values[k] = std::max(knot_values[k], knot_values[k - 1] + floor);
        double mean_out = std::accumulate(knot_values.begin(), knot_values.end(), 0.0) /
                          static_cast<double>(knot_values.size());
        double shift = mean_in - mean_out;
        for (double& v : knot_values) v += shift;
        return LinearSplineWarp(c, d, std::move(knot_values), margin);
    }

    // Least-squares fit of knot values to samples (s -> target), working on
    // the deviation from the identity warp. When samples do not pin every
    // knot, the leftover freedom is spent minimizing the deviation's second
    // differences, so unconstrained knots interpolate between constrained
    // ones instead of snapping anywhere. Followed by monotone repair.
    static LinearSplineWarp fit_monotone(double c, double d, std::size_t knot_count,
                                         std::span<const std::pair<double, double>> samples,
                                         double margin = default_monotone_margin) {
        if (samples.empty()) raise(ErrorCode::empty_input, "fit_monotone needs at least 1 sample");
        LinearSplineWarp base = identity(c, d, knot_count, margin);
        auto K = static_cast<Eigen::Index>(knot_count);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(samples.size()), K);
        Eigen::VectorXd r(static_cast<Eigen::Index>(samples.size()));
        for (std::size_t i = 0; i < samples.size(); ++i) {
            auto [s, target] = samples[i];
            auto [k, theta] = base.segment(s);
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = 1.0 - theta;
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k + 1)) = theta;
            r(static_cast<Eigen::Index>(i)) = target - base(s);
        }
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
        Eigen::VectorXd x = cod.solve(r);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        Eigen::MatrixXd Z = lu.kernel();
        if (lu.rank() < K && Z.cols() > 0 && K > 2) {
            Eigen::MatrixXd D2 = Eigen::MatrixXd::Zero(K - 2, K);
            for (Eigen::Index i = 0; i < K - 2; ++i) {
                D2(i, i) = 1.0;
                D2(i, i + 1) = -2.0;
                D2(i, i + 2) = 1.0;
            }
            Eigen::VectorXd y =
                (D2 * Z).colPivHouseholderQr().solve(-(D2 * x));
            x += Z * y;
        }
        std::vector<double> v(knot_count);
        for (std::size_t k = 0; k < knot_count; ++k)
            v[k] = base.values()[k] + x(static_cast<Eigen::Index>(k));
        return repaired(c, d, std::move(v), margin);
    }

    double domain_lo() const { return c_; }
    double domain_hi() const { return d_; }
    std::size_t knot_count() const { return values_.size(); }
    double spacing() const { return (d_ - c_) / static_cast<double>(values_.size() - 1); }
    double knot(std::size_t k) const { return c_ + spacing() * static_cast<double>(k); }
    const std::vector<double>& values() const { return values_; }
    double margin() const { return margin_; }
    double increment_floor() const { return margin_ * spacing(); }

    double min_increment() const {
        double m = values_[1] - values_[0];
        for (std::size_t k = 2; k < values_.size(); ++k)
            m = std::min(m, values_[k] - values_[k - 1]);
        return m;
    }

    // Bracketing segment index k in [0, K-2] and position theta in [0,1]:
    // g(s) = (1-theta)*v[k] + theta*v[k+1].
    std::pair<std::size_t, double> segment(double s) const {
        double tol = 1e-9 * (d_ - c_);
        if (s < c_ - tol || s > d_ + tol)
            raise(ErrorCode::out_of_domain, "time " + std::to_string(s) + " outside warp domain [" +
                                                std::to_string(c_) + ", " + std::to_string(d_) + "]");
        s = std::clamp(s, c_, d_);
        double h = spacing();
        auto k = static_cast<std::size_t>((s - c_) / h);
        k = std::min(k, values_.size() - 2);
        double theta = (s - (c_ + h * static_cast<double>(k))) / h;
        return {k, std::clamp(theta, 0.0, 1.0)};
    }

    double operator()(double s) const {
        auto [k, theta] = segment(s);
        return (1.0 - theta) * values_[k] + theta * values_[k + 1];
    }

    // Hat-function coordinates: nonnegative, sum to 1, at most two nonzero.
    std::vector<double> basis_weights(double s) const {
        auto [k, theta] = segment(s);
        std::vector<double> w(values_.size(), 0.0);
        w[k] = 1.0 - theta;
        w[k + 1] = theta;
        return w;
    }

    double image_lo() const { return values_.front(); }
    double image_hi() const { return values_.back(); }

    LinearSplineWarp with_values(std::vector<double> knot_values) const {
        return LinearSplineWarp(c_, d_, std::move(knot_values), margin_);
    }

    nlohmann::json to_json() const {
        std::vector<double> knots(values_.size());
        for (std::size_t k = 0; k < values_.size(); ++k) knots[k] = knot(k);
        return nlohmann::json{{"domain", {c_, d_}}, {"knots", knots}, {"values", values_}};
    }

    static LinearSplineWarp from_json(const nlohmann::json& j,
                                      double margin = default_monotone_margin) {
        if (!j.contains("domain") || !j.contains("values"))
            raise(ErrorCode::parse_error, "warp JSON needs 'domain' and 'values'");
        auto dom = j.at("domain").get<std::vector<double>>();
        auto values = j.at("values").get<std::vector<double>>();
        if (dom.size() != 2) raise(ErrorCode::parse_error, "warp JSON domain must be [c, d]");
        if (j.contains("knots")) {
            auto knots = j.at("knots").get<std::vector<double>>();
            if (knots.size() != values.size())
                raise(ErrorCode::parse_error, "warp JSON knots/values length mismatch");
            double h = (dom[1] - dom[0]) / static_cast<double>(values.size() - 1);
            for (std::size_t k = 0; k < knots.size(); ++k)
                if (std::abs(knots[k] - (dom[0] + h * static_cast<double>(k))) >
                    1e-9 * (dom[1] - dom[0]))
                    raise(ErrorCode::parse_error, "warp JSON knots are not equidistant over domain");
        }
        return LinearSplineWarp(dom[0], dom[1], std::move(values), margin);
    }

private:
    double c_;
    double d_;
    std::vector<double> values_;
    double margin_;
};

}  // namespace regalign

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "regalign/warp.hpp"

using namespace regalign;

namespace {

void expect_error(ErrorCode code, const std::function<void()>& f) {
    try {
        f();
        FAIL() << "expected " << error_code_name(code) << ", nothing was thrown";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

TEST(Warp, IdentityEvaluatesToInput) {
    LinearSplineWarp w = LinearSplineWarp::identity(0.0, 10.0, 6);
    EXPECT_EQ(w.knot_count(), 6u);
    EXPECT_DOUBLE_EQ(w.spacing(), 2.0);
    for (std::size_t k = 0; k < 6; ++k) {
        EXPECT_DOUBLE_EQ(w.knot(k), 2.0 * static_cast<double>(k));
        EXPECT_DOUBLE_EQ(w.values()[k], w.knot(k));
    }
    for (double s : {0.0, 0.3, 4.999, 7.25, 10.0}) EXPECT_NEAR(w(s), s, 1e-12);
    EXPECT_DOUBLE_EQ(w.image_lo(), 0.0);
    EXPECT_DOUBLE_EQ(w.image_hi(), 10.0);
}

TEST(Warp, ConstructorRejectsBadInput) {
    expect_error(ErrorCode::invalid_config, [] { LinearSplineWarp(1.0, 1.0, {0.0, 1.0}); });
    expect_error(ErrorCode::invalid_config, [] { LinearSplineWarp(2.0, 1.0, {0.0, 1.0}); });
    expect_error(ErrorCode::invalid_config, [] { LinearSplineWarp(0.0, 1.0, {0.5}); });
    expect_error(ErrorCode::invalid_config, [] { LinearSplineWarp(0.0, 1.0, {0.0, 1.0}, 0.0); });
    expect_error(ErrorCode::non_finite_value, [] {
        LinearSplineWarp(0.0, 1.0, {0.0, std::numeric_limits<double>::quiet_NaN()});
    });
    // decreasing knot values
    expect_error(ErrorCode::invalid_config, [] { LinearSplineWarp(0.0, 1.0, {0.0, 1.0, 0.5}); });
    // increment below the margin floor (floor = margin * spacing = 1e-3)
    expect_error(ErrorCode::invalid_config, [] { LinearSplineWarp(0.0, 1.0, {0.0, 0.0005}); });
    // an increment exactly at the floor is accepted
    EXPECT_NO_THROW(LinearSplineWarp(0.0, 1.0, {0.0, 0.001}));
}

TEST(Warp, RepairedRestoresMonotonicityAndMean) {
    std::vector<double> raw{0.0, -1.0, 5.0, 4.0, 10.0};
    double mean_in = mean_of(raw);
    LinearSplineWarp w = LinearSplineWarp::repaired(0.0, 10.0, raw);
    EXPECT_GE(w.min_increment(), w.increment_floor() * (1.0 - 1e-9));
    EXPECT_NEAR(mean_of(w.values()), mean_in, 1e-12);
}

TEST(Warp, RepairedLeavesValidInputAlone) {
    std::vector<double> vals{0.0, 2.0, 3.5, 7.0, 10.0};
    LinearSplineWarp w = LinearSplineWarp::repaired(0.0, 10.0, vals);
    for (std::size_t k = 0; k < vals.size(); ++k) EXPECT_EQ(w.values()[k], vals[k]);
}

TEST(Warp, RepairedStressAlwaysYieldsValidWarp) {
    std::mt19937 gen(12345);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t K = 2 + static_cast<std::size_t>(gen() % 15);
        std::vector<double> vals(K);
        for (double& v : vals) v = u(gen);
        LinearSplineWarp w = LinearSplineWarp::repaired(-3.0, 17.0, vals);
        EXPECT_GT(w.min_increment(), 0.0);
        EXPECT_GE(w.min_increment(), w.increment_floor() * (1.0 - 1e-9));
    }
}

TEST(Warp, FitMonotoneRecoversMemberOfClass) {
    LinearSplineWarp target(0.0, 10.0, {0.0, 1.5, 4.0, 5.0, 8.0, 10.0});
    std::vector<std::pair<double, double>> samples;
    for (int i = 0; i <= 24; ++i) {
        double s = 10.0 * static_cast<double>(i) / 24.0;
        samples.emplace_back(s, target(s));
    }
    LinearSplineWarp fit = LinearSplineWarp::fit_monotone(0.0, 10.0, 6, samples);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(fit.values()[k], target.values()[k], 1e-9);
}

TEST(Warp, FitMonotoneInterpolatesUnconstrainedKnots) {
    // only the endpoints are pinned (shift by 5); interior knots should follow
    // the same shift instead of snapping to arbitrary values
    std::vector<std::pair<double, double>> samples{{0.0, 5.0}, {10.0, 15.0}};
    LinearSplineWarp fit = LinearSplineWarp::fit_monotone(0.0, 10.0, 5, samples);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(fit.values()[k], fit.knot(k) + 5.0, 1e-9);
}

TEST(Warp, FitMonotoneRepairsConflictingSamples) {
    // targets decrease, which no member of the class can reproduce
    std::vector<std::pair<double, double>> samples{{0.0, 4.0}, {5.0, 2.0}, {10.0, 0.0}};
    LinearSplineWarp fit = LinearSplineWarp::fit_monotone(0.0, 10.0, 5, samples);
    EXPECT_GT(fit.min_increment(), 0.0);
}

TEST(Warp, FitMonotoneNeedsSamples) {
    expect_error(ErrorCode::empty_input, [] { LinearSplineWarp::fit_monotone(0.0, 1.0, 4, {}); });
}

TEST(Warp, SegmentBracketsAndClamps) {
    LinearSplineWarp w = LinearSplineWarp::identity(0.0, 10.0, 6);
    auto [k0, th0] = w.segment(0.0);
    EXPECT_EQ(k0, 0u);
    EXPECT_DOUBLE_EQ(th0, 0.0);
    auto [k1, th1] = w.segment(3.0);
    EXPECT_EQ(k1, 1u);
    EXPECT_DOUBLE_EQ(th1, 0.5);
    auto [k2, th2] = w.segment(10.0);
    EXPECT_EQ(k2, 4u);  // top point belongs to the last segment
    EXPECT_DOUBLE_EQ(th2, 1.0);
    // within the relative tolerance the input is clamped, beyond it raises
    EXPECT_NO_THROW(w.segment(-1e-10));
    EXPECT_NO_THROW(w.segment(10.0 + 1e-10));
    expect_error(ErrorCode::out_of_domain, [&] { w.segment(-0.1); });
    expect_error(ErrorCode::out_of_domain, [&] { w(10.1); });
}

TEST(Warp, BasisWeightsFormPartitionOfUnity) {
    LinearSplineWarp w(0.0, 8.0, {1.0, 2.0, 6.0, 6.5, 9.0});
    for (double s : {0.0, 1.7, 4.0, 5.31, 8.0}) {
        std::vector<double> bw = w.basis_weights(s);
        ASSERT_EQ(bw.size(), w.knot_count());
        double sum = 0.0, recon = 0.0;
        int nonzero = 0;
        for (std::size_t k = 0; k < bw.size(); ++k) {
            EXPECT_GE(bw[k], 0.0);
            sum += bw[k];
            recon += bw[k] * w.values()[k];
            if (bw[k] != 0.0) ++nonzero;
        }
        EXPECT_NEAR(sum, 1.0, 1e-15);
        EXPECT_LE(nonzero, 2);
        EXPECT_NEAR(recon, w(s), 1e-12);
    }
}

TEST(Warp, WithValuesKeepsDomainAndValidates) {
    LinearSplineWarp w = LinearSplineWarp::identity(2.0, 6.0, 3);
    LinearSplineWarp v = w.with_values({0.0, 4.0, 9.0});
    EXPECT_DOUBLE_EQ(v.domain_lo(), 2.0);
    EXPECT_DOUBLE_EQ(v.domain_hi(), 6.0);
    EXPECT_DOUBLE_EQ(v(2.0), 0.0);
    expect_error(ErrorCode::invalid_config, [&] { w.with_values({0.0, 4.0, 3.0}); });
}

TEST(Warp, JsonRoundTrip) {
    LinearSplineWarp w(1.0, 9.0, {-2.0, 0.5, 3.0, 7.0, 11.0});
    nlohmann::json j = w.to_json();
    ASSERT_TRUE(j.contains("domain"));
    ASSERT_TRUE(j.contains("knots"));
    ASSERT_TRUE(j.contains("values"));
    LinearSplineWarp back = LinearSplineWarp::from_json(j);
    EXPECT_DOUBLE_EQ(back.domain_lo(), w.domain_lo());
    EXPECT_DOUBLE_EQ(back.domain_hi(), w.domain_hi());
    ASSERT_EQ(back.knot_count(), w.knot_count());
    for (std::size_t k = 0; k < w.knot_count(); ++k)
        EXPECT_EQ(back.values()[k], w.values()[k]);
}

TEST(Warp, JsonWithoutKnotFieldLoads) {
    nlohmann::json j{{"domain", {0.0, 4.0}}, {"values", {1.0, 2.0, 3.0}}};
    LinearSplineWarp w = LinearSplineWarp::from_json(j);
    EXPECT_EQ(w.knot_count(), 3u);
    EXPECT_DOUBLE_EQ(w(2.0), 2.0);
}

TEST(Warp, JsonRejectsMalformedInput) {
    expect_error(ErrorCode::parse_error,
                 [] { LinearSplineWarp::from_json({{"values", {1.0, 2.0}}}); });
    expect_error(ErrorCode::parse_error,
                 [] { LinearSplineWarp::from_json({{"domain", {0.0, 1.0}}}); });
    expect_error(ErrorCode::parse_error, [] {
        LinearSplineWarp::from_json({{"domain", {0.0, 1.0, 2.0}}, {"values", {1.0, 2.0}}});
    });
    expect_error(ErrorCode::parse_error, [] {
        LinearSplineWarp::from_json(
            {{"domain", {0.0, 1.0}}, {"knots", {0.0}}, {"values", {1.0, 2.0}}});
    });
    // knots present but not equidistant over the stated domain
    expect_error(ErrorCode::parse_error, [] {
        LinearSplineWarp::from_json(
            {{"domain", {0.0, 2.0}}, {"knots", {0.0, 0.7, 2.0}}, {"values", {1.0, 2.0, 3.0}}});
    });
}

#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "regalign/error.hpp"
#include "regalign/metrics.hpp"
#include "regalign/optimizer.hpp"
#include "regalign/rng.hpp"
#include "regalign/series.hpp"
#include "regalign/warp.hpp"

namespace regalign {

// The benchmark time transformations: a fixed 6-knot monotone spline in hinge
// form, an identity-plus-periodic map, or any user-supplied spline warp.
class TrueWarp {
public:
    enum class Kind { spline, periodic, custom };

    static TrueWarp spline() {
        TrueWarp tw;
        tw.kind_ = Kind::spline;
        tw.lo_ = 3.6;
        tw.hi_ = 414.1;
        tw.verify_increasing();
        return tw;
    }

    static TrueWarp periodic(double a, double b) {
        if (!(b > a) || !(a > 0.0))
            raise(ErrorCode::invalid_config, "periodic warp needs 0 < a < b");
        TrueWarp tw;
        tw.kind_ = Kind::periodic;
        tw.lo_ = a;
        tw.hi_ = b;
        tw.verify_increasing();
        return tw;
    }

    static TrueWarp custom(LinearSplineWarp w) {
        TrueWarp tw;
        tw.kind_ = Kind::custom;
        tw.lo_ = w.domain_lo();
        tw.hi_ = w.domain_hi();
        tw.warp_ = std::move(w);
        tw.verify_increasing();
        return tw;
    }

    Kind kind() const { return kind_; }
    double domain_lo() const { return lo_; }
    double domain_hi() const { return hi_; }

    std::string name() const {
        switch (kind_) {
            case Kind::spline: return "spline";
            case Kind::periodic: return "periodic";
            case Kind::custom: return "custom";
        }
        return "?";
    }

    double operator()(double t) const {
        double tol = 1e-9 * (hi_ - lo_);
        if (t < lo_ - tol || t > hi_ + tol)
            raise(ErrorCode::out_of_domain,
                  "time " + std::to_string(t) + " outside the true warp's domain");
        t = std::clamp(t, lo_, hi_);
        switch (kind_) {
            case Kind::spline: {
                auto hinge = [](double u) { return u > 0.0 ? u : 0.0; };
                return -0.379 + 1.05 * t - 0.209 * hinge(t - 85.7) + 0.409 * hinge(t - 167.8) -
                       0.609 * hinge(t - 249.9) + 0.809 * hinge(t - 332.0);
            }
            case Kind::periodic:
                return t + 0.05 * t * std::sin(3.0 * std::numbers::pi * t / hi_);
            case Kind::custom:
                return (*warp_)(t);
        }
        return t;
    }

    // strict increase is not guaranteed by the closed forms for arbitrary
    // parameters, so it is checked on a dense grid at construction
    void verify_increasing(std::size_t intervals = 1000) const {
        double prev = (*this)(lo_);
        for (std::size_t k = 1; k <= intervals; ++k) {
            double t = lo_ + (hi_ - lo_) * static_cast<double>(k) / static_cast<double>(intervals);
            double v = (*this)(t);
            if (!(v > prev))
                raise(ErrorCode::invalid_config,
                      "true warp is not strictly increasing near t = " + std::to_string(t));
            prev = v;
        }
    }

private:
    Kind kind_ = Kind::spline;
    double lo_ = 0.0;
    double hi_ = 1.0;
    std::optional<LinearSplineWarp> warp_;
};

// 283-point synthetic record shaped like an ice-core gas series: abrupt
// swings between a handful of recurring high and low levels at irregular
// spacing, fine superimposed wiggle, mildly uneven sampling. The value SD is
// normalized to 28.7 around the sample mean.
inline TimeSeries default_base_curve() {
    constexpr std::size_t n = 283;
    constexpr double t_lo = 2.342, t_hi = 417.16;
    // piecewise-linear skeleton: alternating swings, no two neighbouring
    // extremes at similar levels, no repeating spacing
    constexpr double skeleton[][2] = {
        {2.342, 208.665},   {8.125, 202.601},   {27.546, 249.831},  {47.705, 188.022},
        {74.569, 263.122},  {104.303, 209.540}, {123.608, 279.856}, {144.494, 198.749},
        {169.937, 247.590}, {195.650, 185.131}, {226.779, 266.813}, {254.389, 216.401},
        {276.661, 282.275}, {300.963, 199.734}, {320.278, 254.382}, {346.805, 185.330},
        {366.768, 269.334}, {391.428, 216.498}, {417.160, 237.292},
    };
    constexpr std::size_t n_skel = sizeof(skeleton) / sizeof(skeleton[0]);
    auto skel = [&](double t) {
        std::size_t k = 0;
        while (k + 2 < n_skel && skeleton[k + 1][0] < t) ++k;
        double th = (t - skeleton[k][0]) / (skeleton[k + 1][0] - skeleton[k][0]);
        return skeleton[k][1] + th * (skeleton[k + 1][1] - skeleton[k][1]);
    };
    std::vector<double> t(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        double ti = t_lo + (t_hi - t_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        if (i > 0 && i + 1 < n) ti += 0.45 * std::sin(1.7 * static_cast<double>(i));
        t[i] = ti;
        v[i] = skel(ti) + 1.1114 * std::sin(ti / 11.0) + 0.6795 * std::sin(ti / 4.7 + 1.1);
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    double rescale = 28.7 / std::sqrt(var / static_cast<double>(n - 1));
    for (double& x : v) x = mean + (x - mean) * rescale;
    return TimeSeries(std::move(t), std::move(v));
}

struct ScenarioSpec {
    int scenario = 1;     // 1/3: both series share a fixed drawn subset of base
                          // times; 2/4: times drawn uniformly afresh each run
    TimeSeries base;      // m is this series' linear interpolant
    std::size_t n1 = 250;
    std::size_t n2 = 250;
    double noise_sd = -1.0;  // < 0 resolves to 5% of the base values' SD
    TrueWarp true_warp;
    std::size_t runs = 1;
    std::uint64_t seed = 42;

    static ScenarioSpec make(int scenario, TimeSeries base_curve, std::size_t runs,
                             std::uint64_t seed) {
        ScenarioSpec s{scenario, std::move(base_curve)};
        s.runs = runs;
        s.seed = seed;
        s.true_warp = scenario <= 2
                          ? TrueWarp::spline()
                          : TrueWarp::periodic(s.base.t_min(), s.base.t_max());
        return s;
    }

    double resolved_noise_sd() const {
        return noise_sd < 0.0 ? 0.05 * base.value_sd() : noise_sd;
    }

    void validate() const {
        if (scenario < 1 || scenario > 4)
            raise(ErrorCode::invalid_config, "scenario must be 1..4");
        if (n1 < 10 || n2 < 10) raise(ErrorCode::invalid_config, "sample sizes must be >= 10");
        if (fixed_times() && n1 != n2)
            raise(ErrorCode::invalid_config,
                  "scenarios with shared fixed times need n1 == n2");
        if (runs < 1) raise(ErrorCode::invalid_config, "need at least one run");
        if (noise_sd >= 0.0 && !std::isfinite(noise_sd))
            raise(ErrorCode::invalid_config, "noise SD must be finite");
    }

    bool fixed_times() const { return scenario == 1 || scenario == 3; }

    // warp domain clipped to where the base curve is defined
    Interval sampling_domain() const {
        Interval dom{std::max(true_warp.domain_lo(), base.t_min()),
                     std::min(true_warp.domain_hi(), base.t_max())};
        if (!(dom.hi > dom.lo))
            raise(ErrorCode::domain_mismatch,
                  "true warp domain does not intersect the base series' time range");
        return dom;
    }

    bool eligible(double t, const Interval& dom) const {
        if (t < dom.lo || t > dom.hi) return false;
        double g = true_warp(t);
        return g >= base.t_min() && g <= base.t_max();
    }
};

namespace detail {

inline std::vector<double> draw_sorted_uniform(CounterRng& rng, std::size_t n, double lo, double hi,
                                               const ScenarioSpec& spec, const Interval& dom,
                                               bool restrict_eligible) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<double> out;
        out.reserve(n);
        std::size_t rejects = 0;
        while (out.size() < n) {
            double u = rng.uniform(lo, hi);
            if (restrict_eligible && !spec.eligible(u, dom)) {
                if (++rejects > 1000 * n)
                    raise(ErrorCode::domain_mismatch,
                          "almost no eligible sampling times: the true warp leaves the base range");
                continue;
            }
            out.push_back(u);
        }
        std::sort(out.begin(), out.end());
        bool distinct = true;
        for (std::size_t i = 1; i < n; ++i)
            if (out[i] == out[i - 1]) distinct = false;
        if (distinct) return out;
    }
    raise(ErrorCode::duplicate_time, "could not draw distinct sampling times");
}

}  // namespace detail

// One simulated pair: the first series samples the base curve, the second
// samples it through the true warp; both get fresh additive normal noise.
// Fully determined by (seed, run_index).
inline std::pair<TimeSeries, TimeSeries> generate_pair(const ScenarioSpec& spec,
                                                       std::size_t run_index) {
    spec.validate();
    Interval dom = spec.sampling_domain();
    double sd = spec.resolved_noise_sd();

    std::vector<double> t1, t2;
    CounterRng run_rng(spec.seed, run_index + 1);
    if (spec.fixed_times()) {
        std::vector<double> pool;
        for (double t : spec.base.times())
            if (spec.eligible(t, dom)) pool.push_back(t);
        if (pool.size() < spec.n1)
            raise(ErrorCode::domain_mismatch,
                  "only " + std::to_string(pool.size()) + " base points are eligible, need " +
                      std::to_string(spec.n1));
        CounterRng setup_rng(spec.seed, 0);  // subset fixed across runs
        auto idx = sample_without_replacement(setup_rng, pool.size(), spec.n1);
        t1.reserve(spec.n1);
        for (std::size_t k : idx) t1.push_back(pool[k]);
        t2 = t1;
    } else {
        t1 = detail::draw_sorted_uniform(run_rng, spec.n1, spec.base.t_min(), spec.base.t_max(),
                                         spec, dom, false);
        t2 = detail::draw_sorted_uniform(run_rng, spec.n2, spec.base.t_min(), spec.base.t_max(),
                                         spec, dom, true);
    }

    std::vector<double> y1(spec.n1), y2(spec.n2);
    for (std::size_t i = 0; i < spec.n1; ++i)
        y1[i] = spec.base.interp(t1[i]) + (sd > 0.0 ? run_rng.normal(0.0, sd) : 0.0);
    for (std::size_t j = 0; j < spec.n2; ++j)
        y2[j] = spec.base.interp(spec.true_warp(t2[j])) +
                (sd > 0.0 ? run_rng.normal(0.0, sd) : 0.0);

    return {TimeSeries(std::move(t1), std::move(y1)), TimeSeries(std::move(t2), std::move(y2))};
}

struct EstimatorConfig {
    std::size_t knots = 0;  // 0: 21 knots when the truth is in the class (scenario 1), else 20
    AlignmentConfig align;
    OptimizerConfig opt;
    std::size_t grid_points = 1001;

    std::size_t resolved_knots(int scenario) const {
        return knots > 0 ? knots : (scenario == 1 ? 21 : 20);
    }
};

struct RunRecord {
    bool ok = false;
    std::string error;
    std::optional<LinearSplineWarp> warp;
    std::vector<double> grid_values;
    double l_n = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct StudyResult {
    std::vector<double> grid;
    std::vector<double> g0_values;
    std::vector<RunRecord> records;
    StudySummary summary;
    std::size_t failures = 0;
};

inline StudyResult run_study(const ScenarioSpec& spec, const EstimatorConfig& est,
                             int threads = 1) {
    spec.validate();
    est.opt.validate();
    if (est.grid_points < 3 || est.grid_points % 2 == 0)
        raise(ErrorCode::invalid_config, "grid_points must be odd and >= 3");
    Interval dom = spec.sampling_domain();
    std::size_t K = est.resolved_knots(spec.scenario);

    StudyResult out;
    out.grid = uniform_grid(dom.lo, dom.hi, est.grid_points);
    out.g0_values.resize(out.grid.size());
    for (std::size_t i = 0; i < out.grid.size(); ++i)
        out.g0_values[i] = spec.true_warp(out.grid[i]);
    out.records.resize(spec.runs);

    auto work = [&](std::size_t r) {
        RunRecord& rec = out.records[r];
        try {
            auto [d1, d2] = generate_pair(spec, r);
            RegistrationResult reg = register_series(d1, d2, K, est.align, est.opt,
                                                     std::make_pair(dom.lo, dom.hi));
            rec.grid_values.resize(out.grid.size());
            for (std::size_t i = 0; i < out.grid.size(); ++i)
                rec.grid_values[i] = reg.warp(out.grid[i]);
            rec.warp = std::move(reg.warp);
            rec.l_n = reg.value.l_n;
            rec.iterations = reg.iterations;
            rec.converged = reg.converged;
            rec.ok = true;
        } catch (const Error& e) {
            rec.ok = false;
            rec.error = e.what();
        }
    };

    if (threads <= 1) {
        for (std::size_t r = 0; r < spec.runs; ++r) work(r);
    } else {
        std::atomic<std::size_t> next{0};
        auto loop = [&] {
            for (;;) {
                std::size_t r = next.fetch_add(1);
                if (r >= spec.runs) break;
                work(r);
            }
        };
        std::vector<std::thread> pool;
        std::size_t T = std::min<std::size_t>(static_cast<std::size_t>(threads), spec.runs);
        pool.reserve(T);
        for (std::size_t t = 0; t < T; ++t) pool.emplace_back(loop);
        for (auto& th : pool) th.join();
    }

    // aggregation in run order: results do not depend on scheduling
    std::vector<std::vector<double>> estimates;
    for (const RunRecord& rec : out.records) {
        if (rec.ok)
            estimates.push_back(rec.grid_values);
        else
            ++out.failures;
    }
    if (estimates.empty())
        raise(ErrorCode::empty_input, "every simulation run failed: " + out.records[0].error);
    out.summary = summarize_runs(out.grid, estimates, out.g0_values);
    out.summary.failures = out.failures;
    return out;
}

}  // namespace regalign

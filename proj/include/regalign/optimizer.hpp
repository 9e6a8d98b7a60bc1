#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "regalign/alignment.hpp"
#include "regalign/error.hpp"
#include "regalign/landmarks.hpp"
#include "regalign/series.hpp"
#include "regalign/warp.hpp"

namespace regalign {

enum class InitMode { landmarks, identity, provided };

inline InitMode init_mode_from_name(const std::string& name) {
    if (name == "landmarks") return InitMode::landmarks;
    if (name == "identity") return InitMode::identity;
    if (name == "provided") return InitMode::provided;
    raise(ErrorCode::invalid_config, "unknown init mode '" + name + "'");
}

struct OptimizerConfig {
    int max_iterations = 500;
    double rel_tolerance = 1e-8;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    double initial_step = 1.0;  // largest knot move per iteration, in units of h1/knot_count
    double monotone_margin = default_monotone_margin;
    InitMode init = InitMode::landmarks;
    std::optional<LinearSplineWarp> init_warp;
    bool precondition = false;  // opt-in: scale each gradient component by 1/basis mass
    double prominence_frac = 0.05;

    void validate() const {
        if (max_iterations < 0) raise(ErrorCode::invalid_config, "max_iterations must be >= 0");
        if (!(rel_tolerance > 0.0)) raise(ErrorCode::invalid_config, "rel_tolerance must be > 0");
        if (!(armijo_c > 0.0) || !(armijo_c < 1.0))
            raise(ErrorCode::invalid_config, "armijo_c must be in (0,1)");
        if (!(backtrack_factor > 0.0) || !(backtrack_factor < 1.0))
            raise(ErrorCode::invalid_config, "backtrack_factor must be in (0,1)");
        if (!(initial_step > 0.0)) raise(ErrorCode::invalid_config, "initial_step must be > 0");
        if (!(monotone_margin > 0.0))
            raise(ErrorCode::invalid_config, "monotone_margin must be > 0");
        if (init == InitMode::provided && !init_warp)
            raise(ErrorCode::invalid_config, "init mode 'provided' needs an init warp");
    }
};

struct RegistrationResult {
    LinearSplineWarp warp;
    LinearSplineWarp initial_warp;
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
    bool plateau = false;
    AlignmentValue value;
};

inline LinearSplineWarp make_initial_warp(const TimeSeries& data1, const TimeSeries& data2,
                                          double c, double d, std::size_t knot_count,
                                          const OptimizerConfig& opt) {
    switch (opt.init) {
        case InitMode::identity:
            return LinearSplineWarp::identity(c, d, knot_count, opt.monotone_margin);
        case InitMode::provided: {
            const LinearSplineWarp& w = *opt.init_warp;
            double tol = 1e-9 * (d - c);
            if (std::abs(w.domain_lo() - c) > tol || std::abs(w.domain_hi() - d) > tol ||
                w.knot_count() != knot_count)
                raise(ErrorCode::invalid_config,
                      "provided init warp does not match the requested domain/knot count");
            return w;
        }
        case InitMode::landmarks: {
            auto m = match_series(data2, data1, opt.prominence_frac);
            // landmarks outside the warp domain cannot constrain it
            std::erase_if(m.pairs, [&](const std::pair<double, double>& p) {
                return p.first < c || p.first > d;
            });
            return initial_warp(m, c, d, knot_count, opt.monotone_margin);
        }
    }
    raise(ErrorCode::invalid_config, "bad init mode");
}

// Steepest ascent on the knot values with Armijo backtracking. Candidate
// steps are repaired into the class first, so every iterate is feasible;
// a step is accepted only if it improves the objective by the Armijo bound,
// so the trace is strictly increasing.
inline RegistrationResult register_series(
    const TimeSeries& data1, const TimeSeries& data2, std::size_t knot_count,
    const AlignmentConfig& cfg = {}, const OptimizerConfig& opt = {},
    std::optional<std::pair<double, double>> domain = std::nullopt) {
    opt.validate();
    if (knot_count < 2) raise(ErrorCode::invalid_config, "need at least 2 knots");
    double c = domain ? domain->first : data2.t_min();
    double d = domain ? domain->second : data2.t_max();
    if (!(d > c)) raise(ErrorCode::invalid_config, "warp domain must be a nonempty interval");

    LinearSplineWarp w0 = make_initial_warp(data1, data2, c, d, knot_count, opt);
    if (std::min(w0.image_hi(), data1.t_max()) < std::max(w0.image_lo(), data1.t_min()))
        raise(ErrorCode::no_overlap,
              "initial warp maps the second series entirely outside the first's time range");

    AlignmentEvaluator eval(data1, data2, cfg);
    double h1 = eval.bandwidths().h1;

    AlignmentValue val;
    try {
        val = eval.measure(w0);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::zero_denominator)
            raise(ErrorCode::zero_denominator,
                  std::string(e.what()) + " (at the initial warp; widen h1 or try --init identity)");
        throw;
    }

    RegistrationResult res{w0, w0, {val.l_n}, 0, false, false, val};
    if (opt.max_iterations == 0) return res;

    // per-knot basis mass over the second series' times, for preconditioning
    std::size_t K = knot_count;
    std::vector<double> mass(K, 0.0);
    for (double s : data2.times()) {
        if (s < c || s > d) continue;
        auto [k, theta] = w0.segment(s);
        mass[k] += 1.0 - theta;
        mass[k + 1] += theta;
    }

    std::vector<double> v = w0.values();
    double L = val.l_n;
    std::vector<double> grad, p(K), trial(K);

    for (int it = 1; it <= opt.max_iterations; ++it) {
        val = eval.measure_with_gradient(res.warp, grad);
        L = val.l_n;

        double ginf = 0.0;
        for (double g : grad) ginf = std::max(ginf, std::abs(g));
        if (ginf < 1e-14 * std::max(1.0, std::abs(L))) {
            res.converged = true;
            res.plateau = true;
            break;
        }

        double slope = 0.0, pinf = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            p[k] = (opt.precondition && mass[k] > 0.0) ? grad[k] / mass[k] : grad[k];
            slope += grad[k] * p[k];
            pinf = std::max(pinf, std::abs(p[k]));
        }
        if (slope <= 0.0 || pinf == 0.0) {
            res.converged = true;
            res.plateau = true;
            break;
        }

        // Restart the line search from the cap every iteration; a warm start
        // lets alpha collapse and stall the ascent long before the optimum.
        // The cap keeps any single knot from moving more than a small slice
        // of h1 per iteration: a knot displaced by ~h1 rewires which sample
        // pairs it controls, and Armijo happily hops into that unrelated
        // basin if the objective is higher there.
        double alpha = opt.initial_step * h1 / (static_cast<double>(K) * pinf);
        bool accepted = false;
        for (int ls = 0; ls < 64 && alpha > 0.0; ++ls) {
            for (std::size_t k = 0; k < K; ++k) trial[k] = v[k] + alpha * p[k];
            LinearSplineWarp w_try =
                LinearSplineWarp::repaired(c, d, trial, opt.monotone_margin);
            AlignmentValue av_try;
            try {
                av_try = eval.measure(w_try);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::zero_denominator) {
                    alpha *= opt.backtrack_factor;
                    continue;
                }
                throw;
            }
            // The strict check matters when armijo_c*alpha*slope underflows
            // below one ulp of L: a bitwise tie must not count as an accepted
            // step, or the trace would record an ascent step that gained nothing.
            if (av_try.l_n > L && av_try.l_n >= L + opt.armijo_c * alpha * slope) {
                v = w_try.values();
                res.warp = std::move(w_try);
                res.objective_trace.push_back(av_try.l_n);
                res.iterations = it;
                res.value = av_try;
                accepted = true;
                double dL = av_try.l_n - L;
                L = av_try.l_n;
                if (dL <= opt.rel_tolerance * std::max(std::abs(L), 1e-300))
                    res.converged = true;
                break;
            }
            alpha *= opt.backtrack_factor;
        }
        if (!accepted) {
            // no improving step along this direction: change below any tolerance
            res.converged = true;
            break;
        }
        if (res.converged) break;
    }
    return res;
}

}  // namespace regalign

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "regalign/error.hpp"
#include "regalign/kernel.hpp"
#include "regalign/numeric.hpp"
#include "regalign/series.hpp"
#include "regalign/warp.hpp"

namespace regalign {

struct AlignmentConfig {
    Kernel kernel1 = Kernel::gaussian;
    Kernel kernel2 = Kernel::gaussian;
    double h1 = 0.0;  // <= 0 selects the 5%-of-time-span default
    double h2 = 0.0;  // <= 0 selects the 10%-of-value-span default
    double prune_tau = 0.0;  // > 0 skips pairs with |t_i - g(s_j)| > tau*h1
    int partitions = 1;

    Bandwidths resolve(const TimeSeries& data1, const TimeSeries& data2) const {
        Bandwidths bw;
        if (h1 > 0.0 && h2 > 0.0)
            bw = {h1, h2};
        else {
            bw = default_bandwidths(data1, data2);
            if (h1 > 0.0) bw.h1 = h1;
            if (h2 > 0.0) bw.h2 = h2;
        }
        bw.validate();
        return bw;
    }
};

struct AlignmentValue {
    double l_n = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
};

// Evaluates the alignment ratio and its knot-value gradient for one data pair.
// The value-kernel matrix does not depend on the warp, so it is precomputed
// once and shared by every evaluation during an optimization run.
class AlignmentEvaluator {
public:
    AlignmentEvaluator(const TimeSeries& data1, const TimeSeries& data2, AlignmentConfig cfg)
        : a_(data1), b_(data2), cfg_(cfg), bw_(cfg.resolve(data1, data2)) {
        if (cfg_.partitions < 1)
            raise(ErrorCode::invalid_config, "partition count must be at least 1");
        n1_ = a_.size();
        n2_ = b_.size();
        if (n1_ * n2_ <= k2_cache_limit) {
            k2_.resize(n1_ * n2_);
            for (std::size_t j = 0; j < n2_; ++j) {
                double yj = b_.values()[j];
                double* row = k2_.data() + j * n1_;
                for (std::size_t i = 0; i < n1_; ++i)
                    row[i] = scaled_eval(cfg_.kernel2, bw_.h2, a_.values()[i] - yj);
            }
        }
    }

    const Bandwidths& bandwidths() const { return bw_; }

    AlignmentValue measure(const LinearSplineWarp& w) const {
        check_domain(w);
        Compensated num, den;
        for (int p = 0; p < cfg_.partitions; ++p) {
            auto [j_lo, j_hi] = partition_range(p);
            Compensated np, dp;
            for (std::size_t j = j_lo; j < j_hi; ++j) {
                auto [nj, dj] = row_sums(w, j);
                np.add(nj);
                dp.add(dj);
            }
            num.add(np.value());
            den.add(dp.value());
        }
        return finish(num.value(), den.value());
    }

    AlignmentValue measure_with_gradient(const LinearSplineWarp& w,
                                         std::vector<double>& grad) const {
        if (!kernel_differentiable(cfg_.kernel1))
            raise(ErrorCode::non_differentiable_kernel,
                  "gradient requires a differentiable time kernel (gaussian, epanechnikov, "
                  "biweight)");
        check_domain(w);
        std::size_t K = w.knot_count();
        std::vector<Compensated> dnum(K), dden(K);
        Compensated num, den;
        double inv_h1sq = 1.0 / (bw_.h1 * bw_.h1);
        for (int p = 0; p < cfg_.partitions; ++p) {
            auto [j_lo, j_hi] = partition_range(p);
            Compensated np, dp;
            std::vector<Compensated> dnp(K), ddp(K);
            for (std::size_t j = j_lo; j < j_hi; ++j) {
                auto [k, theta] = w.segment(b_.times()[j]);
                double gs = (1.0 - theta) * w.values()[k] + theta * w.values()[k + 1];
                double nj = 0.0, dj = 0.0, pnj = 0.0, pdj = 0.0;
                row_terms(j, gs, nj, dj, pnj, pdj);
                np.add(nj);
                dp.add(dj);
                // d a_i / d v_k = K1'(z) * (-hat weight) / h1^2
                double cn = -pnj * inv_h1sq;
                double cd = -pdj * inv_h1sq;
                dnp[k].add((1.0 - theta) * cn);
                dnp[k + 1].add(theta * cn);
                ddp[k].add((1.0 - theta) * cd);
                ddp[k + 1].add(theta * cd);
            }
            num.add(np.value());
            den.add(dp.value());
            for (std::size_t k = 0; k < K; ++k) {
                dnum[k].add(dnp[k].value());
                dden[k].add(ddp[k].value());
            }
        }
        double nr = num.value(), dr = den.value();
        AlignmentValue out = finish(nr, dr);
        grad.assign(K, 0.0);
        for (std::size_t k = 0; k < K; ++k)
            grad[k] = (dnum[k].value() * dr - nr * dden[k].value()) / (dr * dr);
        return out;
    }

    std::vector<double> gradient(const LinearSplineWarp& w) const {
        std::vector<double> g;
        measure_with_gradient(w, g);
        return g;
    }

private:
    static constexpr std::size_t k2_cache_limit = 4'000'000;

    void check_domain(const LinearSplineWarp& w) const {
        double tol = 1e-9 * (w.domain_hi() - w.domain_lo());
        if (b_.t_min() < w.domain_lo() - tol || b_.t_max() > w.domain_hi() + tol)
            raise(ErrorCode::out_of_domain,
                  "warp domain does not cover the second series' time range");
    }

    std::pair<std::size_t, std::size_t> partition_range(int p) const {
        auto P = static_cast<std::size_t>(cfg_.partitions);
        auto q = static_cast<std::size_t>(p);
        return {n2_ * q / P, n2_ * (q + 1) / P};
    }

    double k2_at(std::size_t i, std::size_t j) const {
        if (!k2_.empty()) return k2_[j * n1_ + i];
        return scaled_eval(cfg_.kernel2, bw_.h2, a_.values()[i] - b_.values()[j]);
    }

    std::pair<double, double> row_sums(const LinearSplineWarp& w, std::size_t j) const {
        double gs = w(b_.times()[j]);
        double nj = 0.0, dj = 0.0;
        double h1 = bw_.h1;
        double window = cfg_.prune_tau > 0.0 ? cfg_.prune_tau * h1 : 0.0;
        if (cfg_.kernel1 == Kernel::gaussian) {
            double c = inv_sqrt_2pi / h1;
            for (std::size_t i = 0; i < n1_; ++i) {
                double u = a_.times()[i] - gs;
                if (window > 0.0 && std::abs(u) > window) continue;
                double z = u / h1;
                double e = c * std::exp(-0.5 * z * z);
                nj += e * k2_at(i, j);
                dj += e;
            }
        } else {
            for (std::size_t i = 0; i < n1_; ++i) {
                double u = a_.times()[i] - gs;
                if (window > 0.0 && std::abs(u) > window) continue;
                double e = kernel_eval(cfg_.kernel1, u / h1) / h1;
                if (e == 0.0) continue;
                nj += e * k2_at(i, j);
                dj += e;
            }
        }
        return {nj, dj};
    }

    void row_terms(std::size_t j, double gs, double& nj, double& dj, double& pnj,
                   double& pdj) const {
        double h1 = bw_.h1;
        double window = cfg_.prune_tau > 0.0 ? cfg_.prune_tau * h1 : 0.0;
        if (cfg_.kernel1 == Kernel::gaussian) {
            double c = inv_sqrt_2pi / h1;
            for (std::size_t i = 0; i < n1_; ++i) {
                double u = a_.times()[i] - gs;
                if (window > 0.0 && std::abs(u) > window) continue;
                double z = u / h1;
                double e = c * std::exp(-0.5 * z * z);
                double d1 = -z * (e * h1);  // K1'(z), unscaled
                double b = k2_at(i, j);
                nj += e * b;
                dj += e;
                pnj += d1 * b;
                pdj += d1;
            }
        } else {
            for (std::size_t i = 0; i < n1_; ++i) {
                double u = a_.times()[i] - gs;
                if (window > 0.0 && std::abs(u) > window) continue;
                double z = u / h1;
                double e = kernel_eval(cfg_.kernel1, z) / h1;
                double d1 = kernel_deriv(cfg_.kernel1, z);
                if (e == 0.0 && d1 == 0.0) continue;
                double b = k2_at(i, j);
                nj += e * b;
                dj += e;
                pnj += d1 * b;
                pdj += d1;
            }
        }
    }

    AlignmentValue finish(double num_raw, double den_raw) const {
        double scale = static_cast<double>(n1_) * static_cast<double>(n2_);
        double nn = num_raw / scale;
        double dn = den_raw / scale;
        if (dn == 0.0)
            raise(ErrorCode::zero_denominator,
                  "alignment denominator is zero: the warp maps the second series outside the "
                  "first's effective support (widening h1 may help)");
        return {nn / dn, nn, dn};
    }

    const TimeSeries& a_;
    const TimeSeries& b_;
    AlignmentConfig cfg_;
    Bandwidths bw_;
    std::size_t n1_ = 0;
    std::size_t n2_ = 0;
    std::vector<double> k2_;
};

inline AlignmentValue measure(const TimeSeries& data1, const TimeSeries& data2,
                              const LinearSplineWarp& w, const AlignmentConfig& cfg) {
    return AlignmentEvaluator(data1, data2, cfg).measure(w);
}

inline std::vector<double> gradient(const TimeSeries& data1, const TimeSeries& data2,
                                    const LinearSplineWarp& w, const AlignmentConfig& cfg) {
    return AlignmentEvaluator(data1, data2, cfg).gradient(w);
}

}  // namespace regalign

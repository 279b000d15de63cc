#pragma once

#include <cmath>
#include <span>

namespace covcal {

// Conformal ranks are ceilings of (n+1)(1-alpha). The slack absorbs
// floating-point error in the product (e.g. 10*0.9 = 9.000000000000002) and is
// shared with the weighted quantile so the equal-weight reduction is exact.
inline constexpr double kRankSlack = 1e-9;

/// k = ceil((n+1)(1-alpha)); rank is 1-based, k > n means the quantile is +inf.
inline long conformal_rank(long n, double alpha) {
    const double v = static_cast<double>(n + 1) * (1.0 - alpha);
    return static_cast<long>(std::ceil(v - kRankSlack * static_cast<double>(n + 1)));
}

/// Split conformal quantile: k-th smallest of scores ∪ {+inf}.
double conformal_quantile(std::span<const double> scores, double alpha);

/// Worst-case coverage loss g(delta, n) = delta*n / ((1-delta)*n + 1).
double g_bound(double delta, long n);

struct CorrectedAlpha {
    double alpha_prime;
    bool feasible_hint;  // false when alpha_prime <= 0 (interval becomes (-inf, inf))
};

/// alpha' = alpha - g(delta_hat, n). The quantile may still be infinite
/// downstream when ceil((n+1)(1-alpha')) > n.
CorrectedAlpha corrected_alpha(double alpha, double delta_hat, long n);

/// max(0, 1 - alpha - g(delta, n)).
double coverage_lower_bound(double alpha, double delta, long n);

struct RecoveryParams {
    double eps_fn = 0.0;
    double eps_fp = 0.0;
    double eps_cx = 0.0;
    int u_bar = 0;
};

/// Expected-contamination bound (1-pi0)*eps_cx / (pi0*(1-u_bar*eps_fn) + (1-pi0)*eps_cx);
/// a nonpositive denominator makes the bound vacuous (returns 1).
double recovery_delta_bound(double pi0, const RecoveryParams& params);

struct Interval {
    double center = 0.0;
    double radius = 0.0;  // may be +inf
    bool feasible = true;

    bool covers(double y) const { return std::fabs(y - center) <= radius; }
    double width() const { return 2.0 * radius; }
};

/// Symmetric closed interval [center - q, center + q]; q = +inf is the
/// infeasible (trivial) interval.
Interval make_interval(double center, double q);

}  // namespace covcal

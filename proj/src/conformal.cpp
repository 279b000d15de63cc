#include "covcal/conformal.hpp"

#include <limits>
#include <stdexcept>

#include "covcal/stats.hpp"

namespace covcal {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double conformal_quantile(std::span<const double> scores, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("conformal_quantile: alpha must be in (0,1)");
    const long n = static_cast<long>(scores.size());
    const long k = conformal_rank(n, alpha);
    if (k > n) return kInf;
    return kth_smallest(scores, static_cast<std::size_t>(k));
}

double g_bound(double delta, long n) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("g_bound: delta must be in [0,1]");
    if (n < 1) throw std::invalid_argument("g_bound: n must be >= 1");
    return delta * static_cast<double>(n) / ((1.0 - delta) * static_cast<double>(n) + 1.0);
}

CorrectedAlpha corrected_alpha(double alpha, double delta_hat, long n) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("corrected_alpha: alpha must be in (0,1)");
    const double ap = alpha - g_bound(delta_hat, n);
    return {ap, ap > 0.0};
}

double coverage_lower_bound(double alpha, double delta, long n) {
    const double b = 1.0 - alpha - g_bound(delta, n);
    return b > 0.0 ? b : 0.0;
}

double recovery_delta_bound(double pi0, const RecoveryParams& params) {
    if (!(pi0 > 0.0 && pi0 <= 1.0)) throw std::invalid_argument("recovery_delta_bound: pi0 must be in (0,1]");
    const double num = (1.0 - pi0) * params.eps_cx;
    const double den = pi0 * (1.0 - static_cast<double>(params.u_bar) * params.eps_fn) + num;
    if (den <= 0.0) return 1.0;
    return num / den;
}

Interval make_interval(double center, double q) {
    Interval iv;
    iv.center = center;
    iv.radius = q;
    iv.feasible = std::isfinite(q);
    return iv;
}

}  // namespace covcal

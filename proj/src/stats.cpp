#include "covcal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace covcal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lentz continued fraction for the incomplete beta function.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

struct Moments {
    std::size_t n;
    double mean;
    double var;  // sample variance (n-1 denominator)
};

Moments moments(std::span<const double> v) {
    const std::size_t n = v.size();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) {
        const double d = x - mean;
        ss += d * d;
    }
    return {n, mean, n > 1 ? ss / static_cast<double>(n - 1) : 0.0};
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta: a,b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    // x^a (1-x)^b / B(a,b); symmetric under (a,b,x) -> (b,a,1-x)
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("student_t_sf: df must be positive");
    if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
    const double x = df / (df + t * t);
    const double half_tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

double f_sf(double f, double d1, double d2) {
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw std::invalid_argument("f_sf: df must be positive");
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

TestResult welch_t_test(std::span<const double> x, std::span<const double> y) {
    if (x.size() < 2 || y.size() < 2) {
        throw std::invalid_argument("welch_t_test: both samples need at least 2 values");
    }
    const Moments mx = moments(x);
    const Moments my = moments(y);
    if (mx.var == 0.0 && my.var == 0.0) {
        if (mx.mean == my.mean) return {0.0, 1.0};
        return {mx.mean > my.mean ? kInf : -kInf, 0.0};
    }
    const double vx = mx.var / static_cast<double>(mx.n);
    const double vy = my.var / static_cast<double>(my.n);
    const double se2 = vx + vy;
    const double t = (mx.mean - my.mean) / std::sqrt(se2);
    const double df = se2 * se2 /
                      (vx * vx / static_cast<double>(mx.n - 1) + vy * vy / static_cast<double>(my.n - 1));
    double p = 2.0 * student_t_sf(std::fabs(t), df);
    p = std::clamp(p, 0.0, 1.0);
    return {t, p};
}

TestResult f_variance_test(std::span<const double> x, std::span<const double> y) {
    if (x.size() < 2 || y.size() < 2) {
        throw std::invalid_argument("f_variance_test: both samples need at least 2 values");
    }
    const Moments mx = moments(x);
    const Moments my = moments(y);
    if (mx.var == 0.0 && my.var == 0.0) return {1.0, 1.0};
    if (my.var == 0.0) return {kInf, 0.0};
    if (mx.var == 0.0) return {0.0, 0.0};
    const double f = mx.var / my.var;
    const double d1 = static_cast<double>(mx.n - 1);
    const double d2 = static_cast<double>(my.n - 1);
    const double upper = f_sf(f, d1, d2);
    double p = 2.0 * std::min(upper, 1.0 - upper);
    p = std::clamp(p, 0.0, 1.0);
    return {f, p};
}

std::vector<char> bh_reject(std::span<const double> p_values, double q) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("bh_reject: q must be in (0,1)");
    const std::size_t m = p_values.size();
    std::vector<char> out(m, 0);
    if (m == 0) return out;
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bh_reject: p-values must be in [0,1]");
    }
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });
    double cutoff = -1.0;
    for (std::size_t k = m; k >= 1; --k) {
        // p_(k) <= k*q/m, compared in product form
        if (p_values[idx[k - 1]] * static_cast<double>(m) <= static_cast<double>(k) * q) {
            cutoff = p_values[idx[k - 1]];
            break;
        }
    }
    if (cutoff < 0.0) return out;
    for (std::size_t i = 0; i < m; ++i) {
        out[i] = p_values[i] <= cutoff ? 1 : 0;
    }
    return out;
}

double kth_smallest(std::span<const double> values, std::size_t k) {
    if (k < 1 || k > values.size()) throw std::invalid_argument("kth_smallest: k out of range");
    std::vector<double> v(values.begin(), values.end());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
    return v[k - 1];
}

}  // namespace covcal

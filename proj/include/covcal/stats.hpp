#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace covcal {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Regularized incomplete beta I_x(a,b), continued-fraction evaluation.
/// Relative accuracy ~1e-14 for a,b in the ranges used here.
double regularized_incomplete_beta(double a, double b, double x);

/// Student-t upper tail P(T > t) with (possibly fractional) df degrees of freedom.
double student_t_sf(double t, double df);

/// F-distribution upper tail P(F_{d1,d2} > f).
double f_sf(double f, double d1, double d2);

/// Welch unequal-variance two-sample t-test, two-sided p-value.
/// Both samples constant and equal -> statistic 0, p=1; constant and
/// different -> p=0.
TestResult welch_t_test(std::span<const double> x, std::span<const double> y);

/// Two-sided F-test of equal variances.
TestResult f_variance_test(std::span<const double> x, std::span<const double> y);

/// Benjamini-Hochberg step-up at level q. Rejections use <= at the threshold;
/// ties are rejected together. Returns a rejection mask.
std::vector<char> bh_reject(std::span<const double> p_values, double q);

/// Exact k-th order statistic, k is 1-based.
double kth_smallest(std::span<const double> values, std::size_t k);

}  // namespace covcal

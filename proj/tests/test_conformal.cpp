#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "covcal/conformal.hpp"
#include "covcal/icp.hpp"
#include "covcal/rng.hpp"

using namespace covcal;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> iota_scores(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i + 1;
    return v;
}
}  // namespace

TEST_CASE("conformal rank is robust to floating point") {
    // (m+1)(1-alpha) products that land on integers must not round up
    CHECK(conformal_rank(9, 0.1) == 9);
    CHECK(conformal_rank(19, 0.1) == 18);
    CHECK(conformal_rank(99, 0.1) == 90);
    CHECK(conformal_rank(121, 0.1) == 110);
    CHECK(conformal_rank(0, 0.1) == 1);
}

TEST_CASE("conformal quantile examples") {
    CHECK(conformal_quantile(iota_scores(9), 0.1) == 9.0);
    CHECK(conformal_quantile(std::vector<double>{}, 0.1) == kInf);
    CHECK(conformal_quantile(iota_scores(19), 0.1) == 18.0);
    CHECK_THROWS_AS(conformal_quantile(iota_scores(5), 0.0), std::invalid_argument);
}

TEST_CASE("g bound") {
    CHECK(g_bound(0.0, 7) == 0.0);
    CHECK(g_bound(0.3, 1000000) == doctest::Approx(0.3 / 0.7).epsilon(1e-4));
    CHECK(g_bound(0.1, 100) == doctest::Approx(10.0 / 91.0).epsilon(1e-14));
    CHECK(g_bound(1.0, 5) == doctest::Approx(5.0));
}

TEST_CASE("g bound monotone in delta and n") {
    Rng rng(99);
    for (int it = 0; it < 200; ++it) {
        const double d1 = rng.uniform() * 0.98 + 0.01;
        const double d2 = d1 + rng.uniform() * (0.99 - d1);
        const long n1 = 1 + static_cast<long>(rng.below(500));
        const long n2 = n1 + 1 + static_cast<long>(rng.below(500));
        CHECK(g_bound(d1, n1) <= g_bound(d2, n1) + 1e-15);
        CHECK(g_bound(d1, n1) <= g_bound(d1, n2) + 1e-15);
    }
}

TEST_CASE("corrected alpha") {
    const auto a0 = corrected_alpha(0.1, 0.0, 100);
    CHECK(a0.alpha_prime == doctest::Approx(0.1));
    CHECK(a0.feasible_hint);

    const auto a1 = corrected_alpha(0.1, 0.1, 100);
    CHECK(a1.alpha_prime == doctest::Approx(0.1 - 10.0 / 91.0).epsilon(1e-12));
    CHECK_FALSE(a1.feasible_hint);

    const auto a2 = corrected_alpha(0.1, 0.02, 121);
    CHECK(a2.alpha_prime == doctest::Approx(0.1 - 2.42 / 119.58).epsilon(1e-12));
    CHECK(a2.feasible_hint);
}

TEST_CASE("coverage lower bound") {
    CHECK(coverage_lower_bound(0.1, 0.0, 50) == doctest::Approx(0.9));
    CHECK(coverage_lower_bound(0.1, 0.3, 121) == doctest::Approx(1.0 - 0.1 - 36.3 / 85.7).epsilon(1e-12));
    CHECK(coverage_lower_bound(0.1, 0.95, 10) == 0.0);
    Rng rng(7);
    for (int it = 0; it < 100; ++it) {
        const double alpha = 0.02 + rng.uniform() * 0.5;
        const double delta = rng.uniform();
        const long n = 1 + static_cast<long>(rng.below(300));
        CHECK(coverage_lower_bound(alpha, delta, n) <= 1.0 - alpha + 1e-15);
    }
}

TEST_CASE("recovery delta bound") {
    RecoveryParams pr;
    pr.eps_cx = 0.0;
    CHECK(recovery_delta_bound(0.5, pr) == 0.0);
    pr.eps_cx = 0.3;
    CHECK(recovery_delta_bound(1.0, pr) == 0.0);
    pr = RecoveryParams{0.01, 0.0, 0.05, 5};
    CHECK(recovery_delta_bound(0.9, pr) == doctest::Approx(0.005 / 0.86).epsilon(1e-12));
    pr = RecoveryParams{0.5, 0.0, 0.2, 3};  // u_bar*eps_fn >= 1 -> vacuous
    CHECK(recovery_delta_bound(0.9, pr) <= 1.0);
}

TEST_CASE("intervals") {
    const auto iv = make_interval(0.0, 2.0);
    CHECK(iv.covers(1.5));
    CHECK(iv.covers(2.0));
    CHECK_FALSE(iv.covers(2.0001));
    const auto inf_iv = make_interval(3.0, kInf);
    CHECK(inf_iv.covers(1e300));
    CHECK_FALSE(inf_iv.feasible);
    const auto pt = make_interval(5.0, 0.0);
    CHECK(pt.covers(5.0));
    CHECK_FALSE(pt.covers(5.0 + 1e-9));
}

TEST_CASE("exchangeable coverage of the conformal quantile") {
    // m iid scores + 1 iid test score: coverage must sit in
    // [1-alpha, 1-alpha + 1/(m+1)] up to Monte Carlo error
    const double alpha = 0.1;
    for (int m : {9, 19, 99}) {
        const int trials = 20000;
        Rng rng(derive_seed(1234, {static_cast<std::uint64_t>(m)}));
        long covered = 0;
        std::vector<double> scores(static_cast<std::size_t>(m));
        for (int t = 0; t < trials; ++t) {
            for (auto& s : scores) s = std::fabs(rng.normal());
            const double test = std::fabs(rng.normal());
            if (test <= conformal_quantile(scores, alpha)) ++covered;
        }
        const double cov = static_cast<double>(covered) / trials;
        const double lo = 1.0 - alpha;
        const double hi = 1.0 - alpha + 1.0 / (m + 1);
        const double se = std::sqrt(cov * (1.0 - cov) / trials);
        CHECK(cov >= lo - 3.0 * se);
        CHECK(cov <= hi + 3.0 * se);
    }
}

TEST_CASE("weighted quantile reduces to conformal quantile for equal weights") {
    Rng rng(20240);
    for (int it = 0; it < 2000; ++it) {
        const int n = static_cast<int>(rng.below(40));
        std::vector<double> scores(static_cast<std::size_t>(n));
        for (auto& s : scores) s = rng.uniform() * 10.0;
        const double alpha = 0.01 + rng.uniform() * 0.6;
        const double w = 0.1 + rng.uniform() * 5.0;
        std::vector<double> weights(scores.size(), w);
        const double a = conformal_quantile(scores, alpha);
        const double b = weighted_conformal_quantile(scores, weights, w, alpha);
        if (std::isinf(a)) {
            CHECK(std::isinf(b));
        } else {
            CHECK(a == b);
        }
    }
}

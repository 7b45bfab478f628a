#include "doctest.h"

#include <cmath>
#include <random>

#include "polyext/stats.hpp"

using namespace polyext::stats;

TEST_CASE("summary and quantiles") {
    auto s = summarize({1, 2, 3, 4});
    CHECK(s.mean == 2.5);
    CHECK(s.variance == doctest::Approx(5.0 / 3.0));
    CHECK(s.stderr_mean == doctest::Approx(std::sqrt(5.0 / 12.0)));
    CHECK(s.min == 1);
    CHECK(s.max == 4);
    CHECK(summarize({7}).variance == 0.0);
    CHECK(quantile({4, 1, 3, 2}, 0.25) == doctest::Approx(1.75));
    CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
}

TEST_CASE("Kolmogorov distribution") {
    CHECK(kolmogorov_tail(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
    CHECK(kolmogorov_tail(1.3580986393225507) == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(kolmogorov_tail(0.0) == 1.0);
    CHECK(kolmogorov_tail(10.0) < 1e-80);
}

TEST_CASE("KS tests") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> x(2000), y(2000);
    for (auto& v : x) v = nd(rng);
    for (auto& v : y) v = nd(rng) + 0.3;
    CHECK(ks_normal(x, 0.0, 1.0).p_value > 0.01);
    CHECK(ks_normal(y, 0.0, 1.0).p_value < 1e-6);
    CHECK(ks_two_sample(x, x).D == 0.0);
    CHECK(ks_two_sample(x, y).p_value < 1e-6);
    // D for a single point at the median is 0.5.
    CHECK(ks_normal({0.0}, 0.0, 1.0).D == doctest::Approx(0.5));
}

TEST_CASE("Mann-Kendall") {
    auto up = mann_kendall({1, 2, 3});
    CHECK(up.exact);
    CHECK(up.S == 3);
    CHECK(up.p_increasing == doctest::Approx(1.0 / 6.0));
    CHECK(up.p_decreasing == 1.0);
    auto four = mann_kendall({1, 2, 3, 4});
    CHECK(four.p_increasing == doctest::Approx(1.0 / 24.0));
    auto ties = mann_kendall({1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6});
    CHECK_FALSE(ties.exact);
    CHECK(ties.p_increasing < 1e-3);
}

TEST_CASE("paired t test") {
    auto t = paired_t({2, 4, 6, 8}, {1, 2, 3, 4});
    CHECK(t.mean_diff == 2.5);
    CHECK(t.t == doctest::Approx(2.5 / (std::sqrt(5.0 / 3.0) / 2.0)));
    CHECK(t.p_greater == doctest::Approx(0.015233145831085489).epsilon(1e-9));
    CHECK(t.p_less == doctest::Approx(1.0 - t.p_greater));
    CHECK(t.p_two_sided == doctest::Approx(2.0 * t.p_greater));
    auto z = paired_t({2, 3, 4}, {1, 2, 3});
    CHECK(z.p_greater == 0.0);
    CHECK(z.p_less == 1.0);
}

TEST_CASE("linear regression") {
    auto r = linear_regression({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(r.slope == doctest::Approx(2.0));
    CHECK(r.intercept == doctest::Approx(1.0));
    CHECK(r.r2 == doctest::Approx(1.0));
    CHECK(r.slope_se == doctest::Approx(0.0));
    auto n = linear_regression({0, 1, 2, 3}, {0, 1, 1, 2});
    CHECK(n.slope == doctest::Approx(0.6));
    CHECK(n.r2 == doctest::Approx(0.9));
}

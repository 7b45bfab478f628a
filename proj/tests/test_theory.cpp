#include "doctest.h"

#include <cmath>
#include <random>

#include "polyext/errors.hpp"
#include "polyext/theory.hpp"

using namespace polyext;
using namespace polyext::theory;

TEST_CASE("sigma star by quadrature and closed form") {
    CHECK(std::fabs(sigma_star(0.5) - 0.7578747639260244) < 1e-12);
    CHECK(std::fabs(sigma_star(0.9) - 1.7728270268359947) < 1e-12);
    for (double b = 0.02; b < 1.0; b += 0.02) {
        CAPTURE(b);
        CHECK(std::fabs(sigma_star(b) - sigma_star_closed_form(b)) < 1e-9);
    }
}

TEST_CASE("sigma star is increasing and below the naive bound") {
    double prev = 0;
    for (int j = 1; j <= 50; ++j) {
        double b = 0.98 * j / 50.0;
        double s = sigma_star(b);
        CHECK(s > prev);
        CHECK(s < naive_bound(b).normalized);
        CHECK(s <= std::sqrt(2.0 * lambda_sq(b)));
        prev = s;
    }
    CHECK(naive_bound(0.5).normalized == doctest::Approx(0.758527616440932).epsilon(1e-12));
    CHECK(naive_bound(0.9).normalized == doctest::Approx(std::sqrt(2.0 * std::log(1.0 / 0.19))).epsilon(1e-12));
    CHECK(naive_bound(0.5).literal == doctest::Approx(std::sqrt(lambda_sq(0.5))));
}

TEST_CASE("lambda squared") {
    CHECK(lambda_sq(0.5) == doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-15));
    CHECK(lambda_sq_interval(0.0, 1.0, 0.7) == doctest::Approx(lambda_sq(0.7)).epsilon(1e-15));
    CHECK(lambda_sq_interval(0.3, 0.3, 0.7) == 0.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int j = 0; j < 1000; ++j) {
        double a = U(rng), b = U(rng), c = U(rng), bh = 0.01 + 0.98 * U(rng);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        CHECK(std::fabs(lambda_sq_interval(a, b, bh) + lambda_sq_interval(b, c, bh) - lambda_sq_interval(a, c, bh)) <
              1e-12);
    }
    for (int M : {1, 3, 8, 40}) {
        double s = 0;
        for (int i = 1; i <= M; ++i) s += lambda_sq_interval(double(i - 1) / M, double(i) / M, 0.5);
        CHECK(std::fabs(s - lambda_sq(0.5)) < 1e-12);
    }
    // d/du lambda^2_{0,u} = sigma(u)^2
    double u = 0.4, h = 1e-6;
    CHECK((lambda_sq_interval(0, u + h, 0.8) - lambda_sq_interval(0, u - h, 0.8)) / (2 * h) ==
          doctest::Approx(std::pow(sigma_profile(u, 0.8), 2)).epsilon(1e-8));
    CHECK_THROWS_AS(lambda_sq(1.0), ValidationError);
    CHECK_THROWS_AS(lambda_sq_interval(0.6, 0.2, 0.5), ValidationError);
}

TEST_CASE("exponential integral") {
    CHECK(exponential_integral_e1(1.0) == doctest::Approx(0.21938393439552027).epsilon(1e-13));
    // Small-z series: E1(z) = -gamma - log z + z - z^2/4 + ...
    double z = 1e-4;
    CHECK(exponential_integral_e1(z) ==
          doctest::Approx(-0.5772156649015329 - std::log(z) + z - z * z / 4).epsilon(1e-12));
    CHECK(exponential_integral_e1(800.0) == 0.0);
}

TEST_CASE("EW covariance of a Gaussian bump against the closed form") {
    // For psi = A exp(-a|x|^2): sigma^2 = A^2 pi log(1 + a) / a^2.
    for (double a : {1.0, 2.0}) {
        double hw = 6.0 / std::sqrt(a);
        auto g = sample_on_grid([a](double x, double y) { return std::exp(-a * (x * x + y * y)); }, hw, 0.1);
        double want = M_PI * std::log1p(a) / (a * a);
        CAPTURE(a);
        CHECK(ew_covariance(g) == doctest::Approx(want).epsilon(2e-3));
    }
}

TEST_CASE("EW covariance self-convergence, bilinearity, symmetry") {
    auto bump = [](double x, double y) { return std::exp(-(x * x + y * y)); };
    double c1 = ew_covariance(sample_on_grid(bump, 6.0, 0.05));
    double c2 = ew_covariance(sample_on_grid(bump, 6.0, 0.025));
    CHECK(std::fabs(c1 - c2) / c2 < 1e-3);

    auto g = sample_on_grid(bump, 5.0, 0.1);
    auto g2 = sample_on_grid([&](double x, double y) { return 3.0 * bump(x, y); }, 5.0, 0.1);
    auto h = sample_on_grid([](double x, double y) { return x * std::exp(-(x * x + y * y) + 0.3 * y); }, 5.0, 0.1);
    CHECK(ew_covariance(g2) == doctest::Approx(9.0 * ew_covariance(g)).epsilon(1e-12));
    CHECK(ew_covariance(g, h) == doctest::Approx(ew_covariance(h, g)).epsilon(1e-12));
    CHECK(ew_covariance(h) > 0.0);
    auto zero = sample_on_grid([](double, double) { return 0.0; }, 2.0, 0.1);
    CHECK(ew_covariance(zero) == 0.0);
    auto wide = sample_on_grid([](double, double) { return 1.0; }, 2.0, 0.1);
    CHECK_THROWS_AS(ew_covariance(wide), ValidationError);
}

TEST_CASE("variational bound values") {
    CHECK(variational_bound({3, 1, 0.0, {1, 1, 1}}) == 3.0);
    CHECK(variational_bound({5, 2, 4.0, {2, 2, 2, 2, 2}}) == 6.0);
    VariationalInstance inst{4, 2, 1.5, {0.5, 1.0, 1.5, 3.0}};
    VariationalInstance scaled{4, 2, 3.0, {1.0, 2.0, 3.0, 6.0}};
    CHECK(variational_bound(inst) == variational_bound(scaled));
    CHECK_THROWS_AS(VariationalInstance({3, 1, 0.0, {2, 1, 1}}).validate(), ValidationError);
    CHECK_THROWS_AS(VariationalInstance({3, 4, 0.0, {1, 1, 1}}).validate(), ValidationError);
}

namespace {

VariationalInstance random_instance(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    VariationalInstance inst;
    inst.M = 1 + std::int64_t(rng() % 6);
    inst.t = 1 + std::int64_t(rng() % std::uint64_t(inst.M));
    inst.a = U(rng) < 0.2 ? 0.0 : 3.0 * U(rng);
    double f = 0.2 + U(rng);
    for (std::int64_t s = 0; s < inst.M; ++s) {
        inst.f.push_back(f);
        f += U(rng) < 0.3 ? 0.0 : U(rng);
    }
    return inst;
}

}  // namespace

TEST_CASE("random feasible points never beat the bound") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int j = 0; j < 1000; ++j) {
        auto inst = random_instance(rng);
        std::int64_t n = inst.M - inst.t + 1;
        // Sample suffix sums G(M) <= ... <= G(t) inside the tail constraints.
        std::vector<double> G((std::size_t)(n + 1), 0.0);
        double F = 0;
        for (std::int64_t u = inst.M; u >= inst.t; --u) {
            F += inst.f[std::size_t(u - 1)];
            std::size_t k = std::size_t(u - inst.t);
            double lo = G[k + 1], hi = inst.a + F;
            G[k] = u == inst.t ? hi + 1e-9 + U(rng) : lo + (hi - lo) * U(rng);
        }
        std::vector<double> g((std::size_t)(n));
        for (std::size_t k = 0; k < std::size_t(n); ++k) g[k] = G[k] - G[k + 1];
        REQUIRE(variational_feasible(inst, g));
        CHECK(variational_objective(inst, g) >= variational_bound(inst) - 1e-12);
    }
}

TEST_CASE("grid search respects the bound and matches brute force and descent") {
    std::mt19937_64 rng(5);
    for (int j = 0; j < 200; ++j) {
        auto inst = random_instance(rng);
        double step = 0.1;
        auto grid = variational_search_grid(inst, step);
        auto desc = variational_search_descent(inst, step);
        double slack = step * double(inst.M) / inst.f[std::size_t(inst.t - 1)];
        CHECK(variational_feasible(inst, grid.g));
        CHECK(grid.value >= variational_bound(inst) - slack);
        // Descent works on the continuum, so it can only undercut the grid, by at most the slack.
        CHECK(desc.value >= variational_bound(inst) - 1e-12);
        CHECK(desc.value <= grid.value + 1e-12);
        CHECK(grid.value - desc.value <= slack + 1e-12);
        if (inst.M - inst.t + 1 <= 3 && inst.a < 1.5) {
            auto brute = variational_search_brute(inst, step);
            CHECK(brute.value == doctest::Approx(grid.value).epsilon(1e-12));
            CHECK(brute.g == grid.g);
        }
    }
}

TEST_CASE("with a = 0 the minimizer is close to g = f") {
    VariationalInstance inst{3, 1, 0.0, {1, 1, 1}};
    auto r = variational_search_grid(inst, 0.05);
    CHECK(r.value == doctest::Approx(3.05).epsilon(1e-12));
    CHECK(r.g[0] == doctest::Approx(1.05));
    CHECK(r.g[1] == doctest::Approx(1.0));
    CHECK(r.g[2] == doctest::Approx(1.0));
    VariationalInstance rising{4, 1, 0.0, {1, 2, 3, 4}};
    auto s = variational_search_grid(rising, 0.01);
    CHECK(s.value - variational_bound(rising) <= 0.01 + 1e-12);
    for (std::size_t k = 1; k < 4; ++k) CHECK(s.g[k] == doctest::Approx(rising.f[k]).epsilon(1e-9));
}

TEST_CASE("moment condition") {
    QSpec two;
    two.c = 2;
    auto mc = moment_condition(two, 4, 4, 0.5, 1 << 20);
    CHECK(mc.rhs == doctest::Approx(3.0));
    CHECK(mc.holds);
    QSpec sl{QSpec::Kind::sqrt_log, 2.0, {}};
    auto m2 = moment_condition(sl, 8, 8, 0.5, 4096);
    CHECK(m2.q == 5);
    CHECK(m2.lhs == doctest::Approx(10.0 / std::log(4096.0)));
    CHECK(m2.holds);
    QSpec tab{QSpec::Kind::table, 0.0, {{100, 9}}};
    CHECK(tab.at(100) == 9);
    CHECK_THROWS_AS(tab.at(101), ValidationError);
    CHECK_FALSE(moment_condition(tab, 1, 1, 0.9, 100).holds);
}

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polyext/errors.hpp"
#include "polyext/multiscale.hpp"
#include "polyext/walk.hpp"

using namespace polyext;
using multiscale::schedule;
using polymer::Model;
using polymer::SweepOptions;
using polymer::WallMode;

namespace {

SweepOptions exact() {
    SweepOptions o;
    o.policy = polymer::WindowPolicy::exact();
    return o;
}

}  // namespace

TEST_CASE("schedule uses exact integer ceilings") {
    auto s = schedule(1000, 3);
    CHECK(s.t == std::vector<std::int64_t>{1, 10, 100, 1000});
    // 1000^(2/6) = 10 exactly; floating pow would round it up to 11.
    CHECK(s.r == std::vector<std::int64_t>{1, 4, 10, 32});
    auto b = schedule(1024, 5);
    CHECK(b.t == std::vector<std::int64_t>{1, 4, 16, 64, 256, 1024});
    CHECK(b.r == std::vector<std::int64_t>{1, 2, 4, 8, 16, 32});
    CHECK(b.r_at(-1) == 1);
    CHECK(b.r_at(0) == 1);
    CHECK(b.start_time(1) == 0);
    CHECK(b.start_time(3) == 16);
    CHECK_THROWS_AS(schedule(1, 3), ValidationError);
    CHECK_THROWS_AS(schedule(100, 0), ValidationError);
    CHECK_THROWS_AS(b.start_time(6), ValidationError);
}

TEST_CASE("schedule is nondecreasing for awkward N") {
    for (std::int64_t N : {2, 3, 7, 1000, 4095, 4097}) {
        for (std::int64_t M : {1, 2, 5, 8}) {
            auto s = schedule(N, M);
            CHECK(s.t.back() == N);
            CHECK(std::is_sorted(s.t.begin(), s.t.end()));
            CHECK(std::is_sorted(s.r.begin(), s.r.end()));
        }
    }
}

TEST_CASE("per-scale log W telescopes to log Z") {
    env::DisorderView e(31);
    auto s = schedule(256, 4);
    Model m = Model::subcritical(0.5, 256);
    auto w = multiscale::log_W_profile(e, m, {2, 1}, s, exact());
    auto lz = polymer::forward_log_Z(e, m, {2, 1}, {256}, exact());
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(lz[0]).epsilon(1e-12));
    for (std::int64_t k = 1; k <= 4; ++k)
        CHECK(multiscale::ratio_W(e, m, {2, 1}, k, s, exact()) == doctest::Approx(w[std::size_t(k - 1)]).epsilon(1e-12));
}

TEST_CASE("W tilde against an explicit composition") {
    env::DisorderView e(64);
    auto s = schedule(16, 2);
    Model m = Model::subcritical(0.6, 16);
    Point x{0, 0};
    // Scale 1: the wall sqrt(4) log 16 is wider than the 4 steps, so W~_1 = W_1.
    CHECK(multiscale::ratio_W_tilde(e, m, x, 1, s, WallMode::start, exact()) ==
          doctest::Approx(multiscale::ratio_W(e, m, x, 1, s, exact())).epsilon(1e-12));
    // Scale 2: sum over |y| <= r_1 log 16 of mu_4(0, y) Z~_{12}(y) under theta_4.
    double w = multiscale::wall_radius(s, 2), rho = multiscale::endpoint_radius(s, 2);
    CHECK(w == doctest::Approx(std::sqrt(12.0) * std::log(16.0)));
    CHECK(rho == doctest::Approx(2.0 * std::log(16.0)));
    auto mu = polymer::forward_endpoint(e, m, x, 4, exact());
    double total = 0;
    for (std::int64_t yy = -4; yy <= 4; ++yy)
        for (std::int64_t xx = -4; xx <= 4; ++xx) {
            Point y{xx, yy};
            if (mu.prob(y) == 0.0 || l2(y) > rho) continue;
            SweepOptions o = exact();
            o.wall = polymer::WallSpec{y, w};
            auto z = polymer::backward_sweep(e.shifted(4), m, 1, 12, Box::around(y), o);
            total += mu.prob(y) * std::exp(z.log_value(y));
        }
    CHECK(multiscale::ratio_W_tilde(e, m, x, 2, s, WallMode::start, exact()) ==
          doctest::Approx(std::log(total)).epsilon(1e-12));
}

TEST_CASE("W tilde never exceeds W and the table bound never exceeds W tilde") {
    env::DisorderView e(9);
    auto s = schedule(64, 3);
    Model m = Model::subcritical(0.5, 64);
    Box xs = Box::centered({0, 0}, 2);
    for (WallMode mode : {WallMode::start, WallMode::origin}) {
        auto tab = multiscale::scale_table(e, m, s, xs, mode, exact());
        for (std::int64_t i = 0; i < xs.area(); ++i) {
            Point x = xs.at(i);
            auto w = multiscale::log_W_profile(e, m, x, s, exact());
            CHECK(tab.log_Z[std::size_t(i)] == doctest::Approx(std::accumulate(w.begin(), w.end(), 0.0)).epsilon(1e-12));
            for (std::int64_t k = 1; k <= 3; ++k) {
                double wt = multiscale::ratio_W_tilde(e, m, x, k, s, mode, exact());
                CHECK(tab.log_W[std::size_t(k - 1)][std::size_t(i)] ==
                      doctest::Approx(w[std::size_t(k - 1)]).epsilon(1e-12));
                CHECK(wt <= w[std::size_t(k - 1)] + 1e-12);
                CHECK(tab.log_W_tilde_lo[std::size_t(k - 1)][std::size_t(i)] <= wt + 1e-12);
            }
        }
    }
}

TEST_CASE("barrier constants and membership") {
    CHECK(multiscale::barrier_M0(0.5) == doctest::Approx(std::pow(std::sqrt(2.0 / 3.0) + 1.0, 2)));
    multiscale::BarrierSpec b;
    b.M = 3;
    b.k = 2;
    b.epsilon = 0.1;
    b.cap = 100;
    std::vector<double> lambdas{0.1, 0.2, 0.3};
    std::int64_t N = 1 << 10;
    double sl = std::sqrt(std::log(double(N)));
    double coef = std::sqrt(2.0) * 1.1 / std::sqrt(3.0);
    // alpha_3 may not exceed about 0.97; alpha_2 + alpha_3 must exceed about 1.45.
    b.alphas = {2, 0};
    CHECK(multiscale::barrier_member(b, lambdas, N));
    b.alphas = {1, 0};
    CHECK_FALSE(multiscale::barrier_member(b, lambdas, N));
    b.alphas = {1, 1};
    CHECK(coef * 0.3 * sl + 0.1 * sl < 1.0);
    CHECK_FALSE(multiscale::barrier_member(b, lambdas, N));
    b.alphas = {1, 0};
    b.level_slack = 0.6;
    CHECK(multiscale::barrier_member(b, lambdas, N));
    b.level_slack = 0.0;
    b.alphas = {0, 2};
    CHECK_FALSE(multiscale::barrier_member(b, lambdas, N));
    b.alphas = {0, 200};
    CHECK_THROWS_AS(multiscale::barrier_member(b, lambdas, N), ValidationError);
}

TEST_CASE("p_hat is a probability on Z^2") {
    for (std::int64_t n : {1, 10, 100}) {
        double s = 0;
        for (std::int64_t y = -200; y <= 200; ++y)
            for (std::int64_t x = -200; x <= 200; ++x) s += multiscale::p_hat({x, y}, n, 0.125);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("domination check threshold and zero temperature") {
    env::DisorderView e(1);
    auto s = schedule(256, 2);
    auto rep = multiscale::domination_check(e, Model{0.0, 256}, s, 4.0, 2, {{0, 0}, {1, 0}}, 0.125, exact());
    CHECK(rep.threshold == doctest::Approx(std::pow(256.0, 1.0 / 16.0)));
    CHECK(rep.levels.size() == 2);
    // At beta = 0 the endpoint law is the walk kernel; the ratio at the origin is p_16(0) C(16).
    CHECK(rep.levels[0].worst_ratio >= walk::return_prob(8) * multiscale::p_hat_normalizer(16, 0.125) - 1e-12);
    CHECK_THROWS_AS(multiscale::domination_check(e, Model{0.0, 256}, s, 0.5, 1, {{0, 0}}, 0.125), ValidationError);
}

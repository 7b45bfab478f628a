#include "doctest.h"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>

#include "polyext/errors.hpp"
#include "polyext/polymer.hpp"
#include "polyext/walk.hpp"

using namespace polyext;
using polymer::Model;
using polymer::SweepOptions;

namespace {

const Point kSteps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

// Sum over all 4^(t-s+1) paths from x (at time s-1) of 4^-(t-s+1) exp(sum beta omega - beta^2/2),
// restricted to paths inside `wall` at times s..t. `end` picks the endpoint when set.
double enumerate_Z(const env::DisorderView& e, double beta, std::int64_t s, std::int64_t t, Point x,
                   std::optional<Box> wall = {}, std::optional<Point> end = {}) {
    double total = 0;
    std::function<void(std::int64_t, Point, double)> rec = [&](std::int64_t i, Point p, double w) {
        if (i > t) {
            if (!end || p == *end) total += w;
            return;
        }
        for (Point d : kSteps) {
            Point q = p + d;
            if (wall && !wall->contains(q)) continue;
            rec(i + 1, q, w * 0.25 * std::exp(beta * e.omega(i, q) - 0.5 * beta * beta));
        }
    };
    rec(s, x, 1.0);
    return total;
}

SweepOptions exact() {
    SweepOptions o;
    o.policy = polymer::WindowPolicy::exact();
    return o;
}

}  // namespace

TEST_CASE("backward sweep equals path enumeration on 100 seeds") {
    std::mt19937_64 rng(11);
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        env::DisorderView e(rng());
        std::int64_t s = 1 + std::int64_t(rng() % 3);
        std::int64_t t = s + std::int64_t(rng() % 6);
        if (t - s + 1 > 6) t = s + 5;
        double beta = 0.2 + 0.8 * double(rng() % 1000) / 1000.0;
        Model m{beta, 6};
        Box targets{-1, 1, 0, 1};
        auto f = polymer::backward_sweep(e, m, s, t, targets, exact());
        for (std::int64_t y = targets.y0; y <= targets.y1; ++y)
            for (std::int64_t x = targets.x0; x <= targets.x1; ++x) {
                double want = std::log(enumerate_Z(e, beta, s, t, {x, y}));
                worst = std::max(worst, std::fabs(f.log_value({x, y}) - want));
            }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("forward sweep equals path enumeration on 100 seeds") {
    std::mt19937_64 rng(12);
    double worst = 0, worst_ptp = 0;
    for (int k = 0; k < 100; ++k) {
        env::DisorderView e(rng(), rng() % 50);
        double beta = 0.9;
        Model m{beta, 6};
        Point x{std::int64_t(rng() % 5) - 2, std::int64_t(rng() % 5) - 2};
        std::vector<std::int64_t> times{0, 1, 2, 3, 4, 5, 6};
        auto lz = polymer::forward_log_Z(e, m, x, times, exact());
        CHECK(lz[0] == 0.0);
        for (std::size_t j = 1; j < times.size(); ++j)
            worst = std::max(worst, std::fabs(lz[j] - std::log(enumerate_Z(e, beta, 1, times[j], x))));
        Point y = x + Point{1, -2};
        auto p = polymer::point_to_point(e, m, x, y, 5, exact());
        CHECK(p.parity_ok);
        worst_ptp = std::max(worst_ptp, std::fabs(p.value - enumerate_Z(e, beta, 1, 5, x, {}, y)) / p.value);
    }
    CHECK(worst < 1e-10);
    CHECK(worst_ptp < 1e-10);
}

TEST_CASE("walled sweeps equal walled enumeration") {
    std::mt19937_64 rng(13);
    for (int k = 0; k < 20; ++k) {
        env::DisorderView e(rng());
        Model m{0.7, 6};
        polymer::WallSpec wall{{0, 1}, 1.7};
        SweepOptions o = exact();
        o.wall = wall;
        Box targets{-1, 1, 0, 2};
        auto f = polymer::backward_sweep(e, m, 2, 7, targets, o);
        for (std::int64_t y = 0; y <= 2; ++y)
            for (std::int64_t x = -1; x <= 1; ++x) {
                double want = enumerate_Z(e, 0.7, 2, 7, {x, y}, wall.box());
                CHECK(f.log_value({x, y}) == doctest::Approx(std::log(want)).epsilon(1e-12));
            }
        auto lz = polymer::forward_log_Z(e, m, {0, 0}, {6}, o);
        CHECK(lz[0] == doctest::Approx(std::log(enumerate_Z(e, 0.7, 1, 6, {0, 0}, wall.box()))).epsilon(1e-12));
    }
}

TEST_CASE("zero temperature gives Z = 1, or the survival probability with a wall") {
    env::DisorderView e(3);
    Model m{0.0, 16};
    auto f = polymer::backward_sweep(e, m, 1, 16, Box::centered({0, 0}, 2), exact());
    for (double v : f.values) CHECK(std::fabs(v + f.log_offset) < 1e-13);

    SweepOptions o = exact();
    o.wall = polymer::WallSpec{{0, 0}, 1.0};
    auto w = polymer::forward_log_Z(e, m, {0, 0}, {1, 2}, o);
    // From the origin in a 3x3 box: every first step stays; from an edge site 3 of 4 moves stay.
    CHECK(std::exp(w[0]) == doctest::Approx(1.0));
    CHECK(std::exp(w[1]) == doctest::Approx(0.75));
}

TEST_CASE("truncated windows give lower bounds and become exact at full margin") {
    env::DisorderView e(77);
    Model m = Model::subcritical(0.5, 64);
    SweepOptions tight;
    tight.policy.c = 0.1;
    auto lo = polymer::backward_sweep(e, m, 1, 64, Box::around({0, 0}), tight);
    auto ex = polymer::backward_sweep(e, m, 1, 64, Box::around({0, 0}), exact());
    CHECK(lo.log_value({0, 0}) <= ex.log_value({0, 0}));
    SweepOptions wide;
    wide.policy.c = 100.0;
    auto same = polymer::backward_sweep(e, m, 1, 64, Box::around({0, 0}), wide);
    CHECK(same.log_value({0, 0}) == ex.log_value({0, 0}));
    CHECK(polymer::WindowPolicy{1.0}.margin(100, 1024) == 80);
    CHECK(polymer::WindowPolicy{0.35}.margin(1024, 1024) == 89);
    CHECK(polymer::WindowPolicy::exact().margin(37, 1 << 20) == 37);
}

TEST_CASE("forward and backward agree at moderate size") {
    env::DisorderView e(5150);
    Model m = Model::subcritical(0.5, 256);
    SweepOptions o;
    o.policy.c = 1.0;
    auto b = polymer::backward_sweep(e, m, 1, 256, Box::centered({3, -2}, 1), o);
    for (Point x : {Point{3, -2}, Point{2, -1}, Point{4, -3}}) {
        auto f = polymer::forward_log_Z(e, m, x, {256}, o);
        CHECK(f[0] == doctest::Approx(b.log_value(x)).epsilon(1e-12));
    }
}

TEST_CASE("time shift: Z_{s,t} equals Z_{1,t-s+1} of the shifted field") {
    env::DisorderView e(8);
    Model m{0.6, 32};
    auto a = polymer::backward_sweep(e, m, 11, 30, Box::around({1, 1}), exact());
    auto b = polymer::backward_sweep(e.shifted(10), m, 1, 20, Box::around({1, 1}), exact());
    CHECK(a.log_value({1, 1}) == doctest::Approx(b.log_value({1, 1})).epsilon(1e-13));
}

TEST_CASE("endpoint measure is a probability and matches point-to-point weights") {
    env::DisorderView e(21);
    Model m{0.8, 10};
    auto mu = polymer::forward_endpoint(e, m, {0, 0}, 7, exact());
    double s = 0;
    for (double p : mu.probs) s += p;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(mu.prob({0, 0}) == 0.0);
    double z = std::exp(mu.log_Z);
    for (Point y : {Point{1, 0}, Point{-2, 3}, Point{7, 0}}) {
        auto p = polymer::point_to_point(e, m, {0, 0}, y, 7, exact());
        CHECK(mu.prob(y) * z == doctest::Approx(p.value).epsilon(1e-12));
    }
    CHECK_FALSE(polymer::point_to_point(e, m, {0, 0}, {1, 1}, 7, exact()).parity_ok);
}

TEST_CASE("terminal field composes two sweeps into one") {
    env::DisorderView e(4);
    Model m{0.5, 20};
    Box xs = Box::centered({0, 0}, 1);
    auto tail = polymer::backward_sweep_scaled(e, m, 9, 20, xs.expanded(8), exact());
    auto head = polymer::backward_sweep_scaled(e, m, 1, 8, xs, exact(), &tail);
    auto whole = polymer::backward_sweep_scaled(e, m, 1, 20, xs, exact());
    for (std::int64_t y = -1; y <= 1; ++y)
        for (std::int64_t x = -1; x <= 1; ++x)
            CHECK(head.log_value({x, y}) == doctest::Approx(whole.log_value({x, y})).epsilon(1e-12));
}

TEST_CASE("renormalization keeps large systems finite") {
    env::DisorderView e(1);
    Model m{1.5, 2000};
    SweepOptions o;
    o.policy.c = 0.3;
    auto f = polymer::forward_log_Z(e, m, {0, 0}, {2000}, o);
    CHECK(std::isfinite(f[0]));
    CHECK(f[0] > -2000.0);
}

TEST_CASE("log field accessors") {
    polymer::ScaledField sf{Box{0, 1, 0, 0}, {2.0, 0.0}, 1.5};
    auto lf = polymer::to_log_field(sf, 1, 4);
    CHECK(lf.present({0, 0}));
    CHECK_FALSE(lf.present({1, 0}));
    CHECK_FALSE(lf.present({5, 5}));
    CHECK(lf.log_value({0, 0}) == doctest::Approx(std::log(2.0) + 1.5));
    CHECK(lf.log_value({1, 0}) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("macroscopic sites round toward zero") {
    CHECK(polymer::macroscopic_site(-0.99, 0.55, 100) == Point{-9, 5});
    CHECK(polymer::macroscopic_site(1.0, -1.0, 1024) == Point{32, -32});
    env::DisorderView e(2);
    auto phi = polymer::phi_field(e, 16, 0.5, {{0.0, 0.0}, {0.5, -0.5}});
    Model m = Model::subcritical(0.5, 16);
    auto lz = polymer::forward_log_Z(e, m, {2, -2}, {16});
    CHECK(phi[1] == doctest::Approx(std::sqrt(std::log(16.0)) * lz[0]).epsilon(1e-12));
}

TEST_CASE("sweep errors") {
    env::DisorderView e(1);
    Model m{0.5, 10};
    CHECK_THROWS_AS(polymer::backward_sweep(e, m, 0, 3, Box::around({0, 0})), ValidationError);
    CHECK_THROWS_AS(polymer::backward_sweep(e, m, 3, 2, Box::around({0, 0})), ValidationError);
    SweepOptions small = exact();
    small.window = Box::centered({0, 0}, 2);
    CHECK_THROWS_AS(polymer::backward_sweep(e, m, 1, 5, Box::around({0, 0}), small), WindowError);
    SweepOptions budget = exact();
    budget.max_sites = 10;
    CHECK_THROWS_AS(polymer::backward_sweep(e, m, 1, 5, Box::around({0, 0}), budget), BudgetError);
    CHECK_THROWS_AS(polymer::wall_mode_from_string("middle"), ValidationError);
    CHECK_THROWS_AS(polymer::point_to_point(e, m, {0, 0}, {9, 0}, 3), ValidationError);
}

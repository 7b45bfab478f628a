#include "doctest.h"

#include <cmath>
#include <map>
#include <utility>

#include "polyext/errors.hpp"
#include "polyext/walk.hpp"

using namespace polyext;

namespace {

// Plain four-neighbour convolution on Z^2, kept as maps.
std::map<std::pair<long, long>, double> convolve(int n) {
    std::map<std::pair<long, long>, double> cur{{{0, 0}, 1.0}};
    for (int s = 0; s < n; ++s) {
        std::map<std::pair<long, long>, double> next;
        for (auto& [p, w] : cur) {
            next[{p.first + 1, p.second}] += 0.25 * w;
            next[{p.first - 1, p.second}] += 0.25 * w;
            next[{p.first, p.second + 1}] += 0.25 * w;
            next[{p.first, p.second - 1}] += 0.25 * w;
        }
        cur.swap(next);
    }
    return cur;
}

}  // namespace

TEST_CASE("overlap R_N small values are exact") {
    CHECK(walk::overlap_R(1) == 0.25);
    CHECK(walk::overlap_R(2) == 0.390625);
    CHECK(walk::return_prob(1) == 0.25);
    CHECK(walk::return_prob(3) == doctest::Approx(400.0 / 4096.0).epsilon(1e-14));
}

TEST_CASE("kernel table against direct convolution") {
    for (int n : {1, 2, 3, 7, 12}) {
        auto direct = convolve(n);
        auto k = walk::kernel(n);
        double worst = 0;
        for (long y = -n - 1; y <= n + 1; ++y)
            for (long x = -n - 1; x <= n + 1; ++x) {
                auto it = direct.find({x, y});
                double want = it == direct.end() ? 0.0 : it->second;
                worst = std::max(worst, std::fabs(k.prob({x, y}) - want));
                worst = std::max(worst, std::fabs(walk::transition_prob({x, y}, n) - want));
            }
        CAPTURE(n);
        CHECK(worst < 1e-12);
        CHECK(k.total() == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("return probabilities agree with the kernel at the origin") {
    for (int k = 1; k <= 200; k += 13) {
        auto t = walk::kernel(2 * k);
        CHECK(std::fabs(t.prob({0, 0}) - walk::return_prob(k)) < 1e-12);
        CHECK(std::fabs(walk::transition_prob({0, 0}, 2 * k) - walk::return_prob(k)) < 1e-12);
    }
}

TEST_CASE("kernel symmetry and parity") {
    auto k = walk::kernel(9);
    for (long y = -9; y <= 9; ++y)
        for (long x = -9; x <= 9; ++x) {
            double p = k.prob({x, y});
            CHECK(p == k.prob({-x, y}));
            CHECK(p == k.prob({y, x}));
            if (((x + y) & 1) == 0) CHECK(p == 0.0);
        }
    auto d = k.dense();
    CHECK(d.size() == 19u * 19u);
}

TEST_CASE("Chapman-Kolmogorov") {
    auto a = walk::kernel(5), b = walk::kernel(4), c = walk::kernel(9);
    for (Point target : {Point{0, 1}, Point{3, -2}, Point{-5, 4}}) {
        double s = 0;
        for (long y = -5; y <= 5; ++y)
            for (long x = -5; x <= 5; ++x) s += a.prob({x, y}) * b.prob(target - Point{x, y});
        CHECK(std::fabs(s - c.prob(target)) < 1e-14);
    }
}

TEST_CASE("R_N grows like log N / pi") {
    double d1 = walk::overlap_R(1 << 12) - std::log(double(1 << 12)) / M_PI;
    double d2 = walk::overlap_R(1 << 16) - std::log(double(1 << 16)) / M_PI;
    CHECK(std::fabs(d1 - d2) < 1e-3);
    CHECK(walk::overlap_R(1000) < walk::overlap_R(1001));
}

TEST_CASE("beta_N and domain errors") {
    CHECK(walk::beta_N(0.5, 2) == doctest::Approx(0.5 / std::sqrt(0.390625)));
    CHECK_THROWS_AS(walk::beta_N(1.0, 10), ValidationError);
    CHECK_THROWS_AS(walk::beta_N(0.0, 10), ValidationError);
    CHECK_THROWS_AS(walk::kernel(0), ValidationError);
    CHECK_THROWS_AS(walk::kernel(5000), ValidationError);
    CHECK_THROWS_AS(walk::overlap_R(0), ValidationError);
}
